#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "blockpursuit/analysis.hpp"
#include "blockpursuit/dictionaries.hpp"
#include "blockpursuit/harness.hpp"
#include "blockpursuit/io.hpp"
#include "blockpursuit/recovery.hpp"

namespace bp = blockpursuit;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_failure = 2;

class Output
{
public:
  explicit Output(const std::string& path)
  {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_)
        throw bp::IoError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
  std::unique_ptr<std::ofstream> file_;
};

bp::MatrixXc load_unitary(const std::string& spec, bp::Index d)
{
  if (spec == "identity")
    return bp::MatrixXc::Identity(d, d);
  if (spec.rfind("haar:", 0) == 0) {
    const auto seed = std::stoull(spec.substr(5));
    return bp::random_unitary<bp::cplx>(d, seed);
  }
  bp::MatrixXc u = bp::io::read_matrix(spec);
  if (u.rows() != d || u.cols() != d)
    throw bp::InvalidArgument("U must be " + std::to_string(d) + "x" + std::to_string(d));
  return u;
}

int cmd_audit(const std::string& file, bp::Index d, const std::string& out)
{
  const auto rep = bp::harness::audit(bp::io::read_matrix(file), d);
  Output o(out);
  o.stream() << rep.to_key_value();
  return exit_ok;
}

int cmd_montecarlo(const std::string& config_path, int threads, const std::string& out)
{
  auto cfg = bp::harness::load_config(config_path);
  if (threads >= 0)
    cfg.threads = static_cast<unsigned>(threads);
  const auto curve = bp::harness::run_montecarlo(cfg);
  Output o(out);
  curve.write_csv(o.stream(), cfg.timing);
  return exit_ok;
}

int cmd_thresholds(bp::Index r, bp::Index d_max, bp::Index samples, std::uint64_t seed,
                   const std::string& out)
{
  const auto rows = bp::harness::sweep_thresholds(r, d_max, samples, seed);
  Output o(out);
  bp::harness::write_sweep_csv(o.stream(), rows);
  return exit_ok;
}

int cmd_recover(const std::string& dict_path, const std::string& y_path, const std::string& solver,
                bp::Index k, bp::Index d, bp::Index max_iters, const std::string& out)
{
  const bp::BlockDictionary<bp::cplx> dict(bp::io::read_matrix(dict_path), d);
  const bp::MatrixXc ym = bp::io::read_matrix(y_path);
  if (ym.cols() != 1 && ym.rows() != 1)
    throw bp::InvalidArgument("y must be a single row or column");
  const bp::VectorXc y = ym.cols() == 1 ? bp::VectorXc(ym.col(0)) : bp::VectorXc(ym.row(0).transpose());

  bp::RecoveryResult<bp::cplx> r;
  if (solver == "bomp")
    r = bp::bomp(dict, y, k);
  else if (solver == "omp")
    r = bp::omp(dict, y, k * d);
  else if (solver == "bmp")
    r = bp::bmp(dict, y, max_iters);
  else if (solver == "mp")
    r = bp::mp(dict, y, max_iters);
  else if (solver == "lopt")
    r = bp::lopt(dict, y);
  else if (solver == "bp")
    r = bp::bp(dict, y);
  else if (solver == "oracle")
    r = bp::exhaustive_oracle(dict, y, k);
  else
    throw CLI::ValidationError("--solver", "unknown solver '" + solver + "'");

  Output o(out);
  auto& s = o.stream();
  s << "index,block,re,im\n";
  char buf[128];
  const auto& x = r.x_hat.vector();
  for (bp::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g,%.17g\n", static_cast<long long>(i),
                  static_cast<long long>(i / d), x(i).real(), x(i).imag());
    s << buf;
  }
  std::cerr << "solver=" << solver << " iterations=" << r.iterations
            << " termination=" << bp::to_string(r.termination) << " support=";
  for (std::size_t i = 0; i < r.support.size(); ++i)
    std::cerr << (i ? ";" : "") << r.support[i];
  std::cerr << " residual=" << (r.residual_norms.empty() ? 0.0 : r.residual_norms.back()) << '\n';
  return exit_ok;
}

int cmd_uncertainty(bp::Index r, bp::Index d, const std::string& u_spec, std::uint64_t seed,
                    const std::string& out)
{
  const auto pair = bp::spike_kron_fourier(r, load_unitary(u_spec, d));
  bp::CounterRng rng(seed);
  std::normal_distribution<double> normal;
  bp::VectorXc c(d);
  for (bp::Index i = 0; i < d; ++i)
    c(i) = bp::cplx(normal(rng), normal(rng));
  const auto x = bp::dirac_comb_signal<bp::cplx>(r, c);
  const auto chk = bp::verify_uncertainty(pair.phi, pair.psi, x.vector(), 1e-9);
  Output o(out);
  char buf[256];
  std::snprintf(buf, sizeof buf, "R,d,A,B,bound,geometric_ok,arithmetic_ok,equality\n"
                                 "%lld,%lld,%lld,%lld,%.17g,%d,%d,%d\n",
                static_cast<long long>(r), static_cast<long long>(d),
                static_cast<long long>(chk.a), static_cast<long long>(chk.b), chk.bound,
                chk.geometric_ok, chk.arithmetic_ok, chk.equality);
  o.stream() << buf;
  return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Block-sparse recovery toolkit"};
  app.require_subcommand(1);

  std::string out;
  auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "Output file (default stdout)"); };

  std::string file;
  bp::Index d = 1;
  auto* audit = app.add_subcommand("audit", "Coherence measures and recovery thresholds");
  audit->add_option("matrix", file, "Dictionary file (.txt or .bin)")->required();
  audit->add_option("--block-len,-d", d, "Block length")->required()->check(CLI::PositiveNumber);
  add_out(audit);

  std::string config;
  int threads = -1;
  auto* mc = app.add_subcommand("montecarlo", "Success-rate curves over block sparsity");
  mc->add_option("--config", config, "key=value experiment file")->required();
  mc->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  add_out(mc);

  bp::Index r = 0, d_max = 1, samples = 100;
  std::uint64_t seed = 1;
  auto* th = app.add_subcommand("thresholds", "Extremal-pair threshold sweep over d");
  th->add_option("--R", r, "Number of row blocks")->required()->check(CLI::PositiveNumber);
  th->add_option("--d-max", d_max, "Largest block length")->required()->check(CLI::PositiveNumber);
  th->add_option("--samples", samples, "Haar samples per d")->check(CLI::NonNegativeNumber);
  th->add_option("--seed", seed, "Seed");
  add_out(th);

  std::string dict_path, y_path, solver;
  bp::Index k = 1, max_iters = 1000;
  auto* rec = app.add_subcommand("recover", "Recover x from y = D x");
  rec->add_option("--dict", dict_path, "Dictionary file")->required();
  rec->add_option("--y", y_path, "Measurement file")->required();
  rec->add_option("--solver", solver, "Recovery algorithm")
      ->required()
      ->check(CLI::IsMember({"omp", "bomp", "mp", "bmp", "bp", "lopt", "oracle"}));
  rec->add_option("--k", k, "Block sparsity")->required()->check(CLI::PositiveNumber);
  rec->add_option("--block-len,-d", d, "Block length")->check(CLI::PositiveNumber);
  rec->add_option("--max-iters", max_iters, "Iteration cap for mp/bmp")->check(CLI::PositiveNumber);
  add_out(rec);

  std::string u_spec = "identity";
  auto* unc = app.add_subcommand("uncertainty", "Uncertainty relation on a Dirac comb");
  unc->add_option("--R", r, "Number of row blocks (perfect square)")->required()->check(CLI::PositiveNumber);
  unc->add_option("--d", d, "Block length")->required()->check(CLI::PositiveNumber);
  unc->add_option("--U", u_spec, "identity, haar:<seed> or a matrix file");
  unc->add_option("--seed", seed, "Seed for the comb coefficients");
  add_out(unc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*audit)
      return cmd_audit(file, d, out);
    if (*mc)
      return cmd_montecarlo(config, threads, out);
    if (*th)
      return cmd_thresholds(r, d_max, samples, seed, out);
    if (*rec)
      return cmd_recover(dict_path, y_path, solver, k, d, max_iters, out);
    if (*unc)
      return cmd_uncertainty(r, d, u_spec, seed, out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_usage;
}
