#include "blockpursuit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "blockpursuit/dictionaries.hpp"
#include "blockpursuit/rng.hpp"

namespace blockpursuit::harness {

namespace {

constexpr std::pair<Solver, std::string_view> solver_names[] = {
    {Solver::omp, "omp"},   {Solver::bomp, "bomp"}, {Solver::bomp_o, "bomp_o"},
    {Solver::bp, "bp"},     {Solver::lopt, "lopt"}, {Solver::lopt_o, "lopt_o"},
    {Solver::bmp, "bmp"},
};

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
  T out{};
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw InvalidArgument("config: bad value '" + value + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
  if (value == "true" || value == "1" || value == "yes")
    return true;
  if (value == "false" || value == "0" || value == "no")
    return false;
  throw InvalidArgument("config: bad boolean '" + value + "' for key '" + key + "'");
}

bool uses_block_partition(Solver s) { return s != Solver::omp && s != Solver::bp; }
bool uses_orthogonalized(Solver s)
{
  return s == Solver::bomp_o || s == Solver::lopt_o || s == Solver::bmp;
}

struct TrialOutcome
{
  bool success = false;
  bool error = false;
  bool nonconverged = false;
  bool certified = false;
  Index iterations = 0;
  double seconds = 0;
};

// One instance, every requested solver.
std::vector<TrialOutcome> run_trial(const ExperimentConfig& cfg, Index k, Index trial)
{
  const Instance inst = generate_instance(cfg, k, trial);
  const double x0norm = inst.x0.vector().norm();

  std::optional<OrthogonalizedPair<double>> ortho;
  const bool need_ortho = std::any_of(cfg.solvers.begin(), cfg.solvers.end(), uses_orthogonalized);
  if (need_ortho)
    ortho.emplace(orthogonalize_blocks(inst.dict));

  // Certificates keyed by (partition, orthogonalized).
  std::map<std::pair<bool, bool>, bool> certs;
  auto certified = [&](Solver s) {
    const std::pair<bool, bool> key{uses_block_partition(s), uses_orthogonalized(s)};
    if (auto it = certs.find(key); it != certs.end())
      return it->second;
    bool holds = false;
    if (k > 0) {
      try {
        const auto& base = key.second ? ortho->dictionary() : inst.dict;
        if (key.first) {
          holds = exact_recovery_certificate(base, inst.support).holds;
        } else {
          std::vector<Index> entries;
          for (Index b : inst.support)
            for (Index j = 0; j < cfg.d; ++j)
              if (inst.x0.vector()(b * cfg.d + j) != 0.0)
                entries.push_back(b * cfg.d + j);
          holds = exact_recovery_certificate(base.reblocked(1), BlockSupport(entries)).holds;
        }
      } catch (const std::exception&) {
        holds = false;
      }
    }
    certs[key] = holds;
    return holds;
  };

  std::vector<TrialOutcome> out;
  out.reserve(cfg.solvers.size());
  for (Solver s : cfg.solvers) {
    TrialOutcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Index kk = std::max<Index>(k, 1);
      RecoveryResult<double> r;
      switch (s) {
      case Solver::omp:
        r = omp(inst.dict, inst.y, kk * cfg.d, cfg.greedy_res_tol);
        break;
      case Solver::bomp:
        r = bomp(inst.dict, inst.y, kk, cfg.greedy_res_tol);
        break;
      case Solver::bomp_o:
        r = bomp(ortho->dictionary(), inst.y, kk, cfg.greedy_res_tol);
        break;
      case Solver::bp:
        r = bp(inst.dict, inst.y, cfg.lopt);
        break;
      case Solver::lopt:
        r = lopt(inst.dict, inst.y, cfg.lopt);
        break;
      case Solver::lopt_o:
        r = lopt(ortho->dictionary(), inst.y, cfg.lopt);
        break;
      case Solver::bmp:
        r = bmp(ortho->dictionary(), inst.y, cfg.bmp_max_iters, cfg.greedy_res_tol);
        break;
      }
      VectorXr xhat = r.x_hat.vector();
      if (uses_orthogonalized(s))
        xhat = ortho->solve_w(BlockVector<double>(xhat, cfg.d)).vector();
      o.iterations = r.iterations;
      o.nonconverged = r.termination == Termination::max_iters;
      o.success = !o.nonconverged
                  && (xhat - inst.x0.vector()).norm() <= cfg.success_rel_tol * x0norm;
    } catch (const std::exception&) {
      o.error = true;
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.certify)
      o.certified = certified(s);
    out.push_back(o);
  }
  return out;
}

} // namespace

std::string_view to_string(Solver s)
{
  for (const auto& [v, n] : solver_names)
    if (v == s)
      return n;
  return "unknown";
}

Solver parse_solver(std::string_view name)
{
  for (const auto& [v, n] : solver_names)
    if (n == name)
      return v;
  throw InvalidArgument("unknown solver '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const
{
  if (L < 1 || N < 1 || d < 1)
    throw InvalidArgument("config: L, N and d must be positive");
  if (N % d != 0)
    throw InvalidArgument("config: d must divide N");
  if (k_min < 0 || k_max < k_min)
    throw InvalidArgument("config: need 0 <= k_min <= k_max");
  if (k_max * d > L)
    throw InvalidArgument("config: k_max * d exceeds L");
  if (k_max > N / d)
    throw InvalidArgument("config: k_max exceeds the number of blocks");
  if (trials < 1)
    throw InvalidArgument("config: trials must be at least 1");
  if (solvers.empty())
    throw InvalidArgument("config: no solvers selected");
  if (!(success_rel_tol > 0))
    throw InvalidArgument("config: success_rel_tol must be positive");
  if (bmp_max_iters < 1)
    throw InvalidArgument("config: bmp_max_iters must be positive");
  lopt.validate();
}

ExperimentConfig parse_config(std::istream& in)
{
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string t = trim(line);
    if (t.empty())
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string val = trim(std::string_view(t).substr(eq + 1));
    if (key == "L")
      c.L = parse_number<Index>(key, val);
    else if (key == "N")
      c.N = parse_number<Index>(key, val);
    else if (key == "d")
      c.d = parse_number<Index>(key, val);
    else if (key == "k_min")
      c.k_min = parse_number<Index>(key, val);
    else if (key == "k_max")
      c.k_max = parse_number<Index>(key, val);
    else if (key == "trials")
      c.trials = parse_number<Index>(key, val);
    else if (key == "seed")
      c.seed = parse_number<std::uint64_t>(key, val);
    else if (key == "success_rel_tol")
      c.success_rel_tol = parse_number<double>(key, val);
    else if (key == "threads")
      c.threads = parse_number<unsigned>(key, val);
    else if (key == "greedy_res_tol")
      c.greedy_res_tol = parse_number<double>(key, val);
    else if (key == "bmp_max_iters")
      c.bmp_max_iters = parse_number<Index>(key, val);
    else if (key == "lopt_penalty")
      c.lopt.penalty = parse_number<double>(key, val);
    else if (key == "lopt_max_iters")
      c.lopt.max_iters = parse_number<Index>(key, val);
    else if (key == "lopt_primal_tol")
      c.lopt.primal_tol = parse_number<double>(key, val);
    else if (key == "lopt_dual_tol")
      c.lopt.dual_tol = parse_number<double>(key, val);
    else if (key == "lopt_balance_interval")
      c.lopt.balance_interval = parse_number<Index>(key, val);
    else if (key == "certify")
      c.certify = parse_bool(key, val);
    else if (key == "timing")
      c.timing = parse_bool(key, val);
    else if (key == "solvers") {
      c.solvers.clear();
      std::stringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ','))
        if (const auto s = trim(item); !s.empty())
          c.solvers.push_back(parse_solver(s));
    } else
      throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown key '" + key
                            + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config '" + path + "'");
  return parse_config(in);
}

Instance generate_instance(const ExperimentConfig& config, Index k, Index trial_index)
{
  const Index m = config.N / config.d;
  if (k < 0 || k > m || k * config.d > config.L)
    throw InvalidArgument("generate_instance: block sparsity out of range");
  const std::uint64_t trial_seed = derive_seed(config.seed, static_cast<std::uint64_t>(k),
                                               static_cast<std::uint64_t>(trial_index));
  auto dict = gaussian_dictionary<double>(config.L, config.N, config.d, derive_seed(trial_seed, 1));

  CounterRng rng(derive_seed(trial_seed, 2));
  std::vector<Index> pool(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i)
    pool[static_cast<std::size_t>(i)] = i;
  // partial Fisher-Yates: first k entries form a uniform k-subset
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, m - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  BlockSupport support(std::vector<Index>(pool.begin(), pool.begin() + k));

  std::normal_distribution<double> normal(0.0, 1.0);
  auto x0 = BlockVector<double>::zeros(config.N, config.d);
  for (Index b : support)
    for (Index j = 0; j < config.d; ++j)
      x0.block(b)(j) = normal(rng);
  VectorXr y = dict.matrix() * x0.vector();
  return {std::move(dict), std::move(x0), std::move(y), std::move(support)};
}

const CurveRow& SuccessCurve::at(Solver s, Index k) const
{
  for (const auto& r : rows)
    if (r.solver == s && r.k == k)
      return r;
  throw InvalidArgument("SuccessCurve: no row for solver " + std::string(to_string(s)) + ", k="
                        + std::to_string(k));
}

void SuccessCurve::write_csv(std::ostream& out, bool timing) const
{
  out << "solver,k,trials,successes,success_rate,mean_iterations,solver_errors,nonconverged,"
         "certified_trials,certified_successes,anomaly";
  if (timing)
    out << ",mean_seconds";
  out << '\n';
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%lld,%.6f,%.6f,%lld,%lld,%lld,%lld,%d",
                  std::string(to_string(r.solver)).c_str(), static_cast<long long>(r.k),
                  static_cast<long long>(r.trials), static_cast<long long>(r.successes),
                  r.success_rate, r.mean_iterations, static_cast<long long>(r.solver_errors),
                  static_cast<long long>(r.nonconverged),
                  static_cast<long long>(r.certified_trials),
                  static_cast<long long>(r.certified_successes), r.anomaly ? 1 : 0);
    out << buf;
    if (timing) {
      std::snprintf(buf, sizeof buf, ",%.6e", r.mean_seconds);
      out << buf;
    }
    out << '\n';
  }
}

SuccessCurve run_montecarlo(const ExperimentConfig& config)
{
  config.validate();
  const Index num_k = config.k_max - config.k_min + 1;
  const auto items = static_cast<std::size_t>(num_k * config.trials);
  std::vector<std::vector<TrialOutcome>> results(items);

  unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(items)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < items; i = next++) {
      const Index k = config.k_min + static_cast<Index>(i) / config.trials;
      const Index trial = static_cast<Index>(i) % config.trials;
      try {
        results[i] = run_trial(config, k, trial);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work);
  }
  if (failure)
    std::rethrow_exception(failure);

  SuccessCurve curve;
  for (std::size_t si = 0; si < config.solvers.size(); ++si) {
    const CurveRow* prev = nullptr;
    for (Index ki = 0; ki < num_k; ++ki) {
      CurveRow row;
      row.solver = config.solvers[si];
      row.k = config.k_min + ki;
      row.trials = config.trials;
      double iters = 0, secs = 0;
      for (Index t = 0; t < config.trials; ++t) {
        const auto& o = results[static_cast<std::size_t>(ki * config.trials + t)][si];
        row.successes += o.success;
        row.solver_errors += o.error;
        row.nonconverged += o.nonconverged;
        row.certified_trials += o.certified;
        row.certified_successes += o.certified && o.success;
        iters += static_cast<double>(o.iterations);
        secs += o.seconds;
      }
      const auto n = static_cast<double>(row.trials);
      row.success_rate = static_cast<double>(row.successes) / n;
      row.mean_iterations = iters / n;
      row.mean_seconds = secs / n;
      if (prev) {
        const double p1 = prev->success_rate, p2 = row.success_rate;
        const double sigma = std::sqrt(p1 * (1 - p1) / static_cast<double>(prev->trials)
                                       + p2 * (1 - p2) / n);
        row.anomaly = p2 - p1 > 3.0 * sigma && p2 > p1;
      }
      curve.rows.push_back(row);
      prev = &curve.rows.back();
    }
  }
  return curve;
}

std::vector<ThresholdSweepRow> sweep_thresholds(Index r_size, Index d_max, Index samples,
                                                std::uint64_t seed)
{
  if (r_size < 1 || d_max < 1 || samples < 0)
    throw InvalidArgument("sweep_thresholds: need R >= 1, d_max >= 1, samples >= 0");
  const double sqrt_r = std::sqrt(static_cast<double>(r_size));
  // mu = max|U_ij| / sqrt(R) for the pair [I, F kron U]
  auto conventional = [&](double umax) { return 0.5 * (sqrt_r / umax + 1.0); };

  std::vector<ThresholdSweepRow> rows;
  for (Index d = 1; d <= d_max; ++d) {
    ThresholdSweepRow row;
    row.d = d;
    row.block_threshold_kd = static_cast<double>(d) * (sqrt_r + 1.0) / 2.0;
    row.conventional_identity_kd = conventional(1.0);
    double acc = 0;
    for (Index s = 0; s < samples; ++s) {
      const MatrixXc u = random_unitary<cplx>(
          d, derive_seed(seed, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(s)));
      acc += conventional(u.cwiseAbs().maxCoeff());
    }
    row.conventional_haar_mean_kd = samples ? acc / static_cast<double>(samples)
                                            : row.conventional_identity_kd;
    row.ratio_identity = row.block_threshold_kd / row.conventional_identity_kd;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<ThresholdSweepRow>& rows)
{
  out << "d,block_threshold_kd,conventional_identity_kd,conventional_haar_mean_kd,"
         "ratio_identity\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.d),
                  r.block_threshold_kd, r.conventional_identity_kd, r.conventional_haar_mean_kd,
                  r.ratio_identity);
    out << buf;
  }
}

std::string AuditReport::to_key_value() const
{
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) -> std::string {
    if (std::isinf(v))
      return "inf";
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  os << "L=" << L << '\n' << "N=" << N << '\n' << "M=" << M << '\n';
  os << "sub_coherence=" << num(coherence.sub_coherence) << '\n';
  os << thresholds.to_key_value();
  os << "welch_bound=" << (has_welch ? num(welch_bound) : std::string("n/a")) << '\n';
  os << "orthogonalization_min_d="
     << (has_welch ? num(orthogonalization_min_d) : std::string("n/a")) << '\n';
  return os.str();
}

AuditReport audit(const MatrixXc& matrix, Index block_len)
{
  const BlockDictionary<cplx> dict(matrix, block_len);
  if (dict.num_blocks() < 2)
    throw InvalidArgument("audit: dictionary needs at least two blocks");
  AuditReport rep;
  rep.L = dict.rows();
  rep.N = dict.cols();
  rep.d = block_len;
  rep.M = dict.num_blocks();
  rep.coherence = coherence_report(dict);
  rep.thresholds = threshold_report(rep.coherence, block_len, rep.M);
  if (dict.row_aligned() && rep.M > dict.row_blocks()) {
    rep.has_welch = true;
    rep.welch_bound = welch_coherence_bound(rep.M, dict.row_blocks(), block_len);
    rep.orthogonalization_min_d = orthogonalization_gain_min_d(rep.M, dict.row_blocks());
  }
  return rep;
}

} // namespace blockpursuit::harness
