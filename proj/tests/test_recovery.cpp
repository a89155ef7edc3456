#include <doctest.h>

#include "blockpursuit/analysis.hpp"
#include "blockpursuit/dictionaries.hpp"
#include "blockpursuit/recovery.hpp"
#include "support.hpp"

using namespace blockpursuit;

namespace {

struct Problem
{
  BlockDictionary<double> dict;
  BlockSupport support;
  VectorXr x0;
  VectorXr y;
};

Problem random_problem(Index l, Index m, Index d, Index k, std::mt19937_64& e)
{
  std::uniform_int_distribution<std::uint64_t> seeds;
  auto dict = gaussian_dictionary<double>(l, m * d, d, seeds(e));
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), e);
  BlockSupport s(std::vector<Index>(all.begin(), all.begin() + k));
  VectorXr x0 = VectorXr::Zero(m * d);
  for (Index b : s)
    x0.segment(b * d, d) = oracle::random_real(d, 1, e);
  VectorXr y = dict.matrix() * x0;
  return {std::move(dict), std::move(s), std::move(x0), std::move(y)};
}

Problem certified_problem(Index l, Index m, Index d, Index k, std::mt19937_64& e)
{
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto p = random_problem(l, m, d, k, e);
    if (exact_recovery_certificate(p.dict, p.support).holds)
      return p;
  }
  throw std::runtime_error("no certified instance found");
}

double rel_err(const VectorXr& a, const VectorXr& b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST_CASE("bomp recovers a single block in one step")
{
  const auto dict = gaussian_dictionary<double>(20, 40, 4, 3);
  const VectorXr y = dict.block(3) * Eigen::Vector4d(1, -2, 0.5, 3);
  const auto r = bomp(dict, y, 5);
  CHECK(r.support == BlockSupport{3});
  CHECK(r.iterations == 1);
  CHECK(r.termination == Termination::residual_tol);
  CHECK(r.residual_norms.back() <= 1e-12 * y.norm());
  CHECK(r.x_hat.block(3).isApprox(Eigen::Vector4d(1, -2, 0.5, 3), 1e-12));
}

TEST_CASE("bomp on the extremal pair below the orthonormal threshold")
{
  const auto p = spike_kron_fourier(16, MatrixXc::Identity(2, 2));
  const double mub = block_coherence(p.dict);
  REQUIRE(satisfies_orthonormal_threshold(2, 2, mub));
  std::mt19937_64 e(8);
  for (const auto& s : {BlockSupport{0, 20}, BlockSupport{3, 4}, BlockSupport{17, 30}}) {
    VectorXc x0 = VectorXc::Zero(64);
    for (Index b : s)
      x0.segment(b * 2, 2) = oracle::random_complex(2, 1, e);
    const VectorXc y = p.dict.matrix() * x0;
    const auto r = bomp(p.dict, y, 2);
    CHECK(r.support == s);
    CHECK(r.iterations == 2);
    CHECK((r.x_hat.vector() - x0).norm() <= 1e-10 * x0.norm());
  }
}

TEST_CASE("bomp on certified instances")
{
  std::mt19937_64 e(9);
  for (int t = 0; t < 30; ++t) {
    const auto p = t % 3 == 2 ? certified_problem(64, 12, 2, 3, e)
                              : certified_problem(48, 10, 2, 1 + t % 3, e);
    const auto k = static_cast<Index>(p.support.size());
    const auto r = bomp(p.dict, p.y, k);
    CHECK(r.support == p.support);
    CHECK(r.iterations <= k);
    CHECK(rel_err(r.x_hat.vector(), p.x0) <= 1e-10);
    for (Index i : r.selection_order)
      CHECK(p.support.contains(i));
  }
}

TEST_CASE("bomp residuals are monotone and orthogonal to chosen blocks")
{
  std::mt19937_64 e(10);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_problem(24, 30, 3, 5, e);
    const auto r = bomp(p.dict, p.y, 8, 0.0);
    for (std::size_t i = 1; i < r.residual_norms.size(); ++i)
      CHECK(r.residual_norms[i] <= r.residual_norms[i - 1] * (1 + 1e-14) + 1e-13 * p.y.norm());
    // replay with an independent least-squares fit
    std::vector<Index> chosen;
    for (Index b : r.selection_order) {
      chosen.push_back(b);
      const MatrixXr d0 = gather_blocks(p.dict, chosen);
      const VectorXr res = p.y - d0 * (oracle::pinv(d0) * p.y);
      for (Index c : chosen)
        CHECK((p.dict.block(c).transpose() * res).norm() <= 1e-10 * p.y.norm());
    }
    std::vector<Index> sorted = r.selection_order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(static_cast<Index>(r.support.size()) <= 8);
  }
}

TEST_CASE("bomp argument checks")
{
  const auto dict = gaussian_dictionary<double>(8, 16, 4, 1);
  const VectorXr y = VectorXr::Ones(8);
  CHECK_THROWS_AS(bomp(dict, y, 3), InvalidArgument);
  CHECK_THROWS_AS(bomp(dict, y, 0), InvalidArgument);
  CHECK_THROWS_AS(bomp(dict, VectorXr(VectorXr::Ones(7)), 1), InvalidArgument);

  const auto z = bomp(dict, VectorXr(VectorXr::Zero(8)), 2);
  CHECK(z.x_hat.vector().isZero());
  CHECK(z.support.empty());

  // duplicated column: after the first pick every correlation is zero and the
  // lowest-index candidate is the duplicate
  MatrixXr m = MatrixXr::Zero(3, 3);
  m(0, 0) = m(0, 1) = m(2, 2) = 1.0;
  const auto dup = BlockDictionary<double>::unchecked(m, 1);
  CHECK_THROWS_AS(bomp(dup, VectorXr(Eigen::Vector3d(1, 1, 0)), 2), NumericalError);
}

TEST_CASE("omp is bomp on the unit partition")
{
  std::mt19937_64 e(11);
  for (int t = 0; t < 10; ++t) {
    const auto p = random_problem(20, 40, 1, 4, e);
    const auto a = omp(p.dict, p.y, 6);
    const auto b = bomp(p.dict, p.y, 6);
    CHECK(a.selection_order == b.selection_order);
    CHECK(a.x_hat.vector() == b.x_hat.vector());
  }
  const auto g = gaussian_dictionary<double>(20, 40, 4, 2);
  const VectorXr y = 2.5 * g.matrix().col(13);
  const auto r = omp(g, y, 3);
  CHECK(r.iterations == 1);
  CHECK(r.support == BlockSupport{13});

  // below (1/mu + 1) / 2 nonzeros
  const auto sf = spike_kron_fourier(64, MatrixXc::Identity(1, 1));
  const double mu = coherence(sf.dict);
  const Index kmax = max_recoverable_k(mu, 0, 1);
  REQUIRE(kmax == 4);
  VectorXc x0 = VectorXc::Zero(128);
  x0(3) = 1.0;
  x0(70) = cplx(0, -2);
  x0(100) = 0.5;
  x0(11) = cplx(1, 1);
  const VectorXc ys = sf.dict.matrix() * x0;
  CHECK((omp(sf.dict, ys, 4).x_hat.vector() - x0).norm() <= 1e-10);
}

TEST_CASE("bmp")
{
  SUBCASE("one orthonormal block")
  {
    const auto a = orthogonalize_blocks(gaussian_dictionary<double>(12, 24, 3, 5)).dictionary();
    const VectorXr y = a.block(0) * Eigen::Vector3d(1, 2, 3);
    const auto r = bmp(a, y, 10);
    CHECK(r.iterations == 1);
    CHECK(r.residual_norms.back() <= 1e-14 * y.norm());
    CHECK(r.termination == Termination::residual_tol);
  }
  SUBCASE("x_hat reproduces y minus the final residual")
  {
    std::mt19937_64 e(12);
    const auto p = random_problem(16, 12, 2, 4, e);
    const auto a = orthogonalize_blocks(p.dict).dictionary();
    const auto r = bmp(a, p.y, 25);
    CHECK(r.termination == Termination::max_iters);
    CHECK(r.iterations == 25);
    VectorXr res = p.y;
    for (Index i : r.selection_order)
      res -= a.block(i) * (a.block(i).transpose() * res);
    CHECK(std::abs(res.norm() - r.residual_norms.back()) <= 1e-12);
    CHECK((p.y - a.matrix() * r.x_hat.vector() - res).norm() <= 1e-12);
  }
  SUBCASE("non-orthonormal blocks are rejected")
  {
    const auto g = gaussian_dictionary<double>(12, 24, 3, 5);
    CHECK_THROWS_AS(bmp(g, VectorXr(VectorXr::Ones(12)), 5), NumericalError);
  }
}

TEST_CASE("bmp selections and residual decay under the orthonormal threshold")
{
  std::mt19937_64 e(13);
  for (int t = 0; t < 20; ++t) {
    const Index r = t % 2 ? 16 : 36;
    const Index d = t % 2 ? 2 : 1;
    const auto pair = spike_kron_fourier(r, random_unitary<cplx>(d, 300 + t));
    const double mub = block_coherence(pair.dict);
    const Index k = max_recoverable_k(mub, 0, d);
    REQUIRE(k >= 2);
    std::vector<Index> all(static_cast<std::size_t>(pair.dict.num_blocks()));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), e);
    const BlockSupport s(std::vector<Index>(all.begin(), all.begin() + k));
    VectorXc x0 = VectorXc::Zero(pair.dict.cols());
    for (Index b : s)
      x0.segment(b * d, d) = oracle::random_complex(d, 1, e);
    const VectorXc y = pair.dict.matrix() * x0;
    const auto res = bmp(pair.dict, y, 200);
    const double beta = bmp_decay_factor(k, d, mub);
    for (Index i : res.selection_order)
      CHECK(s.contains(i));
    double bound = y.squaredNorm();
    for (std::size_t i = 1; i < res.residual_norms.size(); ++i) {
      bound *= beta;
      CHECK(res.residual_norms[i] * res.residual_norms[i] <= bound * (1 + 1e-9) + 1e-26);
    }

    // residual energy lower bound at every step, with r = D0 c
    const MatrixXc d0 = gather_blocks(pair.dict, s.indices());
    VectorXc rl = y;
    for (Index i : res.selection_order) {
      const VectorXc c = oracle::pinv(d0) * rl;
      double best = 0;
      for (Index j = 0; j < k; ++j)
        best = std::max(best, (d0.middleCols(j * d, d).adjoint() * rl).norm());
      if (rl.norm() > 1e-10 * y.norm())
        CHECK(best >= rl.squaredNorm() / oracle::mixed_21(c, d) * (1 - 1e-9));
      rl -= pair.dict.block(i) * (pair.dict.block(i).adjoint() * rl);
    }
  }
}

TEST_CASE("lopt")
{
  SUBCASE("unitary dictionary has a single feasible point")
  {
    const BlockDictionary<cplx> u(random_unitary<cplx>(8, 2), 2);
    const VectorXc y = oracle::random_complex(8, 1);
    const auto r = lopt(u, y);
    CHECK((r.x_hat.vector() - u.matrix().adjoint() * y).norm() <= 1e-8 * y.norm());
  }
  SUBCASE("certified instances")
  {
    std::mt19937_64 e(14);
    for (int t = 0; t < 15; ++t) {
      const auto p = t % 3 == 2 ? certified_problem(64, 12, 2, 3, e)
                                : certified_problem(48, 10, 2, 1 + t % 3, e);
      const auto r = lopt(p.dict, p.y);
      CHECK(r.termination == Termination::converged);
      CHECK(rel_err(r.x_hat.vector(), p.x0) <= 1e-4);
      CHECK(r.support == p.support);
    }
  }
  SUBCASE("basis pursuit agrees with omp on certified d = 1 instances")
  {
    std::mt19937_64 e(15);
    for (int t = 0; t < 10; ++t) {
      const auto p = certified_problem(16, 32, 1, 2, e);
      const auto a = bp(p.dict, p.y);
      const auto b = omp(p.dict, p.y, 2);
      CHECK(a.support == b.support);
      CHECK(rel_err(a.x_hat.vector(), p.x0) <= 1e-4);
    }
  }
  SUBCASE("certified solution beats any other feasible sparse vector")
  {
    std::mt19937_64 e(16);
    for (int t = 0; t < 10; ++t) {
      const auto p = certified_problem(20, 20, 2, 1, e);
      const auto r = lopt(p.dict, p.y);
      const double obj = mixed_norm(r.x_hat, 1);
      // feasible alternatives on full-row-rank supports of 10 blocks
      for (int a = 0; a < 5; ++a) {
        std::vector<Index> all(20);
        std::iota(all.begin(), all.end(), Index{0});
        std::shuffle(all.begin(), all.end(), e);
        std::vector<Index> alt(all.begin(), all.begin() + 10);
        std::sort(alt.begin(), alt.end());
        if (BlockSupport(alt) == p.support)
          continue;
        const MatrixXr d0 = gather_blocks(p.dict, alt);
        const VectorXr c = d0.fullPivLu().solve(p.y);
        const auto xa = scatter_blocks<double>(c, alt, 20, 2);
        if ((xa.vector() - p.x0).norm() <= 1e-8 * p.x0.norm())
          continue;
        CHECK(obj < mixed_norm(xa, 1));
      }
    }
  }
  SUBCASE("non-convergence is reported")
  {
    std::mt19937_64 e(17);
    const auto p = random_problem(20, 40, 2, 4, e);
    LoptParams lp;
    lp.max_iters = 3;
    const auto r = lopt(p.dict, p.y, lp);
    CHECK(r.termination == Termination::max_iters);
    CHECK(r.iterations == 3);
  }
  SUBCASE("parameter and range checks")
  {
    LoptParams lp;
    lp.penalty = 0;
    CHECK_THROWS_AS(lp.validate(), InvalidArgument);
    const auto tall = BlockDictionary<double>(MatrixXr::Identity(4, 2), 1);
    CHECK_THROWS_AS(lopt(tall, VectorXr(VectorXr::Ones(4))), NumericalError);
  }
}

TEST_CASE("exhaustive_oracle")
{
  std::mt19937_64 e(18);
  SUBCASE("unique sparse representation")
  {
    for (int t = 0; t < 10; ++t) {
      const auto p = random_problem(12, 8, 2, 2, e);
      const auto r = exhaustive_oracle(p.dict, p.y, 2);
      CHECK(r.support == p.support);
      CHECK(r.residual_norms.back() <= 1e-10 * p.y.norm());
      CHECK(r.iterations == 28);
    }
  }
  SUBCASE("matches bomp on certified instances")
  {
    for (int t = 0; t < 10; ++t) {
      const auto p = certified_problem(48, 10, 2, 2, e);
      CHECK(exhaustive_oracle(p.dict, p.y, 2).support == bomp(p.dict, p.y, 2).support);
    }
  }
  SUBCASE("larger k fits at least as well")
  {
    const auto p = random_problem(12, 8, 2, 3, e);
    const MatrixXr d0 = gather_blocks(p.dict, p.support.indices());
    const double at_truth = (p.y - d0 * (oracle::pinv(d0) * p.y)).norm();
    CHECK(exhaustive_oracle(p.dict, p.y, 4).residual_norms.back() <= at_truth + 1e-12);
  }
  SUBCASE("combinatorial guard")
  {
    CHECK(binomial_capped(10, 3, 1000) == 120);
    CHECK(binomial_capped(100, 50, 1000) == 1001);
    const auto g = gaussian_dictionary<double>(40, 200, 1, 1);
    CHECK_THROWS_AS(exhaustive_oracle(g, VectorXr(VectorXr::Ones(40)), 6), InvalidArgument);
  }
}
