#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "blockmat.hpp"
#include "coherence.hpp"
#include "types.hpp"

namespace blockpursuit {

enum class Termination { residual_tol, max_iters, support_full, converged };

inline std::string_view to_string(Termination t)
{
  switch (t) {
  case Termination::residual_tol:
    return "residual_tol";
  case Termination::max_iters:
    return "max_iters";
  case Termination::support_full:
    return "support_full";
  case Termination::converged:
    return "converged";
  }
  return "unknown";
}

template <typename Scalar>
struct RecoveryResult
{
  BlockVector<Scalar> x_hat;
  BlockSupport support;
  std::vector<Index> selection_order; // BMP may repeat blocks here
  std::vector<double> residual_norms; // [0] = ||y||_2
  Termination termination = Termination::converged;
  Index iterations = 0;
};

struct LoptParams
{
  double penalty = 1.0;
  Index max_iters = 10000;
  double primal_tol = 1e-8;
  double dual_tol = 1e-8;
  /// Rescale the penalty when one residual exceeds the other by this factor.
  double balance_ratio = 10.0;
  /// Iterations between penalty updates.
  Index balance_interval = 10;

  void validate() const
  {
    if (!(penalty > 0) || max_iters <= 0 || !(primal_tol > 0) || !(dual_tol > 0)
        || !(balance_ratio > 1) || balance_interval < 1)
      throw InvalidArgument("LoptParams: all parameters must be positive");
  }
};

inline constexpr double default_greedy_res_tol = 1e-12;

namespace detail {

template <typename Scalar>
void require_measurement(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                         const char* who)
{
  if (y.size() != dict.rows())
    throw InvalidArgument(std::string(who) + ": measurement length " + std::to_string(y.size())
                          + " does not match L = " + std::to_string(dict.rows()));
}

// argmax_i ||D^H[i] r||_2 over blocks not excluded; lowest index wins ties.
template <typename Scalar>
Index best_matched_block(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& r,
                         const std::vector<char>* excluded)
{
  const Index d = dict.block_len();
  const Vector<Scalar> corr = dict.matrix().adjoint() * r;
  Index best = -1;
  double best_val = -1.0;
  for (Index i = 0; i < dict.num_blocks(); ++i) {
    if (excluded && (*excluded)[static_cast<std::size_t>(i)])
      continue;
    const double v = corr.segment(i * d, d).squaredNorm();
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

// Orthonormal basis of the span of the selected blocks, grown one block at a
// time by classical Gram-Schmidt with one reorthogonalization pass.
template <typename Scalar>
class IncrementalQR
{
public:
  IncrementalQR(Index rows, Index max_cols) : q_(rows, max_cols), r_(Matrix<Scalar>::Zero(max_cols, max_cols)) {}

  Index cols() const { return n_; }
  auto q() const { return q_.leftCols(n_); }
  auto r() const { return r_.topLeftCorner(n_, n_); }

  /// Smallest ratio |r_jj| / ||b_j|| seen for the appended columns.
  template <typename Derived>
  double append(const Eigen::MatrixBase<Derived>& block)
  {
    double worst = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < block.cols(); ++j) {
      Vector<Scalar> v = block.col(j);
      const double bnorm = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (n_ > 0) {
          const Vector<Scalar> h = q_.leftCols(n_).adjoint() * v;
          v.noalias() -= q_.leftCols(n_) * h;
          r_.col(n_).head(n_) += h;
        }
      }
      const double vn = v.norm();
      worst = std::min(worst, bnorm > 0 ? vn / bnorm : 0.0);
      r_(n_, n_) = Scalar(vn);
      if (vn > 0)
        q_.col(n_) = v / vn;
      else
        q_.col(n_).setZero();
      ++n_;
    }
    return worst;
  }

private:
  Matrix<Scalar> q_;
  Matrix<Scalar> r_;
  Index n_ = 0;
};

template <typename Scalar>
RecoveryResult<Scalar> zero_result(const BlockDictionary<Scalar>& dict)
{
  RecoveryResult<Scalar> res;
  res.x_hat = BlockVector<Scalar>::zeros(dict.cols(), dict.block_len());
  res.residual_norms.push_back(0.0);
  res.termination = Termination::residual_tol;
  return res;
}

} // namespace detail

/// Block orthogonal matching pursuit.
///
/// Each step picks the block best matched to the residual, then re-fits all
/// chosen blocks jointly by least squares. Stops once ||r|| <= res_tol ||y||
/// or k_max blocks have been chosen. A selected block is never selected again.
template <typename Scalar>
RecoveryResult<Scalar> bomp(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                            Index k_max, double res_tol = default_greedy_res_tol)
{
  detail::require_measurement(dict, y, "bomp");
  const Index d = dict.block_len();
  if (k_max < 1)
    throw InvalidArgument("bomp: k_max must be positive");
  if (k_max * d > dict.rows())
    throw InvalidArgument("bomp: k_max * d = " + std::to_string(k_max * d) + " exceeds L = "
                          + std::to_string(dict.rows()));
  if (res_tol < 0)
    throw InvalidArgument("bomp: res_tol must be nonnegative");

  const double ynorm = y.norm();
  if (ynorm == 0.0)
    return detail::zero_result(dict);

  // Below this the new block is numerically inside the span already chosen.
  const double rank_tol = static_cast<double>(dict.rows()) * std::numeric_limits<double>::epsilon();
  // Below this the Gram-Schmidt update is distrusted and the fit is redone from scratch.
  constexpr double refit_tol = 1e-8;

  const Index k_cap = std::min(k_max, dict.num_blocks());
  RecoveryResult<Scalar> res;
  res.residual_norms.push_back(ynorm);
  std::vector<char> chosen(static_cast<std::size_t>(dict.num_blocks()), 0);
  detail::IncrementalQR<Scalar> qr(dict.rows(), k_cap * d);
  Vector<Scalar> r = y;
  bool refit = false;
  res.termination = Termination::support_full;

  while (static_cast<Index>(res.selection_order.size()) < k_cap) {
    const Index i = detail::best_matched_block(dict, r, &chosen);
    chosen[static_cast<std::size_t>(i)] = 1;
    res.selection_order.push_back(i);

    const double ratio = qr.append(dict.block(i));
    if (ratio < rank_tol)
      throw NumericalError("bomp: selecting block " + std::to_string(i)
                           + " makes the chosen sub-dictionary rank deficient");
    refit = refit || ratio < refit_tol;

    if (refit) {
      const Matrix<Scalar> d0 = gather_blocks(dict, res.selection_order);
      Eigen::ColPivHouseholderQR<Matrix<Scalar>> full(d0);
      r = y - d0 * full.solve(y);
    } else {
      r = y - qr.q() * (qr.q().adjoint() * y);
    }
    res.residual_norms.push_back(r.norm());
    if (res.residual_norms.back() <= res_tol * ynorm) {
      res.termination = Termination::residual_tol;
      break;
    }
  }

  const Matrix<Scalar> d0 = gather_blocks(dict, res.selection_order);
  Vector<Scalar> coeffs;
  if (refit) {
    coeffs = Eigen::ColPivHouseholderQR<Matrix<Scalar>>(d0).solve(y);
  } else {
    const Vector<Scalar> z = qr.q().adjoint() * y;
    coeffs = qr.r().template triangularView<Eigen::Upper>().solve(z);
  }
  res.x_hat = scatter_blocks<Scalar>(coeffs, res.selection_order, dict.num_blocks(), d);
  res.support = BlockSupport(res.selection_order);
  res.iterations = static_cast<Index>(res.selection_order.size());
  return res;
}

/// True when every block has orthonormal columns within `tol`.
template <typename Scalar>
bool has_orthonormal_blocks(const BlockDictionary<Scalar>& dict, double tol = tol::unitary)
{
  for (Index l = 0; l < dict.num_blocks(); ++l)
    if (detail::max_unitarity_error(Matrix<Scalar>(dict.block(l))) > tol)
      return false;
  return true;
}

/// Block matching pursuit on a dictionary with orthonormal blocks.
///
/// r <- r - D[i] D^H[i] r for the best-matched block i; the removed
/// coefficients accumulate in x_hat so that D x_hat = y - r.
template <typename Scalar>
RecoveryResult<Scalar> bmp(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                           Index max_iters, double res_tol = default_greedy_res_tol)
{
  detail::require_measurement(dict, y, "bmp");
  if (max_iters < 1)
    throw InvalidArgument("bmp: max_iters must be positive");
  if (res_tol < 0)
    throw InvalidArgument("bmp: res_tol must be nonnegative");
  if (!has_orthonormal_blocks(dict))
    throw NumericalError("bmp: dictionary blocks are not orthonormal");

  const double ynorm = y.norm();
  if (ynorm == 0.0)
    return detail::zero_result(dict);

  RecoveryResult<Scalar> res;
  res.x_hat = BlockVector<Scalar>::zeros(dict.cols(), dict.block_len());
  res.residual_norms.push_back(ynorm);
  res.termination = Termination::max_iters;
  Vector<Scalar> r = y;
  for (Index it = 0; it < max_iters; ++it) {
    const Index i = detail::best_matched_block(dict, r, nullptr);
    const Vector<Scalar> c = dict.block(i).adjoint() * r;
    res.x_hat.block(i) += c;
    r.noalias() -= dict.block(i) * c;
    res.selection_order.push_back(i);
    res.residual_norms.push_back(r.norm());
    if (res.residual_norms.back() <= res_tol * ynorm) {
      res.termination = Termination::residual_tol;
      break;
    }
  }
  std::vector<Index> picked = res.selection_order;
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  res.support = BlockSupport(std::move(picked));
  res.iterations = static_cast<Index>(res.selection_order.size());
  return res;
}

/// OMP: BOMP on the d = 1 partition of the same matrix.
template <typename Scalar>
RecoveryResult<Scalar> omp(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                           Index k_max, double res_tol = default_greedy_res_tol)
{
  return bomp(dict.reblocked(1), y, k_max, res_tol);
}

/// MP: BMP on the d = 1 partition of the same matrix.
template <typename Scalar>
RecoveryResult<Scalar> mp(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                          Index max_iters, double res_tol = default_greedy_res_tol)
{
  return bmp(dict.reblocked(1), y, max_iters, res_tol);
}

/// Mixed l2/l1 minimization  min sum_l ||x[l]||_2  s.t.  D x = y.
///
/// Variable splitting x = z with a scaled augmented Lagrangian:
///   x <- projection of (z - u) onto {x : D x = y}
///   z <- blockwise soft threshold of (x + u) at 1/penalty
///   u <- u + x - z
/// The penalty is doubled (halved) when the primal residual exceeds the dual
/// residual (or vice versa) by more than `balance_ratio`, checked every
/// `balance_interval` iterations.
template <typename Scalar>
RecoveryResult<Scalar> lopt(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                            const LoptParams& params = {})
{
  detail::require_measurement(dict, y, "lopt");
  params.validate();
  const Index d = dict.block_len();
  const Index n = dict.cols();
  const Matrix<Scalar>& mat = dict.matrix();

  // Affine projection: x0 + (I - Q Q^H) v, with Q an orthonormal basis of
  // range(D^H) and x0 = D^+ y.
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> row_qr(mat.adjoint());
  const Index rank = row_qr.rank();
  const Matrix<Scalar> q = Matrix<Scalar>(row_qr.householderQ()).leftCols(rank);
  const Vector<Scalar> x0 = Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>>(mat).solve(y);
  const double ynorm = y.norm();
  if ((mat * x0 - y).norm() > 1e-9 * std::max(1.0, ynorm))
    throw NumericalError("lopt: measurement is not in the range of the dictionary");

  auto project = [&](const Vector<Scalar>& v) -> Vector<Scalar> {
    return x0 + v - q * (q.adjoint() * v);
  };

  double rho = params.penalty;
  Vector<Scalar> z = Vector<Scalar>::Zero(n);
  Vector<Scalar> u = Vector<Scalar>::Zero(n);
  Vector<Scalar> x(n);

  RecoveryResult<Scalar> res;
  res.residual_norms.push_back(ynorm);
  res.termination = Termination::max_iters;

  for (Index it = 1; it <= params.max_iters; ++it) {
    x = project(z - u);
    const Vector<Scalar> z_old = z;
    const Vector<Scalar> v = x + u;
    const double thresh = 1.0 / rho;
    for (Index l = 0; l < n / d; ++l) {
      const auto vb = v.segment(l * d, d);
      const double nb = vb.norm();
      if (nb > thresh)
        z.segment(l * d, d) = (1.0 - thresh / nb) * vb;
      else
        z.segment(l * d, d).setZero();
    }
    u += x - z;

    const double primal = (x - z).norm();
    const double dual = rho * (z - z_old).norm();
    res.residual_norms.push_back((y - mat * z).norm());
    res.iterations = it;

    const double scale_p = std::max({1.0, x.norm(), z.norm()});
    const double scale_d = std::max(1.0, rho * u.norm());
    if (primal <= params.primal_tol * scale_p && dual <= params.dual_tol * scale_d) {
      res.termination = Termination::converged;
      break;
    }
    if (it % params.balance_interval != 0)
      continue;
    if (primal > params.balance_ratio * dual) {
      rho *= 2.0;
      u /= 2.0;
    } else if (dual > params.balance_ratio * primal) {
      rho /= 2.0;
      u *= 2.0;
    }
  }

  res.x_hat = BlockVector<Scalar>(z, d);
  const VectorXr norms = block_norms(z, d);
  const double top = norms.size() ? norms.maxCoeff() : 0.0;
  res.support = block_support(res.x_hat, 1e-6 * top);
  res.selection_order = res.support.indices();
  return res;
}

/// Basis pursuit: L-OPT on the d = 1 partition.
template <typename Scalar>
RecoveryResult<Scalar> bp(const BlockDictionary<Scalar>& dict, const Vector<Scalar>& y,
                          const LoptParams& params = {})
{
  return lopt(dict.reblocked(1), y, params);
}

/// Number of k-subsets of an m-set, saturating at `cap + 1`.
inline Index binomial_capped(Index m, Index k, Index cap)
{
  if (k < 0 || k > m)
    return 0;
  k = std::min(k, m - k);
  double acc = 1;
  for (Index i = 1; i <= k; ++i) {
    acc = acc * static_cast<double>(m - k + i) / static_cast<double>(i);
    if (acc > static_cast<double>(cap))
      return cap + 1;
  }
  return static_cast<Index>(std::llround(acc));
}

inline constexpr Index oracle_max_supports = 1000000;

/// Ground truth by enumeration: least squares on every k-block support.
///
/// Minimal residual wins; residuals within 1e-10 of each other are broken by
/// the smaller mixed l2/l1 norm, then by the lexicographically smaller support.
template <typename Scalar>
RecoveryResult<Scalar> exhaustive_oracle(const BlockDictionary<Scalar>& dict,
                                         const Vector<Scalar>& y, Index k)
{
  detail::require_measurement(dict, y, "exhaustive_oracle");
  const Index m = dict.num_blocks();
  const Index d = dict.block_len();
  if (k < 0 || k > m)
    throw InvalidArgument("exhaustive_oracle: k out of range");
  if (binomial_capped(m, k, oracle_max_supports) > oracle_max_supports)
    throw InvalidArgument("exhaustive_oracle: more than 1e6 candidate supports");

  RecoveryResult<Scalar> best;
  best.residual_norms = {y.norm(), y.norm()};
  best.x_hat = BlockVector<Scalar>::zeros(dict.cols(), d);
  best.termination = Termination::converged;
  if (k == 0)
    return best;

  constexpr double tie_tol = 1e-10;
  double best_res = std::numeric_limits<double>::infinity();
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<Index> combo(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i)
    combo[static_cast<std::size_t>(i)] = i;
  Index visited = 0;
  while (true) {
    ++visited;
    const Matrix<Scalar> d0 = gather_blocks(dict, combo);
    const Vector<Scalar> c = Eigen::ColPivHouseholderQR<Matrix<Scalar>>(d0).solve(y);
    const double r = (y - d0 * c).norm();
    const double obj = mixed_norm(c, d, 1.0);
    const bool better = r < best_res - tie_tol
                        || (std::abs(r - best_res) <= tie_tol && obj < best_obj);
    if (better) {
      best_res = r;
      best_obj = obj;
      best.x_hat = scatter_blocks<Scalar>(c, combo, m, d);
      best.selection_order = combo;
    }
    // next lexicographic combination
    Index pos = k - 1;
    while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == m - k + pos)
      --pos;
    if (pos < 0)
      break;
    ++combo[static_cast<std::size_t>(pos)];
    for (Index j = pos + 1; j < k; ++j)
      combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  }
  best.support = BlockSupport(best.selection_order);
  best.residual_norms.back() = best_res;
  best.iterations = visited;
  return best;
}

} // namespace blockpursuit
