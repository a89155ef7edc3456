#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "blockmat.hpp"
#include "types.hpp"

namespace blockpursuit {

/// Largest singular value.
template <typename Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& a)
{
  if (a.size() == 0)
    throw InvalidArgument("spectral_norm: empty matrix");
  if (a.rows() == 1 || a.cols() == 1)
    return a.norm();
  using Plain = typename Derived::PlainObject;
  Eigen::JacobiSVD<Plain> svd(a.eval());
  return svd.singularValues()(0);
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> gram(const BlockDictionary<Scalar>& dict)
{
  return dict.matrix().adjoint() * dict.matrix();
}

// Spectral norm of a d x d Gram block, with |g| for d = 1 so that the
// block quantities coincide bit-for-bit with their scalar counterparts.
template <typename Derived>
double gram_block_norm(const Eigen::MatrixBase<Derived>& g)
{
  if (g.size() == 1)
    return std::abs(g(0, 0));
  return spectral_norm(g);
}

template <typename Derived>
void require_aligned(const Eigen::MatrixBase<Derived>& a, Index block_len, const char* what)
{
  if (block_len <= 0 || a.rows() % block_len != 0 || a.cols() % block_len != 0)
    throw InvalidArgument(std::string(what) + ": matrix dimensions " + std::to_string(a.rows())
                          + "x" + std::to_string(a.cols())
                          + " are not multiples of block length " + std::to_string(block_len));
}

template <typename Scalar>
double max_unitarity_error(const Matrix<Scalar>& u)
{
  const Matrix<Scalar> e = u.adjoint() * u - Matrix<Scalar>::Identity(u.cols(), u.cols());
  return e.cwiseAbs().maxCoeff();
}

} // namespace detail

/// Coherence: largest |<d_l, d_r>| over distinct columns.
template <typename Scalar>
double coherence(const BlockDictionary<Scalar>& dict)
{
  if (dict.cols() < 2)
    throw InvalidArgument("coherence: dictionary needs at least two columns");
  const Matrix<Scalar> g = detail::gram(dict);
  double mu = 0;
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < j; ++i)
      mu = std::max(mu, std::abs(g(i, j)));
  return mu;
}

/// Block-coherence: max over distinct block pairs of rho(D^H[l] D[r]) / d.
template <typename Scalar>
double block_coherence(const BlockDictionary<Scalar>& dict)
{
  if (dict.num_blocks() < 2)
    throw InvalidArgument("block_coherence: dictionary needs at least two blocks");
  const Index d = dict.block_len();
  const Matrix<Scalar> g = detail::gram(dict);
  double best = 0;
  // rho(M[l,r]) = rho(M[r,l]) since M[r,l] = M[l,r]^H
  for (Index r = 0; r < dict.num_blocks(); ++r)
    for (Index l = 0; l < r; ++l)
      best = std::max(best, detail::gram_block_norm(g.block(l * d, r * d, d, d)));
  return best / static_cast<double>(d);
}

/// Sub-coherence: largest |<d_i, d_j>| over distinct columns inside one block; 0 when d = 1.
template <typename Scalar>
double sub_coherence(const BlockDictionary<Scalar>& dict)
{
  const Index d = dict.block_len();
  if (d == 1)
    return 0.0;
  double nu = 0;
  for (Index l = 0; l < dict.num_blocks(); ++l) {
    const Matrix<Scalar> g = dict.block(l).adjoint() * dict.block(l);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < j; ++i)
        nu = std::max(nu, std::abs(g(i, j)));
  }
  return nu;
}

struct CoherenceReport
{
  double mu = 0;
  double mu_block = 0;
  double sub_coherence = 0;
  bool gram_computed = false;
};

/// All three coherence measures from a single Gram matrix.
template <typename Scalar>
CoherenceReport coherence_report(const BlockDictionary<Scalar>& dict)
{
  CoherenceReport rep;
  const Index d = dict.block_len();
  const Matrix<Scalar> g = detail::gram(dict);
  rep.gram_computed = true;
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < j; ++i) {
      const double v = std::abs(g(i, j));
      rep.mu = std::max(rep.mu, v);
      if (d > 1 && i / d == j / d)
        rep.sub_coherence = std::max(rep.sub_coherence, v);
    }
  for (Index r = 0; r < dict.num_blocks(); ++r)
    for (Index l = 0; l < r; ++l)
      rep.mu_block = std::max(rep.mu_block, detail::gram_block_norm(g.block(l * d, r * d, d, d)));
  rep.mu_block /= static_cast<double>(d);
  return rep;
}

/// Block-coherence between two unitary bases: max over all l, r of rho(Phi^H[l] Psi[r]) / d.
template <typename Scalar>
double cross_block_coherence(const BlockDictionary<Scalar>& phi, const BlockDictionary<Scalar>& psi)
{
  if (phi.block_len() != psi.block_len())
    throw InvalidArgument("cross_block_coherence: block lengths differ");
  if (phi.rows() != phi.cols() || psi.rows() != psi.cols() || phi.rows() != psi.rows())
    throw InvalidArgument("cross_block_coherence: bases must be square and of equal size");
  if (detail::max_unitarity_error(phi.matrix()) > tol::unitary
      || detail::max_unitarity_error(psi.matrix()) > tol::unitary)
    throw NumericalError("cross_block_coherence: input is not unitary");
  const Index d = phi.block_len();
  const Index r_blocks = phi.row_blocks();
  const Matrix<Scalar> g = phi.matrix().adjoint() * psi.matrix();
  double best = 0;
  for (Index r = 0; r < r_blocks; ++r)
    for (Index l = 0; l < r_blocks; ++l)
      best = std::max(best, detail::gram_block_norm(g.block(l * d, r * d, d, d)));
  return best / static_cast<double>(d);
}

/// rho_c: max over block-columns of the summed spectral norms of its d x d blocks.
/// A matrix with no columns has rho_c = 0.
template <typename Derived>
double rho_c(const Eigen::MatrixBase<Derived>& a, Index block_len)
{
  detail::require_aligned(a, block_len, "rho_c");
  const Index d = block_len;
  double best = 0;
  for (Index r = 0; r < a.cols() / d; ++r) {
    double sum = 0;
    for (Index l = 0; l < a.rows() / d; ++l)
      sum += detail::gram_block_norm(a.block(l * d, r * d, d, d));
    best = std::max(best, sum);
  }
  return best;
}

/// rho_r: max over block-rows of the summed spectral norms; rho_r(A) = rho_c(A^H).
template <typename Derived>
double rho_r(const Eigen::MatrixBase<Derived>& a, Index block_len)
{
  detail::require_aligned(a, block_len, "rho_r");
  const Index d = block_len;
  double best = 0;
  for (Index l = 0; l < a.rows() / d; ++l) {
    double sum = 0;
    for (Index r = 0; r < a.cols() / d; ++r)
      sum += detail::gram_block_norm(a.block(l * d, r * d, d, d));
    best = std::max(best, sum);
  }
  return best;
}

struct Certificate
{
  double value = 0;
  bool holds = false;
};

/// Solves D0 X = rhs in the least-squares sense, X = D0^+ rhs, for a
/// full-column-rank D0. Rank is decided at sigma_max * max(L, kd) * eps.
template <typename Scalar>
class SupportPseudoInverse
{
public:
  explicit SupportPseudoInverse(const Matrix<Scalar>& d0) : qr_(d0)
  {
    qr_.setThreshold(static_cast<double>(std::max(d0.rows(), d0.cols()))
                     * std::numeric_limits<double>::epsilon());
    if (qr_.rank() < d0.cols())
      throw NumericalError("support sub-dictionary is rank deficient (rank "
                           + std::to_string(qr_.rank()) + " < " + std::to_string(d0.cols()) + ")");
  }

  template <typename Rhs>
  Matrix<Scalar> solve(const Eigen::MatrixBase<Rhs>& rhs) const
  {
    return qr_.solve(rhs);
  }

private:
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr_;
};

/// Exact-recovery certificate rho_c(D0^+ Dbar0) < 1 for the blocks in `support`.
/// Strict inequality, no slack. A support covering every block yields value 0.
template <typename Scalar>
Certificate exact_recovery_certificate(const BlockDictionary<Scalar>& dict,
                                       const BlockSupport& support)
{
  const Index d = dict.block_len();
  if (support.size() * d > dict.rows())
    throw InvalidArgument("exact_recovery_certificate: support too large (k*d = "
                          + std::to_string(support.size() * d) + " > L = "
                          + std::to_string(dict.rows()) + ")");
  if (!support.empty() && support.indices().back() >= dict.num_blocks())
    throw InvalidArgument("exact_recovery_certificate: block index out of range");
  if (support.empty())
    throw InvalidArgument("exact_recovery_certificate: empty support");

  const Matrix<Scalar> d0 = gather_blocks(dict, support.indices());
  const Matrix<Scalar> dbar = gather_blocks(dict, support.complement(dict.num_blocks()));
  const SupportPseudoInverse<Scalar> pinv(d0);
  Certificate cert;
  if (dbar.cols() == 0)
    cert.value = 0.0;
  else
    cert.value = rho_c(pinv.solve(dbar), d);
  cert.holds = cert.value < 1.0;
  return cert;
}

} // namespace blockpursuit
