#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "blockmat.hpp"
#include "coherence.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace blockpursuit {

enum class Ensemble { real_gaussian, complex_gaussian };

namespace detail {

template <typename Scalar>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, CounterRng& rng, Ensemble ensemble)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<Scalar> m(rows, cols);
  if (ensemble == Ensemble::complex_gaussian) {
    if constexpr (is_complex_v<Scalar>) {
      const double s = std::sqrt(0.5);
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
          const double re = normal(rng);
          const double im = normal(rng);
          m(i, j) = Scalar(s * re, s * im);
        }
      return m;
    } else {
      throw InvalidArgument("complex Gaussian ensemble requires a complex scalar type");
    }
  }
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = Scalar(normal(rng));
  return m;
}

// Thin QR of a full-column-rank block with the triangular factor's diagonal
// made positive real. Returns false when a diagonal entry falls below
// tol * max diagonal.
template <typename Scalar>
bool positive_qr(const Matrix<Scalar>& b, Matrix<Scalar>& q, Matrix<Scalar>& r, double tol)
{
  const Index n = b.cols();
  Eigen::HouseholderQR<Matrix<Scalar>> qr(b);
  q = qr.householderQ() * Matrix<Scalar>::Identity(b.rows(), n);
  r = qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>();
  double dmax = 0;
  for (Index i = 0; i < n; ++i)
    dmax = std::max(dmax, std::abs(r(i, i)));
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(r(i, i));
    if (!(a > tol * dmax))
      return false;
    const Scalar phase = r(i, i) / a;
    q.col(i) *= phase;
    r.row(i) *= Eigen::numext::conj(phase);
    r(i, i) = Scalar(a);
  }
  return true;
}

} // namespace detail

/// L x N dictionary with i.i.d. Gaussian entries and unit-norm columns.
template <typename Scalar>
BlockDictionary<Scalar> gaussian_dictionary(Index rows, Index cols, Index block_len,
                                            std::uint64_t seed,
                                            Ensemble ensemble = Ensemble::real_gaussian)
{
  if (block_len <= 0 || cols % block_len != 0)
    throw InvalidArgument("gaussian_dictionary: block length must divide N");
  if (rows <= 0)
    throw InvalidArgument("gaussian_dictionary: L must be positive");
  CounterRng rng(seed);
  Matrix<Scalar> m = detail::gaussian_matrix<Scalar>(rows, cols, rng, ensemble);
  m.colwise().normalize();
  return BlockDictionary<Scalar>(std::move(m), block_len);
}

/// Haar-distributed unitary (orthogonal for real Scalar).
template <typename Scalar>
Matrix<Scalar> random_unitary(Index d, std::uint64_t seed)
{
  if (d < 1)
    throw InvalidArgument("random_unitary: dimension must be positive");
  CounterRng rng(seed);
  const Ensemble ens = is_complex_v<Scalar> ? Ensemble::complex_gaussian : Ensemble::real_gaussian;
  const Matrix<Scalar> g = detail::gaussian_matrix<Scalar>(d, d, rng, ens);
  Matrix<Scalar> q, r;
  if (!detail::positive_qr(g, q, r, 0.0))
    throw NumericalError("random_unitary: degenerate Gaussian draw");
  return q;
}

/// d x d DFT-like factor F(l, r) = exp(j 2 pi l r / R) / sqrt(R).
inline MatrixXc unitary_dft(Index r_size)
{
  MatrixXc f(r_size, r_size);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r_size));
  for (Index l = 0; l < r_size; ++l)
    for (Index r = 0; r < r_size; ++r) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((l * r) % r_size)
                           / static_cast<double>(r_size);
      f(l, r) = std::polar(scale, angle);
    }
  return f;
}

template <typename Scalar>
struct ExtremalPair
{
  BlockDictionary<Scalar> phi;  // I_L
  BlockDictionary<Scalar> psi;  // F kron U
  BlockDictionary<Scalar> dict; // [phi psi]
};

/// Spike basis and Kronecker-Fourier basis F (x) U, the pair with minimal
/// block-coherence 1/(d sqrt(R)).
inline ExtremalPair<cplx> spike_kron_fourier(Index r_size, const MatrixXc& unitary)
{
  if (r_size < 1)
    throw InvalidArgument("spike_kron_fourier: R must be positive");
  if (unitary.rows() != unitary.cols() || unitary.rows() < 1)
    throw InvalidArgument("spike_kron_fourier: U must be square");
  if (detail::max_unitarity_error(unitary) > tol::unitary)
    throw NumericalError("spike_kron_fourier: U is not unitary");
  const Index d = unitary.rows();
  const Index l_size = r_size * d;
  const MatrixXc f = unitary_dft(r_size);
  MatrixXc psi(l_size, l_size);
  for (Index i = 0; i < r_size; ++i)
    for (Index j = 0; j < r_size; ++j)
      psi.block(i * d, j * d, d, d) = f(i, j) * unitary;
  MatrixXc dict(l_size, 2 * l_size);
  dict << MatrixXc::Identity(l_size, l_size), psi;
  return {BlockDictionary<cplx>(MatrixXc::Identity(l_size, l_size), d),
          BlockDictionary<cplx>(std::move(psi), d), BlockDictionary<cplx>(std::move(dict), d)};
}

/// D = A W with orthonormal-column blocks A[l] and block-diagonal invertible W.
template <typename Scalar>
class OrthogonalizedPair
{
public:
  OrthogonalizedPair(BlockDictionary<Scalar> a, std::vector<Matrix<Scalar>> w)
      : a_(std::move(a)), w_(std::move(w))
  {}

  const BlockDictionary<Scalar>& dictionary() const { return a_; }
  const Matrix<Scalar>& w_block(Index l) const { return w_[static_cast<std::size_t>(l)]; }

  Matrix<Scalar> w_matrix() const
  {
    const Index d = a_.block_len();
    Matrix<Scalar> w = Matrix<Scalar>::Zero(a_.cols(), a_.cols());
    for (Index l = 0; l < a_.num_blocks(); ++l)
      w.block(l * d, l * d, d, d) = w_block(l);
    return w;
  }

  /// c = W x
  BlockVector<Scalar> apply_w(const BlockVector<Scalar>& x) const
  {
    BlockVector<Scalar> c = BlockVector<Scalar>::zeros(x.size(), x.block_len());
    for (Index l = 0; l < x.num_blocks(); ++l)
      c.block(l) = w_block(l) * x.block(l);
    return c;
  }

  /// x = W^{-1} c, blockwise upper-triangular solves.
  BlockVector<Scalar> solve_w(const BlockVector<Scalar>& c) const
  {
    BlockVector<Scalar> x = BlockVector<Scalar>::zeros(c.size(), c.block_len());
    for (Index l = 0; l < c.num_blocks(); ++l)
      x.block(l) = w_block(l).template triangularView<Eigen::Upper>().solve(c.block(l));
    return x;
  }

private:
  BlockDictionary<Scalar> a_;
  std::vector<Matrix<Scalar>> w_;
};

template <typename Scalar>
OrthogonalizedPair<Scalar> orthogonalize_blocks(const BlockDictionary<Scalar>& dict)
{
  const Index d = dict.block_len();
  if (d > dict.rows())
    throw NumericalError("orthogonalize_blocks: block length exceeds row count");
  Matrix<Scalar> a(dict.rows(), dict.cols());
  std::vector<Matrix<Scalar>> w;
  w.reserve(static_cast<std::size_t>(dict.num_blocks()));
  for (Index l = 0; l < dict.num_blocks(); ++l) {
    Matrix<Scalar> q, r;
    if (!detail::positive_qr<Scalar>(dict.block(l), q, r, tol::block_rank))
      throw NumericalError("orthogonalize_blocks: block " + std::to_string(l)
                           + " is rank deficient");
    a.middleCols(l * d, d) = q;
    w.push_back(std::move(r));
  }
  return {BlockDictionary<Scalar>(std::move(a), d), std::move(w)};
}

/// x = delta_{sqrt R} (x) c: blocks 0, s, 2s, ... equal c, with s = sqrt(R).
template <typename Scalar>
BlockVector<Scalar> dirac_comb_signal(Index r_size, const Vector<Scalar>& c)
{
  if (r_size < 1)
    throw InvalidArgument("dirac_comb_signal: R must be positive");
  const auto s = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(r_size))));
  if (s * s != r_size)
    throw InvalidArgument("dirac_comb_signal: R = " + std::to_string(r_size)
                          + " is not a perfect square");
  if (c.size() < 1 || c.norm() == 0.0)
    throw InvalidArgument("dirac_comb_signal: c must be a nonzero vector");
  const Index d = c.size();
  auto x = BlockVector<Scalar>::zeros(r_size * d, d);
  for (Index l = 0; l < r_size; l += s)
    x.block(l) = c;
  return x;
}

} // namespace blockpursuit
