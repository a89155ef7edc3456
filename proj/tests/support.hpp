#pragma once

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "blockpursuit/types.hpp"

// Reference implementations built from textbook formulas, kept independent
// of the library code paths they check.
namespace oracle {

using blockpursuit::Index;
using blockpursuit::MatrixXc;
using blockpursuit::cplx;

inline std::mt19937_64& engine()
{
  static std::mt19937_64 e(20240601);
  return e;
}

inline MatrixXc random_complex(Index rows, Index cols, std::mt19937_64& e = engine())
{
  std::normal_distribution<double> n;
  MatrixXc m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = cplx(n(e), n(e));
  return m;
}

inline Eigen::MatrixXd random_real(Index rows, Index cols, std::mt19937_64& e = engine())
{
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = n(e);
  return m;
}

// sqrt of the top eigenvalue of A^H A
template <typename M>
double spectral_norm(const M& a)
{
  const MatrixXc g = a.template cast<cplx>().adjoint() * a.template cast<cplx>();
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

template <typename M>
double coherence(const M& d)
{
  double mu = 0;
  for (Index i = 0; i < d.cols(); ++i)
    for (Index j = 0; j < d.cols(); ++j)
      if (i != j)
        mu = std::max(mu, std::abs(d.col(i).dot(d.col(j))));
  return mu;
}

template <typename M>
double block_coherence(const M& d, Index bl)
{
  double mu = 0;
  const Index m = d.cols() / bl;
  for (Index l = 0; l < m; ++l)
    for (Index r = 0; r < m; ++r)
      if (l != r) {
        const auto g = (d.middleCols(l * bl, bl).adjoint() * d.middleCols(r * bl, bl)).eval();
        mu = std::max(mu, spectral_norm(g) / static_cast<double>(bl));
      }
  return mu;
}

template <typename M>
double sub_coherence(const M& d, Index bl)
{
  double nu = 0;
  for (Index l = 0; l < d.cols() / bl; ++l)
    for (Index i = 0; i < bl; ++i)
      for (Index j = 0; j < bl; ++j)
        if (i != j)
          nu = std::max(nu, std::abs(d.col(l * bl + i).dot(d.col(l * bl + j))));
  return nu;
}

template <typename M>
double rho_c(const M& a, Index bl)
{
  double best = 0;
  for (Index r = 0; r < a.cols() / bl; ++r) {
    double s = 0;
    for (Index l = 0; l < a.rows() / bl; ++l)
      s += spectral_norm(a.block(l * bl, r * bl, bl, bl).eval());
    best = std::max(best, s);
  }
  return best;
}

template <typename M>
double rho_r(const M& a, Index bl)
{
  double best = 0;
  for (Index l = 0; l < a.rows() / bl; ++l) {
    double s = 0;
    for (Index r = 0; r < a.cols() / bl; ++r)
      s += spectral_norm(a.block(l * bl, r * bl, bl, bl).eval());
    best = std::max(best, s);
  }
  return best;
}

// (A^H A)^{-1} A^H for full column rank A
template <typename M>
M pinv(const M& a)
{
  const M g = a.adjoint() * a;
  return g.ldlt().solve(a.adjoint());
}

template <typename V>
double mixed_21(const V& x, Index bl)
{
  double s = 0;
  for (Index l = 0; l < x.size() / bl; ++l)
    s += x.segment(l * bl, bl).norm();
  return s;
}

template <typename V>
double mixed_2inf(const V& x, Index bl)
{
  double s = 0;
  for (Index l = 0; l < x.size() / bl; ++l)
    s = std::max(s, x.segment(l * bl, bl).norm());
  return s;
}

} // namespace oracle
