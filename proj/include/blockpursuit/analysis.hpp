#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "blockmat.hpp"
#include "coherence.hpp"
#include "types.hpp"

namespace blockpursuit {

inline constexpr double unbounded = std::numeric_limits<double>::infinity();

/// Strict upper bound on k*d under which every block k-sparse vector is
/// recovered by BOMP and L-OPT: (1/mu_B + d - (d-1) nu/mu_B) / 2.
/// Returns +inf when mu_block == 0.
double block_recovery_threshold(double mu_block, double nu, Index block_len);

/// (1/mu + 1) / 2, the conventional-sparsity bound on k*d; +inf when mu == 0.
double conventional_recovery_threshold(double mu);

/// Largest k with k*d strictly below the block threshold, capped at `cap`.
Index max_recoverable_k(double mu_block, double nu, Index block_len,
                        Index cap = std::numeric_limits<Index>::max());

/// beta = 1 - (1 - (k-1) d mu_B) / k. Meaningful only when
/// satisfies_orthonormal_threshold(k, d, mu_B).
double bmp_decay_factor(Index k, Index block_len, double mu_block);

/// k d < (1/mu_B + d) / 2
bool satisfies_orthonormal_threshold(Index k, Index block_len, double mu_block);

/// Lower bound sqrt((M - R) / (R (M d - 1))) on the coherence of any
/// dictionary of M*d unit vectors in dimension R*d.
double welch_coherence_bound(Index num_blocks, Index row_blocks, Index block_len);

/// R M / (M - R): block lengths above this guarantee that orthogonalized
/// block recovery has a higher threshold than conventional recovery.
double orthogonalization_gain_min_d(Index num_blocks, Index row_blocks);

struct ThresholdReport
{
  double mu = 0;
  double mu_block = 0;
  double nu = 0;
  Index d = 1;
  double block_threshold_kd = 0;
  double conventional_threshold_kd = 0;
  double gain = 0;
  Index max_k = 0;

  std::string to_key_value() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

ThresholdReport threshold_report(const CoherenceReport& coh, Index block_len,
                                 Index cap = std::numeric_limits<Index>::max());

struct UncertaintyBound
{
  double geometric = 0;  // sqrt(A B) >= geometric
  double arithmetic = 0; // A + B >= arithmetic
};

/// 1/(d mu_B(Phi, Psi)) and its additive form 2/(d mu_B(Phi, Psi)).
template <typename Scalar>
UncertaintyBound uncertainty_lower_bound(const BlockDictionary<Scalar>& phi,
                                         const BlockDictionary<Scalar>& psi)
{
  const double mub = cross_block_coherence(phi, psi);
  const double g = 1.0 / (static_cast<double>(phi.block_len()) * mub);
  return {g, 2.0 * g};
}

struct UncertaintyCheck
{
  Index a = 0;
  Index b = 0;
  double bound = 0;
  bool geometric_ok = false;
  bool arithmetic_ok = false;
  bool equality = false;
};

inline constexpr double uncertainty_rel_tol = 1e-9;

/// Expands x in both bases, counts nonzero blocks (norm > tol) and checks
/// (A+B)/2 >= sqrt(AB) >= 1/(d mu_B(Phi, Psi)), each with 1e-9 relative slack.
/// `equality` is set when both relations hold with equality within 1e-9.
template <typename Scalar>
UncertaintyCheck verify_uncertainty(const BlockDictionary<Scalar>& phi,
                                    const BlockDictionary<Scalar>& psi, const Vector<Scalar>& x,
                                    double tol)
{
  if (x.size() != phi.rows())
    throw InvalidArgument("verify_uncertainty: signal length does not match the bases");
  if (x.norm() == 0.0)
    throw InvalidArgument("verify_uncertainty: zero signal");
  const Index d = phi.block_len();
  const UncertaintyBound ub = uncertainty_lower_bound(phi, psi);
  const BlockVector<Scalar> a(phi.matrix().adjoint() * x, d);
  const BlockVector<Scalar> b(psi.matrix().adjoint() * x, d);
  UncertaintyCheck out;
  out.a = block_support(a, tol).size();
  out.b = block_support(b, tol).size();
  out.bound = ub.geometric;
  const double geo = std::sqrt(static_cast<double>(out.a * out.b));
  const double arith = 0.5 * static_cast<double>(out.a + out.b);
  const double eps = uncertainty_rel_tol;
  out.geometric_ok = geo >= ub.geometric * (1.0 - eps);
  out.arithmetic_ok = arith >= geo * (1.0 - eps);
  out.equality = out.geometric_ok && out.arithmetic_ok
                 && std::abs(geo - ub.geometric) <= eps * ub.geometric
                 && std::abs(arith - geo) <= eps * geo;
  return out;
}

} // namespace blockpursuit
