#include "blockpursuit/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace blockpursuit {

namespace {

std::string fmt(double v)
{
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

double block_recovery_threshold(double mu_block, double nu, Index block_len)
{
  if (!(mu_block >= 0) || !(nu >= 0) || block_len < 1)
    throw InvalidArgument("block_recovery_threshold: need mu_B >= 0, nu >= 0, d >= 1");
  if (mu_block == 0.0)
    return unbounded;
  const auto d = static_cast<double>(block_len);
  return 0.5 * (1.0 / mu_block + d - (d - 1.0) * nu / mu_block);
}

double conventional_recovery_threshold(double mu)
{
  if (!(mu >= 0))
    throw InvalidArgument("conventional_recovery_threshold: need mu >= 0");
  if (mu == 0.0)
    return unbounded;
  return 0.5 * (1.0 / mu + 1.0);
}

Index max_recoverable_k(double mu_block, double nu, Index block_len, Index cap)
{
  const double bound = block_recovery_threshold(mu_block, nu, block_len);
  if (std::isinf(bound))
    return cap;
  if (bound <= 0)
    return 0;
  // k d < bound, strictly
  auto k = static_cast<Index>(std::ceil(bound / static_cast<double>(block_len))) - 1;
  while (static_cast<double>((k + 1) * block_len) < bound)
    ++k;
  while (k > 0 && static_cast<double>(k * block_len) >= bound)
    --k;
  return std::min(std::max<Index>(k, 0), cap);
}

double bmp_decay_factor(Index k, Index block_len, double mu_block)
{
  if (k < 1)
    throw InvalidArgument("bmp_decay_factor: k must be positive");
  const auto kd = static_cast<double>(k);
  return 1.0 - (1.0 - (kd - 1.0) * static_cast<double>(block_len) * mu_block) / kd;
}

bool satisfies_orthonormal_threshold(Index k, Index block_len, double mu_block)
{
  return static_cast<double>(k * block_len) < block_recovery_threshold(mu_block, 0.0, block_len);
}

double welch_coherence_bound(Index num_blocks, Index row_blocks, Index block_len)
{
  if (row_blocks < 1 || num_blocks <= row_blocks || block_len < 1)
    throw InvalidArgument("welch_coherence_bound: need M > R >= 1 and d >= 1");
  const auto m = static_cast<double>(num_blocks);
  const auto r = static_cast<double>(row_blocks);
  const auto d = static_cast<double>(block_len);
  return std::sqrt((m - r) / (r * (m * d - 1.0)));
}

double orthogonalization_gain_min_d(Index num_blocks, Index row_blocks)
{
  if (row_blocks < 1 || num_blocks <= row_blocks)
    throw InvalidArgument("orthogonalization_gain_min_d: need M > R >= 1");
  const auto m = static_cast<double>(num_blocks);
  const auto r = static_cast<double>(row_blocks);
  return r * m / (m - r);
}

ThresholdReport threshold_report(const CoherenceReport& coh, Index block_len, Index cap)
{
  ThresholdReport t;
  t.mu = coh.mu;
  t.mu_block = coh.mu_block;
  t.nu = block_len == 1 ? 0.0 : coh.sub_coherence;
  t.d = block_len;
  t.block_threshold_kd = block_recovery_threshold(t.mu_block, t.nu, block_len);
  t.conventional_threshold_kd = conventional_recovery_threshold(t.mu);
  if (std::isinf(t.block_threshold_kd) && std::isinf(t.conventional_threshold_kd))
    t.gain = 1.0;
  else
    t.gain = t.block_threshold_kd / t.conventional_threshold_kd;
  t.max_k = max_recoverable_k(t.mu_block, t.nu, block_len, cap);
  return t;
}

std::string ThresholdReport::to_key_value() const
{
  std::ostringstream os;
  os << "mu=" << fmt(mu) << '\n'
     << "mu_block=" << fmt(mu_block) << '\n'
     << "nu=" << fmt(nu) << '\n'
     << "d=" << d << '\n'
     << "block_threshold_kd=" << fmt(block_threshold_kd) << '\n'
     << "conventional_threshold_kd=" << fmt(conventional_threshold_kd) << '\n'
     << "gain=" << fmt(gain) << '\n'
     << "max_recoverable_k=" << max_k << '\n';
  return os.str();
}

std::string ThresholdReport::csv_header()
{
  return "mu,mu_block,nu,d,block_threshold_kd,conventional_threshold_kd,gain,max_recoverable_k";
}

std::string ThresholdReport::to_csv_row() const
{
  std::ostringstream os;
  os << fmt(mu) << ',' << fmt(mu_block) << ',' << fmt(nu) << ',' << d << ','
     << fmt(block_threshold_kd) << ',' << fmt(conventional_threshold_kd) << ',' << fmt(gain)
     << ',' << max_k;
  return os.str();
}

} // namespace blockpursuit
