#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "blockmat.hpp"
#include "coherence.hpp"
#include "recovery.hpp"
#include "types.hpp"

namespace blockpursuit::harness {

enum class Solver { omp, bomp, bomp_o, bp, lopt, lopt_o, bmp };

std::string_view to_string(Solver s);
Solver parse_solver(std::string_view name);

/// Monte Carlo sweep over block-sparsity levels k_min..k_max.
struct ExperimentConfig
{
  Index L = 40;
  Index N = 400;
  Index d = 4;
  std::vector<Solver> solvers{Solver::omp, Solver::bomp, Solver::bomp_o};
  Index k_min = 1;
  Index k_max = 10;
  Index trials = 100;
  std::uint64_t seed = 1;
  double success_rel_tol = 1e-3;
  unsigned threads = 0; // 0: hardware concurrency
  double greedy_res_tol = default_greedy_res_tol;
  Index bmp_max_iters = 1000;
  LoptParams lopt{};
  bool certify = false; // evaluate the exact-recovery certificate per trial
  bool timing = false;  // emit wall time (breaks byte-for-byte reproducibility)

  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct Instance
{
  BlockDictionary<double> dict;
  BlockVector<double> x0;
  VectorXr y;
  BlockSupport support;
};

/// Fresh dictionary and block k-sparse signal; a pure function of
/// (config.seed, k, trial_index).
Instance generate_instance(const ExperimentConfig& config, Index k, Index trial_index);

struct CurveRow
{
  Solver solver = Solver::bomp;
  Index k = 0;
  Index trials = 0;
  Index successes = 0;
  double success_rate = 0;
  double mean_iterations = 0;
  double mean_seconds = 0;
  Index solver_errors = 0;
  Index nonconverged = 0;
  Index certified_trials = 0;
  Index certified_successes = 0;
  bool anomaly = false; // rate rose above the previous k by more than 3 sigma
};

struct SuccessCurve
{
  std::vector<CurveRow> rows; // grouped by solver in config order, then k ascending

  const CurveRow& at(Solver s, Index k) const;
  void write_csv(std::ostream& out, bool timing = false) const;
};

SuccessCurve run_montecarlo(const ExperimentConfig& config);

struct ThresholdSweepRow
{
  Index d = 1;
  double block_threshold_kd = 0;
  double conventional_identity_kd = 0;
  double conventional_haar_mean_kd = 0;
  double ratio_identity = 0;
};

/// Extremal-pair thresholds for d = 1..d_max; conventional thresholds use
/// mu = max|U_ij| / sqrt(R), at U = I and averaged over `samples` Haar draws.
std::vector<ThresholdSweepRow> sweep_thresholds(Index r_size, Index d_max, Index samples,
                                                std::uint64_t seed = 1);
void write_sweep_csv(std::ostream& out, const std::vector<ThresholdSweepRow>& rows);

struct AuditReport
{
  Index L = 0;
  Index N = 0;
  Index d = 1;
  Index M = 0;
  CoherenceReport coherence;
  ThresholdReport thresholds;
  bool has_welch = false;
  double welch_bound = 0;
  double orthogonalization_min_d = 0;

  std::string to_key_value() const;
};

/// Validates the dictionary (unit columns, full-rank blocks) and reports
/// coherence measures and recovery thresholds.
AuditReport audit(const MatrixXc& matrix, Index block_len);

} // namespace blockpursuit::harness
