#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmc/baseline.hpp"
#include "asmc/core.hpp"
#include "asmc/kernels.hpp"
#include "asmc/path.hpp"
#include "asmc/weights.hpp"

namespace asmc {

struct EngineConfig {
  double ess_ratio = 0.5;
  /// PSIS is kept at the final step when k_hat < threshold. +inf always keeps
  /// it, -inf never does.
  double khat_threshold = 0.7;
  /// Bisection tolerance on n; non-positive selects 1e-3 * N_k.
  double tolerance = 0.0;
  int max_bisection = 60;
  /// Default: ordered for LEO schemes, tempering otherwise.
  std::optional<PathKind> path;
  KernelConfig kernel;
  /// Test-only: skip resampling at interior steps (weights then carry over).
  bool resample = true;
  /// Run particle loops with OpenMP.
  bool parallel = true;
  std::uint64_t seed = 1;

  void validate() const;
};

/// What happened at one accepted step of a fold.
enum class StepAction { baseline, rejuvenate, psis, psis_rejected };
std::string_view to_string(StepAction action);

struct TraceRow {
  int step = 0;
  double n = 0.0;
  double phi_mean = 1.0, phi_min = 1.0, phi_max = 1.0;
  /// ESS of the reweighted particles before any resampling.
  double ess = 0.0;
  /// ESS change across one bisection-tolerance step (interior solver steps).
  double epsilon = 0.0;
  int solver_iterations = 0;
  bool hit_cap = false;
  StepAction action = StepAction::baseline;
  double estimate = 0.0;
  double k_hat = 0.0;
  long accepted_moves = 0;
  bool checkpoint = false;
};

struct CheckpointEstimate {
  int checkpoint = 0;    // deletion steps completed
  int info_time = 0;     // last retained time index
  double estimate = 0.0;
  double se = 0.0;
  int interventions = 0;  // rejuvenations strictly between this and the previous checkpoint
};

struct FoldResult {
  int fold = 0;
  bool ok = true;
  std::string error;
  double estimate = 0.0;
  double se = 0.0;
  double k_hat = 0.0;
  StepAction final_action = StepAction::baseline;
  std::vector<TraceRow> trace;
  std::vector<CheckpointEstimate> checkpoints;
  /// Number of rejuvenation events (each moves every particle).
  int kernel_invocations = 0;
  bool non_monotone = false;
  double seconds = 0.0;

  /// L_k, the number of accepted path steps.
  int steps() const { return static_cast<int>(trace.size()) - 1; }
};

/// Backward running average of checkpoint estimates: entry j is the mean of
/// the finite estimates among checkpoints 1..j+1 (NaN until one is finite).
std::vector<double> running_average(const std::vector<CheckpointEstimate>& checkpoints);

struct CvResult {
  std::vector<FoldResult> folds;
  double aggregate = 0.0;
  int failed = 0;
  int kernel_invocations = 0;
};

/// Everything a fold needs from the baseline run; shared read-only.
struct SmcSetup {
  const Model* model = nullptr;
  const std::vector<Vec>* particles = nullptr;
  KernelKind kernel = KernelKind::rwm;
  KernelTuning tuning;
};

/// Systematic resampling with a single offset u in [0, 1).
std::vector<std::size_t> resample_systematic(std::span<const double> normalized, double u);
std::vector<std::size_t> resample_systematic(std::span<const double> normalized, Rng& rng);

std::uint64_t fold_seed(std::uint64_t master, std::size_t fold);

/// Per-particle values of the fold's estimand target. For LEO schemes
/// `checkpoint` selects the information set; the result holds one row per
/// predicted group, or is empty when the target lies past the series end.
std::vector<std::vector<double>> estimand_log_f(const Model& model, const DeletionScheme& scheme, std::size_t fold,
                                                int checkpoint, const EstimandSpec& estimand,
                                                const std::vector<Vec>& particles, std::uint64_t seed,
                                                bool parallel);

/// Combines per-row targets under weights: sum over rows of log sum_r W f.
double combine_estimand(std::span<const double> normalized, const std::vector<std::vector<double>>& log_f,
                        double* se = nullptr);

FoldResult run_fold(const SmcSetup& setup, const DeletionScheme& scheme, std::size_t fold,
                    const EstimandSpec& estimand, const EngineConfig& config);

CvResult run_cv(const SmcSetup& setup, const DeletionScheme& scheme, const EstimandSpec& estimand,
                const EngineConfig& config);

struct PsisEstimate {
  double estimate = 0.0;
  double se = 0.0;
  double k_hat = 0.0;
  std::vector<CheckpointEstimate> checkpoints;
};

/// Pareto-smoothed importance sampling from the baseline draws alone.
PsisEstimate psis_fold(const SmcSetup& setup, const DeletionScheme& scheme, std::size_t fold,
                       const EstimandSpec& estimand, const EngineConfig& config);

struct RefitEstimate {
  bool ok = true;
  std::string error;
  double estimate = 0.0;
  double se = 0.0;
  std::vector<CheckpointEstimate> checkpoints;
};

/// Brute-force reference: fresh MCMC on the case-deleted posterior. For LEO
/// schemes one chain per checkpoint.
RefitEstimate refit_fold(const Model& model, const DeletionScheme& scheme, std::size_t fold,
                         const EstimandSpec& estimand, const BaselineConfig& config, std::uint64_t seed,
                         bool parallel);

/// Estimate and Monte Carlo standard error of log mean exp(log_f) over a chain,
/// with the standard error corrected for autocorrelation.
double chain_log_mean(const std::vector<double>& log_f, double* se);

}  // namespace asmc
