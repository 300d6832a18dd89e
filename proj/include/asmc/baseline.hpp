#pragma once

#include <vector>

#include "asmc/kernels.hpp"
#include "asmc/model.hpp"

namespace asmc {

struct BaselineConfig {
  int iterations = 4000;
  int burn_in = 1000;
  int thin = 3;
  KernelKind kind = KernelKind::automatic;
  int leapfrog_steps = 10;
  double target_accept = 0.8;
  /// Starting step size; non-positive runs the doubling heuristic first.
  double initial_step = 0.0;
  /// Starting inverse metric; empty means the identity.
  Vec initial_inv_metric;

  /// (iterations - burn_in) / thin.
  int retained() const;
  void validate() const;
};

struct BaselineResult {
  std::vector<Vec> draws;
  Vec mean;
  Vec variance;
  Vec lag1;
  KernelKind kind = KernelKind::rwm;
  KernelTuning tuning;
  double accept_rate = 0.0;
  int divergences = 0;
};

/// Single-chain MCMC on the tempered target. HMC adapts its step size by dual
/// averaging and its diagonal metric over doubling windows during burn-in;
/// RWM adapts per-coordinate scales the same way; Gibbs needs no tuning.
BaselineResult run_baseline_mcmc(const Model& model, const Tempering& tempering, const BaselineConfig& config,
                                 Rng& rng);

/// Marginal means, variances and lag-1 autocorrelations of a draw set.
void summarize_draws(const std::vector<Vec>& draws, Vec& mean, Vec& variance, Vec& lag1);

/// Kernel iterations that bring the worst lag-1 autocorrelation below 0.5,
/// clamped to [1, 3].
int suggest_kernel_iterations(const Vec& lag1);

/// Effective sample size of a scalar chain from Geyer's initial positive
/// sequence, capped at the chain length.
double autocorrelation_ess(const std::vector<double>& chain);

}  // namespace asmc
