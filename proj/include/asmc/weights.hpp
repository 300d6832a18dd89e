#pragma once

#include <span>
#include <vector>

namespace asmc {

/// Log-weights together with their self-normalized counterparts.
struct WeightVector {
  std::vector<double> log_w;
  std::vector<double> normalized;

  std::size_t size() const { return log_w.size(); }
};

struct ParetoFit {
  double k_hat = 0.0;
  double sigma_hat = 0.0;
};

struct ParetoDiagnostic {
  double k_hat = 0.0;
  double sigma_hat = 0.0;
  std::size_t tail_size = 0;
  WeightVector smoothed;
};

/// log(sum(exp(xs))) by max-shift. Returns -inf iff every input is -inf.
double log_sum_exp(std::span<const double> xs);

/// Throws NumericalError("degenerate weights") if every entry is -inf.
WeightVector normalize(std::span<const double> log_w);

/// Kong's effective sample size 1 / sum W^2 for normalized weights.
double ess(std::span<const double> normalized);
double ess(const WeightVector& w);

/// Tail length ceil(min(0.2 R, 3 sqrt(R))).
std::size_t pareto_tail_size(std::size_t r);

/// Generalized Pareto fit of exceedances (sorted ascending, non-negative)
/// using the Zhang-Stephens profile-likelihood grid estimator without a prior
/// on the shape. Requires at least 5 values.
ParetoFit gpd_fit(std::span<const double> exceedances);

/// Quantile function of GPD(k, sigma) at probability p.
double gpd_quantile(double p, double k, double sigma);

/// Pareto-smoothed importance weights. k_hat is +inf when the tail fit fails
/// and -inf when the tail is flat (nothing to smooth).
ParetoDiagnostic pareto_smooth(std::span<const double> log_w);

/// log sum_r W[r] exp(log_f[r]).
double weighted_log_estimand(std::span<const double> normalized, std::span<const double> log_f);

/// Delta-method Monte Carlo standard error of weighted_log_estimand, treating
/// draws as independent.
double weighted_log_estimand_se(std::span<const double> normalized,
                                std::span<const double> log_f);

}  // namespace asmc
