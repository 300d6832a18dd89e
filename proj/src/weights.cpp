#include "asmc/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "asmc/error.hpp"

namespace asmc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw NumericalError("log_sum_exp of an empty sequence");
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

WeightVector normalize(std::span<const double> log_w) {
  if (log_w.empty()) throw NumericalError("degenerate weights: empty");
  for (double x : log_w)
    if (std::isnan(x) || x == kInf) throw NumericalError("degenerate weights: non-finite entry");
  const double lse = log_sum_exp(log_w);
  if (lse == -kInf) throw NumericalError("degenerate weights");
  WeightVector w;
  w.log_w.assign(log_w.begin(), log_w.end());
  w.normalized.resize(log_w.size());
  for (std::size_t r = 0; r < log_w.size(); ++r) w.normalized[r] = std::exp(log_w[r] - lse);
  return w;
}

double ess(std::span<const double> normalized) {
  double s = 0.0;
  for (double w : normalized) s += w * w;
  return 1.0 / s;
}

double ess(const WeightVector& w) { return ess(w.normalized); }

std::size_t pareto_tail_size(std::size_t r) {
  const double rr = static_cast<double>(r);
  return static_cast<std::size_t>(std::ceil(std::min(0.2 * rr, 3.0 * std::sqrt(rr))));
}

namespace {

// Profile log-likelihood (per observation) of the GPD at theta = -k / sigma.
double profile_lx(double theta, std::span<const double> x) {
  double k = 0.0;
  for (double v : x) k += std::log1p(-theta * v);
  k /= static_cast<double>(x.size());
  return std::log(-theta / k) - k - 1.0;
}

}  // namespace

ParetoFit gpd_fit(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 5) throw NumericalError("tail too small");
  const std::size_t grid = 30 + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const double x_max = x[n - 1];
  const double x_star = x[static_cast<std::size_t>(std::floor(n / 4.0 + 0.5)) - 1];
  if (!(x_max > 0.0) || !(x_star > 0.0)) throw NumericalError("tail has no spread");

  std::vector<double> theta(grid), l_theta(grid);
  for (std::size_t j = 0; j < grid; ++j) {
    theta[j] = 1.0 / x_max +
               (1.0 - std::sqrt(static_cast<double>(grid) / (static_cast<double>(j) + 0.5))) / 3.0 /
                   x_star;
    l_theta[j] = static_cast<double>(n) * profile_lx(theta[j], x);
  }
  const double lse = log_sum_exp(l_theta);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < grid; ++j) theta_hat += theta[j] * std::exp(l_theta[j] - lse);

  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(n);
  ParetoFit fit;
  fit.k_hat = std::isnan(k) ? kInf : k;
  fit.sigma_hat = -k / theta_hat;
  return fit;
}

double gpd_quantile(double p, double k, double sigma) {
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

ParetoDiagnostic pareto_smooth(std::span<const double> log_w_in) {
  const std::size_t r = log_w_in.size();
  ParetoDiagnostic out;
  out.tail_size = pareto_tail_size(r);
  if (out.tail_size < 5) throw NumericalError("tail too small: need R >= 25 for Pareto smoothing");

  // Validate first so degenerate input fails with the same message as normalize.
  (void)normalize(log_w_in);
  std::vector<double> lw(log_w_in.begin(), log_w_in.end());
  const double max_lw = *std::max_element(lw.begin(), lw.end());
  for (double& v : lw) v -= max_lw;

  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });

  const std::size_t m = out.tail_size;
  const std::size_t first_tail = r - m;
  const double tail_min = lw[order[first_tail]];
  const double tail_max = lw[order[r - 1]];
  out.k_hat = kInf;
  if (std::abs(tail_max - tail_min) < std::numeric_limits<double>::epsilon() / 100.0) {
    // Flat tail: bounded weights, nothing to smooth.
    out.k_hat = -kInf;
  } else {
    const double cutoff = lw[order[first_tail - 1]];
    const double exp_cutoff = std::exp(cutoff);
    std::vector<double> exceed(m);
    for (std::size_t j = 0; j < m; ++j) exceed[j] = std::exp(lw[order[first_tail + j]]) - exp_cutoff;
    ParetoFit fit;
    bool ok = true;
    try {
      fit = gpd_fit(exceed);
    } catch (const NumericalError&) {
      ok = false;
    }
    if (ok && std::isfinite(fit.k_hat) && fit.sigma_hat > 0.0) {
      out.k_hat = fit.k_hat;
      out.sigma_hat = fit.sigma_hat;
      for (std::size_t j = 0; j < m; ++j) {
        const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
        lw[order[first_tail + j]] = std::log(gpd_quantile(p, fit.k_hat, fit.sigma_hat) + exp_cutoff);
      }
    }
  }
  // Cap at the raw maximum (zero after the shift).
  for (double& v : lw) v = std::min(v, 0.0);
  out.smoothed = normalize(lw);
  return out;
}

double weighted_log_estimand(std::span<const double> normalized, std::span<const double> log_f) {
  if (normalized.size() != log_f.size()) throw NumericalError("weighted_log_estimand: length mismatch");
  std::vector<double> terms(log_f.size());
  for (std::size_t r = 0; r < terms.size(); ++r)
    terms[r] = normalized[r] > 0.0 ? std::log(normalized[r]) + log_f[r] : -kInf;
  return log_sum_exp(terms);
}

double weighted_log_estimand_se(std::span<const double> normalized,
                                std::span<const double> log_f) {
  const double est = weighted_log_estimand(normalized, log_f);
  if (!std::isfinite(est)) return kInf;
  // Var(sum W f) ~ sum W^2 (f - fbar)^2, reported relative to fbar.
  double acc = 0.0;
  for (std::size_t r = 0; r < log_f.size(); ++r) {
    if (normalized[r] <= 0.0) continue;
    const double d = std::exp(log_f[r] - est) - 1.0;
    acc += normalized[r] * normalized[r] * d * d;
  }
  return std::sqrt(acc);
}

}  // namespace asmc
