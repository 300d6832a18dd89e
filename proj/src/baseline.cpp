#include "asmc/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace asmc {

int BaselineConfig::retained() const { return thin > 0 ? (iterations - burn_in) / thin : 0; }

void BaselineConfig::validate() const {
  if (burn_in < 0) throw ConfigError("baseline.burn_in must be >= 0");
  if (thin < 1) throw ConfigError("baseline.thin must be >= 1");
  if (iterations <= burn_in) throw ConfigError("baseline.iterations must exceed baseline.burn_in");
  if (leapfrog_steps < 1) throw ConfigError("baseline.leapfrog_steps must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("baseline.target_accept must lie in (0, 1)");
}

namespace {

struct Windows {
  int start = 0;
  std::vector<int> ends;  // exclusive
};

// Metric adaptation windows inside [0, burn_in): a step-size-only buffer at
// each end and doubling windows in between.
Windows metric_windows(int burn_in) {
  int init = 75, term = 50, base = 25;
  if (burn_in < init + term + base) {
    init = static_cast<int>(0.15 * burn_in);
    term = static_cast<int>(0.1 * burn_in);
    base = burn_in - init - term;
  }
  Windows w;
  w.start = init;
  const int stop = burn_in - term;
  int start = init, size = base;
  while (size > 0 && start + size <= stop) {
    int end = start + size;
    if (end + 2 * size > stop) end = stop;
    w.ends.push_back(end);
    start = end;
    size *= 2;
  }
  return w;
}

double find_initial_step(const TemperedTarget& target, const Vec& theta, const Vec& inv_metric, Rng& rng) {
  const GradFn fn = [&](const Vec& x, Vec& g) { return target.log_density_grad(x, g); };
  double eps = 0.25;
  Vec probe = theta;
  const double first = hmc_step(probe, fn, inv_metric, eps, 1, rng).accept_prob;
  const double dir = first > 0.5 ? 2.0 : 0.5;
  for (int it = 0; it < 40; ++it) {
    probe = theta;
    const double a = hmc_step(probe, fn, inv_metric, eps * dir, 1, rng).accept_prob;
    if ((dir > 1.0 && !(a > 0.5)) || (dir < 1.0 && a > 0.5)) break;
    eps *= dir;
  }
  return eps;
}

}  // namespace

void summarize_draws(const std::vector<Vec>& draws, Vec& mean, Vec& variance, Vec& lag1) {
  const auto n = static_cast<double>(draws.size());
  const Eigen::Index d = draws.empty() ? 0 : draws[0].size();
  mean = Vec::Zero(d);
  for (const auto& x : draws) mean += x;
  mean /= n;
  variance = Vec::Zero(d);
  lag1 = Vec::Zero(d);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const Vec c = draws[i] - mean;
    variance += c.cwiseProduct(c);
    if (i > 0) lag1 += c.cwiseProduct(draws[i - 1] - mean);
  }
  for (Eigen::Index j = 0; j < d; ++j) lag1[j] = variance[j] > 0.0 ? lag1[j] / variance[j] : 0.0;
  variance /= std::max(1.0, n - 1.0);
}

int suggest_kernel_iterations(const Vec& lag1) {
  const double worst = lag1.size() ? lag1.maxCoeff() : 0.0;
  if (!(worst > 0.5)) return 1;
  if (worst >= 1.0) return 3;
  const int k = static_cast<int>(std::ceil(std::log(0.5) / std::log(worst)));
  return std::clamp(k, 1, 3);
}

double autocorrelation_ess(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = lag; i < n; ++i) s += (chain[i] - mean) * (chain[i - lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = acov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (acov(2 * k) + acov(2 * k + 1)) / c0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

BaselineResult run_baseline_mcmc(const Model& model, const Tempering& tempering, const BaselineConfig& config,
                                 Rng& rng) {
  config.validate();
  BaselineResult out;
  out.kind = resolve_kernel(config.kind, model);
  const TemperedTarget target(model, tempering);
  Vec theta = model.initial_point();
  if (!std::isfinite(target.log_density(theta))) throw NumericalError("non-finite target at the initial point");

  const Eigen::Index d = theta.size();
  Vec inv_metric = config.initial_inv_metric.size() == d ? config.initial_inv_metric : Vec::Ones(d);
  double step = config.initial_step;
  if (out.kind == KernelKind::hmc && !(step > 0.0)) step = find_initial_step(target, theta, inv_metric, rng);
  double rwm_scale = 2.38 / std::sqrt(static_cast<double>(d));
  DualAveraging da(step > 0.0 ? step : 0.1, config.target_accept);

  const Windows schedule = metric_windows(config.burn_in);
  const std::vector<int>& windows = schedule.ends;
  std::size_t next_window = 0;
  int window_start = schedule.start;
  Vec w_sum = Vec::Zero(d), w_sq = Vec::Zero(d);
  int w_count = 0;

  const GradFn grad_fn = [&](const Vec& x, Vec& g) { return target.log_density_grad(x, g); };
  const auto dens_fn = [&](const Vec& x) { return target.log_density(x); };
  int accepted = 0, sampled = 0;
  for (int it = 0; it < config.iterations; ++it) {
    const bool warm = it < config.burn_in;
    StepStats st;
    switch (out.kind) {
      case KernelKind::hmc:
        st = hmc_step(theta, grad_fn, inv_metric, warm ? da.step() : step, jittered_steps(config.leapfrog_steps, rng), rng);
        break;
      case KernelKind::rwm:
        st = rwm_step(theta, dens_fn, inv_metric.cwiseSqrt(), rwm_scale, rng);
        break;
      case KernelKind::gibbs:
        model.gibbs_sweep(theta, tempering, rng);
        st.accepted = true;
        st.accept_prob = 1.0;
        break;
      case KernelKind::automatic:
        throw Error("unresolved kernel");
    }
    if (st.divergent) ++out.divergences;
    if (warm) {
      if (out.kind == KernelKind::hmc) da.update(st.accept_prob);
      if (out.kind == KernelKind::rwm) rwm_scale *= std::exp((st.accept_prob - 0.3) / std::sqrt(it + 1.0));
      if (next_window < windows.size() && it >= window_start) {
        w_sum += theta;
        w_sq += theta.cwiseProduct(theta);
        ++w_count;
        if (it + 1 == windows[next_window]) {
          const double n = w_count;
          Vec var = (w_sq - w_sum.cwiseProduct(w_sum) / n) / std::max(1.0, n - 1.0);
          var = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
          inv_metric = var;
          if (out.kind == KernelKind::hmc) da.restart(da.step());
          w_sum.setZero();
          w_sq.setZero();
          w_count = 0;
          window_start = it + 1;
          ++next_window;
        }
      }
      if (it + 1 == config.burn_in && out.kind == KernelKind::hmc) step = da.final_step();
    } else {
      ++sampled;
      accepted += st.accepted ? 1 : 0;
      if ((it - config.burn_in + 1) % config.thin == 0) out.draws.push_back(theta);
    }
  }
  if (config.burn_in == 0 && out.kind == KernelKind::hmc && !(step > 0.0)) step = da.step();
  out.accept_rate = sampled ? static_cast<double>(accepted) / sampled : 0.0;
  summarize_draws(out.draws, out.mean, out.variance, out.lag1);
  out.tuning.step_size = out.kind == KernelKind::hmc ? step : 0.0;
  out.tuning.inv_metric = out.variance.cwiseMax(1e-12);
  out.tuning.sd = out.tuning.inv_metric.cwiseSqrt();
  return out;
}

}  // namespace asmc
