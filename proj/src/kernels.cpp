#include "asmc/kernels.hpp"

#include <cmath>
#include <string>

namespace asmc {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::automatic: return "auto";
    case KernelKind::rwm: return "rwm";
    case KernelKind::hmc: return "hmc";
    case KernelKind::gibbs: return "gibbs";
  }
  return "?";
}

KernelKind kernel_kind_from_string(std::string_view text) {
  if (text == "auto") return KernelKind::automatic;
  if (text == "rwm") return KernelKind::rwm;
  if (text == "hmc") return KernelKind::hmc;
  if (text == "gibbs") return KernelKind::gibbs;
  throw ConfigError("unknown kernel kind '" + std::string(text) + "'");
}

void KernelConfig::validate() const {
  if (iterations < 0) throw ConfigError("kernel.iterations must be >= 1");
  if (leapfrog_steps < 1) throw ConfigError("kernel.leapfrog_steps must be >= 1");
  if (!(rwm_scale > 0.0)) throw ConfigError("kernel.rwm_scale must be > 0");
}

KernelKind resolve_kernel(KernelKind kind, const Model& model) {
  if (kind == KernelKind::automatic) {
    if (model.has_gibbs()) return KernelKind::gibbs;
    if (model.has_gradient()) return KernelKind::hmc;
    return KernelKind::rwm;
  }
  if (kind == KernelKind::gibbs && !model.has_gibbs())
    throw ConfigError(std::string(model.name()) + " has no Gibbs sampler");
  if (kind == KernelKind::hmc && !model.has_gradient())
    throw ConfigError(std::string(model.name()) + " has no gradient for HMC");
  return kind;
}

StepStats rwm_step(Vec& theta, const std::function<double(const Vec&)>& log_target, const Vec& sd,
                   double scale, Rng& rng) {
  StepStats st;
  const double current = log_target(theta);
  Vec proposal(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) proposal[j] = theta[j] + scale * sd[j] * std_normal(rng);
  const double proposed = log_target(proposal);
  const double log_u = std::log(uniform01(rng));
  const double log_ratio = proposed - current;
  st.accept_prob = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
  if (std::isfinite(proposed) && log_u < log_ratio) {
    theta = std::move(proposal);
    st.accepted = true;
  }
  return st;
}

StepStats hmc_step(Vec& theta, const GradFn& log_target_grad, const Vec& inv_metric,
                   double step_size, int leapfrog_steps, Rng& rng) {
  StepStats st;
  const Eigen::Index d = theta.size();
  Vec p(d);
  for (Eigen::Index j = 0; j < d; ++j) p[j] = std_normal(rng) / std::sqrt(inv_metric[j]);

  Vec grad(d);
  const double logp0 = log_target_grad(theta, grad);
  const double h0 = -logp0 + 0.5 * (p.array().square() * inv_metric.array()).sum();

  Vec q = theta;
  double logp = logp0;
  p += 0.5 * step_size * grad;
  for (int l = 0; l < leapfrog_steps; ++l) {
    q += step_size * (inv_metric.array() * p.array()).matrix();
    logp = log_target_grad(q, grad);
    if (!std::isfinite(logp)) break;
    if (l + 1 < leapfrog_steps) p += step_size * grad;
  }
  p += 0.5 * step_size * grad;
  const double h1 = -logp + 0.5 * (p.array().square() * inv_metric.array()).sum();

  const double log_u = std::log(uniform01(rng));
  st.energy_error = h1 - h0;
  if (!std::isfinite(h1) || std::abs(st.energy_error) > 1000.0) {
    st.divergent = true;
    return st;
  }
  st.accept_prob = std::min(1.0, std::exp(h0 - h1));
  if (log_u < h0 - h1) {
    theta = std::move(q);
    st.accepted = true;
  }
  return st;
}

int jittered_steps(int leapfrog_steps, Rng& rng) {
  if (leapfrog_steps <= 1) return 1;
  return std::uniform_int_distribution<int>(1, 2 * leapfrog_steps - 1)(rng);
}

int apply_kernel(Vec& theta, const TemperedTarget& target, KernelKind kind,
                 const KernelConfig& config, const KernelTuning& tuning, Rng& rng) {
  int accepted = 0;
  const double eps = config.step_size > 0.0 ? config.step_size : tuning.step_size;
  for (int it = 0; it < config.iterations; ++it) {
    switch (kind) {
      case KernelKind::gibbs:
        target.model().gibbs_sweep(theta, target.tempering(), rng);
        ++accepted;
        break;
      case KernelKind::hmc: {
        const GradFn fn = [&](const Vec& x, Vec& g) { return target.log_density_grad(x, g); };
        accepted += hmc_step(theta, fn, tuning.inv_metric, eps, jittered_steps(config.leapfrog_steps, rng), rng).accepted;
        break;
      }
      case KernelKind::rwm: {
        const auto fn = [&](const Vec& x) { return target.log_density(x); };
        accepted += rwm_step(theta, fn, tuning.sd, config.rwm_scale, rng).accepted;
        break;
      }
      case KernelKind::automatic:
        throw Error("kernel kind must be resolved before use");
    }
  }
  return accepted;
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : mu_(std::log(10.0 * initial_step)), target_(target_accept), log_step_(std::log(initial_step)) {}

void DualAveraging::restart(double step) {
  mu_ = std::log(10.0 * step);
  h_bar_ = 0.0;
  log_step_ = std::log(step);
  log_step_bar_ = 0.0;
  count_ = 0;
}

void DualAveraging::update(double accept_prob) {
  constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
  ++count_;
  const double t = static_cast<double>(count_);
  const double eta = 1.0 / (t + t0);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_prob);
  log_step_ = mu_ - std::sqrt(t) / gamma * h_bar_;
  const double w = std::pow(t, -kappa);
  log_step_bar_ = w * log_step_ + (1.0 - w) * log_step_bar_;
}

}  // namespace asmc
