#pragma once

#include <functional>
#include <string_view>

#include "asmc/core.hpp"
#include "asmc/model.hpp"
#include "asmc/rng.hpp"

namespace asmc {

enum class KernelKind { automatic, rwm, hmc, gibbs };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view text);

struct KernelConfig {
  KernelKind kind = KernelKind::automatic;
  /// Kernel applications per rejuvenation. Zero is allowed only as a test-only
  /// identity kernel.
  int iterations = 3;
  /// HMC step size; non-positive means "use the value tuned on the baseline".
  double step_size = 0.0;
  int leapfrog_steps = 10;
  /// RWM proposal sd multiplier on baseline marginal sds.
  double rwm_scale = 0.5;

  void validate() const;
};

/// Resolves `automatic` to gibbs / hmc / rwm according to model capabilities.
KernelKind resolve_kernel(KernelKind kind, const Model& model);

/// Model restricted to one tempering; this is the density a kernel leaves
/// invariant.
class TemperedTarget {
 public:
  TemperedTarget(const Model& model, Tempering tempering)
      : model_(&model), tempering_(std::move(tempering)) {}

  const Model& model() const { return *model_; }
  const Tempering& tempering() const { return tempering_; }
  double log_density(const Vec& theta) const { return model_->log_target(theta, tempering_); }
  double log_density_grad(const Vec& theta, Vec& grad) const {
    return model_->log_target_grad(theta, tempering_, grad);
  }

 private:
  const Model* model_;
  Tempering tempering_;
};

struct StepStats {
  bool accepted = false;
  bool divergent = false;
  double accept_prob = 0.0;
  double energy_error = 0.0;
};

/// Gaussian random-walk Metropolis with per-coordinate sd `scale * sd[j]`.
StepStats rwm_step(Vec& theta, const std::function<double(const Vec&)>& log_target, const Vec& sd,
                   double scale, Rng& rng);

/// Value-and-gradient callback for HMC.
using GradFn = std::function<double(const Vec&, Vec&)>;

/// Metropolis-adjusted leapfrog trajectory with diagonal inverse metric
/// `inv_metric` (the baseline marginal variances). Trajectories whose energy
/// error exceeds 1000 are rejected and flagged divergent.
StepStats hmc_step(Vec& theta, const GradFn& log_target_grad, const Vec& inv_metric,
                   double step_size, int leapfrog_steps, Rng& rng);

/// Leapfrog count for one trajectory, uniform on [1, 2L - 1] (mean L). A
/// state-independent random length keeps the kernel invariant and breaks the
/// periodicity of fixed-length trajectories on near-Gaussian targets.
int jittered_steps(int leapfrog_steps, Rng& rng);

/// Baseline statistics a kernel may reuse.
struct KernelTuning {
  Vec sd;
  Vec inv_metric;
  double step_size = 0.1;
};

/// Applies `config.iterations` kernel steps to one particle and returns the
/// number of accepted proposals (Gibbs sweeps count as accepted).
int apply_kernel(Vec& theta, const TemperedTarget& target, KernelKind kind,
                 const KernelConfig& config, const KernelTuning& tuning, Rng& rng);

/// Nesterov dual averaging of log step size towards a target acceptance rate.
class DualAveraging {
 public:
  explicit DualAveraging(double initial_step, double target_accept = 0.8);
  void update(double accept_prob);
  double step() const { return std::exp(log_step_); }
  double final_step() const { return std::exp(log_step_bar_); }
  void restart(double step);

 private:
  double mu_, target_;
  double h_bar_ = 0.0, log_step_, log_step_bar_ = 0.0;
  int count_ = 0;
};

}  // namespace asmc
