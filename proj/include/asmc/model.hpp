#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmc/core.hpp"
#include "asmc/rng.hpp"

namespace asmc {

/// Likelihood exponents for a subset of units; every unit not listed keeps
/// exponent 1.
struct Tempering {
  std::vector<UnitIndex> units;
  std::vector<double> exponents;

  static Tempering none() { return {}; }
  /// All units of `fold` at exponent 0: the exact case-deleted target.
  static Tempering deleted(const Fold& fold);
};

/// Contract every built-in model satisfies. The tempered log target is
///   log_prior(theta) + sum_u phi_u * unit_log_lik(theta, u)
/// with phi_u from a Tempering (1 for unlisted units).
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view name() const = 0;
  virtual const ParameterLayout& layout() const = 0;
  std::size_t dimension() const { return layout().dimension(); }
  /// N_1..N_G.
  virtual const std::vector<std::size_t>& group_sizes() const = 0;

  virtual double log_prior(const Vec& theta) const = 0;
  /// Log conditional density of unit (g, i) at its observed value; -inf when
  /// theta maps to an invalid covariance.
  virtual double unit_log_lik(const Vec& theta, UnitIndex unit) const = 0;

  /// Generic implementation sums over every unit; models override it with
  /// sufficient statistics.
  virtual double log_target(const Vec& theta, const Tempering& tempering) const;

  virtual bool has_gradient() const { return false; }
  /// Returns log_target and writes its gradient into `grad`.
  virtual double log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const;

  virtual bool has_gibbs() const { return false; }
  /// One sweep of a Gibbs sampler that leaves the tempered target invariant.
  virtual void gibbs_sweep(Vec& theta, const Tempering& tempering, Rng& rng) const;

  virtual bool supports_forward_simulation() const { return false; }
  /// Log density of unit (group, t + h) at its observed value, after
  /// simulating the latent process forward from time t for h - 1 steps.
  virtual double forward_log_predictive(const Vec& theta, int group, int t, int h, Rng& rng) const;

  /// Joint log-likelihood of the fold with the effects of fully held-out
  /// groups integrated against their conditional prior. Only meaningful on a
  /// target where those groups carry no likelihood. nullopt when the model has
  /// no closed form for this fold.
  virtual std::optional<double> integrated_fold_log_lik(const Vec& theta, const Fold& fold) const;

  virtual Vec initial_point() const = 0;

  std::size_t unit_count() const;
};

/// Sum of unit log-likelihoods over the fold at the held-out values.
double joint_predictive_log_density(const Model& model, const Vec& theta, const Fold& fold);

/// Central finite-difference gradient of log_target (test and diagnostics aid).
Vec finite_difference_gradient(const Model& model, const Vec& theta, const Tempering& tempering,
                               double h = 1e-5);

}  // namespace asmc
