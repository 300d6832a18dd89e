#pragma once

#include <vector>

#include "asmc/model.hpp"

namespace asmc {

struct ConjugateHyper {
  double kappa = 1.0;  // sd of mu
  double tau = 1.0;    // sd of theta_g around mu
  double sigma = 1.0;  // observation sd
};

/// mu ~ N(0, kappa^2), theta_g ~ N(mu, tau^2), y_gi ~ N(theta_g, sigma^2).
/// Parameters: [mu, theta_1, ..., theta_G].
class ConjugateGaussianModel final : public Model {
 public:
  ConjugateGaussianModel(std::vector<std::vector<double>> y, ConjugateHyper hyper);

  std::string_view name() const override { return "conjugate"; }
  const ParameterLayout& layout() const override { return layout_; }
  const std::vector<std::size_t>& group_sizes() const override { return sizes_; }

  double log_prior(const Vec& theta) const override;
  double unit_log_lik(const Vec& theta, UnitIndex unit) const override;
  double log_target(const Vec& theta, const Tempering& tempering) const override;
  bool has_gradient() const override { return true; }
  double log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const override;
  Vec initial_point() const override;

  const std::vector<std::vector<double>>& data() const { return y_; }
  const ConjugateHyper& hyper() const { return hyper_; }

 private:
  struct Stats {
    std::vector<double> w, sy, syy;
  };
  Stats tempered_stats(const Tempering& tempering) const;

  std::vector<std::vector<double>> y_;
  ConjugateHyper hyper_;
  std::vector<std::size_t> sizes_;
  ParameterLayout layout_;
  Stats full_;
};

struct ConjugateSynthetic {
  std::vector<std::vector<double>> y;
  double mu = 0.0;
  std::vector<double> theta;
};

ConjugateSynthetic generate_conjugate(const std::vector<std::size_t>& sizes, const ConjugateHyper& hyper,
                                      Rng& rng);

}  // namespace asmc
