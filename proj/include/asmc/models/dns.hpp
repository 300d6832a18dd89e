#pragma once

#include <vector>

#include "asmc/dns_gibbs.hpp"
#include "asmc/model.hpp"

namespace asmc {

inline constexpr double kDnsDecay = 0.0609;

/// Nelson-Siegel loadings [1, (1 - e^{-l tau}) / (l tau), (1 - e^{-l tau}) / (l tau) - e^{-l tau}]
/// for each maturity, one row per maturity.
Mat nelson_siegel_loadings(const std::vector<double>& maturities, double decay = kDnsDecay);

/// Dynamic Nelson-Siegel model with random-walk factors. One group; unit
/// (1, t) is the K-variate observation y_t.
/// Layout: beta (3 (T + 1), column-major beta_0..beta_T), sigma_y_chol (K (K + 1) / 2),
/// sigma_beta_chol (6).
class DnsModel final : public Model {
 public:
  DnsModel(DnsData data, DnsPriors priors);

  std::string_view name() const override { return "dns"; }
  const ParameterLayout& layout() const override { return layout_; }
  const std::vector<std::size_t>& group_sizes() const override { return sizes_; }

  double log_prior(const Vec& theta) const override;
  double unit_log_lik(const Vec& theta, UnitIndex unit) const override;
  double log_target(const Vec& theta, const Tempering& tempering) const override;
  bool has_gradient() const override { return true; }
  double log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const override;
  bool has_gibbs() const override { return true; }
  void gibbs_sweep(Vec& theta, const Tempering& tempering, Rng& rng) const override;
  bool supports_forward_simulation() const override { return true; }
  /// Propagates beta_t forward h - 1 steps by simulation, then integrates the
  /// last state step analytically.
  double forward_log_predictive(const Vec& theta, int group, int t, int h, Rng& rng) const override;
  Vec initial_point() const override;

  const DnsData& data() const { return data_; }
  const DnsPriors& priors() const { return priors_; }

  DnsState unpack(const Vec& theta) const;
  Vec pack(const DnsState& state) const;
  /// Per-time exponents phi_1..phi_T implied by a tempering.
  std::vector<double> exponents(const Tempering& tempering) const;

 private:
  double eval(const Vec& theta, const std::vector<double>* phi, Vec* grad) const;

  DnsData data_;
  DnsPriors priors_;
  std::vector<std::size_t> sizes_;
  ParameterLayout layout_;
};

struct DnsShape {
  int horizon = 60;
  std::vector<double> maturities{2, 5, 10, 20, 30};
  double state_sd = 0.15;
  double noise_sd = 0.1;
};

struct DnsSynthetic {
  DnsData data;
  std::vector<double> maturities;
  DnsState truth;
};

DnsSynthetic generate_dns(const DnsShape& shape, Rng& rng);

}  // namespace asmc
