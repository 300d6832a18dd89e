#pragma once

#include <span>
#include <vector>

#include "asmc/core.hpp"
#include "asmc/rng.hpp"

namespace asmc {

/// Observations of a linear-Gaussian random-walk state-space model with a
/// time-invariant design: y_t = X beta_t + e_t, beta_t = beta_{t-1} + u_t.
struct DnsData {
  std::vector<Vec> y;  // y_1..y_T, each of length K
  Mat design;          // K x 3 loadings

  int horizon() const { return static_cast<int>(y.size()); }
  int series_dim() const { return static_cast<int>(design.rows()); }
  int state_dim() const { return static_cast<int>(design.cols()); }
};

struct DnsPriors {
  Vec m;        // prior mean of beta_0
  Mat p;        // prior precision of beta_0
  double nu_y;  // IW degrees of freedom for Sigma_y
  Mat s_y;
  double nu_beta;
  Mat s_beta;

  /// m = 0, P^{-1} = 10 I, Sigma_y ~ IW(2K, I), Sigma_beta ~ IW(2 * 3, I).
  static DnsPriors standard(int series_dim, int state_dim = 3);
};

struct DnsState {
  Mat beta;  // state_dim x (T + 1), column t holds beta_t
  Mat sigma_y;
  Mat sigma_beta;
};

/// Full-conditional hyperparameters of one sweep at fixed conditioning values.
struct DnsConditionals {
  Vec m_hat;
  Mat p_hat;  // precision of beta_0 | -
  double nu_beta = 0.0;
  Mat s_beta;
  double nu_y = 0.0;
  Mat s_y;
};

/// Conditionals under per-time exponents `phi` (empty means all ones).
DnsConditionals dns_conditionals(const DnsState& state, const DnsData& data, const DnsPriors& priors,
                                 std::span<const double> phi);

/// Forward-filtering backward-sampling of beta_{0:T}. The filter starts from
/// beta_0 ~ N(m0, c0); when `c0` is zero the initial state is held at m0 and
/// not redrawn. The measurement precision at time t is scaled by phi[t - 1],
/// and a zero exponent skips the measurement update entirely.
Mat ffbs(const DnsData& data, const Mat& sigma_y, const Mat& sigma_beta, const Vec& m0, const Mat& c0,
         std::span<const double> phi, Rng& rng);

/// Filtered means and covariances of beta_1..beta_T under the same conventions
/// as ffbs.
struct FilterPass {
  std::vector<Vec> mean;
  std::vector<Mat> cov;
};
FilterPass kalman_filter(const DnsData& data, const Mat& sigma_y, const Mat& sigma_beta, const Vec& m0,
                         const Mat& c0, std::span<const double> phi);

/// One sweep of the power-scaled sampler with general per-time exponents.
void dns_gibbs_sweep(DnsState& state, const DnsData& data, const DnsPriors& priors,
                     std::span<const double> phi, Rng& rng);

/// The sweep with only the final observation scaled by rho.
void dns_gibbs_sweep(DnsState& state, const DnsData& data, const DnsPriors& priors, double rho,
                     Rng& rng);

/// Sweep of the unmodified model (every observation at full weight).
void dns_gibbs_sweep_full(DnsState& state, const DnsData& data, const DnsPriors& priors, Rng& rng);

}  // namespace asmc
