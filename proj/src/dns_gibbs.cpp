#include "asmc/dns_gibbs.hpp"

#include <Eigen/Cholesky>

#include "asmc/linalg.hpp"

namespace asmc {

DnsPriors DnsPriors::standard(int series_dim, int state_dim) {
  DnsPriors p;
  p.m = Vec::Zero(state_dim);
  p.p = Mat::Identity(state_dim, state_dim) / 10.0;
  p.nu_y = 2.0 * series_dim;
  p.s_y = Mat::Identity(series_dim, series_dim);
  p.nu_beta = 2.0 * state_dim;
  p.s_beta = Mat::Identity(state_dim, state_dim);
  return p;
}

namespace {

double weight_at(std::span<const double> phi, int t) { return phi.empty() ? 1.0 : phi[t - 1]; }

Mat spd_inverse(const Mat& a) {
  const Mat l = linalg::robust_cholesky(a);
  const Mat l_inv = l.triangularView<Eigen::Lower>().solve(Mat::Identity(a.rows(), a.cols()));
  return l_inv.transpose() * l_inv;
}

// Draw from N(P^{-1} b, P^{-1}) given a precision matrix P.
Vec draw_from_precision(const Mat& precision, const Vec& b, Rng& rng) {
  const Mat l = linalg::robust_cholesky(precision);
  const auto tri = l.triangularView<Eigen::Lower>();
  const Vec mean = l.transpose().triangularView<Eigen::Upper>().solve(tri.solve(b));
  Vec z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
  return mean + l.transpose().triangularView<Eigen::Upper>().solve(z);
}

Mat beta_increment_scatter(const Mat& beta) {
  const Eigen::Index d = beta.rows();
  Mat s = Mat::Zero(d, d);
  for (Eigen::Index t = 1; t < beta.cols(); ++t) {
    const Vec db = beta.col(t) - beta.col(t - 1);
    s.noalias() += db * db.transpose();
  }
  return s;
}

void check_phi(std::span<const double> phi, const DnsData& data) {
  if (!phi.empty() && static_cast<int>(phi.size()) != data.horizon())
    throw Error("exponent vector length does not match the series length");
}

}  // namespace

FilterPass kalman_filter(const DnsData& data, const Mat& sigma_y, const Mat& sigma_beta, const Vec& m0,
                         const Mat& c0, std::span<const double> phi) {
  check_phi(phi, data);
  const int horizon = data.horizon();
  const Mat& x = data.design;
  const Mat sy_inv = spd_inverse(sigma_y);
  const Mat xt_sy_inv = x.transpose() * sy_inv;
  const Mat info = xt_sy_inv * x;

  FilterPass out;
  out.mean.reserve(horizon);
  out.cov.reserve(horizon);
  Vec m = m0;
  Mat c = c0;
  for (int t = 1; t <= horizon; ++t) {
    const Mat r = c + sigma_beta;
    const double w = weight_at(phi, t);
    if (w == 0.0) {
      c = r;
    } else {
      const Mat r_inv = spd_inverse(r);
      const Mat q = r_inv + w * info;
      c = spd_inverse(q);
      m = c * (r_inv * m + w * (xt_sy_inv * data.y[t - 1]));
    }
    c = 0.5 * (c + c.transpose());
    out.mean.push_back(m);
    out.cov.push_back(c);
  }
  return out;
}

Mat ffbs(const DnsData& data, const Mat& sigma_y, const Mat& sigma_beta, const Vec& m0, const Mat& c0,
         std::span<const double> phi, Rng& rng) {
  const int horizon = data.horizon();
  const FilterPass f = kalman_filter(data, sigma_y, sigma_beta, m0, c0, phi);
  Mat beta(m0.size(), horizon + 1);
  beta.col(horizon) = linalg::sample_mvn_chol(f.mean[horizon - 1],
                                              linalg::robust_cholesky(f.cov[horizon - 1]), rng);
  for (int t = horizon - 1; t >= 1; --t) {
    const Mat& c = f.cov[t - 1];
    const Mat r_inv = spd_inverse(c + sigma_beta);
    const Mat j = c * r_inv;
    const Vec h = f.mean[t - 1] + j * (beta.col(t + 1) - f.mean[t - 1]);
    const Mat hc = c - j * c;
    beta.col(t) = linalg::sample_mvn_chol(h, linalg::robust_cholesky(0.5 * (hc + hc.transpose())), rng);
  }
  if (c0.isZero()) {
    beta.col(0) = m0;
  } else {
    const Mat r_inv = spd_inverse(c0 + sigma_beta);
    const Mat j = c0 * r_inv;
    const Vec h = m0 + j * (beta.col(1) - m0);
    const Mat hc = c0 - j * c0;
    beta.col(0) = linalg::sample_mvn_chol(h, linalg::robust_cholesky(0.5 * (hc + hc.transpose())), rng);
  }
  return beta;
}

DnsConditionals dns_conditionals(const DnsState& state, const DnsData& data, const DnsPriors& priors,
                                 std::span<const double> phi) {
  check_phi(phi, data);
  const int horizon = data.horizon();
  DnsConditionals out;
  const Mat sb_inv = spd_inverse(state.sigma_beta);
  out.p_hat = priors.p + sb_inv;
  out.m_hat = out.p_hat.llt().solve(priors.p * priors.m + sb_inv * state.beta.col(1));

  out.nu_beta = priors.nu_beta + horizon;
  out.s_beta = priors.s_beta + beta_increment_scatter(state.beta);

  out.nu_y = priors.nu_y;
  out.s_y = priors.s_y;
  for (int t = 1; t <= horizon; ++t) {
    const double w = weight_at(phi, t);
    if (w == 0.0) continue;
    const Vec r = data.y[t - 1] - data.design * state.beta.col(t);
    out.nu_y += w;
    out.s_y.noalias() += w * (r * r.transpose());
  }
  return out;
}

void dns_gibbs_sweep(DnsState& state, const DnsData& data, const DnsPriors& priors,
                     std::span<const double> phi, Rng& rng) {
  check_phi(phi, data);
  const int horizon = data.horizon();

  // 1. beta_0 | beta_1, Sigma_beta
  const Mat sb_inv = spd_inverse(state.sigma_beta);
  const Mat p_hat = priors.p + sb_inv;
  state.beta.col(0) = draw_from_precision(p_hat, priors.p * priors.m + sb_inv * state.beta.col(1), rng);

  // 2. Sigma_beta | beta_{0:T}
  state.sigma_beta =
      linalg::iw_sample(priors.nu_beta + horizon, priors.s_beta + beta_increment_scatter(state.beta), rng);

  // 3. beta_{1:T} | beta_0, Sigma_beta, Sigma_y
  const Vec beta0 = state.beta.col(0);
  const Mat zero = Mat::Zero(beta0.size(), beta0.size());
  state.beta = ffbs(data, state.sigma_y, state.sigma_beta, beta0, zero, phi, rng);

  // 4. Sigma_y | beta_{1:T}
  double nu = priors.nu_y;
  Mat s = priors.s_y;
  for (int t = 1; t <= horizon; ++t) {
    const double w = weight_at(phi, t);
    if (w == 0.0) continue;
    const Vec r = data.y[t - 1] - data.design * state.beta.col(t);
    nu += w;
    s.noalias() += w * (r * r.transpose());
  }
  state.sigma_y = linalg::iw_sample(nu, s, rng);
}

void dns_gibbs_sweep(DnsState& state, const DnsData& data, const DnsPriors& priors, double rho,
                     Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error("power coefficient must lie in [0, 1]");
  std::vector<double> phi(data.horizon(), 1.0);
  phi.back() = rho;
  dns_gibbs_sweep(state, data, priors, phi, rng);
}

void dns_gibbs_sweep_full(DnsState& state, const DnsData& data, const DnsPriors& priors, Rng& rng) {
  dns_gibbs_sweep(state, data, priors, std::span<const double>{}, rng);
}

}  // namespace asmc
