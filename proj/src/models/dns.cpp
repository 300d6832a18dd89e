#include "asmc/models/dns.hpp"

#include <cmath>

#include "asmc/linalg.hpp"

namespace asmc {

Mat nelson_siegel_loadings(const std::vector<double>& maturities, double decay) {
  Mat x(maturities.size(), 3);
  for (std::size_t k = 0; k < maturities.size(); ++k) {
    const double lt = decay * maturities[k];
    const double e = std::exp(-lt);
    const double slope = (1.0 - e) / lt;
    x(k, 0) = 1.0;
    x(k, 1) = slope;
    x(k, 2) = slope - e;
  }
  return x;
}

DnsModel::DnsModel(DnsData data, DnsPriors priors) : data_(std::move(data)), priors_(std::move(priors)) {
  if (data_.y.empty()) throw DataError("dns model needs at least one time point");
  const int k = data_.series_dim();
  for (const auto& y : data_.y)
    if (y.size() != k) throw DataError("dns observation has the wrong number of maturities");
  if (data_.state_dim() != 3) throw DataError("dns design must have three factor columns");
  sizes_ = {data_.y.size()};
  const std::size_t nb = 3 * (data_.y.size() + 1);
  const std::size_t ny = linalg::log_cholesky_size(k);
  layout_.blocks = {{"beta", 0, nb}, {"sigma_y_chol", nb, ny}, {"sigma_beta_chol", nb + ny, 6}};
}

DnsState DnsModel::unpack(const Vec& theta) const {
  const auto& by = layout_.blocks[1];
  const auto& bb = layout_.blocks[2];
  DnsState s;
  s.beta = Eigen::Map<const Mat>(theta.data(), 3, data_.horizon() + 1);
  const Mat ly = linalg::lower_from_log_cholesky({theta.data() + by.offset, by.size}, data_.series_dim());
  const Mat lb = linalg::lower_from_log_cholesky({theta.data() + bb.offset, bb.size}, 3);
  s.sigma_y = ly * ly.transpose();
  s.sigma_beta = lb * lb.transpose();
  return s;
}

Vec DnsModel::pack(const DnsState& state) const {
  Vec theta(dimension());
  const auto& by = layout_.blocks[1];
  const auto& bb = layout_.blocks[2];
  Eigen::Map<Mat>(theta.data(), 3, data_.horizon() + 1) = state.beta;
  linalg::log_cholesky_from_spd(state.sigma_y, {theta.data() + by.offset, by.size});
  linalg::log_cholesky_from_spd(state.sigma_beta, {theta.data() + bb.offset, bb.size});
  return theta;
}

std::vector<double> DnsModel::exponents(const Tempering& tempering) const {
  std::vector<double> phi(data_.y.size(), 1.0);
  for (std::size_t j = 0; j < tempering.units.size(); ++j) {
    const auto& u = tempering.units[j];
    if (u.group != 1 || u.within < 1 || u.within > data_.horizon())
      throw Error("dns tempering refers to a unit outside the series");
    phi[u.within - 1] = tempering.exponents[j];
  }
  return phi;
}

double DnsModel::eval(const Vec& theta, const std::vector<double>* phi, Vec* grad) const {
  const int horizon = data_.horizon();
  const int k = data_.series_dim();
  const auto& by = layout_.blocks[1];
  const auto& bb = layout_.blocks[2];
  const Eigen::Map<const Mat> beta(theta.data(), 3, horizon + 1);
  const Mat ly = linalg::lower_from_log_cholesky({theta.data() + by.offset, by.size}, k);
  const Mat lb = linalg::lower_from_log_cholesky({theta.data() + bb.offset, bb.size}, 3);
  if (grad) grad->setZero(theta.size());
  std::span<double> gy, gb;
  if (grad) {
    gy = {grad->data() + by.offset, by.size};
    gb = {grad->data() + bb.offset, bb.size};
  }

  // beta_0 ~ N(m, P^{-1})
  const Vec d0 = beta.col(0) - priors_.m;
  const Eigen::LLT<Mat> p_llt(priors_.p);
  const double log_det_p = 2.0 * p_llt.matrixLLT().diagonal().array().log().sum();
  double acc = -1.5 * linalg::kLog2Pi + 0.5 * log_det_p - 0.5 * d0.dot(priors_.p * d0);
  if (grad) grad->segment(0, 3) -= priors_.p * d0;

  // Random-walk transitions.
  const Mat delta = beta.rightCols(horizon) - beta.leftCols(horizon);
  Mat d_lb;
  acc += linalg::mvn_scatter_log_density(horizon, delta * delta.transpose(), lb, grad ? &d_lb : nullptr);
  if (grad) {
    linalg::accumulate_log_cholesky_grad(lb, d_lb, gb);
    const auto tri = lb.triangularView<Eigen::Lower>();
    const Mat prec_delta = lb.transpose().triangularView<Eigen::Upper>().solve(tri.solve(delta));
    for (int t = 1; t <= horizon; ++t) {
      grad->segment(3 * t, 3) -= prec_delta.col(t - 1);
      grad->segment(3 * (t - 1), 3) += prec_delta.col(t - 1);
    }
  }

  acc += linalg::iw_log_density_log_cholesky(ly, priors_.nu_y, priors_.s_y, gy);
  acc += linalg::iw_log_density_log_cholesky(lb, priors_.nu_beta, priors_.s_beta, gb);
  if (!phi) return acc;

  Mat resid(k, horizon);
  double n_eff = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const double w = (*phi)[t - 1];
    resid.col(t - 1) = data_.y[t - 1] - data_.design * beta.col(t);
    n_eff += w;
  }
  Mat weighted = resid;
  for (int t = 0; t < horizon; ++t) weighted.col(t) *= (*phi)[t];
  Mat d_ly;
  acc += linalg::mvn_scatter_log_density(n_eff, weighted * resid.transpose(), ly, grad ? &d_ly : nullptr);
  if (grad) {
    linalg::accumulate_log_cholesky_grad(ly, d_ly, gy);
    const auto tri = ly.triangularView<Eigen::Lower>();
    const Mat prec_w = ly.transpose().triangularView<Eigen::Upper>().solve(tri.solve(weighted));
    const Mat dbeta = data_.design.transpose() * prec_w;
    for (int t = 1; t <= horizon; ++t) grad->segment(3 * t, 3) += dbeta.col(t - 1);
  }
  return acc;
}

double DnsModel::log_prior(const Vec& theta) const { return eval(theta, nullptr, nullptr); }

double DnsModel::unit_log_lik(const Vec& theta, UnitIndex unit) const {
  if (unit.group != 1 || unit.within < 1 || unit.within > data_.horizon())
    throw Error("dns unit out of range");
  const auto& by = layout_.blocks[1];
  const Mat ly = linalg::lower_from_log_cholesky({theta.data() + by.offset, by.size}, data_.series_dim());
  const Vec r = data_.y[unit.within - 1] - data_.design * theta.segment(3 * unit.within, 3);
  return linalg::mvn_scatter_log_density(1.0, r * r.transpose(), ly, nullptr);
}

double DnsModel::log_target(const Vec& theta, const Tempering& tempering) const {
  const auto phi = exponents(tempering);
  return eval(theta, &phi, nullptr);
}

double DnsModel::log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const {
  const auto phi = exponents(tempering);
  return eval(theta, &phi, &grad);
}

void DnsModel::gibbs_sweep(Vec& theta, const Tempering& tempering, Rng& rng) const {
  DnsState state = unpack(theta);
  const auto phi = exponents(tempering);
  dns_gibbs_sweep(state, data_, priors_, phi, rng);
  theta = pack(state);
}

double DnsModel::forward_log_predictive(const Vec& theta, int group, int t, int h, Rng& rng) const {
  if (h < 1) throw Error("forecast horizon must be >= 1");
  if (group != 1 || t < 0 || t + h > data_.horizon()) throw Error("forecast target outside the series");
  const DnsState s = unpack(theta);
  Vec b = s.beta.col(t);
  const Mat lb = linalg::robust_cholesky(s.sigma_beta);
  for (int step = 1; step < h; ++step) b = linalg::sample_mvn_chol(b, lb, rng);
  const Mat& x = data_.design;
  const Mat cov = x * s.sigma_beta * x.transpose() + s.sigma_y;
  const Mat l = linalg::robust_cholesky(cov);
  const Vec r = data_.y[t + h - 1] - x * b;
  return linalg::mvn_scatter_log_density(1.0, r * r.transpose(), l, nullptr);
}

Vec DnsModel::initial_point() const {
  const Mat& x = data_.design;
  const Eigen::LDLT<Mat> normal_eq(x.transpose() * x);
  DnsState s;
  s.beta.resize(3, data_.horizon() + 1);
  for (int t = 1; t <= data_.horizon(); ++t) s.beta.col(t) = normal_eq.solve(x.transpose() * data_.y[t - 1]);
  s.beta.col(0) = s.beta.col(1);
  s.sigma_y = Mat::Identity(data_.series_dim(), data_.series_dim()) * 0.01;
  s.sigma_beta = Mat::Identity(3, 3) * 0.01;
  return pack(s);
}

DnsSynthetic generate_dns(const DnsShape& shape, Rng& rng) {
  if (shape.horizon < 2 || shape.maturities.empty()) throw ConfigError("dns shape needs T >= 2 and maturities");
  DnsSynthetic out;
  out.maturities = shape.maturities;
  out.data.design = nelson_siegel_loadings(shape.maturities);
  const int k = static_cast<int>(shape.maturities.size());
  out.truth.sigma_beta = Mat::Identity(3, 3) * shape.state_sd * shape.state_sd;
  out.truth.sigma_y = Mat::Identity(k, k) * shape.noise_sd * shape.noise_sd;
  out.truth.beta.resize(3, shape.horizon + 1);
  out.truth.beta.col(0) << 4.0, -1.5, 0.5;
  const Mat lb = linalg::robust_cholesky(out.truth.sigma_beta);
  const Mat ly = linalg::robust_cholesky(out.truth.sigma_y);
  for (int t = 1; t <= shape.horizon; ++t) {
    out.truth.beta.col(t) = linalg::sample_mvn_chol(out.truth.beta.col(t - 1), lb, rng);
    out.data.y.push_back(linalg::sample_mvn_chol(out.data.design * out.truth.beta.col(t), ly, rng));
  }
  return out;
}

}  // namespace asmc
