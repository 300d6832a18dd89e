#include "asmc/linalg.hpp"

#include <cmath>
#include <limits>

namespace asmc::linalg {

Mat lower_from_log_cholesky(std::span<const double> packed, std::size_t n) {
  Mat l = Mat::Zero(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j, ++k) l(i, j) = i == j ? std::exp(packed[k]) : packed[k];
  return l;
}

void log_cholesky_from_spd(const Mat& spd, std::span<double> packed) {
  Eigen::LLT<Mat> llt(spd);
  if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite");
  const Mat l = llt.matrixL();
  const auto n = static_cast<std::size_t>(spd.rows());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j, ++k) packed[k] = i == j ? std::log(l(i, j)) : l(i, j);
}

void accumulate_log_cholesky_grad(const Mat& lower, const Mat& d_lower,
                                  std::span<double> packed_grad) {
  const auto n = static_cast<std::size_t>(lower.rows());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j, ++k)
      packed_grad[k] += i == j ? d_lower(i, i) * lower(i, i) : d_lower(i, j);
}

Mat robust_cholesky(const Mat& spd) {
  Eigen::LLT<Mat> llt(spd);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Mat sym = 0.5 * (spd + spd.transpose());
  sym.diagonal().array() += 1e-10;
  Eigen::LLT<Mat> retry(sym);
  if (retry.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  return retry.matrixL();
}

double mvn_scatter_log_density(double n_obs, const Mat& scatter, const Mat& lower, Mat* d_lower) {
  const auto s = static_cast<double>(lower.rows());
  // A singular or non-finite factor is outside the support.
  if (!(lower.diagonal().array() > 0.0).all() || !lower.diagonal().allFinite()) {
    if (d_lower) *d_lower = Mat::Zero(lower.rows(), lower.cols());
    return -std::numeric_limits<double>::infinity();
  }
  const auto tri = lower.triangularView<Eigen::Lower>();
  // C = L^{-1} A L^{-T}
  const Mat b = tri.solve(scatter);
  const Mat c = tri.solve(b.transpose());
  const double log_det_l = lower.diagonal().array().log().sum();
  const double value = -n_obs * log_det_l - 0.5 * c.trace() - 0.5 * n_obs * s * kLog2Pi;
  if (d_lower) {
    Mat g = lower.transpose().triangularView<Eigen::Upper>().solve(c);
    for (Eigen::Index i = 0; i < lower.rows(); ++i) g(i, i) -= n_obs / lower(i, i);
    *d_lower = g.triangularView<Eigen::Lower>();
  }
  return value;
}

double log_multivariate_gamma(double a, std::size_t p) {
  double acc = 0.25 * static_cast<double>(p * (p - 1)) * std::log(M_PI);
  for (std::size_t j = 0; j < p; ++j) acc += std::lgamma(a - 0.5 * static_cast<double>(j));
  return acc;
}

namespace {

double iw_normalizer(double nu, const Mat& psi) {
  const auto p = static_cast<std::size_t>(psi.rows());
  const double log_det_psi = 2.0 * Eigen::LLT<Mat>(psi).matrixLLT().diagonal().array().log().sum();
  return 0.5 * nu * log_det_psi - 0.5 * nu * static_cast<double>(p) * std::log(2.0) -
         log_multivariate_gamma(0.5 * nu, p);
}

}  // namespace

double iw_log_density_log_cholesky(const Mat& lower, double nu, const Mat& psi,
                                   std::span<double> packed_grad) {
  const auto p = static_cast<std::size_t>(lower.rows());
  const auto pd = static_cast<double>(p);
  const auto tri = lower.triangularView<Eigen::Lower>();
  const Mat c = tri.solve(tri.solve(psi).transpose());
  double value = iw_normalizer(nu, psi) - 0.5 * c.trace();
  double jac = pd * std::log(2.0);
  for (std::size_t i = 0; i < p; ++i) {
    const double log_lii = std::log(lower(i, i));
    value -= (nu + pd + 1.0) * log_lii;
    jac += (pd - static_cast<double>(i) + 1.0) * log_lii;
  }
  value += jac;
  if (!packed_grad.empty()) {
    Mat g = lower.transpose().triangularView<Eigen::Upper>().solve(c);
    for (std::size_t i = 0; i < p; ++i) g(i, i) -= (nu + pd + 1.0) / lower(i, i);
    std::size_t k = 0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j, ++k)
        packed_grad[k] += i == j ? g(i, i) * lower(i, i) + (pd - static_cast<double>(i) + 1.0) : g(i, j);
  }
  return value;
}

double iw_log_density(const Mat& sigma, double nu, const Mat& psi) {
  const auto p = static_cast<double>(sigma.rows());
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Mat inv_psi = llt.solve(psi);
  return iw_normalizer(nu, psi) - 0.5 * (nu + p + 1.0) * log_det - 0.5 * inv_psi.trace();
}

Vec sample_mvn_chol(const Vec& mean, const Mat& lower, Rng& rng) {
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
  return mean + lower.triangularView<Eigen::Lower>() * z;
}

Mat iw_sample(double nu, const Mat& scale, Rng& rng) {
  const auto p = scale.rows();
  if (!(nu > static_cast<double>(p) - 1.0)) throw NumericalError("inverse-Wishart needs nu > dim - 1");
  Eigen::LLT<Mat> scale_llt(scale);
  if (scale_llt.info() != Eigen::Success) throw NumericalError("inverse-Wishart scale is not SPD");
  // Cholesky factor of scale^{-1}.
  const Mat inv_scale = scale_llt.solve(Mat::Identity(p, p));
  const Mat c = robust_cholesky(0.5 * (inv_scale + inv_scale.transpose()));
  Mat a = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double dof = nu - static_cast<double>(i);
    a(i, i) = std::sqrt(std::gamma_distribution<double>(0.5 * dof, 2.0)(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = std_normal(rng);
  }
  // Wishart draw is M M^T with M = C A; the inverse is M^{-T} M^{-1}.
  const Mat m = c * a;
  const Mat m_inv = m.triangularView<Eigen::Lower>().solve(Mat::Identity(p, p));
  Mat sigma = m_inv.transpose() * m_inv;
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace asmc::linalg
