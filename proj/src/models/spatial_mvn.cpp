#include "asmc/models/spatial_mvn.hpp"

#include <cmath>

#include "asmc/linalg.hpp"

namespace asmc {

SpatialMvnModel::SpatialMvnModel(std::vector<std::vector<Vec>> items) : items_(std::move(items)) {
  if (items_.empty()) throw DataError("m5 model needs at least one department");
  dim_ = -1;
  for (std::size_t g = 0; g < items_.size(); ++g) {
    if (items_[g].empty()) throw DataError("empty group " + std::to_string(g + 1));
    for (const auto& y : items_[g]) {
      if (dim_ < 0) dim_ = static_cast<int>(y.size());
      if (y.size() != dim_) throw DataError("m5 items have differing store counts");
    }
    sizes_.push_back(items_[g].size());
  }
  full_.resize(items_.size());
  for (std::size_t g = 0; g < items_.size(); ++g) {
    auto& st = full_[g];
    st.s = Vec::Zero(dim_);
    st.q = Mat::Zero(dim_, dim_);
    for (const auto& y : items_[g]) {
      st.w += 1.0;
      st.s += y;
      st.q.noalias() += y * y.transpose();
    }
  }
  const std::size_t s = dim_, g = items_.size();
  layout_.blocks = {{"mu", 0, s}, {"alpha", s, g}, {"sigma_chol", s + g, linalg::log_cholesky_size(s)}};
}

std::vector<SpatialMvnModel::GroupStats> SpatialMvnModel::tempered_stats(const Tempering& tempering) const {
  std::vector<GroupStats> st = full_;
  for (std::size_t j = 0; j < tempering.units.size(); ++j) {
    const double d = tempering.exponents[j] - 1.0;
    if (d == 0.0) continue;
    const auto& u = tempering.units[j];
    const Vec& y = items_[u.group - 1][u.within - 1];
    auto& g = st[u.group - 1];
    g.w += d;
    g.s += d * y;
    g.q.noalias() += d * (y * y.transpose());
  }
  return st;
}

double SpatialMvnModel::eval(const Vec& theta, const Tempering* tempering, Vec* grad) const {
  const std::size_t s = dim_, groups = items_.size();
  const auto& bc = layout_.blocks[2];
  const Mat l = linalg::lower_from_log_cholesky({theta.data() + bc.offset, bc.size}, s);
  if (grad) grad->setZero(theta.size());
  std::span<double> gc;
  if (grad) gc = {grad->data() + bc.offset, bc.size};

  const auto mu = theta.segment(0, s);
  double acc = -0.5 * s * linalg::kLog2Pi - 0.5 * mu.squaredNorm();
  if (grad) grad->segment(0, s) = -mu;
  for (std::size_t g = 0; g < groups; ++g) {
    const double a = theta[s + g];
    acc += -0.5 * linalg::kLog2Pi - 0.5 * a * a;
    if (grad) (*grad)[s + g] = -a;
  }
  acc += linalg::iw_log_density_log_cholesky(l, 2.0 * s, Mat::Identity(s, s), gc);
  if (!tempering) return acc;

  const auto st = tempered_stats(*tempering);
  Mat scatter = Mat::Zero(s, s);
  double n_eff = 0.0;
  Mat score(s, groups);  // s_g - w_g m_g
  for (std::size_t g = 0; g < groups; ++g) {
    const Vec m = mu.array() + theta[s + g];
    scatter += st[g].q - st[g].s * m.transpose() - m * st[g].s.transpose() + st[g].w * (m * m.transpose());
    n_eff += st[g].w;
    score.col(g) = st[g].s - st[g].w * m;
  }
  Mat d_lower;
  acc += linalg::mvn_scatter_log_density(n_eff, scatter, l, grad ? &d_lower : nullptr);
  if (grad) {
    linalg::accumulate_log_cholesky_grad(l, d_lower, gc);
    const auto tri = l.triangularView<Eigen::Lower>();
    const Mat prec_score = l.transpose().triangularView<Eigen::Upper>().solve(tri.solve(score));
    for (std::size_t g = 0; g < groups; ++g) {
      grad->segment(0, s) += prec_score.col(g);
      (*grad)[s + g] += prec_score.col(g).sum();
    }
  }
  return acc;
}

double SpatialMvnModel::log_prior(const Vec& theta) const { return eval(theta, nullptr, nullptr); }

double SpatialMvnModel::unit_log_lik(const Vec& theta, UnitIndex unit) const {
  const std::size_t s = dim_;
  const auto& bc = layout_.blocks[2];
  const Mat l = linalg::lower_from_log_cholesky({theta.data() + bc.offset, bc.size}, s);
  const Vec r = items_[unit.group - 1][unit.within - 1] - theta.segment(0, s) -
                Vec::Constant(s, theta[s + unit.group - 1]);
  return linalg::mvn_scatter_log_density(1.0, r * r.transpose(), l, nullptr);
}

double SpatialMvnModel::log_target(const Vec& theta, const Tempering& tempering) const {
  return eval(theta, &tempering, nullptr);
}

double SpatialMvnModel::log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const {
  return eval(theta, &tempering, &grad);
}

Vec SpatialMvnModel::initial_point() const {
  const std::size_t s = dim_;
  Vec theta = Vec::Zero(dimension());
  Vec total = Vec::Zero(s);
  double n = 0.0;
  for (const auto& st : full_) {
    total += st.s;
    n += st.w;
  }
  theta.segment(0, s) = total / n;
  Mat cov = Mat::Zero(s, s);
  for (std::size_t g = 0; g < items_.size(); ++g) {
    const Vec mean_g = full_[g].s / full_[g].w;
    theta[s + g] = (mean_g - theta.segment(0, s)).mean();
    for (const auto& y : items_[g]) cov += (y - mean_g) * (y - mean_g).transpose();
  }
  cov /= n;
  cov.diagonal().array() += 1e-3;
  const auto& bc = layout_.blocks[2];
  linalg::log_cholesky_from_spd(cov, {theta.data() + bc.offset, bc.size});
  return theta;
}

SpatialSynthetic generate_spatial(const SpatialShape& shape, Rng& rng) {
  if (shape.stores < 1 || shape.departments < 1 || shape.items_per_department < 1)
    throw ConfigError("m5 shape needs positive stores, departments and items");
  const int s = shape.stores;
  SpatialSynthetic out;
  out.mu.resize(s);
  for (int j = 0; j < s; ++j) out.mu[j] = std_normal(rng);
  out.alpha.resize(shape.departments);
  for (int g = 0; g < shape.departments; ++g) out.alpha[g] = std_normal(rng);
  out.sigma.resize(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      out.sigma(i, j) = shape.noise_sd * shape.noise_sd * std::pow(shape.correlation, std::abs(i - j));
  const Mat l = linalg::robust_cholesky(out.sigma);
  out.items.resize(shape.departments);
  for (int g = 0; g < shape.departments; ++g)
    for (int i = 0; i < shape.items_per_department; ++i)
      out.items[g].push_back(linalg::sample_mvn_chol(out.mu.array() + out.alpha[g], l, rng));
  return out;
}

}  // namespace asmc
