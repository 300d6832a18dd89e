#include "asmc/models/multilevel_normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asmc/linalg.hpp"

namespace asmc {

namespace {
constexpr double kGammaSd = 2.5;
}

MultilevelNormalModel::MultilevelNormalModel(MultilevelData data) : data_(std::move(data)) {
  const std::size_t n = data_.y.size();
  if (n == 0) throw DataError("multilevel model needs observations");
  if (data_.x.size() != n || data_.group.size() != n) throw DataError("ragged multilevel data");
  groups_ = data_.u.size();
  rows_.resize(groups_);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = data_.group[i];
    if (g < 1 || static_cast<std::size_t>(g) > groups_)
      throw DataError("group id " + std::to_string(g) + " out of range");
    if (data_.x[i] != 0 && data_.x[i] != 1) throw DataError("covariate x must be 0 or 1");
    rows_[g - 1].push_back(i);
  }
  for (std::size_t g = 0; g < groups_; ++g) {
    if (rows_[g].empty()) throw DataError("empty group " + std::to_string(g + 1));
    sizes_.push_back(rows_[g].size());
  }
  full_.assign(2 * groups_, Cell{});
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = full_[2 * (data_.group[i] - 1) + data_.x[i]];
    c.w += 1.0;
    c.sy += data_.y[i];
    c.syy += data_.y[i] * data_.y[i];
  }
  layout_.blocks = {{"z", 0, 2 * groups_},
                    {"gamma", 2 * groups_, 4},
                    {"sigma_chol", 2 * groups_ + 4, 3},
                    {"log_sigma", 2 * groups_ + 7, 1}};
}

Vec MultilevelNormalModel::group_effect(const Vec& theta, std::size_t group) const {
  const std::size_t gb = 2 * groups_;
  const std::size_t g = group - 1;
  const Mat l = linalg::lower_from_log_cholesky(std::span<const double>(theta.data() + gb + 4, 3), 2);
  const double u = data_.u[g];
  Vec beta(2);
  beta << theta[gb] + theta[gb + 1] * u, theta[gb + 2] + theta[gb + 3] * u;
  beta += l * theta.segment(2 * g, 2);
  return beta;
}

double MultilevelNormalModel::unit_log_lik(const Vec& theta, UnitIndex unit) const {
  const std::size_t i = row(unit);
  const Vec beta = group_effect(theta, unit.group);
  const double mean = beta[0] + beta[1] * data_.x[i];
  const double log_sigma = theta[2 * groups_ + 7];
  const double z = (data_.y[i] - mean) * std::exp(-log_sigma);
  return -0.5 * linalg::kLog2Pi - log_sigma - 0.5 * z * z;
}

std::vector<MultilevelNormalModel::Cell> MultilevelNormalModel::tempered_cells(
    const Tempering& tempering) const {
  std::vector<Cell> cells = full_;
  for (std::size_t j = 0; j < tempering.units.size(); ++j) {
    const double d = tempering.exponents[j] - 1.0;
    if (d == 0.0) continue;
    const std::size_t i = row(tempering.units[j]);
    auto& c = cells[2 * (data_.group[i] - 1) + data_.x[i]];
    c.w += d;
    c.sy += d * data_.y[i];
    c.syy += d * data_.y[i] * data_.y[i];
  }
  return cells;
}

double MultilevelNormalModel::eval(const Vec& theta, const Tempering* tempering, Vec* grad) const {
  const std::size_t gb = 2 * groups_;
  const std::span<const double> packed(theta.data() + gb + 4, 3);
  const double log_sigma = theta[gb + 7];
  if (grad) grad->setZero(theta.size());

  double acc = 0.0;
  const double log_norm_gamma = -0.5 * linalg::kLog2Pi - std::log(kGammaSd);
  for (std::size_t k = 0; k < 4; ++k) {
    const double v = theta[gb + k];
    acc += log_norm_gamma - 0.5 * v * v / (kGammaSd * kGammaSd);
    if (grad) (*grad)[gb + k] = -v / (kGammaSd * kGammaSd);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    acc += -0.5 * linalg::kLog2Pi - 0.5 * packed[k] * packed[k];
    if (grad) (*grad)[gb + 4 + k] = -packed[k];
  }
  const double sigma = std::exp(log_sigma);
  acc += std::log(2.0) - 0.5 * linalg::kLog2Pi - 0.5 * sigma * sigma + log_sigma;
  if (grad) (*grad)[gb + 7] = 1.0 - sigma * sigma;

  // Standardized group effects z_g ~ N(0, I).
  for (std::size_t k = 0; k < gb; ++k) {
    acc += -0.5 * linalg::kLog2Pi - 0.5 * theta[k] * theta[k];
    if (grad) (*grad)[k] = -theta[k];
  }
  if (!tempering) return acc;

  // beta_g = Gamma (1, u_g) + L z_g
  const Mat l = linalg::lower_from_log_cholesky(packed, 2);
  const std::vector<Cell> cells = tempered_cells(*tempering);
  const double inv_s2 = 1.0 / (sigma * sigma);
  Mat d_lower = Mat::Zero(2, 2);
  for (std::size_t g = 0; g < groups_; ++g) {
    const Vec beta = group_effect(theta, g + 1);
    Vec d_beta = Vec::Zero(2);
    for (int x = 0; x < 2; ++x) {
      const Cell& c = cells[2 * g + x];
      if (c.w == 0.0 && c.sy == 0.0 && c.syy == 0.0) continue;
      const double mean = beta[0] + beta[1] * x;
      const double q = c.syy - 2.0 * mean * c.sy + c.w * mean * mean;
      acc += -c.w * (0.5 * linalg::kLog2Pi + log_sigma) - 0.5 * q * inv_s2;
      if (grad) {
        const double dmean = (c.sy - c.w * mean) * inv_s2;
        d_beta[0] += dmean;
        d_beta[1] += dmean * x;
        (*grad)[gb + 7] += -c.w + q * inv_s2;
      }
    }
    if (grad) {
      const Vec z = theta.segment(2 * g, 2);
      grad->segment(2 * g, 2) += l.transpose() * d_beta;
      const double u = data_.u[g];
      (*grad)[gb] += d_beta[0];
      (*grad)[gb + 1] += d_beta[0] * u;
      (*grad)[gb + 2] += d_beta[1];
      (*grad)[gb + 3] += d_beta[1] * u;
      d_lower += d_beta * z.transpose();
    }
  }
  if (grad) linalg::accumulate_log_cholesky_grad(l, d_lower, std::span<double>(grad->data() + gb + 4, 3));
  return acc;
}

double MultilevelNormalModel::log_prior(const Vec& theta) const {
  return eval(theta, nullptr, nullptr);
}

double MultilevelNormalModel::log_target(const Vec& theta, const Tempering& tempering) const {
  return eval(theta, &tempering, nullptr);
}

double MultilevelNormalModel::log_target_grad(const Vec& theta, const Tempering& tempering,
                                              Vec& grad) const {
  return eval(theta, &tempering, &grad);
}

std::optional<double> MultilevelNormalModel::integrated_fold_log_lik(const Vec& theta, const Fold& fold) const {
  std::vector<std::size_t> count(groups_, 0);
  for (const auto& u : fold.units) ++count[u.group - 1];
  const std::size_t gb = 2 * groups_;
  const Mat l = linalg::lower_from_log_cholesky(std::span<const double>(theta.data() + gb + 4, 3), 2);
  if (!(l.diagonal().array() > 0.0).all() || !l.allFinite()) return -std::numeric_limits<double>::infinity();
  const double s2 = std::exp(2.0 * theta[gb + 7]);
  double acc = 0.0;
  for (std::size_t g = 0; g < groups_; ++g) {
    if (count[g] == 0) continue;
    if (count[g] != sizes_[g]) return std::nullopt;
    // Woodbury on the rank-2 design: A = Sigma^-1 + X^T X / s2.
    const double u = data_.u[g];
    const Vec mean = (Vec(2) << theta[gb] + theta[gb + 1] * u, theta[gb + 2] + theta[gb + 3] * u).finished();
    Mat xtx = Mat::Zero(2, 2);
    Vec xtr = Vec::Zero(2);
    double rtr = 0.0;
    for (std::size_t i : rows_[g]) {
      const Vec xi = (Vec(2) << 1.0, static_cast<double>(data_.x[i])).finished();
      const double r = data_.y[i] - xi.dot(mean);
      xtx += xi * xi.transpose();
      xtr += xi * r;
      rtr += r * r;
    }
    const Mat prec_beta = l.transpose().triangularView<Eigen::Upper>().solve(
        l.triangularView<Eigen::Lower>().solve(Mat::Identity(2, 2)));
    const Eigen::LLT<Mat> a(prec_beta + xtx / s2);
    if (a.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Vec b = xtr / s2;
    const double quad = rtr / s2 - b.dot(a.solve(b));
    const Mat la = a.matrixL();
    const double log_det = static_cast<double>(sizes_[g]) * std::log(s2) + 2.0 * l.diagonal().array().log().sum() +
                           2.0 * la.diagonal().array().log().sum();
    acc += -0.5 * (static_cast<double>(sizes_[g]) * linalg::kLog2Pi + log_det + quad);
  }
  return acc;
}

Vec MultilevelNormalModel::initial_point() const {
  Vec theta = Vec::Zero(dimension());
  double total = 0.0;
  for (double v : data_.y) total += v;
  const double mean = total / static_cast<double>(data_.y.size());
  theta[2 * groups_] = mean;
  double ss = 0.0;
  for (double v : data_.y) ss += (v - mean) * (v - mean);
  theta[2 * groups_ + 7] = 0.5 * std::log(std::max(ss / static_cast<double>(data_.y.size()), 1e-4));
  return theta;
}

MultilevelSynthetic generate_multilevel(const MultilevelShape& shape, Rng& rng) {
  if (shape.groups < 1 || shape.max_size < 1) throw ConfigError("multilevel shape needs groups, max_size >= 1");
  MultilevelSynthetic out;
  out.gamma.resize(2, 2);
  out.gamma << 1.5, 0.7, -0.6, -0.3;
  out.sigma_beta = Mat::Identity(2, 2) * shape.group_sd * shape.group_sd;
  out.sigma = shape.sigma;
  const Mat lb = linalg::robust_cholesky(out.sigma_beta);
  std::uniform_real_distribution<double> log_size(0.0, std::log(static_cast<double>(shape.max_size) + 1.0));
  std::bernoulli_distribution treated(shape.treated_share);
  std::vector<int> sizes(shape.groups);
  for (auto& s : sizes)
    s = std::clamp(static_cast<int>(std::floor(std::exp(log_size(rng)))), 1, shape.max_size);
  *std::max_element(sizes.begin(), sizes.end()) = shape.max_size;
  for (int g = 0; g < shape.groups; ++g) {
    const double u = std_normal(rng);
    out.data.u.push_back(u);
    const Vec mean = out.gamma * (Vec(2) << 1.0, u).finished();
    const Vec beta = linalg::sample_mvn_chol(mean, lb, rng);
    for (int i = 0; i < sizes[g]; ++i) {
      const int x = treated(rng) ? 1 : 0;
      out.data.x.push_back(x);
      out.data.group.push_back(g + 1);
      out.data.y.push_back(beta[0] + beta[1] * x + shape.sigma * std_normal(rng));
    }
  }
  return out;
}

}  // namespace asmc
