#include "asmc/models/conjugate.hpp"

#include <cmath>

#include "asmc/linalg.hpp"

namespace asmc {

namespace {

double normal_lpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * linalg::kLog2Pi - std::log(sd) - 0.5 * z * z;
}

}  // namespace

ConjugateGaussianModel::ConjugateGaussianModel(std::vector<std::vector<double>> y, ConjugateHyper hyper)
    : y_(std::move(y)), hyper_(hyper) {
  if (y_.empty()) throw DataError("conjugate model needs at least one group");
  if (!(hyper_.kappa > 0.0 && hyper_.tau > 0.0 && hyper_.sigma > 0.0))
    throw ConfigError("conjugate model scales must be positive");
  const std::size_t g = y_.size();
  for (const auto& grp : y_) {
    if (grp.empty()) throw DataError("empty group");
    sizes_.push_back(grp.size());
  }
  layout_.blocks = {{"mu", 0, 1}, {"theta", 1, g}};
  full_.w.assign(g, 0.0);
  full_.sy.assign(g, 0.0);
  full_.syy.assign(g, 0.0);
  for (std::size_t k = 0; k < g; ++k)
    for (double v : y_[k]) {
      full_.w[k] += 1.0;
      full_.sy[k] += v;
      full_.syy[k] += v * v;
    }
}

double ConjugateGaussianModel::log_prior(const Vec& theta) const {
  double acc = normal_lpdf(theta[0], 0.0, hyper_.kappa);
  for (std::size_t g = 0; g < y_.size(); ++g) acc += normal_lpdf(theta[1 + g], theta[0], hyper_.tau);
  return acc;
}

double ConjugateGaussianModel::unit_log_lik(const Vec& theta, UnitIndex unit) const {
  return normal_lpdf(y_[unit.group - 1][unit.within - 1], theta[unit.group], hyper_.sigma);
}

ConjugateGaussianModel::Stats ConjugateGaussianModel::tempered_stats(const Tempering& tempering) const {
  Stats s = full_;
  for (std::size_t j = 0; j < tempering.units.size(); ++j) {
    const double d = tempering.exponents[j] - 1.0;
    if (d == 0.0) continue;
    const auto& u = tempering.units[j];
    const double v = y_[u.group - 1][u.within - 1];
    s.w[u.group - 1] += d;
    s.sy[u.group - 1] += d * v;
    s.syy[u.group - 1] += d * v * v;
  }
  return s;
}

double ConjugateGaussianModel::log_target(const Vec& theta, const Tempering& tempering) const {
  const Stats s = tempered_stats(tempering);
  const double s2 = hyper_.sigma * hyper_.sigma;
  double acc = log_prior(theta);
  for (std::size_t g = 0; g < y_.size(); ++g) {
    const double t = theta[1 + g];
    const double q = s.syy[g] - 2.0 * t * s.sy[g] + s.w[g] * t * t;
    acc += -s.w[g] * (0.5 * linalg::kLog2Pi + std::log(hyper_.sigma)) - 0.5 * q / s2;
  }
  return acc;
}

double ConjugateGaussianModel::log_target_grad(const Vec& theta, const Tempering& tempering,
                                               Vec& grad) const {
  const Stats s = tempered_stats(tempering);
  const double k2 = hyper_.kappa * hyper_.kappa;
  const double t2 = hyper_.tau * hyper_.tau;
  const double s2 = hyper_.sigma * hyper_.sigma;
  grad.setZero(theta.size());
  double acc = log_prior(theta);
  grad[0] = -theta[0] / k2;
  for (std::size_t g = 0; g < y_.size(); ++g) {
    const double t = theta[1 + g];
    const double q = s.syy[g] - 2.0 * t * s.sy[g] + s.w[g] * t * t;
    acc += -s.w[g] * (0.5 * linalg::kLog2Pi + std::log(hyper_.sigma)) - 0.5 * q / s2;
    grad[0] += (t - theta[0]) / t2;
    grad[1 + g] = -(t - theta[0]) / t2 + (s.sy[g] - s.w[g] * t) / s2;
  }
  return acc;
}

Vec ConjugateGaussianModel::initial_point() const {
  Vec theta = Vec::Zero(dimension());
  double total = 0.0, count = 0.0;
  for (std::size_t g = 0; g < y_.size(); ++g) {
    theta[1 + g] = full_.sy[g] / full_.w[g];
    total += full_.sy[g];
    count += full_.w[g];
  }
  theta[0] = total / count;
  return theta;
}

ConjugateSynthetic generate_conjugate(const std::vector<std::size_t>& sizes, const ConjugateHyper& hyper,
                                      Rng& rng) {
  ConjugateSynthetic out;
  out.mu = hyper.kappa * std_normal(rng);
  for (std::size_t n : sizes) {
    const double th = out.mu + hyper.tau * std_normal(rng);
    out.theta.push_back(th);
    std::vector<double> grp(n);
    for (auto& v : grp) v = th + hyper.sigma * std_normal(rng);
    out.y.push_back(std::move(grp));
  }
  return out;
}

}  // namespace asmc
