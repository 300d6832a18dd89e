#include "asmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace asmc {

Tempering Tempering::deleted(const Fold& fold) {
  Tempering t;
  t.units = fold.units;
  t.exponents.assign(fold.units.size(), 0.0);
  return t;
}

std::size_t Model::unit_count() const {
  const auto& sizes = group_sizes();
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

double Model::log_target(const Vec& theta, const Tempering& tempering) const {
  double acc = log_prior(theta);
  const auto& sizes = group_sizes();
  for (std::size_t g = 0; g < sizes.size(); ++g)
    for (std::size_t i = 0; i < sizes[g]; ++i)
      acc += unit_log_lik(theta, {static_cast<int>(g + 1), static_cast<int>(i + 1)});
  for (std::size_t j = 0; j < tempering.units.size(); ++j) {
    const double phi = tempering.exponents[j];
    if (phi != 1.0) acc += (phi - 1.0) * unit_log_lik(theta, tempering.units[j]);
  }
  return acc;
}

double Model::log_target_grad(const Vec&, const Tempering&, Vec&) const {
  throw Error(std::string(name()) + " does not provide gradients");
}

void Model::gibbs_sweep(Vec&, const Tempering&, Rng&) const {
  throw Error(std::string(name()) + " does not provide a Gibbs sweep");
}

double Model::forward_log_predictive(const Vec&, int, int, int, Rng&) const {
  throw Error(std::string(name()) + " does not support forward simulation");
}

std::optional<double> Model::integrated_fold_log_lik(const Vec&, const Fold&) const { return std::nullopt; }

double joint_predictive_log_density(const Model& model, const Vec& theta, const Fold& fold) {
  double acc = 0.0;
  for (const auto& u : fold.units) acc += model.unit_log_lik(theta, u);
  return acc;
}

Vec finite_difference_gradient(const Model& model, const Vec& theta, const Tempering& tempering,
                               double h) {
  Vec grad(theta.size());
  Vec probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(theta[j]));
    probe[j] = theta[j] + step;
    const double up = model.log_target(probe, tempering);
    probe[j] = theta[j] - step;
    const double down = model.log_target(probe, tempering);
    probe[j] = theta[j];
    grad[j] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace asmc
