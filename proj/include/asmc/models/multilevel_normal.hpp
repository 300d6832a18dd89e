#pragma once

#include <vector>

#include "asmc/model.hpp"

namespace asmc {

/// Rows of a varying-intercept, varying-slope dataset. `group` is 1-based and
/// `u` holds one covariate per group.
struct MultilevelData {
  std::vector<double> y;
  std::vector<int> x;
  std::vector<int> group;
  std::vector<double> u;
};

/// y_i ~ N(beta_{g[i],0} + beta_{g[i],1} x_i, sigma), beta_g ~ MVN(Gamma (1, u_g), Sigma).
/// Priors: Gamma entries N(0, 2.5^2), log-Cholesky coordinates of Sigma N(0, 1),
/// sigma half-normal(1).
/// Sampled non-centered: beta_g = Gamma (1, u_g) + L z_g with z_g ~ N(0, I) and
/// Sigma = L L^T, which leaves the posterior of beta unchanged.
/// Layout: z (2G, interleaved per group), gamma (4, row-major), sigma_chol (3),
/// log_sigma (1).
class MultilevelNormalModel final : public Model {
 public:
  explicit MultilevelNormalModel(MultilevelData data);

  std::string_view name() const override { return "radon"; }
  const ParameterLayout& layout() const override { return layout_; }
  const std::vector<std::size_t>& group_sizes() const override { return sizes_; }

  double log_prior(const Vec& theta) const override;
  double unit_log_lik(const Vec& theta, UnitIndex unit) const override;
  double log_target(const Vec& theta, const Tempering& tempering) const override;
  bool has_gradient() const override { return true; }
  double log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const override;
  /// Exact when the fold holds every unit of each group it touches:
  /// y_g ~ MVN(X_g Gamma (1, u_g), X_g Sigma X_g^T + sigma^2 I).
  std::optional<double> integrated_fold_log_lik(const Vec& theta, const Fold& fold) const override;
  Vec initial_point() const override;

  const MultilevelData& data() const { return data_; }
  /// beta of a 1-based group.
  Vec group_effect(const Vec& theta, std::size_t group) const;
  /// Row of unit (g, i) in the data.
  std::size_t row(UnitIndex unit) const { return rows_[unit.group - 1][unit.within - 1]; }

 private:
  // Weighted sufficient statistics per (group, x) cell.
  struct Cell {
    double w = 0.0, sy = 0.0, syy = 0.0;
  };
  std::vector<Cell> tempered_cells(const Tempering& tempering) const;
  // Prior plus, when `tempering` is non-null, the tempered likelihood.
  double eval(const Vec& theta, const Tempering* tempering, Vec* grad) const;

  MultilevelData data_;
  std::size_t groups_;
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<std::size_t>> rows_;
  std::vector<Cell> full_;
  ParameterLayout layout_;
};

struct MultilevelShape {
  int groups = 20;
  int max_size = 50;
  double treated_share = 0.2;
  double sigma = 0.75;
  double group_sd = 0.3;
};

struct MultilevelSynthetic {
  MultilevelData data;
  Mat gamma;
  Mat sigma_beta;
  double sigma = 0.0;
};

/// Skewed group sizes: log-uniform on [1, max_size] with the largest group
/// forced to max_size.
MultilevelSynthetic generate_multilevel(const MultilevelShape& shape, Rng& rng);

}  // namespace asmc
