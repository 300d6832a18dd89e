#pragma once

#include <vector>

#include "asmc/model.hpp"

namespace asmc {

/// y_k ~ MVN(mu + alpha_{g[k]} 1_S, Sigma) with mu ~ MVN(0, I), alpha_g ~ N(0, 1),
/// Sigma ~ IW(2S, I). Items are grouped by department: unit (g, i) is the i-th
/// item of department g.
/// Layout: mu (S), alpha (G), sigma_chol (S (S + 1) / 2).
class SpatialMvnModel final : public Model {
 public:
  explicit SpatialMvnModel(std::vector<std::vector<Vec>> items);

  std::string_view name() const override { return "m5"; }
  const ParameterLayout& layout() const override { return layout_; }
  const std::vector<std::size_t>& group_sizes() const override { return sizes_; }

  double log_prior(const Vec& theta) const override;
  double unit_log_lik(const Vec& theta, UnitIndex unit) const override;
  double log_target(const Vec& theta, const Tempering& tempering) const override;
  bool has_gradient() const override { return true; }
  double log_target_grad(const Vec& theta, const Tempering& tempering, Vec& grad) const override;
  Vec initial_point() const override;

  int series_dim() const { return dim_; }
  const std::vector<std::vector<Vec>>& items() const { return items_; }

 private:
  struct GroupStats {
    double w = 0.0;
    Vec s;
    Mat q;
  };
  std::vector<GroupStats> tempered_stats(const Tempering& tempering) const;
  double eval(const Vec& theta, const Tempering* tempering, Vec* grad) const;

  std::vector<std::vector<Vec>> items_;
  int dim_;
  std::vector<std::size_t> sizes_;
  std::vector<GroupStats> full_;
  ParameterLayout layout_;
};

struct SpatialShape {
  int stores = 6;
  int departments = 5;
  int items_per_department = 12;
  double correlation = 0.5;
  double noise_sd = 1.0;
};

struct SpatialSynthetic {
  std::vector<std::vector<Vec>> items;
  Vec mu;
  Vec alpha;
  Mat sigma;
};

SpatialSynthetic generate_spatial(const SpatialShape& shape, Rng& rng);

}  // namespace asmc
