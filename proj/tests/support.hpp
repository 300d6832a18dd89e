#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "asmc/model.hpp"

namespace testing_support {

using asmc::UnitIndex;
using asmc::Vec;

/// Model whose parameter vector *is* the table of unit log-likelihoods:
/// unit_log_lik(theta, u) = theta[flat index of u]. Flat prior.
class TableModel final : public asmc::Model {
 public:
  explicit TableModel(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    std::size_t n = 0;
    for (auto s : sizes_) {
      offsets_.push_back(n);
      n += s;
    }
    layout_.blocks.push_back({"table", 0, n});
  }
  std::string_view name() const override { return "table"; }
  const asmc::ParameterLayout& layout() const override { return layout_; }
  const std::vector<std::size_t>& group_sizes() const override { return sizes_; }
  double log_prior(const Vec&) const override { return 0.0; }
  double unit_log_lik(const Vec& theta, UnitIndex u) const override {
    return theta[static_cast<Eigen::Index>(offsets_[u.group - 1] + u.within - 1)];
  }
  Vec initial_point() const override { return Vec::Zero(static_cast<Eigen::Index>(layout_.dimension())); }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  asmc::ParameterLayout layout_;
};

}  // namespace testing_support
