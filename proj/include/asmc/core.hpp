#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "asmc/error.hpp"

namespace asmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// (g, i) address of a conditionally independent unit. Both indices are 1-based.
struct UnitIndex {
  int group = 1;
  int within = 1;

  friend bool operator==(const UnitIndex&, const UnitIndex&) = default;
  friend auto operator<=>(const UnitIndex&, const UnitIndex&) = default;
};

/// Named index range inside a flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ParameterLayout {
  std::vector<ParameterBlock> blocks;

  std::size_t dimension() const;
  const ParameterBlock& block(std::string_view name) const;
};

/// One joint parameter state. Constrained quantities live in an unconstrained
/// transform (log scales, log-Cholesky factors), so any finite vector of the
/// right length is admissible.
struct ParameterDraw {
  Vec values;
};

enum class SchemeKind { loo, lgo, leo_within, leo_across, lso };

std::string_view to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(std::string_view text);

/// A deletion set I_k. `rank` gives each unit's position in the deletion order
/// (1 = deleted first); units deleted at the same time share a rank. For
/// unordered folds every rank is 1.
struct Fold {
  std::vector<UnitIndex> units;
  std::vector<int> rank;

  std::size_t size() const { return units.size(); }
  int rank_count() const;
};

struct DeletionScheme {
  SchemeKind kind = SchemeKind::lgo;
  std::vector<Fold> folds;
  /// LEO only: strictly increasing deletion-step counts at which estimands are
  /// evaluated; the last equals the fold's rank count.
  std::vector<int> checkpoints;
  /// LEO only: index t_min of the last retained time point.
  int t_min = 0;
  /// Group K-fold: true when some group has fewer items than folds.
  bool unbalanced = false;

  std::vector<std::size_t> fold_sizes() const;
  /// Throws ConfigError when an invariant is violated.
  void validate(const std::vector<std::size_t>& group_sizes) const;
};

enum class EstimandKind { joint, pointwise, multistep_leo };

struct EstimandSpec {
  EstimandKind kind = EstimandKind::joint;
  int horizon = 1;

  void validate(SchemeKind scheme) const;
};

std::string_view to_string(EstimandKind kind);
EstimandKind estimand_kind_from_string(std::string_view text);

DeletionScheme build_loo_scheme(const std::vector<std::size_t>& sizes);
DeletionScheme build_lgo_scheme(const std::vector<std::size_t>& sizes);
DeletionScheme build_group_kfold_scheme(const std::vector<std::size_t>& sizes, int folds,
                                        std::uint64_t seed);

/// `group == 0` selects the across-group variant (requires equal group lengths).
DeletionScheme build_leo_schedule(const std::vector<std::size_t>& sizes, int group, int series_length,
                                  int t_min);

}  // namespace asmc
