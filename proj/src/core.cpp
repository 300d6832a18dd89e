#include "asmc/core.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "asmc/rng.hpp"

namespace asmc {

std::size_t ParameterLayout::dimension() const {
  std::size_t d = 0;
  for (const auto& b : blocks) d = std::max(d, b.offset + b.size);
  return d;
}

const ParameterBlock& ParameterLayout::block(std::string_view name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw Error("unknown parameter block: " + std::string(name));
}

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::loo: return "loo";
    case SchemeKind::lgo: return "lgo";
    case SchemeKind::leo_within: return "leo-within";
    case SchemeKind::leo_across: return "leo-across";
    case SchemeKind::lso: return "lso";
  }
  return "?";
}

SchemeKind scheme_kind_from_string(std::string_view text) {
  if (text == "loo") return SchemeKind::loo;
  if (text == "lgo") return SchemeKind::lgo;
  if (text == "leo-within" || text == "leo") return SchemeKind::leo_within;
  if (text == "leo-across") return SchemeKind::leo_across;
  if (text == "lso" || text == "group-kfold") return SchemeKind::lso;
  throw ConfigError("unknown scheme kind '" + std::string(text) + "'");
}

std::string_view to_string(EstimandKind kind) {
  switch (kind) {
    case EstimandKind::joint: return "joint";
    case EstimandKind::pointwise: return "pointwise";
    case EstimandKind::multistep_leo: return "multistep";
  }
  return "?";
}

EstimandKind estimand_kind_from_string(std::string_view text) {
  if (text == "joint") return EstimandKind::joint;
  if (text == "pointwise") return EstimandKind::pointwise;
  if (text == "multistep") return EstimandKind::multistep_leo;
  throw ConfigError("unknown estimand kind '" + std::string(text) + "'");
}

int Fold::rank_count() const {
  if (rank.empty()) return 0;
  return *std::max_element(rank.begin(), rank.end());
}

std::vector<std::size_t> DeletionScheme::fold_sizes() const {
  std::vector<std::size_t> out;
  out.reserve(folds.size());
  for (const auto& f : folds) out.push_back(f.size());
  return out;
}

void DeletionScheme::validate(const std::vector<std::size_t>& group_sizes) const {
  if (folds.empty()) throw ConfigError("scheme has no folds");
  std::set<UnitIndex> seen;
  const bool kfold = kind == SchemeKind::loo || kind == SchemeKind::lgo || kind == SchemeKind::lso;
  for (const auto& f : folds) {
    if (f.units.empty()) throw ConfigError("scheme contains an empty fold");
    if (f.rank.size() != f.units.size()) throw ConfigError("fold rank vector size mismatch");
    for (const auto& u : f.units) {
      if (u.group < 1 || static_cast<std::size_t>(u.group) > group_sizes.size() || u.within < 1 ||
          static_cast<std::size_t>(u.within) > group_sizes[u.group - 1])
        throw ConfigError("fold unit out of range");
      if (kfold && !seen.insert(u).second) throw ConfigError("folds are not pairwise disjoint");
    }
    // Ranks must be dense 1..max.
    std::set<int> ranks(f.rank.begin(), f.rank.end());
    if (*ranks.begin() != 1 || static_cast<int>(ranks.size()) != *ranks.rbegin())
      throw ConfigError("fold ranks must be dense starting at 1");
  }
  const bool leo = kind == SchemeKind::leo_within || kind == SchemeKind::leo_across;
  if (leo) {
    if (folds.size() != 1) throw ConfigError("LEO schemes have exactly one fold");
    if (checkpoints.empty()) throw ConfigError("LEO scheme needs checkpoints");
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
      if (checkpoints[i] <= checkpoints[i - 1])
        throw ConfigError("LEO checkpoints must be strictly increasing");
    if (checkpoints.front() < 1 || checkpoints.back() != folds.front().rank_count())
      throw ConfigError("LEO checkpoints must end at the total deletion count");
  }
}

void EstimandSpec::validate(SchemeKind scheme) const {
  if (horizon < 1) throw ConfigError("estimand horizon must be >= 1");
  const bool leo = scheme == SchemeKind::leo_within || scheme == SchemeKind::leo_across;
  if (kind == EstimandKind::multistep_leo && !leo)
    throw ConfigError("multi-step estimand is only valid with LEO schemes");
  if (horizon > 1 && kind != EstimandKind::multistep_leo)
    throw ConfigError("horizon > 1 requires the multi-step estimand");
}

namespace {

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw ConfigError("at least one group required");
  for (auto n : sizes)
    if (n == 0) throw ConfigError("empty group");
}

Fold unordered_fold(std::vector<UnitIndex> units) {
  Fold f;
  f.rank.assign(units.size(), 1);
  f.units = std::move(units);
  return f;
}

}  // namespace

DeletionScheme build_loo_scheme(const std::vector<std::size_t>& sizes) {
  check_sizes(sizes);
  DeletionScheme s;
  s.kind = SchemeKind::loo;
  for (std::size_t g = 0; g < sizes.size(); ++g)
    for (std::size_t i = 0; i < sizes[g]; ++i)
      s.folds.push_back(unordered_fold({{static_cast<int>(g + 1), static_cast<int>(i + 1)}}));
  return s;
}

DeletionScheme build_lgo_scheme(const std::vector<std::size_t>& sizes) {
  check_sizes(sizes);
  DeletionScheme s;
  s.kind = SchemeKind::lgo;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    std::vector<UnitIndex> units;
    for (std::size_t i = 0; i < sizes[g]; ++i)
      units.push_back({static_cast<int>(g + 1), static_cast<int>(i + 1)});
    s.folds.push_back(unordered_fold(std::move(units)));
  }
  return s;
}

DeletionScheme build_group_kfold_scheme(const std::vector<std::size_t>& sizes, int folds,
                                        std::uint64_t seed) {
  check_sizes(sizes);
  if (folds < 2) throw ConfigError("group K-fold needs K >= 2");
  DeletionScheme s;
  s.kind = SchemeKind::lso;
  std::vector<std::vector<UnitIndex>> members(folds);
  Rng rng = make_rng(seed, stream::scheme);
  // Round-robin offset rotates across groups so remainders do not always land
  // in the first folds.
  std::size_t offset = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    std::vector<int> order(sizes[g]);
    std::iota(order.begin(), order.end(), 1);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t j = 0; j < order.size(); ++j)
      members[(offset + j) % folds].push_back({static_cast<int>(g + 1), order[j]});
    offset = (offset + sizes[g]) % folds;
    if (sizes[g] < static_cast<std::size_t>(folds)) s.unbalanced = true;
  }
  for (auto& m : members) {
    if (m.empty()) throw ConfigError("group K-fold produced an empty fold; reduce K");
    std::sort(m.begin(), m.end());
    s.folds.push_back(unordered_fold(std::move(m)));
  }
  return s;
}

DeletionScheme build_leo_schedule(const std::vector<std::size_t>& sizes, int group,
                                  int series_length, int t_min) {
  check_sizes(sizes);
  if (t_min < 0 || t_min >= series_length) throw ConfigError("LEO requires 0 <= t_min < T");
  DeletionScheme s;
  s.t_min = t_min;
  std::vector<int> groups;
  if (group == 0) {
    s.kind = SchemeKind::leo_across;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      if (sizes[g] != sizes.front()) throw ConfigError("across-group LEO needs equal group lengths");
      groups.push_back(static_cast<int>(g + 1));
    }
  } else {
    s.kind = SchemeKind::leo_within;
    if (group < 1 || static_cast<std::size_t>(group) > sizes.size())
      throw ConfigError("LEO group out of range");
    groups.push_back(group);
  }
  for (int g : groups)
    if (static_cast<std::size_t>(series_length) > sizes[g - 1])
      throw ConfigError("LEO horizon exceeds group length");

  Fold f;
  for (int t = series_length; t > t_min; --t) {
    const int rank = series_length - t + 1;
    for (int g : groups) {
      f.units.push_back({g, t});
      f.rank.push_back(rank);
    }
  }
  for (int j = 1; j <= series_length - t_min; ++j) s.checkpoints.push_back(j);
  s.folds.push_back(std::move(f));
  return s;
}

}  // namespace asmc
