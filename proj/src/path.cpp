#include "asmc/path.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asmc/weights.hpp"

namespace asmc {

std::string_view to_string(PathKind kind) {
  return kind == PathKind::tempering ? "tempering" : "ordered";
}

PathKind path_kind_from_string(std::string_view text) {
  if (text == "tempering") return PathKind::tempering;
  if (text == "ordered") return PathKind::ordered;
  throw ConfigError("unknown path kind '" + std::string(text) + "'");
}

double tempering_exponent(double n, double fold_size) {
  if (!(fold_size > 0.0) || n < 0.0 || n > fold_size)
    throw NumericalError("tempering_exponent: n out of [0, N_k]");
  if (n == fold_size) return 0.0;
  return 1.0 - n / fold_size;
}

double ordered_exponent(double n, int rank) {
  return std::min(std::max(0.0, static_cast<double>(rank) - n), 1.0);
}

DeletionPath::DeletionPath(const Fold& fold, PathKind kind) : fold_(fold), kind_(kind) {
  if (fold_.units.empty()) throw ConfigError("deletion path over an empty fold");
  if (kind_ == PathKind::tempering) {
    length_ = static_cast<double>(fold_.size());
    block_units_.resize(1);
    for (std::size_t j = 0; j < fold_.size(); ++j) block_units_[0].push_back(j);
    block_rank_.push_back(1);
  } else {
    const int ranks = fold_.rank_count();
    length_ = static_cast<double>(ranks);
    block_units_.resize(ranks);
    for (std::size_t j = 0; j < fold_.size(); ++j) block_units_[fold_.rank[j] - 1].push_back(j);
    for (int r = 1; r <= ranks; ++r) block_rank_.push_back(r);
  }
}

void DeletionPath::check_range(double n) const {
  if (!(n >= 0.0 && n <= length_))
    throw NumericalError("deletion parameter " + std::to_string(n) + " outside [0, " +
                         std::to_string(length_) + "]");
}

double DeletionPath::block_exponent(std::size_t b, double n) const {
  if (kind_ == PathKind::tempering) return tempering_exponent(n, length_);
  return ordered_exponent(n, block_rank_[b]);
}

Tempering DeletionPath::tempering_at(double n) const {
  check_range(n);
  Tempering t;
  t.units = fold_.units;
  t.exponents.resize(fold_.size());
  for (std::size_t b = 0; b < block_units_.size(); ++b) {
    const double phi = block_exponent(b, n);
    for (auto j : block_units_[b]) t.exponents[j] = phi;
  }
  return t;
}

std::vector<double> DeletionPath::block_log_lik(const Model& model, const Vec& theta) const {
  std::vector<double> out(block_units_.size(), 0.0);
  for (std::size_t b = 0; b < block_units_.size(); ++b) {
    for (auto j : block_units_[b]) {
      const double l = model.unit_log_lik(theta, fold_.units[j]);
      if (!std::isfinite(l)) {
        const auto& u = fold_.units[j];
        throw NumericalError("non-finite log-likelihood at unit (" + std::to_string(u.group) + "," +
                             std::to_string(u.within) + ")");
      }
      out[b] += l;
    }
  }
  return out;
}

double DeletionPath::log_increment(std::span<const double> block_ll, double n_prev,
                                   double n_next) const {
  check_range(n_prev);
  check_range(n_next);
  if (n_next < n_prev) throw NumericalError("log_increment: n_next < n_prev");
  double acc = 0.0;
  for (std::size_t b = 0; b < block_units_.size(); ++b) {
    const double d = block_exponent(b, n_next) - block_exponent(b, n_prev);
    if (d != 0.0) acc += d * block_ll[b];
  }
  return acc;
}

DeletionPath::ExponentSummary DeletionPath::summarize(double n) const {
  ExponentSummary s{0.0, 1.0, 0.0};
  for (std::size_t b = 0; b < block_units_.size(); ++b) {
    const double phi = block_exponent(b, n);
    s.mean += phi * static_cast<double>(block_units_[b].size());
    s.min = std::min(s.min, phi);
    s.max = std::max(s.max, phi);
  }
  s.mean /= static_cast<double>(fold_.size());
  return s;
}

double log_incremental_weight(const Model& model, const Vec& theta, const DeletionPath& path,
                              double n_prev, double n_next) {
  const auto blocks = path.block_log_lik(model, theta);
  return path.log_increment(blocks, n_prev, n_next);
}

double ess_at(const DeletionPath& path, std::span<const double> log_w,
              const std::vector<std::vector<double>>& block_log_lik, double n_prev, double n) {
  std::vector<double> lw(log_w.size());
  for (std::size_t r = 0; r < lw.size(); ++r)
    lw[r] = log_w[r] + path.log_increment(block_log_lik[r], n_prev, n);
  return ess(normalize(lw));
}

SolverResult solve_next_n(const DeletionPath& path, std::span<const double> log_w,
                          const std::vector<std::vector<double>>& block_log_lik, double n_prev,
                          double n_cap, const SolverOptions& options) {
  if (!(options.ess_ratio > 0.0 && options.ess_ratio < 1.0))
    throw ConfigError("ess_ratio must lie in (0, 1)");
  if (!(n_prev < n_cap) || n_cap > path.length())
    throw NumericalError("solve_next_n: need n_prev < n_cap <= N_k");
  const double target = options.ess_ratio * static_cast<double>(log_w.size());
  const double tol = options.tolerance > 0.0 ? options.tolerance : 1e-3 * path.length();
  auto ess_of = [&](double n) { return ess_at(path, log_w, block_log_lik, n_prev, n); };

  SolverResult res;
  const double ess_cap = ess_of(n_cap);
  if (ess_cap >= target) {
    res.n = n_cap;
    res.ess = ess_cap;
    res.hit_cap = true;
    return res;
  }

  double lo = n_prev, hi = n_cap;
  double ess_lo = ess_of(n_prev), ess_hi = ess_cap;
  while (hi - lo > tol && res.iterations < options.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    const double e = ess_of(mid);
    ++res.iterations;
    if (e > ess_lo + 1e-9 * target || e < ess_hi - 1e-9 * target) res.non_monotone = true;
    if (e >= target) {
      lo = mid;
      ess_lo = e;
    } else {
      hi = mid;
      ess_hi = e;
    }
  }
  // lo always meets the target; it only fails to advance when the ESS drops
  // below the target within one tolerance step of n_prev.
  if (lo > n_prev) {
    res.n = lo;
    res.ess = ess_lo;
  } else {
    res.n = hi;
    res.ess = ess_hi;
  }
  res.hit_cap = res.n == n_cap;
  // The final bracket is at most one tolerance step wide.
  res.epsilon = std::abs(ess_lo - ess_hi);
  return res;
}

}  // namespace asmc
