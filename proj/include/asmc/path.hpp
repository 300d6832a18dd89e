#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "asmc/core.hpp"
#include "asmc/model.hpp"

namespace asmc {

/// How likelihood exponents of a fold depend on the deletion parameter n.
enum class PathKind {
  /// Common exponent 1 - n / N_k on every unit of the fold.
  tempering,
  /// Units deleted one rank at a time: exponent min(max(0, rank - n), 1).
  ordered,
};

std::string_view to_string(PathKind kind);
PathKind path_kind_from_string(std::string_view text);

double tempering_exponent(double n, double fold_size);
double ordered_exponent(double n, int rank);

/// Deletion path over one fold. Units are grouped into blocks that always share
/// an exponent: one block for tempering, one block per rank for ordered paths.
class DeletionPath {
 public:
  DeletionPath(const Fold& fold, PathKind kind);

  PathKind kind() const { return kind_; }
  /// Upper end N_k of the deletion parameter.
  double length() const { return length_; }
  std::size_t block_count() const { return block_units_.size(); }
  const std::vector<std::size_t>& block_units(std::size_t b) const { return block_units_[b]; }
  const Fold& fold() const { return fold_; }

  double block_exponent(std::size_t b, double n) const;
  /// Per-unit exponents at n, in fold order, packaged for model evaluation.
  Tempering tempering_at(double n) const;

  /// Sum of unit log-likelihoods per block, for one parameter draw.
  std::vector<double> block_log_lik(const Model& model, const Vec& theta) const;

  /// sum_b (phi_b(n_next) - phi_b(n_prev)) * block_log_lik[b]. Throws if
  /// n_prev > n_next or either is outside [0, N_k].
  double log_increment(std::span<const double> block_log_lik, double n_prev, double n_next) const;

  struct ExponentSummary {
    double mean = 1.0, min = 1.0, max = 1.0;
  };
  ExponentSummary summarize(double n) const;

 private:
  void check_range(double n) const;

  Fold fold_;
  PathKind kind_;
  double length_;
  std::vector<std::vector<std::size_t>> block_units_;
  std::vector<int> block_rank_;
};

/// log w(n_prev -> n_next) evaluated afresh from the model. Throws
/// NumericalError naming the offending unit on a non-finite log-likelihood.
double log_incremental_weight(const Model& model, const Vec& theta, const DeletionPath& path,
                              double n_prev, double n_next);

struct SolverOptions {
  double ess_ratio = 0.5;
  /// Absolute tolerance on n; non-positive selects 1e-3 * N_k.
  double tolerance = 0.0;
  int max_iterations = 60;
};

struct SolverResult {
  double n = 0.0;
  double ess = 0.0;
  int iterations = 0;
  bool hit_cap = false;
  bool non_monotone = false;
  /// |ESS(n) - ESS(n + tol)|: the ESS resolution of the bisection at n.
  double epsilon = 0.0;
};

/// Finds the next deletion parameter in (n_prev, n_cap] so that the ESS of the
/// current weights times the incremental weights meets ess_ratio * R.
/// `block_log_lik` is particle-major: row r holds the block sums of particle r.
SolverResult solve_next_n(const DeletionPath& path, std::span<const double> log_w,
                          const std::vector<std::vector<double>>& block_log_lik, double n_prev,
                          double n_cap, const SolverOptions& options);

/// ESS of log_w[r] + increment(n_prev -> n) for every particle.
double ess_at(const DeletionPath& path, std::span<const double> log_w,
              const std::vector<std::vector<double>>& block_log_lik, double n_prev, double n);

}  // namespace asmc
