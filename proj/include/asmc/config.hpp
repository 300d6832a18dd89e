#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asmc/baseline.hpp"
#include "asmc/core.hpp"
#include "asmc/engine.hpp"
#include "asmc/kernels.hpp"
#include "asmc/path.hpp"

namespace asmc {

/// Parsed value of a small TOML subset: strings, numbers (including inf,
/// -inf, nan), booleans and flat arrays of numbers.
using TomlValue = std::variant<std::string, double, bool, std::vector<double>>;

/// section -> key -> value; top-level keys live under the empty section.
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

/// Throws ConfigError with "line N: ..." on malformed input.
TomlTable parse_toml(std::string_view text);

enum class EstimatorKind { asmc, psis, mcmc_refit, all };
std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(std::string_view text);

enum class ModelKind { radon, dns, m5, conjugate };
std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view text);

struct RunConfig {
  ModelKind model = ModelKind::conjugate;
  std::string data;  // empty: synthetic
  /// Synthetic shape keys, model specific (see README).
  std::map<std::string, double> shape;
  std::vector<double> maturities;  // dns only; empty means {2, 5, 10, 20, 30}
  /// Conjugate model scales.
  double kappa = 1.0, tau = 1.0, sigma = 1.0;

  SchemeKind scheme = SchemeKind::lgo;
  int folds = 10;
  int group = 1;  // LEO: 0 = all groups
  int t_min = 0;
  EstimandKind estimand = EstimandKind::joint;
  int horizon = 1;
  std::optional<PathKind> path;

  EstimatorKind estimator = EstimatorKind::asmc;
  int particles = 1000;
  double ess_ratio = 0.5;
  double khat_threshold = 0.7;
  double tolerance = 0.0;
  KernelConfig kernel;
  /// Unset: 5 for Gibbs kernels, 3 otherwise.
  std::optional<int> kernel_iterations;
  BaselineConfig baseline;

  std::uint64_t seed = 1;
  int threads = 1;
  std::string output = "asmc-out";

  void validate() const;
  bool operator==(const RunConfig&) const;
};

/// Builds a validated RunConfig; unknown sections or keys are rejected.
RunConfig config_from_toml(const TomlTable& table);
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config_file(const std::string& path);

/// Canonical TOML text that parses back to an equal RunConfig.
std::string to_toml(const RunConfig& config);

/// Shortest decimal text that round-trips to the same double; inf and nan
/// are spelled "inf", "-inf", "nan".
std::string format_double(double v);

}  // namespace asmc
