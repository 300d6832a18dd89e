#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "asmc/baseline.hpp"
#include "asmc/config.hpp"
#include "asmc/engine.hpp"
#include "asmc/model.hpp"

namespace asmc {

/// Model plus the shape of the data it was built from.
struct LoadedModel {
  std::unique_ptr<Model> model;
  std::string source;  // data path, or "synthetic"
};

/// Reads `config.data`, or generates the synthetic dataset described by
/// `config.shape` when no path is given.
LoadedModel load_model(const RunConfig& config);

/// Generates the synthetic dataset of `config` and writes it in the model's
/// CSV schema.
void write_synthetic_csv(const RunConfig& config, const std::string& path);

DeletionScheme build_scheme(const RunConfig& config, const Model& model);
EstimandSpec estimand_of(const RunConfig& config);
/// Kernel iteration count after defaults: 5 for Gibbs kernels, 3 otherwise.
int resolve_kernel_iterations(const RunConfig& config, KernelKind kind);
EngineConfig engine_config(const RunConfig& config, KernelKind kind);

struct Timings {
  double baseline = 0.0, asmc = 0.0, psis = 0.0, refit = 0.0, total = 0.0;
};

struct ExperimentResult {
  RunConfig config;
  std::string model_name;
  std::string source;
  std::vector<std::size_t> group_sizes;
  std::size_t dimension = 0;
  DeletionScheme scheme;
  BaselineResult baseline;
  KernelKind kernel = KernelKind::rwm;
  int kernel_iterations = 0;
  std::optional<CvResult> asmc;
  std::optional<std::vector<PsisEstimate>> psis;
  std::optional<std::vector<RefitEstimate>> refit;
  Timings timings;
};

ExperimentResult run_experiment(const RunConfig& config);

}  // namespace asmc
