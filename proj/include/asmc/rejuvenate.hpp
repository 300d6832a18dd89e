#pragma once

#include <cstdint>
#include <vector>

#include "asmc/kernels.hpp"
#include "asmc/path.hpp"

namespace asmc {

/// Seed of the kernel stream owned by one particle at one SMC step.
std::uint64_t particle_seed(std::uint64_t fold_seed, int step, std::size_t particle);

/// Applies the kernel to every particle, each with its own stream. Returns the
/// total number of accepted proposals. The parallel and serial variants produce
/// identical particles for any thread count.
long rejuvenate_parallel(std::vector<Vec>& particles, const TemperedTarget& target, KernelKind kind,
                         const KernelConfig& config, const KernelTuning& tuning, std::uint64_t fold_seed,
                         int step);
long rejuvenate_serial(std::vector<Vec>& particles, const TemperedTarget& target, KernelKind kind,
                       const KernelConfig& config, const KernelTuning& tuning, std::uint64_t fold_seed, int step);

/// Block log-likelihood sums per particle (particle-major).
std::vector<std::vector<double>> block_log_lik_parallel(const DeletionPath& path, const Model& model,
                                                        const std::vector<Vec>& particles);
std::vector<std::vector<double>> block_log_lik_serial(const DeletionPath& path, const Model& model,
                                                      const std::vector<Vec>& particles);

}  // namespace asmc
