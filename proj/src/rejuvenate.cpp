#include "asmc/rejuvenate.hpp"

#include <exception>

#include "asmc/rng.hpp"

namespace asmc {

std::uint64_t particle_seed(std::uint64_t fold_seed, int step, std::size_t particle) {
  return derive_seed(derive_seed(fold_seed, stream::particle, static_cast<std::uint64_t>(step)), particle);
}

long rejuvenate_serial(std::vector<Vec>& particles, const TemperedTarget& target, KernelKind kind,
                       const KernelConfig& config, const KernelTuning& tuning, std::uint64_t fold_seed, int step) {
  long accepted = 0;
  for (std::size_t r = 0; r < particles.size(); ++r) {
    Rng rng(particle_seed(fold_seed, step, r));
    accepted += apply_kernel(particles[r], target, kind, config, tuning, rng);
  }
  return accepted;
}

long rejuvenate_parallel(std::vector<Vec>& particles, const TemperedTarget& target, KernelKind kind,
                         const KernelConfig& config, const KernelTuning& tuning, std::uint64_t fold_seed,
                         int step) {
  const auto n = static_cast<long>(particles.size());
  long accepted = 0;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static) reduction(+ : accepted)
  for (long r = 0; r < n; ++r) {
    try {
      Rng rng(particle_seed(fold_seed, step, static_cast<std::size_t>(r)));
      accepted += apply_kernel(particles[r], target, kind, config, tuning, rng);
    } catch (...) {
#pragma omp critical(asmc_rejuvenate_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return accepted;
}

std::vector<std::vector<double>> block_log_lik_serial(const DeletionPath& path, const Model& model,
                                                      const std::vector<Vec>& particles) {
  std::vector<std::vector<double>> out(particles.size());
  for (std::size_t r = 0; r < particles.size(); ++r) out[r] = path.block_log_lik(model, particles[r]);
  return out;
}

std::vector<std::vector<double>> block_log_lik_parallel(const DeletionPath& path, const Model& model,
                                                        const std::vector<Vec>& particles) {
  const auto n = static_cast<long>(particles.size());
  std::vector<std::vector<double>> out(particles.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long r = 0; r < n; ++r) {
    try {
      out[r] = path.block_log_lik(model, particles[r]);
    } catch (...) {
#pragma omp critical(asmc_block_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace asmc
