#pragma once

#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "asmc/core.hpp"
#include "asmc/rng.hpp"

namespace asmc::linalg {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Number of free entries of an n x n log-Cholesky factor.
constexpr std::size_t log_cholesky_size(std::size_t n) { return n * (n + 1) / 2; }

/// Lower-triangular L from packed row-major log-Cholesky entries; the diagonal
/// is exponentiated.
Mat lower_from_log_cholesky(std::span<const double> packed, std::size_t n);
/// Packed log-Cholesky entries of an SPD matrix. Throws NumericalError if the
/// factorization fails.
void log_cholesky_from_spd(const Mat& spd, std::span<double> packed);

/// Adds the gradient with respect to L (lower triangle of `d_lower`) into the
/// packed log-Cholesky gradient.
void accumulate_log_cholesky_grad(const Mat& lower, const Mat& d_lower, std::span<double> packed_grad);

/// Cholesky factor with symmetrization and 1e-10 jitter as a fallback.
Mat robust_cholesky(const Mat& spd);

/// sum of n_obs MVN(0, L L^T) log densities whose residual scatter is A.
/// When `d_lower` is non-null it receives d/dL (lower triangle).
double mvn_scatter_log_density(double n_obs, const Mat& scatter, const Mat& lower, Mat* d_lower);

double log_multivariate_gamma(double a, std::size_t p);

/// Inverse-Wishart(nu, psi) log density of Sigma = L L^T expressed in
/// log-Cholesky coordinates (Jacobian included). A non-empty `packed_grad`
/// accumulates the gradient in those coordinates.
double iw_log_density_log_cholesky(const Mat& lower, double nu, const Mat& psi,
                                   std::span<double> packed_grad);

/// Plain inverse-Wishart log density at an SPD matrix.
double iw_log_density(const Mat& sigma, double nu, const Mat& psi);

/// Draw from MVN(mean, L L^T).
Vec sample_mvn_chol(const Vec& mean, const Mat& lower, Rng& rng);

/// Inverse-Wishart draw via the Bartlett decomposition of the matching Wishart.
Mat iw_sample(double nu, const Mat& scale, Rng& rng);

}  // namespace asmc::linalg
