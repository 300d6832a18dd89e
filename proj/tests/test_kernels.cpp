#include <cmath>

#include <Eigen/Dense>

#include "asmc/kernels.hpp"
#include "asmc/linalg.hpp"
#include "asmc/models/conjugate.hpp"
#include "doctest.h"

using namespace asmc;

namespace {

// N(0, S) with S = [[1, 0.6], [0.6, 2]].
struct Gauss2 {
  Mat prec;
  Mat chol;
  Gauss2() {
    Mat s(2, 2);
    s << 1.0, 0.6, 0.6, 2.0;
    prec = s.inverse();
    chol = s.llt().matrixL();
  }
  double log_density(const Vec& x) const { return -0.5 * x.dot(prec * x); }
  double grad(const Vec& x, Vec& g) const {
    g = -prec * x;
    return log_density(x);
  }
};

struct Moments {
  Vec mean;
  Mat cov;
};

Moments moments(const std::vector<Vec>& xs) {
  const auto n = static_cast<double>(xs.size());
  Moments m{Vec::Zero(xs[0].size()), Mat::Zero(xs[0].size(), xs[0].size())};
  for (const auto& x : xs) m.mean += x;
  m.mean /= n;
  for (const auto& x : xs) m.cov += (x - m.mean) * (x - m.mean).transpose();
  m.cov /= n - 1.0;
  return m;
}

// One kernel application to exact draws must keep the first two moments
// within 3 standard errors.
template <class Step>
void check_preserves_moments(Step step) {
  const Gauss2 g;
  Rng rng(2024);
  const int n = 100000;
  std::vector<Vec> xs(n);
  for (auto& x : xs) {
    x = Vec(2);
    x << std_normal(rng), std_normal(rng);
    x = g.chol * x;
  }
  for (auto& x : xs) step(x, rng);
  const Moments m = moments(xs);
  const Mat s = g.chol * g.chol.transpose();
  for (int i = 0; i < 2; ++i) {
    const double se_mean = std::sqrt(s(i, i) / n);
    CHECK(std::abs(m.mean[i]) < 3.0 * se_mean);
    for (int j = 0; j < 2; ++j) {
      const double se_cov = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / n);
      CHECK(std::abs(m.cov(i, j) - s(i, j)) < 3.0 * se_cov);
    }
  }
}

}  // namespace

TEST_CASE("rwm on a standard normal") {
  Rng rng(1);
  Vec x = Vec::Zero(1);
  const auto target = [](const Vec& v) { return -0.5 * v.squaredNorm(); };
  const int n = 100000;
  double s1 = 0.0, s2 = 0.0;
  // Thinned by 5 to shrink autocorrelation in the running moments.
  for (int i = 0; i < 5 * n; ++i) {
    rwm_step(x, target, Vec::Ones(1), 2.4, rng);
    if (i % 5 == 4) {
      s1 += x[0];
      s2 += x[0] * x[0];
    }
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) <= 0.03);
  CHECK(var >= 0.94);
  CHECK(var <= 1.06);
}

TEST_CASE("rwm with a vanishing scale barely moves and always accepts") {
  Rng rng(2);
  Vec x = Vec::Constant(3, 0.4);
  const Vec start = x;
  const auto target = [](const Vec& v) { return -0.5 * v.squaredNorm(); };
  int acc = 0;
  for (int i = 0; i < 1000; ++i) acc += rwm_step(x, target, Vec::Ones(3), 1e-8, rng).accepted;
  CHECK(acc == 1000);
  CHECK((x - start).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rwm rejects non-finite proposals") {
  Rng rng(3);
  Vec x = Vec::Constant(1, 0.5);
  const auto target = [](const Vec& v) { return v[0] > 0.0 ? 0.0 : std::nan(""); };
  for (int i = 0; i < 2000; ++i) rwm_step(x, target, Vec::Ones(1), 1.0, rng);
  CHECK(x[0] > 0.0);
}

TEST_CASE("rwm balances a symmetric two-mode target") {
  Rng rng(4);
  Vec x = Vec::Zero(1);
  const auto target = [](const Vec& v) {
    const double a = -0.5 * std::pow((v[0] - 1.5) / 0.6, 2), b = -0.5 * std::pow((v[0] + 1.5) / 0.6, 2);
    return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
  };
  long right = 0;
  const long n = 400000;
  for (long i = 0; i < n; ++i) {
    rwm_step(x, target, Vec::Ones(1), 2.5, rng);
    right += x[0] > 0.0;
  }
  CHECK(std::abs(static_cast<double>(right) / n - 0.5) <= 0.02);
}

TEST_CASE("hmc acceptance on a gaussian with a short step") {
  const Gauss2 g;
  Rng rng(5);
  Vec x = Vec::Zero(2);
  const GradFn fn = [&](const Vec& v, Vec& grad) { return g.grad(v, grad); };
  int acc = 0;
  for (int i = 0; i < 10000; ++i) acc += hmc_step(x, fn, Vec::Ones(2), 0.1, 10, rng).accepted;
  CHECK(acc > 9000);
}

TEST_CASE("hmc conserves energy for a tiny step") {
  const Gauss2 g;
  Rng rng(6);
  Vec x = Vec::Zero(2);
  const GradFn fn = [&](const Vec& v, Vec& grad) { return g.grad(v, grad); };
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) worst = std::max(worst, std::abs(hmc_step(x, fn, Vec::Ones(2), 1e-3, 1000, rng).energy_error));
  CHECK(worst < 1e-4);
}

TEST_CASE("hmc flags divergent trajectories") {
  Rng rng(7);
  Vec x = Vec::Constant(1, 1.0);
  const GradFn fn = [](const Vec& v, Vec& grad) {
    grad = -1e6 * v;
    return -0.5e6 * v.squaredNorm();
  };
  const Vec start = x;
  const StepStats st = hmc_step(x, fn, Vec::Ones(1), 1.0, 20, rng);
  CHECK(st.divergent);
  CHECK_FALSE(st.accepted);
  CHECK(x == start);
}

TEST_CASE("kernels preserve exact draws") {
  const Gauss2 g;
  SUBCASE("rwm") {
    check_preserves_moments([&](Vec& x, Rng& rng) {
      rwm_step(x, [&](const Vec& v) { return g.log_density(v); }, Vec::Ones(2), 1.0, rng);
    });
  }
  SUBCASE("hmc") {
    const GradFn fn = [&](const Vec& v, Vec& grad) { return g.grad(v, grad); };
    const Vec inv_metric = (Vec(2) << 1.0, 2.0).finished();
    check_preserves_moments([&](Vec& x, Rng& rng) { hmc_step(x, fn, inv_metric, 0.4, 5, rng); });
  }
}

TEST_CASE("inverse wishart scalar mean") {
  Rng rng(8);
  Mat s = Mat::Constant(1, 1, 4.0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = linalg::iw_sample(10.0, s, rng)(0, 0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean - 0.5) < 3.0 * sd / std::sqrt(n));
}

TEST_CASE("inverse wishart matrix mean and positivity") {
  Rng rng(9);
  const int n = 20000;
  Mat sum = Mat::Zero(3, 3), sq = Mat::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Mat w = linalg::iw_sample(20.0, Mat::Identity(3, 3), rng);
    CHECK_MESSAGE(w.llt().info() == Eigen::Success, "draw is not SPD");
    sum += w;
    sq += w.cwiseProduct(w);
  }
  const Mat mean = sum / n;
  const Mat sd = (sq / n - mean.cwiseProduct(mean)).cwiseSqrt();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double expect = i == j ? 1.0 / 16.0 : 0.0;
      CHECK(std::abs(mean(i, j) - expect) < 3.0 * sd(i, j) / std::sqrt(n));
    }
}

TEST_CASE("inverse wishart rejects invalid degrees of freedom") {
  Rng rng(10);
  CHECK_THROWS(linalg::iw_sample(1.5, Mat::Identity(3, 3), rng));
}

TEST_CASE("dual averaging reaches the target acceptance") {
  const Gauss2 g;
  Rng rng(11);
  Vec x = Vec::Zero(2);
  const GradFn fn = [&](const Vec& v, Vec& grad) { return g.grad(v, grad); };
  DualAveraging da(2.0, 0.8);
  double late = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double a = hmc_step(x, fn, Vec::Ones(2), da.step(), 10, rng).accept_prob;
    da.update(a);
    if (i >= 2000) late += a;
  }
  CHECK(std::abs(late / 2000 - 0.8) < 0.05);
  // The averaged step is the conservative one.
  double acc = 0.0;
  for (int i = 0; i < 4000; ++i) acc += hmc_step(x, fn, Vec::Ones(2), da.final_step(), 10, rng).accept_prob;
  CHECK(acc / 4000 > 0.75);
}

TEST_CASE("kernel config validation and resolution") {
  KernelConfig c;
  c.iterations = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.iterations = 0;
  CHECK_NOTHROW(c.validate());
  CHECK(kernel_kind_from_string("hmc") == KernelKind::hmc);
  CHECK(kernel_kind_from_string(to_string(KernelKind::automatic)) == KernelKind::automatic);
  CHECK_THROWS_AS(kernel_kind_from_string("nuts"), ConfigError);

  const ConjugateGaussianModel m({{0.1, 0.2}, {0.3}}, {});
  CHECK(resolve_kernel(KernelKind::automatic, m) == KernelKind::hmc);
  CHECK(resolve_kernel(KernelKind::rwm, m) == KernelKind::rwm);
  CHECK_THROWS(resolve_kernel(KernelKind::gibbs, m));
}

TEST_CASE("apply_kernel counts accepted moves and leaves zero iterations untouched") {
  const ConjugateGaussianModel m({{0.1, 0.2}, {0.3, -0.4}}, {});
  const TemperedTarget target(m, Tempering::none());
  KernelTuning tuning;
  tuning.sd = Vec::Constant(3, 0.5);
  tuning.inv_metric = Vec::Constant(3, 0.25);
  tuning.step_size = 0.3;
  KernelConfig cfg;
  cfg.iterations = 0;
  Rng rng(12);
  Vec x = m.initial_point();
  const Vec start = x;
  CHECK(apply_kernel(x, target, KernelKind::hmc, cfg, tuning, rng) == 0);
  CHECK(x == start);
  cfg.iterations = 3;
  const int acc = apply_kernel(x, target, KernelKind::hmc, cfg, tuning, rng);
  CHECK(acc >= 0);
  CHECK(acc <= 3);
}

TEST_CASE("jittered trajectory lengths") {
  Rng rng(13);
  long sum = 0;
  int lo = 100, hi = 0;
  for (int i = 0; i < 20000; ++i) {
    const int l = jittered_steps(10, rng);
    sum += l;
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  CHECK(lo == 1);
  CHECK(hi == 19);
  CHECK(std::abs(sum / 20000.0 - 10.0) < 0.1);
  CHECK(jittered_steps(1, rng) == 1);
}
