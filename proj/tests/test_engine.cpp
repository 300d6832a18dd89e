#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <omp.h>

#include "asmc/engine.hpp"
#include "asmc/models/conjugate.hpp"
#include "asmc/models/dns.hpp"
#include "asmc/rejuvenate.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace asmc;
using doctest::Approx;
using testing_support::TableModel;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vec> table_particles(std::size_t units, std::size_t count, std::uint64_t seed, double spread) {
  Rng rng(seed);
  std::vector<Vec> out(count, Vec(static_cast<Eigen::Index>(units)));
  for (auto& p : out)
    for (Eigen::Index j = 0; j < p.size(); ++j) p[j] = -1.0 + spread * std_normal(rng);
  return out;
}

SmcSetup setup_of(const Model& m, const std::vector<Vec>& draws, const BaselineResult* base = nullptr) {
  SmcSetup s;
  s.model = &m;
  s.particles = &draws;
  if (base) {
    s.kernel = base->kind;
    s.tuning = base->tuning;
  }
  return s;
}

EngineConfig identity_config() {
  EngineConfig c;
  c.kernel.iterations = 0;
  c.resample = false;
  c.khat_threshold = -kInf;
  return c;
}

// Weighted log mean of exp(f) under unnormalized log weights, computed directly.
double is_estimate(const std::vector<double>& log_w, const std::vector<double>& f) {
  std::vector<double> num(log_w.size());
  for (std::size_t r = 0; r < f.size(); ++r) num[r] = log_w[r] + f[r];
  return log_sum_exp(num) - log_sum_exp(log_w);
}

struct ConjugateCase {
  std::vector<std::vector<double>> y;
  ConjugateHyper hyper{1.0, 1.0, 1.0};
};

ConjugateCase conjugate_case(std::vector<std::size_t> sizes, std::uint64_t seed) {
  ConjugateCase c;
  Rng rng(seed);
  c.y = generate_conjugate(sizes, c.hyper, rng).y;
  return c;
}

BaselineResult conjugate_baseline(const Model& m, int draws, std::uint64_t seed) {
  BaselineConfig b;
  b.thin = 2;
  b.burn_in = 1000;
  b.iterations = b.burn_in + draws * b.thin;
  Rng rng(seed);
  return run_baseline_mcmc(m, Tempering::none(), b, rng);
}

}  // namespace

TEST_CASE("systematic resampling examples") {
  const std::vector<double> uniform(5, 0.2);
  for (double u : {0.0, 0.3, 0.999}) {
    auto a = resample_systematic(uniform, u);
    std::sort(a.begin(), a.end());
    CHECK(a == std::vector<std::size_t>{0, 1, 2, 3, 4});
  }
  const std::vector<double> point{0.0, 0.0, 1.0, 0.0};
  for (double u : {0.0, 0.5, 0.99}) CHECK(resample_systematic(point, u) == std::vector<std::size_t>(4, 2));
  const std::vector<double> two{0.75, 0.25, 0.0, 0.0};
  for (int i = 0; i < 100; ++i) {
    const auto a = resample_systematic(two, i / 100.0);
    CHECK(std::count(a.begin(), a.end(), 0u) == 3);
    CHECK(std::count(a.begin(), a.end(), 1u) == 1);
  }
}

TEST_CASE("systematic resampling counts are floor or ceiling of R W") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> lw(37);
    for (auto& v : lw) v = 2.0 * std_normal(rng);
    const auto w = normalize(lw);
    const auto a = resample_systematic(w.normalized, rng);
    for (std::size_t r = 0; r < lw.size(); ++r) {
      const double expect = 37.0 * w.normalized[r];
      const auto count = static_cast<double>(std::count(a.begin(), a.end(), r));
      CHECK(count >= std::floor(expect - 1e-9));
      CHECK(count <= std::ceil(expect + 1e-9));
    }
  }
}

TEST_CASE("identity kernel path telescopes to one-shot importance sampling") {
  const TableModel m({6, 4});
  const auto draws = table_particles(10, 300, 2, 1.5);
  const auto scheme = build_lgo_scheme({6, 4});
  EngineConfig cfg = identity_config();
  cfg.ess_ratio = 0.9;
  const EstimandSpec joint{EstimandKind::joint, 1};
  for (std::size_t k = 0; k < 2; ++k) {
    const FoldResult r = run_fold(setup_of(m, draws), scheme, k, joint, cfg);
    REQUIRE(r.ok);
    CHECK(r.steps() > 1);
    std::vector<double> lw(draws.size()), f(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
      f[i] = joint_predictive_log_density(m, draws[i], scheme.folds[k]);
      lw[i] = -f[i];
    }
    CHECK(r.estimate == Approx(is_estimate(lw, f)).epsilon(1e-10));
    CHECK(r.final_action == StepAction::psis_rejected);
  }
}

TEST_CASE("weights are uniform after every resampled interior step") {
  const TableModel m({8});
  const auto draws = table_particles(8, 200, 3, 2.0);
  EngineConfig cfg;
  cfg.kernel.iterations = 0;
  cfg.ess_ratio = 0.8;
  const FoldResult r = run_fold(setup_of(m, draws), build_lgo_scheme({8}), 0, EstimandSpec{}, cfg);
  REQUIRE(r.ok);
  REQUIRE(r.steps() > 1);
  for (const auto& row : r.trace) {
    if (row.action != StepAction::rejuvenate) continue;
    // The solver targets ESS = ratio * R at interior points.
    CHECK(row.ess == Approx(0.8 * 200).epsilon(0.02));
  }
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].n > r.trace[i - 1].n);
}

TEST_CASE("weak single-unit fold reduces to psis") {
  const auto c = conjugate_case({5, 5, 5}, 4);
  const ConjugateGaussianModel m(c.y, ConjugateHyper{1.0, 1.0, 8.0});
  const auto base = conjugate_baseline(m, 400, 5);
  const auto setup = setup_of(m, base.draws, &base);
  const auto scheme = build_loo_scheme(m.group_sizes());
  EngineConfig cfg;
  const EstimandSpec joint{EstimandKind::joint, 1};
  int checked = 0;
  for (std::size_t k = 0; k < scheme.folds.size(); ++k) {
    const FoldResult r = run_fold(setup, scheme, k, joint, cfg);
    REQUIRE(r.ok);
    if (r.steps() != 1 || r.final_action != StepAction::psis) continue;
    const PsisEstimate p = psis_fold(setup, scheme, k, joint, cfg);
    CHECK(r.estimate == p.estimate);
    CHECK(r.k_hat == p.k_hat);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("threshold endpoints") {
  const auto c = conjugate_case({6, 6}, 6);
  const ConjugateGaussianModel m(c.y, c.hyper);
  const auto base = conjugate_baseline(m, 300, 7);
  const auto setup = setup_of(m, base.draws, &base);
  const auto scheme = build_lgo_scheme(m.group_sizes());
  EngineConfig cfg;
  cfg.khat_threshold = kInf;
  for (std::size_t k = 0; k < 2; ++k) {
    const FoldResult r = run_fold(setup, scheme, k, EstimandSpec{}, cfg);
    REQUIRE(r.ok);
    CHECK(r.final_action == StepAction::psis);
    CHECK(r.kernel_invocations == r.steps() - 1);
  }
  cfg.khat_threshold = -kInf;
  for (std::size_t k = 0; k < 2; ++k) {
    const FoldResult r = run_fold(setup, scheme, k, EstimandSpec{}, cfg);
    REQUIRE(r.ok);
    CHECK(r.final_action == StepAction::psis_rejected);
    CHECK(r.kernel_invocations == r.steps());
  }
}

TEST_CASE("conjugate lgo folds match the closed form") {
  const auto c = conjugate_case({4, 6, 8, 5}, 8);
  const ConjugateGaussianModel m(c.y, c.hyper);
  const oracle::ConjugateOracle o{c.y, c.hyper.kappa, c.hyper.tau, c.hyper.sigma};
  const auto scheme = build_lgo_scheme(m.group_sizes());
  std::vector<double> mean(4, 0.0);
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const auto base = conjugate_baseline(m, 2000, 100 + s);
    EngineConfig cfg;
    cfg.seed = 200 + s;
    const CvResult cv = run_cv(setup_of(m, base.draws, &base), scheme, EstimandSpec{}, cfg);
    REQUIRE(cv.failed == 0);
    for (int g = 0; g < 4; ++g) mean[g] += cv.folds[g].estimate / seeds;
  }
  for (int g = 0; g < 4; ++g) {
    CAPTURE(g);
    CHECK(std::abs(mean[g] - o.lgo(g + 1)) < 0.1);
  }
}

TEST_CASE("fold results do not depend on the thread count") {
  const auto c = conjugate_case({5, 7, 3, 6}, 9);
  const ConjugateGaussianModel m(c.y, c.hyper);
  const auto base = conjugate_baseline(m, 300, 10);
  const auto setup = setup_of(m, base.draws, &base);
  const auto scheme = build_lgo_scheme(m.group_sizes());
  EngineConfig cfg;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const CvResult one = run_cv(setup, scheme, EstimandSpec{}, cfg);
  omp_set_num_threads(4);
  const CvResult four = run_cv(setup, scheme, EstimandSpec{}, cfg);
  omp_set_num_threads(saved);
  REQUIRE(one.folds.size() == four.folds.size());
  CHECK(one.aggregate == four.aggregate);
  for (std::size_t k = 0; k < one.folds.size(); ++k) {
    CHECK(one.folds[k].estimate == four.folds[k].estimate);
    REQUIRE(one.folds[k].trace.size() == four.folds[k].trace.size());
    for (std::size_t i = 0; i < one.folds[k].trace.size(); ++i) CHECK(one.folds[k].trace[i].n == four.folds[k].trace[i].n);
  }

  // A single fold with particle-level parallelism matches the serial run.
  EngineConfig serial = cfg;
  serial.parallel = false;
  const FoldResult a = run_fold(setup, scheme, 2, EstimandSpec{}, cfg);
  const FoldResult b = run_fold(setup, scheme, 2, EstimandSpec{}, serial);
  CHECK(a.estimate == b.estimate);
}

TEST_CASE("parallel and serial rejuvenation agree") {
  const auto c = conjugate_case({4, 4}, 11);
  const ConjugateGaussianModel m(c.y, c.hyper);
  const auto base = conjugate_baseline(m, 200, 12);
  const DeletionPath path(build_lgo_scheme(m.group_sizes()).folds[0], PathKind::tempering);
  const TemperedTarget target(m, path.tempering_at(1.5));
  KernelConfig kc;
  for (KernelKind kind : {KernelKind::hmc, KernelKind::rwm}) {
    auto p = base.draws, s = base.draws;
    const long ap = rejuvenate_parallel(p, target, kind, kc, base.tuning, 77, 3);
    const long as = rejuvenate_serial(s, target, kind, kc, base.tuning, 77, 3);
    CHECK(ap == as);
    for (std::size_t r = 0; r < p.size(); ++r) CHECK(p[r] == s[r]);
  }
  CHECK(block_log_lik_parallel(path, m, base.draws) == block_log_lik_serial(path, m, base.draws));
}

TEST_CASE("aggregate is the sum of fold estimates") {
  const TableModel m({3, 4, 2});
  const auto draws = table_particles(9, 100, 13, 0.3);
  const auto scheme = build_lgo_scheme({3, 4, 2});
  const CvResult cv = run_cv(setup_of(m, draws), scheme, EstimandSpec{}, identity_config());
  double sum = 0.0;
  for (const auto& f : cv.folds) sum += f.estimate;
  CHECK(cv.aggregate == sum);

  const auto single = build_lgo_scheme({9});
  const TableModel one({9});
  const CvResult k1 = run_cv(setup_of(one, draws), single, EstimandSpec{}, identity_config());
  REQUIRE(k1.folds.size() == 1);
  CHECK(k1.aggregate == k1.folds[0].estimate);
}

TEST_CASE("pointwise estimand sums per-unit terms") {
  const TableModel m({3});
  const auto draws = table_particles(3, 100, 14, 0.5);
  const auto scheme = build_lgo_scheme({3});
  const EstimandSpec pw{EstimandKind::pointwise, 1};
  const auto rows = estimand_log_f(m, scheme, 0, 0, pw, draws, 1, false);
  CHECK(rows.size() == 3);
  const std::vector<double> w(100, 0.01);
  double expect = 0.0;
  for (const auto& row : rows) expect += weighted_log_estimand(w, row);
  CHECK(combine_estimand(w, rows) == Approx(expect).epsilon(1e-14));
}

TEST_CASE("failed folds are reported without stopping the others") {
  const TableModel m({2, 2});
  auto draws = table_particles(4, 60, 15, 0.5);
  draws[7][2] = std::numeric_limits<double>::quiet_NaN();  // unit (2, 1)
  const CvResult cv = run_cv(setup_of(m, draws), build_lgo_scheme({2, 2}), EstimandSpec{}, identity_config());
  CHECK(cv.failed == 1);
  CHECK(cv.folds[0].ok);
  CHECK_FALSE(cv.folds[1].ok);
  CHECK(cv.folds[1].error.find("(2,1)") != std::string::npos);
  CHECK(cv.aggregate == cv.folds[0].estimate);
}

TEST_CASE("leo checkpoints on a three-step toy") {
  const TableModel m({3});
  const auto draws = table_particles(3, 400, 16, 0.7);
  const auto scheme = build_leo_schedule({3}, 1, 3, 0);
  const EstimandSpec one{EstimandKind::multistep_leo, 1};
  const FoldResult r = run_fold(setup_of(m, draws), scheme, 0, one, identity_config());
  REQUIRE(r.ok);
  REQUIRE(r.checkpoints.size() == 3);
  const std::vector<int> info{2, 1, 0};
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto& ce = r.checkpoints[c];
    CHECK(ce.checkpoint == c + 1);
    CHECK(ce.info_time == info[c]);
    // Importance sampling with y_{t+1..3} removed, predicting y_{t+1}.
    const int t = info[c];
    std::vector<double> lw(draws.size(), 0.0), f(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
      for (int s = t + 1; s <= 3; ++s) lw[i] -= draws[i][s - 1];
      f[i] = draws[i][t];
    }
    CHECK(ce.estimate == Approx(is_estimate(lw, f)).epsilon(1e-10));
    sum += ce.estimate;
  }
  CHECK(r.estimate == Approx(sum).epsilon(1e-14));
  int checkpoint_rows = 0;
  for (const auto& row : r.trace) checkpoint_rows += row.checkpoint;
  CHECK(checkpoint_rows == 3);

  const auto avg = running_average(r.checkpoints);
  for (std::size_t j = 0; j < avg.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i <= j; ++i) s += r.checkpoints[i].estimate;
    CHECK(avg[j] == Approx(s / static_cast<double>(j + 1)).epsilon(1e-14));
  }
}

TEST_CASE("leo requires the ordered path") {
  const TableModel m({3});
  const auto draws = table_particles(3, 50, 17, 0.2);
  EngineConfig cfg = identity_config();
  cfg.path = PathKind::tempering;
  const FoldResult r =
      run_fold(setup_of(m, draws), build_leo_schedule({3}, 1, 3, 0), 0, EstimandSpec{EstimandKind::multistep_leo, 1}, cfg);
  CHECK_FALSE(r.ok);
}

TEST_CASE("multi-step leo on the yield-curve model") {
  Rng rng(18);
  DnsShape shape;
  shape.horizon = 10;
  const auto syn = generate_dns(shape, rng);
  const DnsModel m(syn.data, DnsPriors::standard(5));
  BaselineConfig b;
  b.burn_in = 100;
  b.thin = 2;
  b.iterations = b.burn_in + 200 * b.thin;
  const auto base = run_baseline_mcmc(m, Tempering::none(), b, rng);
  const auto scheme = build_leo_schedule({10}, 1, 10, 7);
  REQUIRE(scheme.checkpoints == std::vector<int>{1, 2, 3});
  EngineConfig cfg;
  cfg.kernel.iterations = 2;
  const FoldResult r = run_fold(setup_of(m, base.draws, &base), scheme, 0, EstimandSpec{EstimandKind::multistep_leo, 2}, cfg);
  REQUIRE(r.ok);
  REQUIRE(r.checkpoints.size() == 3);
  CHECK(std::isnan(r.checkpoints[0].estimate));
  CHECK(std::isfinite(r.checkpoints[1].estimate));
  CHECK(std::isfinite(r.checkpoints[2].estimate));
  CHECK(r.estimate == Approx(r.checkpoints[1].estimate + r.checkpoints[2].estimate).epsilon(1e-14));
  const auto avg = running_average(r.checkpoints);
  CHECK(std::isnan(avg[0]));
  CHECK(avg[2] == Approx(r.estimate / 2.0).epsilon(1e-14));
}

TEST_CASE("engine config validation") {
  EngineConfig c;
  c.ess_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.ess_ratio = 0.5;
  c.khat_threshold = std::nan("");
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
