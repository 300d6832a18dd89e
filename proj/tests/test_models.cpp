#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "asmc/linalg.hpp"
#include "asmc/models/conjugate.hpp"
#include "asmc/models/dns.hpp"
#include "asmc/models/multilevel_normal.hpp"
#include "asmc/models/spatial_mvn.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace asmc;
using doctest::Approx;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Tempering random_tempering(const Model& m, Rng& rng) {
  Tempering t;
  const auto& sizes = m.group_sizes();
  for (std::size_t g = 0; g < sizes.size(); ++g)
    for (std::size_t i = 1; i <= sizes[g]; ++i) {
      t.units.push_back({static_cast<int>(g) + 1, static_cast<int>(i)});
      t.exponents.push_back(uniform01(rng));
    }
  return t;
}

Vec jitter(const Vec& base, double sd, Rng& rng) {
  Vec v = base;
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] += sd * std_normal(rng);
  return v;
}

std::vector<std::unique_ptr<Model>> small_models() {
  std::vector<std::unique_ptr<Model>> out;
  Rng rng(77);
  out.push_back(std::make_unique<ConjugateGaussianModel>(
      generate_conjugate({4, 2, 3}, ConjugateHyper{1.0, 0.7, 0.5}, rng).y, ConjugateHyper{1.0, 0.7, 0.5}));
  MultilevelShape ms;
  ms.groups = 4;
  ms.max_size = 6;
  out.push_back(std::make_unique<MultilevelNormalModel>(generate_multilevel(ms, rng).data));
  DnsShape ds;
  ds.horizon = 6;
  ds.maturities = {2, 10, 30};
  const auto dns = generate_dns(ds, rng);
  out.push_back(std::make_unique<DnsModel>(dns.data, DnsPriors::standard(3)));
  SpatialShape ss;
  ss.stores = 3;
  ss.departments = 2;
  ss.items_per_department = 4;
  out.push_back(std::make_unique<SpatialMvnModel>(generate_spatial(ss, rng).items));
  return out;
}

}  // namespace

TEST_CASE("conjugate unit log-likelihood at the mode") {
  const ConjugateGaussianModel m({{0.0}}, ConjugateHyper{1.0, 1.0, 1.0});
  Vec theta = Vec::Zero(2);
  CHECK(m.unit_log_lik(theta, {1, 1}) == Approx(-0.5 * kLog2Pi).epsilon(1e-15));
}

TEST_CASE("spatial unit log-likelihood with identity covariance") {
  const int s = 4;
  const SpatialMvnModel m({{Vec::Zero(s)}});
  const Vec theta = Vec::Zero(static_cast<Eigen::Index>(m.dimension()));
  CHECK(m.unit_log_lik(theta, {1, 1}) == Approx(-0.5 * s * kLog2Pi).epsilon(1e-14));
}

TEST_CASE("multilevel unit log-likelihood matches a normal density") {
  Rng rng(3);
  MultilevelShape shape;
  shape.groups = 6;
  shape.max_size = 8;
  const auto syn = generate_multilevel(shape, rng);
  const MultilevelNormalModel m(syn.data);
  const auto groups = static_cast<int>(m.group_sizes().size());
  for (int trial = 0; trial < 5; ++trial) {
    const Vec theta = jitter(m.initial_point(), 0.5, rng);
    const double sigma = std::exp(theta[2 * groups + 7]);
    for (int g = 1; g <= groups; ++g)
      for (int i = 1; i <= static_cast<int>(m.group_sizes()[g - 1]); ++i) {
        const std::size_t r = m.row({g, i});
        // beta_g = Gamma (1, u_g) + L z_g, L lower with log diagonal.
        const std::size_t gb = 2 * static_cast<std::size_t>(groups);
        const double u = syn.data.u[g - 1];
        const double z0 = theta[2 * (g - 1)], z1 = theta[2 * (g - 1) + 1];
        const double b0 = theta[gb] + theta[gb + 1] * u + std::exp(theta[gb + 4]) * z0;
        const double b1 = theta[gb + 2] + theta[gb + 3] * u + theta[gb + 5] * z0 + std::exp(theta[gb + 6]) * z1;
        const double mean = b0 + b1 * syn.data.x[r];
        Vec y(1), mu(1);
        y << syn.data.y[r];
        mu << mean;
        const double expect = oracle::mvn_log_density(y, mu, Mat::Constant(1, 1, sigma * sigma));
        CHECK(m.unit_log_lik(theta, {g, i}) == Approx(expect).epsilon(1e-12));
      }
  }
}

TEST_CASE("spatial unit log-likelihood matches a dense mvn density") {
  Rng rng(4);
  SpatialShape shape;
  shape.stores = 4;
  shape.departments = 3;
  shape.items_per_department = 3;
  const auto syn = generate_spatial(shape, rng);
  const SpatialMvnModel m(syn.items);
  const auto& blk = m.layout().block("sigma_chol");
  const Vec theta = jitter(m.initial_point(), 0.3, rng);
  // Rebuild Sigma from the log-Cholesky coordinates: row-major lower triangle
  // with log-diagonal entries.
  Mat l = Mat::Zero(4, 4);
  std::size_t p = blk.offset;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = i == j ? std::exp(theta[static_cast<Eigen::Index>(p++)]) : theta[static_cast<Eigen::Index>(p++)];
  const Mat sigma = l * l.transpose();
  const Vec mu = theta.head(4);
  for (int g = 1; g <= 3; ++g)
    for (int i = 1; i <= 3; ++i) {
      const Vec mean = mu + Vec::Constant(4, theta[4 + g - 1]);
      CHECK(m.unit_log_lik(theta, {g, i}) ==
            Approx(oracle::mvn_log_density(syn.items[g - 1][i - 1], mean, sigma)).epsilon(1e-12));
    }
}

TEST_CASE("joint predictive of a fold sums unit log-likelihoods") {
  const ConjugateGaussianModel m({{0.0, 0.0}}, ConjugateHyper{1.0, 1.0, 1.0});
  const Vec theta = Vec::Zero(2);
  Fold single{{{1, 1}}, {1}};
  CHECK(joint_predictive_log_density(m, theta, single) == m.unit_log_lik(theta, {1, 1}));
  Fold both{{{1, 1}, {1, 2}}, {1, 1}};
  CHECK(joint_predictive_log_density(m, theta, both) == Approx(-kLog2Pi).epsilon(1e-14));
}

TEST_CASE("untempered target equals prior plus every unit") {
  Rng rng(5);
  for (const auto& m : small_models()) {
    CAPTURE(m->name());
    for (int trial = 0; trial < 3; ++trial) {
      const Vec theta = jitter(m->initial_point(), 0.1, rng);
      double expect = m->log_prior(theta);
      const auto& sizes = m->group_sizes();
      for (std::size_t g = 0; g < sizes.size(); ++g)
        for (std::size_t i = 1; i <= sizes[g]; ++i)
          expect += m->unit_log_lik(theta, {static_cast<int>(g) + 1, static_cast<int>(i)});
      CHECK(m->log_target(theta, Tempering::none()) == Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("tempered target is linear in the exponents") {
  Rng rng(6);
  for (const auto& m : small_models()) {
    CAPTURE(m->name());
    const Vec theta = jitter(m->initial_point(), 0.1, rng);
    const Tempering t = random_tempering(*m, rng);
    double expect = m->log_prior(theta);
    for (std::size_t j = 0; j < t.units.size(); ++j) expect += t.exponents[j] * m->unit_log_lik(theta, t.units[j]);
    CHECK(m->log_target(theta, t) == Approx(expect).epsilon(1e-11));
  }
}

TEST_CASE("model gradients match finite differences") {
  Rng rng(7);
  for (const auto& m : small_models()) {
    CAPTURE(m->name());
    for (int trial = 0; trial < 10; ++trial) {
      const Vec theta = jitter(m->initial_point(), 0.2, rng);
      const Tempering t = random_tempering(*m, rng);
      Vec grad;
      const double value = m->log_target_grad(theta, t, grad);
      CHECK(value == Approx(m->log_target(theta, t)).epsilon(1e-12));
      const Vec fd = finite_difference_gradient(*m, theta, t);
      REQUIRE(grad.size() == fd.size());
      for (Eigen::Index j = 0; j < grad.size(); ++j) {
        CAPTURE(j);
        CHECK(std::abs(grad[j] - fd[j]) <= 1e-5 * std::max(1.0, std::abs(fd[j])));
      }
    }
  }
}

TEST_CASE("nelson-siegel loadings") {
  const Mat far = nelson_siegel_loadings({1e6});
  CHECK(std::abs(far(0, 0) - 1.0) < 1e-3);
  CHECK(std::abs(far(0, 1)) < 1e-3);
  CHECK(std::abs(far(0, 2)) < 1e-3);

  const Mat x = nelson_siegel_loadings({2.0, 30.0});
  for (int r = 0; r < 2; ++r) {
    const double tau = r == 0 ? 2.0 : 30.0, lt = kDnsDecay * tau;
    const double slope = (1.0 - std::exp(-lt)) / lt;
    CHECK(x(r, 0) == 1.0);
    CHECK(x(r, 1) == Approx(slope).epsilon(1e-14));
    CHECK(x(r, 2) == Approx(slope - std::exp(-lt)).epsilon(1e-14));
  }
}

TEST_CASE("dns pack and unpack round trip") {
  Rng rng(8);
  DnsShape shape;
  shape.horizon = 4;
  const auto syn = generate_dns(shape, rng);
  const DnsModel m(syn.data, DnsPriors::standard(5));
  const DnsState s = m.unpack(m.pack(syn.truth));
  CHECK((s.beta - syn.truth.beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.sigma_y - syn.truth.sigma_y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.sigma_beta - syn.truth.sigma_beta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dns unit log-likelihood is the observation density") {
  Rng rng(9);
  DnsShape shape;
  shape.horizon = 3;
  const auto syn = generate_dns(shape, rng);
  const DnsModel m(syn.data, DnsPriors::standard(5));
  const Vec theta = m.pack(syn.truth);
  for (int t = 1; t <= 3; ++t) {
    const Vec mean = syn.data.design * syn.truth.beta.col(t);
    CHECK(m.unit_log_lik(theta, {1, t}) ==
          Approx(oracle::mvn_log_density(syn.data.y[t - 1], mean, syn.truth.sigma_y)).epsilon(1e-12));
  }
}

TEST_CASE("dns exponents follow the tempering") {
  Rng rng(10);
  DnsShape shape;
  shape.horizon = 4;
  const DnsModel m(generate_dns(shape, rng).data, DnsPriors::standard(5));
  Tempering t;
  t.units = {{1, 4}, {1, 2}};
  t.exponents = {0.25, 0.0};
  CHECK(m.exponents(t) == std::vector<double>{1.0, 0.0, 1.0, 0.25});
}

TEST_CASE("synthetic shapes") {
  Rng rng(11);
  MultilevelShape ms;
  const auto radon = generate_multilevel(ms, rng);
  const MultilevelNormalModel rm(radon.data);
  CHECK(rm.group_sizes().size() == static_cast<std::size_t>(ms.groups));
  std::size_t biggest = 0;
  for (auto n : rm.group_sizes()) {
    CHECK(n >= 1);
    biggest = std::max(biggest, n);
  }
  CHECK(biggest == static_cast<std::size_t>(ms.max_size));
  for (int x : radon.data.x) CHECK((x == 0 || x == 1));

  const auto dns = generate_dns(DnsShape{}, rng);
  CHECK(dns.data.horizon() == 60);
  CHECK(dns.data.series_dim() == 5);

  const auto m5 = generate_spatial(SpatialShape{}, rng);
  CHECK(m5.items.size() == 5);
  for (const auto& d : m5.items) {
    CHECK(d.size() == 12);
    CHECK(d[0].size() == 6);
  }
}

TEST_CASE("invalid covariance coordinates give minus infinity, not NaN") {
  const SpatialMvnModel m({{Vec::Zero(2)}});
  Vec theta = Vec::Zero(static_cast<Eigen::Index>(m.dimension()));
  const auto& blk = m.layout().block("sigma_chol");
  theta[static_cast<Eigen::Index>(blk.offset)] = -800.0;  // diagonal underflows to zero
  const double v = m.unit_log_lik(theta, {1, 1});
  CHECK_FALSE(std::isnan(v));
}

TEST_CASE("multilevel group effects integrate to a dense mvn") {
  Rng rng(21);
  MultilevelShape shape;
  shape.groups = 4;
  shape.max_size = 6;
  const auto syn = generate_multilevel(shape, rng);
  const MultilevelNormalModel m(syn.data);
  const std::size_t gb = 8;
  const Vec theta = jitter(m.initial_point(), 0.4, rng);
  const Mat l = linalg::lower_from_log_cholesky(std::span<const double>(theta.data() + gb + 4, 3), 2);
  const double s2 = std::exp(2.0 * theta[gb + 7]);
  for (int g = 1; g <= 4; ++g) {
    const auto n = static_cast<Eigen::Index>(m.group_sizes()[g - 1]);
    Fold fold;
    Mat x(n, 2);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      fold.units.push_back({g, static_cast<int>(i) + 1});
      const std::size_t r = m.row({g, static_cast<int>(i) + 1});
      x(i, 0) = 1.0;
      x(i, 1) = syn.data.x[r];
      y[i] = syn.data.y[r];
    }
    const double u = syn.data.u[g - 1];
    const Vec mean = (Vec(2) << theta[gb] + theta[gb + 1] * u, theta[gb + 2] + theta[gb + 3] * u).finished();
    const Mat cov = x * l * l.transpose() * x.transpose() + s2 * Mat::Identity(n, n);
    const auto got = m.integrated_fold_log_lik(theta, fold);
    REQUIRE(got.has_value());
    CHECK(*got == Approx(oracle::mvn_log_density(y, x * mean, cov)).epsilon(1e-10));

    if (g == 1) {
      // Monte Carlo over z_g ~ N(0, I) agrees with the closed form.
      std::vector<double> lf;
      Vec t = theta;
      for (int s = 0; s < 200000; ++s) {
        t[2 * (g - 1)] = std_normal(rng);
        t[2 * (g - 1) + 1] = std_normal(rng);
        lf.push_back(joint_predictive_log_density(m, t, fold));
      }
      const double mx = *std::max_element(lf.begin(), lf.end());
      double acc = 0.0;
      for (double v : lf) acc += std::exp(v - mx);
      CHECK(mx + std::log(acc / static_cast<double>(lf.size())) == Approx(*got).epsilon(2e-3));
    }
    if (n > 1) {
      fold.units.pop_back();
      CHECK_FALSE(m.integrated_fold_log_lik(theta, fold).has_value());
    }
  }
  const SpatialMvnModel other({{Vec::Zero(2)}});
  CHECK_FALSE(other.integrated_fold_log_lik(Vec::Zero(static_cast<Eigen::Index>(other.dimension())),
                                            Fold{{{1, 1}}, {}})
                  .has_value());
}
