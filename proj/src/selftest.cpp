#include "asmc/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "asmc/config.hpp"
#include "asmc/dns_gibbs.hpp"
#include "asmc/engine.hpp"
#include "asmc/models/conjugate.hpp"
#include "asmc/models/dns.hpp"
#include "asmc/rejuvenate.hpp"
#include "asmc/weights.hpp"

namespace asmc {

namespace {

std::string fmt(double v) { return format_double(v); }

SelftestCheck check(const std::string& name, const std::function<std::string()>& body) {
  SelftestCheck c{name, true, ""};
  try {
    c.detail = body();
    c.ok = c.detail.empty();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("threw: ") + e.what();
  }
  return c;
}

struct Toy {
  ConjugateGaussianModel model;
  std::vector<Vec> particles;
  KernelTuning tuning;
};

Toy conjugate_toy() {
  Rng rng = make_rng(7, stream::data);
  const ConjugateHyper hyper{1.0, 1.0, 1.0};
  auto data = generate_conjugate(std::vector<std::size_t>(4, 6), hyper, rng);
  ConjugateGaussianModel model(data.y, hyper);
  BaselineConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 200;
  cfg.thin = 4;
  Rng brng = make_rng(7, stream::baseline);
  BaselineResult b = run_baseline_mcmc(model, Tempering::none(), cfg, brng);
  return {std::move(model), std::move(b.draws), b.tuning};
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
  std::vector<SelftestCheck> out;

  out.push_back(check("log_sum_exp shift invariance", [] {
    const std::vector<double> a{-3.0, 0.5, 2.0, 700.0};
    std::vector<double> b = a;
    for (double& v : b) v += 123.25;
    const double d = log_sum_exp(b) - log_sum_exp(a) - 123.25;
    return std::abs(d) < 1e-9 ? "" : "difference " + fmt(d);
  }));

  out.push_back(check("ess bounds", [] {
    const auto w = normalize(std::vector<double>{0.0, -1.0, -2.0, -50.0, 3.0});
    const double e = ess(w);
    return e >= 1.0 && e <= 5.0 ? "" : "ess " + fmt(e);
  }));

  out.push_back(check("systematic resampling counts", [] {
    const std::vector<double> w{0.75, 0.25, 0.0, 0.0};
    for (double u : {0.0, 0.3, 0.999}) {
      const auto a = resample_systematic(w, u);
      int c0 = 0;
      for (auto i : a) c0 += i == 0;
      if (c0 != 3) return "offset " + fmt(u) + " gave " + std::to_string(c0) + " copies of index 0";
    }
    return std::string();
  }));

  out.push_back(check("telescoping increments", [] {
    Toy toy = conjugate_toy();
    const DeletionScheme scheme = build_lgo_scheme(toy.model.group_sizes());
    const DeletionPath path(scheme.folds[0], PathKind::tempering);
    const Vec& theta = toy.particles[0];
    double sum = 0.0;
    const std::vector<double> grid{0.0, 0.7, 2.5, 4.1, 6.0};
    for (std::size_t i = 1; i < grid.size(); ++i)
      sum += log_incremental_weight(toy.model, theta, path, grid[i - 1], grid[i]);
    const double one_shot = -joint_predictive_log_density(toy.model, theta, scheme.folds[0]);
    return std::abs(sum - one_shot) < 1e-12 ? "" : "gap " + fmt(sum - one_shot);
  }));

  out.push_back(check("one-jump fold equals psis", [] {
    Toy toy = conjugate_toy();
    const DeletionScheme scheme = build_loo_scheme(toy.model.group_sizes());
    const SmcSetup setup{&toy.model, &toy.particles, KernelKind::hmc, toy.tuning};
    EngineConfig cfg;
    cfg.khat_threshold = std::numeric_limits<double>::infinity();
    cfg.ess_ratio = 0.05;
    cfg.seed = 3;
    const EstimandSpec est{};
    const FoldResult f = run_fold(setup, scheme, 0, est, cfg);
    if (!f.ok) return f.error;
    if (f.steps() != 1) return std::string("fold took ") + std::to_string(f.steps()) + " steps";
    const PsisEstimate p = psis_fold(setup, scheme, 0, est, cfg);
    return f.estimate == p.estimate ? "" : "asmc " + fmt(f.estimate) + " vs psis " + fmt(p.estimate);
  }));

  out.push_back(check("dns sweep rho=1 matches full sweep", [] {
    DnsShape shape;
    shape.horizon = 8;
    Rng drng = make_rng(11, stream::data);
    const DnsSynthetic syn = generate_dns(shape, drng);
    const DnsPriors priors = DnsPriors::standard(syn.data.series_dim());
    DnsState a = syn.truth, b = syn.truth;
    Rng r1(99), r2(99);
    dns_gibbs_sweep(a, syn.data, priors, 1.0, r1);
    dns_gibbs_sweep_full(b, syn.data, priors, r2);
    const bool same = a.beta == b.beta && a.sigma_y == b.sigma_y && a.sigma_beta == b.sigma_beta;
    return same ? "" : "states differ";
  }));

  out.push_back(check("config round trip", [] {
    const RunConfig c = parse_config_text(
        "seed = 5\nkhat_threshold = \"inf\"\n[model]\nkind = \"radon\"\n[scheme]\nkind = \"lgo\"\n");
    return parse_config_text(to_toml(c)) == c ? "" : "echo does not parse back to the same config";
  }));

  return out;
}

}  // namespace asmc
