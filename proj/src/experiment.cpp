#include "asmc/experiment.hpp"

#include <chrono>
#include <fstream>

#include "asmc/csv.hpp"
#include "asmc/models/conjugate.hpp"
#include "asmc/models/dns.hpp"
#include "asmc/models/multilevel_normal.hpp"
#include "asmc/models/spatial_mvn.hpp"

namespace asmc {

namespace {

double shape_value(const RunConfig& c, const std::string& key, double fallback) {
  const auto it = c.shape.find(key);
  return it == c.shape.end() ? fallback : it->second;
}

int shape_int(const RunConfig& c, const std::string& key, int fallback) {
  const double v = shape_value(c, key, fallback);
  if (v < 1.0 || v != static_cast<int>(v)) throw ConfigError("synthetic." + key + " must be a positive integer");
  return static_cast<int>(v);
}

Rng data_rng(const RunConfig& c) {
  const double s = shape_value(c, "seed", static_cast<double>(c.seed));
  return make_rng(static_cast<std::uint64_t>(s), stream::data);
}

ConjugateHyper conjugate_hyper(const RunConfig& c) { return {c.kappa, c.tau, c.sigma}; }

std::vector<std::vector<double>> synth_conjugate(const RunConfig& c) {
  const auto g = static_cast<std::size_t>(shape_int(c, "groups", 10));
  const auto n = static_cast<std::size_t>(shape_int(c, "size", 20));
  Rng rng = data_rng(c);
  return generate_conjugate(std::vector<std::size_t>(g, n), conjugate_hyper(c), rng).y;
}

MultilevelData synth_radon(const RunConfig& c) {
  MultilevelShape s;
  s.groups = shape_int(c, "groups", s.groups);
  s.max_size = shape_int(c, "max_size", s.max_size);
  s.treated_share = shape_value(c, "treated_share", s.treated_share);
  s.sigma = shape_value(c, "sigma", s.sigma);
  s.group_sd = shape_value(c, "group_sd", s.group_sd);
  Rng rng = data_rng(c);
  return generate_multilevel(s, rng).data;
}

DnsSynthetic synth_dns(const RunConfig& c) {
  DnsShape s;
  s.horizon = shape_int(c, "horizon", s.horizon);
  s.state_sd = shape_value(c, "state_sd", s.state_sd);
  s.noise_sd = shape_value(c, "noise_sd", s.noise_sd);
  if (!c.maturities.empty()) s.maturities = c.maturities;
  Rng rng = data_rng(c);
  return generate_dns(s, rng);
}

std::vector<std::vector<Vec>> synth_m5(const RunConfig& c) {
  SpatialShape s;
  s.stores = shape_int(c, "stores", s.stores);
  s.departments = shape_int(c, "departments", s.departments);
  s.items_per_department = shape_int(c, "items", s.items_per_department);
  s.correlation = shape_value(c, "correlation", s.correlation);
  s.noise_sd = shape_value(c, "noise_sd", s.noise_sd);
  Rng rng = data_rng(c);
  return generate_spatial(s, rng).items;
}

std::unique_ptr<Model> make_dns(const std::vector<double>& maturities, std::vector<Vec> y) {
  DnsData d;
  d.y = std::move(y);
  d.design = nelson_siegel_loadings(maturities);
  const auto k = d.series_dim();
  return std::make_unique<DnsModel>(std::move(d), DnsPriors::standard(k));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

LoadedModel load_model(const RunConfig& c) {
  LoadedModel out;
  out.source = c.data.empty() ? "synthetic" : c.data;
  if (!c.data.empty()) {
    const CsvTable table = read_csv_file(c.data);
    switch (c.model) {
      case ModelKind::conjugate:
        out.model = std::make_unique<ConjugateGaussianModel>(conjugate_from_csv(table), conjugate_hyper(c));
        break;
      case ModelKind::radon:
        out.model = std::make_unique<MultilevelNormalModel>(radon_from_csv(table));
        break;
      case ModelKind::dns: {
        DnsCsv d = dns_from_csv(table);
        out.model = make_dns(d.maturities, std::move(d.y));
        break;
      }
      case ModelKind::m5:
        out.model = std::make_unique<SpatialMvnModel>(m5_from_csv(table));
        break;
    }
    return out;
  }
  switch (c.model) {
    case ModelKind::conjugate:
      out.model = std::make_unique<ConjugateGaussianModel>(synth_conjugate(c), conjugate_hyper(c));
      break;
    case ModelKind::radon:
      out.model = std::make_unique<MultilevelNormalModel>(synth_radon(c));
      break;
    case ModelKind::dns: {
      DnsSynthetic s = synth_dns(c);
      out.model = make_dns(s.maturities, std::move(s.data.y));
      break;
    }
    case ModelKind::m5:
      out.model = std::make_unique<SpatialMvnModel>(synth_m5(c));
      break;
  }
  return out;
}

void write_synthetic_csv(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  switch (c.model) {
    case ModelKind::conjugate: write_conjugate_csv(out, synth_conjugate(c)); break;
    case ModelKind::radon: write_radon_csv(out, synth_radon(c)); break;
    case ModelKind::dns: {
      const DnsSynthetic s = synth_dns(c);
      write_dns_csv(out, s.maturities, s.data.y);
      break;
    }
    case ModelKind::m5: write_m5_csv(out, synth_m5(c)); break;
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

DeletionScheme build_scheme(const RunConfig& c, const Model& model) {
  const auto& sizes = model.group_sizes();
  DeletionScheme s;
  switch (c.scheme) {
    case SchemeKind::loo: s = build_loo_scheme(sizes); break;
    case SchemeKind::lgo: s = build_lgo_scheme(sizes); break;
    case SchemeKind::lso: s = build_group_kfold_scheme(sizes, c.folds, derive_seed(c.seed, stream::scheme)); break;
    case SchemeKind::leo_within:
    case SchemeKind::leo_across: {
      const int group = c.scheme == SchemeKind::leo_across ? 0 : c.group;
      if (group > static_cast<int>(sizes.size()))
        throw ConfigError("scheme.group " + std::to_string(group) + " exceeds the group count");
      const int length = static_cast<int>(sizes[static_cast<std::size_t>(std::max(group, 1) - 1)]);
      s = build_leo_schedule(sizes, group, length, c.t_min);
      break;
    }
  }
  s.validate(sizes);
  return s;
}

EstimandSpec estimand_of(const RunConfig& c) { return EstimandSpec{c.estimand, c.horizon}; }

int resolve_kernel_iterations(const RunConfig& c, KernelKind kind) {
  if (c.kernel_iterations) return *c.kernel_iterations;
  return kind == KernelKind::gibbs ? 5 : 3;
}

EngineConfig engine_config(const RunConfig& c, KernelKind kind) {
  EngineConfig e;
  e.ess_ratio = c.ess_ratio;
  e.khat_threshold = c.khat_threshold;
  e.tolerance = c.tolerance;
  e.path = c.path;
  e.kernel = c.kernel;
  e.kernel.kind = kind;
  e.kernel.iterations = resolve_kernel_iterations(c, kind);
  e.seed = c.seed;
  return e;
}

ExperimentResult run_experiment(const RunConfig& c) {
  c.validate();
  const auto t_start = std::chrono::steady_clock::now();
  ExperimentResult out;
  out.config = c;
  LoadedModel loaded = load_model(c);
  const Model& model = *loaded.model;
  out.model_name = std::string(model.name());
  out.source = loaded.source;
  out.group_sizes = model.group_sizes();
  out.dimension = model.dimension();
  out.scheme = build_scheme(c, model);
  const EstimandSpec estimand = estimand_of(c);
  estimand.validate(out.scheme.kind);

  const bool want_asmc = c.estimator == EstimatorKind::asmc || c.estimator == EstimatorKind::all;
  const bool want_psis = c.estimator == EstimatorKind::psis || c.estimator == EstimatorKind::all;
  const bool want_refit = c.estimator == EstimatorKind::mcmc_refit || c.estimator == EstimatorKind::all;
  const std::size_t k = out.scheme.folds.size();

  out.kernel = resolve_kernel(c.kernel.kind, model);
  out.kernel_iterations = resolve_kernel_iterations(c, out.kernel);
  const EngineConfig engine = engine_config(c, out.kernel);

  if (want_asmc || want_psis) {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(c.seed, stream::baseline);
    out.baseline = run_baseline_mcmc(model, Tempering::none(), c.baseline, rng);
    if (static_cast<int>(out.baseline.draws.size()) != c.particles)
      throw ConfigError("baseline produced " + std::to_string(out.baseline.draws.size()) + " draws, expected " +
                        std::to_string(c.particles));
    out.timings.baseline = seconds_since(t0);

    const SmcSetup setup{&model, &out.baseline.draws, out.kernel, out.baseline.tuning};
    if (want_asmc) {
      t0 = std::chrono::steady_clock::now();
      out.asmc = run_cv(setup, out.scheme, estimand, engine);
      out.timings.asmc = seconds_since(t0);
    }
    if (want_psis) {
      t0 = std::chrono::steady_clock::now();
      std::vector<PsisEstimate> psis(k);
      for (std::size_t f = 0; f < k; ++f) psis[f] = psis_fold(setup, out.scheme, f, estimand, engine);
      out.psis = std::move(psis);
      out.timings.psis = seconds_since(t0);
    }
  }

  if (want_refit) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RefitEstimate> refit(k);
    const auto nk = static_cast<long>(k);
    if (nk > 1) {
#pragma omp parallel for schedule(dynamic)
      for (long f = 0; f < nk; ++f)
        refit[static_cast<std::size_t>(f)] =
            refit_fold(model, out.scheme, static_cast<std::size_t>(f), estimand, c.baseline, c.seed, false);
    } else if (nk == 1) {
      refit[0] = refit_fold(model, out.scheme, 0, estimand, c.baseline, c.seed, true);
    }
    out.refit = std::move(refit);
    out.timings.refit = seconds_since(t0);
  }
  out.timings.total = seconds_since(t_start);
  return out;
}

}  // namespace asmc
