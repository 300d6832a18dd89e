#include "asmc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include "asmc/rejuvenate.hpp"

namespace asmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_leo(SchemeKind kind) { return kind == SchemeKind::leo_within || kind == SchemeKind::leo_across; }

// Last retained time index once `checkpoint` deletion steps are complete.
int info_time(const Fold& fold, int checkpoint) {
  int t = std::numeric_limits<int>::max();
  for (std::size_t j = 0; j < fold.size(); ++j)
    if (fold.rank[j] <= checkpoint) t = std::min(t, fold.units[j].within - 1);
  return t;
}

Tempering deleted_through(const Fold& fold, int checkpoint) {
  Tempering t;
  for (std::size_t j = 0; j < fold.size(); ++j)
    if (fold.rank[j] <= checkpoint) {
      t.units.push_back(fold.units[j]);
      t.exponents.push_back(0.0);
    }
  return t;
}

std::vector<int> fold_groups(const Fold& fold) {
  std::vector<int> groups;
  for (const auto& u : fold.units) groups.push_back(u.group);
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  return groups;
}

bool psis_accepted(double k_hat, double threshold) { return threshold == kInf || k_hat < threshold; }

}  // namespace

void EngineConfig::validate() const {
  if (!(ess_ratio > 0.0 && ess_ratio < 1.0)) throw ConfigError("ess_ratio must lie in (0, 1)");
  if (std::isnan(khat_threshold)) throw ConfigError("khat_threshold must not be NaN");
  if (max_bisection < 1) throw ConfigError("max_bisection must be >= 1");
  kernel.validate();
}

std::string_view to_string(StepAction action) {
  switch (action) {
    case StepAction::baseline: return "baseline";
    case StepAction::rejuvenate: return "rejuvenate";
    case StepAction::psis: return "psis";
    case StepAction::psis_rejected: return "psis-rejected";
  }
  return "?";
}

std::vector<std::size_t> resample_systematic(std::span<const double> normalized, double u) {
  const std::size_t r = normalized.size();
  std::vector<std::size_t> out(r);
  const double step = 1.0 / static_cast<double>(r);
  double cum = normalized[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < r; ++i) {
    const double pos = (u + static_cast<double>(i)) * step;
    while (pos >= cum && j + 1 < r) cum += normalized[++j];
    out[i] = j;
  }
  return out;
}

std::vector<std::size_t> resample_systematic(std::span<const double> normalized, Rng& rng) {
  return resample_systematic(normalized, uniform01(rng));
}

std::uint64_t fold_seed(std::uint64_t master, std::size_t fold) { return derive_seed(master, stream::fold, fold); }

std::vector<std::vector<double>> estimand_log_f(const Model& model, const DeletionScheme& scheme, std::size_t fold,
                                                int checkpoint, const EstimandSpec& estimand,
                                                const std::vector<Vec>& particles, std::uint64_t seed,
                                                bool parallel) {
  const Fold& f = scheme.folds[fold];
  const auto n = static_cast<long>(particles.size());
  std::vector<std::vector<double>> out;
  std::exception_ptr failure;
  if (!is_leo(scheme.kind)) {
    const std::size_t rows = estimand.kind == EstimandKind::pointwise ? f.size() : 1;
    out.assign(rows, std::vector<double>(particles.size()));
#pragma omp parallel for schedule(static) if (parallel)
    for (long r = 0; r < n; ++r) {
      try {
        if (estimand.kind == EstimandKind::pointwise) {
          for (std::size_t j = 0; j < f.size(); ++j) out[j][r] = model.unit_log_lik(particles[r], f.units[j]);
        } else {
          out[0][r] = joint_predictive_log_density(model, particles[r], f);
        }
      } catch (...) {
#pragma omp critical(asmc_estimand_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
  }

  const int h = estimand.horizon;
  if (h > checkpoint) return out;
  const int t = info_time(f, checkpoint);
  const auto groups = fold_groups(f);
  const bool forward = model.supports_forward_simulation();
  if (!forward && h > 1) throw ConfigError(std::string(model.name()) + " cannot simulate multi-step forecasts");
  out.assign(groups.size(), std::vector<double>(particles.size()));
#pragma omp parallel for schedule(static) if (parallel)
  for (long r = 0; r < n; ++r) {
    try {
      Rng rng(derive_seed(seed, stream::predictive, static_cast<std::uint64_t>(r)));
      for (std::size_t g = 0; g < groups.size(); ++g)
        out[g][r] = forward ? model.forward_log_predictive(particles[r], groups[g], t, h, rng)
                            : model.unit_log_lik(particles[r], {groups[g], t + 1});
    } catch (...) {
#pragma omp critical(asmc_estimand_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double combine_estimand(std::span<const double> normalized, const std::vector<std::vector<double>>& log_f,
                        double* se) {
  double est = 0.0, var = 0.0;
  for (const auto& row : log_f) {
    est += weighted_log_estimand(normalized, row);
    if (se) {
      const double s = weighted_log_estimand_se(normalized, row);
      var += s * s;
    }
  }
  if (se) *se = std::sqrt(var);
  return est;
}

FoldResult run_fold(const SmcSetup& setup, const DeletionScheme& scheme, std::size_t fold,
                    const EstimandSpec& estimand, const EngineConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  FoldResult res;
  res.fold = static_cast<int>(fold);
  try {
    const Model& model = *setup.model;
    const bool leo = is_leo(scheme.kind);
    const PathKind kind = config.path.value_or(leo ? PathKind::ordered : PathKind::tempering);
    if (leo && kind != PathKind::ordered) throw ConfigError("LEO schemes require the ordered path");
    const DeletionPath path(scheme.folds[fold], kind);
    const std::uint64_t seed = fold_seed(config.seed, fold);
    const std::size_t r_count = setup.particles->size();

    std::vector<Vec> draws = *setup.particles;
    std::vector<double> log_w(r_count, 0.0);
    WeightVector w = normalize(log_w);
    auto block_ll = config.parallel ? block_log_lik_parallel(path, model, draws)
                                    : block_log_lik_serial(path, model, draws);

    std::vector<double> caps;
    if (leo)
      for (int c : scheme.checkpoints) caps.push_back(static_cast<double>(c));
    else
      caps.push_back(path.length());

    auto estimate_at = [&](int step, int checkpoint, double* se) {
      const auto log_f = estimand_log_f(model, scheme, fold, checkpoint, estimand, draws,
                                        derive_seed(seed, stream::predictive, static_cast<std::uint64_t>(step)),
                                        config.parallel);
      if (log_f.empty()) return std::numeric_limits<double>::quiet_NaN();
      return combine_estimand(w.normalized, log_f, se);
    };

    TraceRow row0;
    row0.ess = static_cast<double>(r_count);
    row0.action = StepAction::baseline;
    row0.estimate = leo ? std::numeric_limits<double>::quiet_NaN() : estimate_at(0, 0, nullptr);
    res.trace.push_back(row0);

    const SolverOptions solver{config.ess_ratio, config.tolerance, config.max_bisection};
    double n = 0.0;
    int step = 0;
    std::size_t cap_index = 0;
    int interventions = 0;
    const double n_final = path.length();
    double last_se = 0.0;

    auto move = [&](double at, TraceRow& row) {
      if (config.resample) {
        Rng rng(derive_seed(seed, stream::resample, static_cast<std::uint64_t>(step)));
        const auto anc = resample_systematic(w.normalized, rng);
        std::vector<Vec> next(r_count);
        std::vector<std::vector<double>> next_ll(r_count);
        for (std::size_t r = 0; r < r_count; ++r) {
          next[r] = draws[anc[r]];
          next_ll[r] = block_ll[anc[r]];
        }
        draws.swap(next);
        block_ll.swap(next_ll);
        std::fill(log_w.begin(), log_w.end(), 0.0);
      }
      if (config.kernel.iterations > 0) {
        const TemperedTarget target(model, path.tempering_at(at));
        row.accepted_moves =
            config.parallel
                ? rejuvenate_parallel(draws, target, setup.kernel, config.kernel, setup.tuning, seed, step)
                : rejuvenate_serial(draws, target, setup.kernel, config.kernel, setup.tuning, seed, step);
        block_ll = config.parallel ? block_log_lik_parallel(path, model, draws)
                                   : block_log_lik_serial(path, model, draws);
      }
      ++res.kernel_invocations;
      w = normalize(log_w);
    };

    while (n < n_final) {
      const double cap = caps[cap_index];
      const SolverResult sol = solve_next_n(path, log_w, block_ll, n, cap, solver);
      ++step;
      res.non_monotone = res.non_monotone || sol.non_monotone;
      for (std::size_t r = 0; r < r_count; ++r) log_w[r] += path.log_increment(block_ll[r], n, sol.n);
      w = normalize(log_w);

      TraceRow row;
      row.step = step;
      row.n = sol.n;
      const auto phi = path.summarize(sol.n);
      row.phi_mean = phi.mean;
      row.phi_min = phi.min;
      row.phi_max = phi.max;
      row.ess = ess(w);
      row.epsilon = sol.epsilon;
      row.solver_iterations = sol.iterations;
      row.hit_cap = sol.hit_cap;
      row.k_hat = std::numeric_limits<double>::quiet_NaN();
      row.checkpoint = leo && sol.n == cap;

      if (sol.n < n_final) {
        move(sol.n, row);
        row.action = StepAction::rejuvenate;
        if (!row.checkpoint) ++interventions;
      } else {
        const ParetoDiagnostic psis = pareto_smooth(log_w);
        row.k_hat = psis.k_hat;
        res.k_hat = psis.k_hat;
        if (psis_accepted(psis.k_hat, config.khat_threshold)) {
          w = psis.smoothed;
          row.action = StepAction::psis;
        } else {
          move(sol.n, row);
          row.action = StepAction::psis_rejected;
        }
        res.final_action = row.action;
      }

      if (!leo) {
        row.estimate = estimate_at(step, 0, &last_se);
      } else if (row.checkpoint) {
        const int c = scheme.checkpoints[cap_index];
        CheckpointEstimate ce;
        ce.checkpoint = c;
        ce.info_time = info_time(scheme.folds[fold], c);
        ce.estimate = estimate_at(step, c, &ce.se);
        ce.interventions = interventions;
        row.estimate = ce.estimate;
        res.checkpoints.push_back(ce);
        interventions = 0;
        ++cap_index;
      } else {
        row.estimate = std::numeric_limits<double>::quiet_NaN();
      }
      res.trace.push_back(row);
      n = sol.n;
    }

    if (leo) {
      double est = 0.0, var = 0.0;
      for (const auto& ce : res.checkpoints)
        if (std::isfinite(ce.estimate)) {
          est += ce.estimate;
          var += ce.se * ce.se;
        }
      res.estimate = est;
      res.se = std::sqrt(var);
    } else {
      res.estimate = res.trace.back().estimate;
      res.se = last_se;
    }
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = "fold " + std::to_string(fold + 1) + ": " + e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<double> running_average(const std::vector<CheckpointEstimate>& checkpoints) {
  std::vector<double> out;
  double sum = 0.0;
  int count = 0;
  for (const auto& ce : checkpoints) {
    if (std::isfinite(ce.estimate)) {
      sum += ce.estimate;
      ++count;
    }
    out.push_back(count ? sum / count : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

CvResult run_cv(const SmcSetup& setup, const DeletionScheme& scheme, const EstimandSpec& estimand,
                const EngineConfig& config) {
  config.validate();
  estimand.validate(scheme.kind);
  CvResult out;
  const auto k = static_cast<long>(scheme.folds.size());
  out.folds.resize(scheme.folds.size());
  EngineConfig inner = config;
  if (k > 1) {
    // Folds fan out across threads; particle loops inside a fold stay serial.
    inner.parallel = false;
#pragma omp parallel for schedule(dynamic) if (config.parallel)
    for (long f = 0; f < k; ++f) out.folds[f] = run_fold(setup, scheme, static_cast<std::size_t>(f), estimand, inner);
  } else if (k == 1) {
    out.folds[0] = run_fold(setup, scheme, 0, estimand, inner);
  }
  for (const auto& f : out.folds) {
    if (f.ok)
      out.aggregate += f.estimate;
    else
      ++out.failed;
    out.kernel_invocations += f.kernel_invocations;
  }
  return out;
}

PsisEstimate psis_fold(const SmcSetup& setup, const DeletionScheme& scheme, std::size_t fold,
                       const EstimandSpec& estimand, const EngineConfig& config) {
  const Model& model = *setup.model;
  const auto& particles = *setup.particles;
  const Fold& f = scheme.folds[fold];
  const std::uint64_t seed = derive_seed(fold_seed(config.seed, fold), stream::predictive, 0);
  PsisEstimate out;
  if (!is_leo(scheme.kind)) {
    std::vector<double> log_w(particles.size());
    for (std::size_t r = 0; r < particles.size(); ++r) log_w[r] = -joint_predictive_log_density(model, particles[r], f);
    const ParetoDiagnostic psis = pareto_smooth(log_w);
    out.k_hat = psis.k_hat;
    const auto log_f = estimand_log_f(model, scheme, fold, 0, estimand, particles, seed, config.parallel);
    out.estimate = combine_estimand(psis.smoothed.normalized, log_f, &out.se);
    return out;
  }
  double var = 0.0;
  for (int c : scheme.checkpoints) {
    const Tempering del = deleted_through(f, c);
    std::vector<double> log_w(particles.size(), 0.0);
    for (std::size_t r = 0; r < particles.size(); ++r)
      for (const auto& u : del.units) log_w[r] -= model.unit_log_lik(particles[r], u);
    const ParetoDiagnostic psis = pareto_smooth(log_w);
    out.k_hat = std::max(out.k_hat, psis.k_hat);
    const auto log_f = estimand_log_f(model, scheme, fold, c, estimand, particles,
                                      derive_seed(seed, static_cast<std::uint64_t>(c)), config.parallel);
    CheckpointEstimate ce;
    ce.checkpoint = c;
    ce.info_time = info_time(f, c);
    ce.estimate = log_f.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : combine_estimand(psis.smoothed.normalized, log_f, &ce.se);
    if (std::isfinite(ce.estimate)) {
      out.estimate += ce.estimate;
      var += ce.se * ce.se;
    }
    out.checkpoints.push_back(ce);
  }
  out.se = std::sqrt(var);
  return out;
}

double chain_log_mean(const std::vector<double>& log_f, double* se) {
  const double m = *std::max_element(log_f.begin(), log_f.end());
  std::vector<double> f(log_f.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = std::exp(log_f[i] - m);
    mean += f[i];
  }
  mean /= static_cast<double>(f.size());
  if (se) {
    double var = 0.0;
    for (double v : f) var += (v - mean) * (v - mean);
    var /= std::max<double>(1.0, static_cast<double>(f.size()) - 1.0);
    const double n_eff = autocorrelation_ess(f);
    *se = std::sqrt(var / n_eff) / mean;
  }
  return m + std::log(mean);
}

RefitEstimate refit_fold(const Model& model, const DeletionScheme& scheme, std::size_t fold,
                         const EstimandSpec& estimand, const BaselineConfig& config, std::uint64_t seed,
                         bool parallel) {
  RefitEstimate out;
  const Fold& f = scheme.folds[fold];
  auto one = [&](const Tempering& tempering, int checkpoint, double* se) {
    const std::uint64_t s = derive_seed(seed, stream::refit, fold * 100003ULL + static_cast<std::uint64_t>(checkpoint));
    Rng rng(s);
    const BaselineResult chain = run_baseline_mcmc(model, tempering, config, rng);
    auto log_f = estimand_log_f(model, scheme, fold, checkpoint, estimand, chain.draws,
                                derive_seed(s, stream::predictive), parallel);
    // Integrating held-out group effects analytically removes the heavy tail
    // of averaging exp(log f) over their prior draws.
    if (!is_leo(scheme.kind) && estimand.kind == EstimandKind::joint && !chain.draws.empty() &&
        model.integrated_fold_log_lik(chain.draws[0], f)) {
      for (std::size_t r = 0; r < chain.draws.size(); ++r) log_f[0][r] = *model.integrated_fold_log_lik(chain.draws[r], f);
    }
    if (log_f.empty()) return std::numeric_limits<double>::quiet_NaN();
    double est = 0.0, var = 0.0;
    for (const auto& row : log_f) {
      double row_se = 0.0;
      est += chain_log_mean(row, &row_se);
      var += row_se * row_se;
    }
    *se = std::sqrt(var);
    return est;
  };
  try {
    if (!is_leo(scheme.kind)) {
      out.estimate = one(Tempering::deleted(f), 0, &out.se);
      return out;
    }
    const auto& cps = scheme.checkpoints;
    out.checkpoints.resize(cps.size());
    std::exception_ptr failure;
    const auto nc = static_cast<long>(cps.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = 0; i < nc; ++i) {
      try {
        CheckpointEstimate ce;
        ce.checkpoint = cps[i];
        ce.info_time = info_time(f, cps[i]);
        ce.estimate = one(deleted_through(f, cps[i]), cps[i], &ce.se);
        out.checkpoints[i] = ce;
      } catch (...) {
#pragma omp critical(asmc_refit_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    double var = 0.0;
    for (const auto& ce : out.checkpoints)
      if (std::isfinite(ce.estimate)) {
        out.estimate += ce.estimate;
        var += ce.se * ce.se;
      }
    out.se = std::sqrt(var);
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = "refit fold " + std::to_string(fold + 1) + ": " + e.what();
  }
  return out;
}

}  // namespace asmc
