#include "asmc/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace asmc {

namespace {

using json = nlohmann::ordered_json;

// Non-finite values have no JSON spelling; they are written as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json checkpoints_json(const std::vector<CheckpointEstimate>& cps) {
  json a = json::array();
  const auto avg = running_average(cps);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto& c = cps[i];
    a.push_back({{"checkpoint", c.checkpoint},
                 {"info_time", c.info_time},
                 {"estimate", num(c.estimate)},
                 {"se", num(c.se)},
                 {"running_average", num(avg[i])},
                 {"interventions", c.interventions}});
  }
  return a;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json comparison_json(const ExperimentResult& r) {
  json folds = json::array();
  std::vector<double> abs_a, abs_p, rel_a, rel_p;
  int asmc_better = 0;
  for (std::size_t f = 0; f < r.scheme.folds.size(); ++f) {
    const auto& fa = r.asmc->folds[f];
    const auto& fp = (*r.psis)[f];
    const auto& fr = (*r.refit)[f];
    const double ref = fr.estimate;
    const double ea = std::abs(fa.estimate - ref), ep = std::abs(fp.estimate - ref);
    const double ra = ea / std::abs(ref), rp = ep / std::abs(ref);
    json row{{"fold", f + 1},
             {"asmc", num(fa.estimate)},
             {"psis", num(fp.estimate)},
             {"mcmc_refit", num(ref)},
             {"mcmc_refit_se", num(fr.se)},
             {"abs_error_asmc", num(ea)},
             {"abs_error_psis", num(ep)},
             {"rel_error_asmc", num(ra)},
             {"rel_error_psis", num(rp)}};
    if (!fr.checkpoints.empty()) {
      json cps = json::array();
      for (std::size_t i = 0; i < fr.checkpoints.size(); ++i) {
        const double m = fr.checkpoints[i].estimate;
        const double a = i < fa.checkpoints.size() ? fa.checkpoints[i].estimate : std::nan("");
        const double p = i < fp.checkpoints.size() ? fp.checkpoints[i].estimate : std::nan("");
        cps.push_back({{"checkpoint", fr.checkpoints[i].checkpoint},
                       {"asmc", num(a)},
                       {"psis", num(p)},
                       {"mcmc_refit", num(m)},
                       {"mcmc_refit_se", num(fr.checkpoints[i].se)},
                       {"abs_error_asmc", num(std::abs(a - m))},
                       {"abs_error_psis", num(std::abs(p - m))}});
      }
      row["checkpoints"] = std::move(cps);
    }
    folds.push_back(std::move(row));
    if (fa.ok && fr.ok) {
      abs_a.push_back(ea);
      abs_p.push_back(ep);
      rel_a.push_back(ra);
      rel_p.push_back(rp);
      asmc_better += ra <= rp ? 1 : 0;
    }
  }
  return {{"reference", "mcmc-refit"},
          {"median_abs_error_asmc", num(median(abs_a))},
          {"median_abs_error_psis", num(median(abs_p))},
          {"median_rel_error_asmc", num(median(rel_a))},
          {"median_rel_error_psis", num(median(rel_p))},
          {"folds_asmc_not_worse", asmc_better},
          {"folds", std::move(folds)}};
}

std::string csv_num(double v) { return format_double(v); }

}  // namespace

json report_json(const ExperimentResult& r) {
  json j;
  j["version"] = kVersion;
  j["config"] = to_toml(r.config);
  json sizes = json::array();
  for (auto n : r.group_sizes) sizes.push_back(n);
  j["model"] = {{"kind", r.model_name}, {"source", r.source}, {"dimension", r.dimension}, {"group_sizes", sizes}};
  json fold_sizes = json::array();
  for (auto n : r.scheme.fold_sizes()) fold_sizes.push_back(n);
  j["scheme"] = {{"kind", to_string(r.scheme.kind)},
                 {"folds", r.scheme.folds.size()},
                 {"fold_sizes", fold_sizes},
                 {"checkpoints", r.scheme.checkpoints},
                 {"unbalanced", r.scheme.unbalanced}};
  j["estimand"] = {{"kind", to_string(r.config.estimand)}, {"horizon", r.config.horizon}};

  if (r.asmc || r.psis) {
    const auto& b = r.baseline;
    j["baseline"] = {{"kernel", to_string(b.kind)},
                     {"draws", b.draws.size()},
                     {"accept_rate", num(b.accept_rate)},
                     {"divergences", b.divergences},
                     {"step_size", num(b.tuning.step_size)},
                     {"max_lag1", num(b.lag1.size() ? b.lag1.maxCoeff() : 0.0)},
                     {"suggested_kernel_iterations", suggest_kernel_iterations(b.lag1)}};
  }

  if (r.asmc) {
    json folds = json::array();
    for (const auto& f : r.asmc->folds) {
      json fj{{"fold", f.fold + 1},
              {"ok", f.ok},
              {"estimate", num(f.estimate)},
              {"se", num(f.se)},
              {"k_hat", num(f.k_hat)},
              {"final_action", to_string(f.final_action)},
              {"steps", f.steps()},
              {"kernel_invocations", f.kernel_invocations},
              {"non_monotone", f.non_monotone}};
      if (!f.ok) fj["error"] = f.error;
      if (!f.checkpoints.empty()) fj["checkpoints"] = checkpoints_json(f.checkpoints);
      folds.push_back(std::move(fj));
    }
    j["asmc"] = {{"kernel", to_string(r.kernel)},
                 {"kernel_iterations", r.kernel_iterations},
                 {"aggregate", num(r.asmc->aggregate)},
                 {"failed_folds", r.asmc->failed},
                 {"kernel_invocations", r.asmc->kernel_invocations},
                 {"folds", std::move(folds)}};
  }

  if (r.psis) {
    json folds = json::array();
    double total = 0.0;
    for (std::size_t f = 0; f < r.psis->size(); ++f) {
      const auto& p = (*r.psis)[f];
      total += p.estimate;
      json fj{{"fold", f + 1}, {"estimate", num(p.estimate)}, {"se", num(p.se)}, {"k_hat", num(p.k_hat)}};
      if (!p.checkpoints.empty()) fj["checkpoints"] = checkpoints_json(p.checkpoints);
      folds.push_back(std::move(fj));
    }
    j["psis"] = {{"aggregate", num(total)}, {"folds", std::move(folds)}};
  }

  if (r.refit) {
    json folds = json::array();
    double total = 0.0;
    int failed = 0;
    for (std::size_t f = 0; f < r.refit->size(); ++f) {
      const auto& m = (*r.refit)[f];
      if (m.ok)
        total += m.estimate;
      else
        ++failed;
      json fj{{"fold", f + 1}, {"ok", m.ok}, {"estimate", num(m.estimate)}, {"se", num(m.se)}};
      if (!m.ok) fj["error"] = m.error;
      if (!m.checkpoints.empty()) fj["checkpoints"] = checkpoints_json(m.checkpoints);
      folds.push_back(std::move(fj));
    }
    j["mcmc_refit"] = {{"aggregate", num(total)}, {"failed_folds", failed}, {"folds", std::move(folds)}};
  }

  if (r.asmc && r.psis && r.refit) j["comparison"] = comparison_json(r);
  return j;
}

std::string traces_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "fold,step,n,phi_mean,phi_min,phi_max,ess,epsilon,solver_iterations,hit_cap,action,estimate,k_hat,"
         "accepted_moves,checkpoint\n";
  if (!r.asmc) return out.str();
  for (const auto& f : r.asmc->folds)
    for (const auto& t : f.trace)
      out << f.fold + 1 << ',' << t.step << ',' << csv_num(t.n) << ',' << csv_num(t.phi_mean) << ','
          << csv_num(t.phi_min) << ',' << csv_num(t.phi_max) << ',' << csv_num(t.ess) << ',' << csv_num(t.epsilon)
          << ',' << t.solver_iterations << ',' << (t.hit_cap ? 1 : 0) << ',' << to_string(t.action) << ','
          << csv_num(t.estimate) << ',' << csv_num(t.k_hat) << ',' << t.accepted_moves << ','
          << (t.checkpoint ? 1 : 0) << '\n';
  return out.str();
}

json timings_json(const ExperimentResult& r) {
  json j{{"baseline_seconds", r.timings.baseline},
         {"asmc_seconds", r.timings.asmc},
         {"psis_seconds", r.timings.psis},
         {"mcmc_refit_seconds", r.timings.refit},
         {"total_seconds", r.timings.total}};
  if (r.asmc) {
    json folds = json::array();
    for (const auto& f : r.asmc->folds) folds.push_back(f.seconds);
    j["asmc_fold_seconds"] = std::move(folds);
  }
  return j;
}

void emit_report(const ExperimentResult& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write '" + path.string() + "'");
  };
  write("report.json", report_json(r).dump(2) + "\n");
  write("traces.csv", traces_csv(r));
  write("timings.json", timings_json(r).dump(2) + "\n");
}

}  // namespace asmc
