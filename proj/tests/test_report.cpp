#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "asmc/report.hpp"
#include "doctest.h"

using namespace asmc;

namespace {

RunConfig small_conjugate(const std::string& estimator) {
  return parse_config_text("seed = 11\nparticles = 200\nestimator = \"" + estimator +
                           "\"\n[model]\nkind = \"conjugate\"\n[synthetic]\ngroups = 4\nsize = 6\n"
                           "[scheme]\nkind = \"lgo\"\n[baseline]\nburn_in = 300\nthin = 2\n");
}

RunConfig small_leo() {
  return parse_config_text(
      "seed = 5\nparticles = 100\nestimator = \"all\"\n[model]\nkind = \"dns\"\n[synthetic]\nhorizon = 12\n"
      "[scheme]\nkind = \"leo-within\"\nt_min = 8\n[baseline]\nburn_in = 100\nthin = 2\n");
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("traces hold one row per path step plus the baseline row") {
  const ExperimentResult r = run_experiment(small_conjugate("asmc"));
  REQUIRE(r.asmc);
  const auto rows = lines(traces_csv(r));
  std::size_t expected = 1;
  for (const auto& f : r.asmc->folds) expected += static_cast<std::size_t>(f.steps()) + 1;
  CHECK(rows.size() == expected);
  CHECK(rows[0].rfind("fold,step,n,", 0) == 0);
  CHECK(rows[1].rfind("1,0,", 0) == 0);

  const auto j = report_json(r);
  CHECK(j["scheme"]["folds"] == 4);
  CHECK(j["asmc"]["folds"].size() == 4);
  CHECK_FALSE(j.contains("comparison"));
  CHECK_FALSE(j.contains("psis"));
  double sum = 0.0;
  for (const auto& f : j["asmc"]["folds"]) sum += f["estimate"].get<double>();
  CHECK(j["asmc"]["aggregate"].get<double>() == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("all estimators add a comparison block") {
  const ExperimentResult r = run_experiment(small_conjugate("all"));
  const auto j = report_json(r);
  REQUIRE(j.contains("comparison"));
  const auto& c = j["comparison"];
  CHECK(c["reference"] == "mcmc-refit");
  CHECK(c["folds"].size() == 4);
  for (const auto& f : c["folds"]) {
    const double err = std::abs(f["asmc"].get<double>() - f["mcmc_refit"].get<double>());
    CHECK(f["abs_error_asmc"].get<double>() == doctest::Approx(err));
  }
  CHECK(j.contains("psis"));
  CHECK(j.contains("mcmc_refit"));
}

TEST_CASE("leo reports per-checkpoint rows") {
  const ExperimentResult r = run_experiment(small_leo());
  const auto j = report_json(r);
  const int checkpoints = static_cast<int>(j["scheme"]["checkpoints"].size());
  CHECK(checkpoints == 4);
  for (const char* key : {"asmc", "psis", "mcmc_refit"}) {
    const auto& cps = j[key]["folds"][0]["checkpoints"];
    REQUIRE(cps.size() == static_cast<std::size_t>(checkpoints));
    CHECK(cps[0].contains("running_average"));
    CHECK(cps[0]["info_time"].get<int>() > cps[checkpoints - 1]["info_time"].get<int>());
  }
  CHECK(j["comparison"]["folds"][0]["checkpoints"].size() == static_cast<std::size_t>(checkpoints));
  int flagged = 0;
  for (const auto& row : lines(traces_csv(r))) flagged += row.back() == '1' ? 1 : 0;
  CHECK(flagged == checkpoints);
}

TEST_CASE("identical runs write identical bytes") {
  const RunConfig c = small_conjugate("asmc");
  const auto a = report_json(run_experiment(c)).dump(2);
  const auto b = report_json(run_experiment(c)).dump(2);
  CHECK(a == b);

  const auto dir = std::filesystem::temp_directory_path() / "asmc_report_test";
  std::filesystem::remove_all(dir);
  emit_report(run_experiment(c), dir.string());
  for (const char* name : {"report.json", "traces.csv", "timings.json"})
    CHECK(std::filesystem::exists(dir / name));
  std::ifstream in(dir / "report.json");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == a + "\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("non-finite numbers are spelled as strings") {
  ExperimentResult r = run_experiment(small_conjugate("asmc"));
  r.asmc->folds[0].k_hat = -std::numeric_limits<double>::infinity();
  CHECK(report_json(r)["asmc"]["folds"][0]["k_hat"] == "-inf");
}
