#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "asmc/config.hpp"
#include "asmc/experiment.hpp"
#include "asmc/report.hpp"
#include "asmc/selftest.hpp"

namespace {

enum Exit { ok = 0, config_error = 1, data_error = 2, numerical_error = 3 };

// Thread count: ASMC_THREADS wins over the command line, which wins over the
// config file.
int thread_count(int configured) {
  if (const char* env = std::getenv("ASMC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw asmc::ConfigError("ASMC_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return configured;
}

// "groups=10,size=20" into synthetic shape keys.
std::map<std::string, double> parse_shape(const std::string& spec) {
  std::map<std::string, double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw asmc::ConfigError("shape entry '" + item + "' is not key=value");
    const std::string value = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw asmc::ConfigError("shape entry '" + item + "' has a non-numeric value");
    out[item.substr(0, eq)] = v;
  }
  return out;
}

int run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> threads,
        std::optional<std::string> estimator, std::optional<std::string> out_dir) {
  asmc::RunConfig cfg = asmc::parse_config_file(config_path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  if (estimator) cfg.estimator = asmc::estimator_from_string(*estimator);
  if (out_dir) cfg.output = *out_dir;
  cfg.validate();
  omp_set_num_threads(thread_count(cfg.threads));

  const asmc::ExperimentResult result = asmc::run_experiment(cfg);
  asmc::emit_report(result, cfg.output);

  int failed = 0;
  if (result.asmc) failed += result.asmc->failed;
  if (result.refit)
    for (const auto& r : *result.refit) failed += r.ok ? 0 : 1;
  std::cout << "wrote " << cfg.output << "/report.json";
  if (result.asmc) std::cout << "; asmc aggregate " << asmc::format_double(result.asmc->aggregate);
  std::cout << "\n";
  if (failed > 0) {
    if (result.asmc)
      for (const auto& f : result.asmc->folds)
        if (!f.ok) std::cerr << "error: " << f.error << "\n";
    if (result.refit)
      for (const auto& r : *result.refit)
        if (!r.ok) std::cerr << "error: " << r.error << "\n";
    return numerical_error;
  }
  return ok;
}

int synth(const std::string& model, const std::string& shape, const std::string& out, std::uint64_t seed) {
  asmc::RunConfig cfg;
  cfg.model = asmc::model_kind_from_string(model);
  cfg.shape = parse_shape(shape);
  cfg.seed = seed;
  cfg.validate();
  asmc::write_synthetic_csv(cfg, out);
  std::cout << "wrote " << out << "\n";
  return ok;
}

int selftest() {
  int failed = 0;
  for (const auto& c : asmc::run_selftest()) {
    std::cout << (c.ok ? "PASS " : "FAIL ") << c.name;
    if (!c.ok) std::cout << ": " << c.detail;
    std::cout << "\n";
    failed += c.ok ? 0 : 1;
  }
  return failed ? numerical_error : ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive SMC for structured Bayesian cross-validation"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a cross-validation experiment");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> estimator, out_dir;
  run_cmd->add_option("--config", config_path, "Experiment config (TOML)")->required();
  run_cmd->add_option("--seed", seed, "Override the master seed");
  run_cmd->add_option("--threads", threads, "Override the thread count");
  run_cmd->add_option("--estimator", estimator, "asmc, psis, mcmc-refit or all")
      ->check(CLI::IsMember({"asmc", "psis", "mcmc-refit", "all"}));
  run_cmd->add_option("--out", out_dir, "Output directory");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
  std::string model, shape, out;
  std::uint64_t synth_seed = 1;
  synth_cmd->add_option("--model", model, "radon, dns, m5 or conjugate")
      ->required()
      ->check(CLI::IsMember({"radon", "dns", "m5", "conjugate"}));
  synth_cmd->add_option("--shape", shape, "Comma-separated key=value shape options");
  synth_cmd->add_option("--out", out, "Output CSV path")->required();
  synth_cmd->add_option("--seed", synth_seed, "Data seed");

  app.add_subcommand("selftest", "Run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*run_cmd) return run(config_path, seed, threads, estimator, out_dir);
    if (*synth_cmd) return synth(model, shape, out, synth_seed);
    return selftest();
  } catch (const asmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const asmc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  }
}
