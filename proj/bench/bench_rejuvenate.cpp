#include <memory>

#include <benchmark/benchmark.h>

#include "asmc/baseline.hpp"
#include "asmc/models/multilevel_normal.hpp"
#include "asmc/rejuvenate.hpp"

namespace {

struct Fixture {
  std::unique_ptr<asmc::MultilevelNormalModel> model;
  std::vector<asmc::Vec> particles;
  asmc::KernelTuning tuning;
  asmc::DeletionScheme scheme;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    asmc::Rng rng = asmc::make_rng(1, asmc::stream::data);
    out.model = std::make_unique<asmc::MultilevelNormalModel>(asmc::generate_multilevel({}, rng).data);
    asmc::BaselineConfig cfg;
    cfg.iterations = 1500;
    cfg.burn_in = 500;
    cfg.thin = 2;
    asmc::Rng brng = asmc::make_rng(1, asmc::stream::baseline);
    auto b = asmc::run_baseline_mcmc(*out.model, asmc::Tempering::none(), cfg, brng);
    out.particles = std::move(b.draws);
    out.tuning = b.tuning;
    out.scheme = asmc::build_lgo_scheme(out.model->group_sizes());
    return out;
  }();
  return f;
}

template <bool Parallel>
void rejuvenate(benchmark::State& state) {
  const Fixture& f = fixture();
  const asmc::DeletionPath path(f.scheme.folds[0], asmc::PathKind::tempering);
  const asmc::TemperedTarget target(*f.model, path.tempering_at(0.5 * path.length()));
  asmc::KernelConfig kc;
  kc.kind = asmc::KernelKind::hmc;
  kc.iterations = static_cast<int>(state.range(0));
  int step = 0;
  for (auto _ : state) {
    std::vector<asmc::Vec> p = f.particles;
    const long acc = Parallel ? asmc::rejuvenate_parallel(p, target, kc.kind, kc, f.tuning, 7, ++step)
                              : asmc::rejuvenate_serial(p, target, kc.kind, kc, f.tuning, 7, ++step);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.particles.size()));
}

template <bool Parallel>
void block_log_lik(benchmark::State& state) {
  const Fixture& f = fixture();
  const asmc::DeletionPath path(f.scheme.folds[0], asmc::PathKind::tempering);
  for (auto _ : state) {
    auto ll = Parallel ? asmc::block_log_lik_parallel(path, *f.model, f.particles)
                       : asmc::block_log_lik_serial(path, *f.model, f.particles);
    benchmark::DoNotOptimize(ll.data());
  }
}

}  // namespace

BENCHMARK(rejuvenate<false>)->Name("rejuvenate/serial")->Arg(1)->Arg(3)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(rejuvenate<true>)->Name("rejuvenate/parallel")->Arg(1)->Arg(3)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(block_log_lik<false>)->Name("block_log_lik/serial")->UseRealTime()->Unit(benchmark::kMicrosecond);
BENCHMARK(block_log_lik<true>)->Name("block_log_lik/parallel")->UseRealTime()->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
