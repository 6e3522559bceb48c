#include <benchmark/benchmark.h>

#include "skillplan/experiment.hpp"

using namespace skillplan;

namespace {

std::string corpus(const std::string& rel) {
  return std::string(SKILLPLAN_SOURCE_DIR) + "/corpus/" + rel;
}

TaskContext load(const std::string& domain, const std::string& goal) {
  auto d = parse_domain(read_text_file(corpus(domain + "/domain.pddl")));
  auto p = parse_problem(read_text_file(corpus(domain + "/" + goal + ".pddl")), d);
  EnvConfig ec;
  ec.domain = parse_domain_id(domain);
  return make_task(std::move(d), std::move(p), ec);
}

void BM_PlanDrawer(benchmark::State& state) {
  const auto task = load("drawer", "train");
  for (auto _ : state) {
    auto r = plan(task.problem.init, task.problem.goal, task.groundings);
    benchmark::DoNotOptimize(r.expansions);
  }
}
BENCHMARK(BM_PlanDrawer);

void BM_ParseState(benchmark::State& state) {
  const auto task = load("drawer", "train");
  const auto x = task.world->reset(7);
  for (auto _ : state) benchmark::DoNotOptimize(task.parse(x));
}
BENCHMARK(BM_ParseState);

void BM_Step(benchmark::State& state) {
  const auto task = load("coffee", "train");
  auto x = task.world->reset(3);
  std::size_t a = 0;
  for (auto _ : state) {
    x = task.world->step(x, Action::policy(a++ % kPolicyActionCount)).next;
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_Step);

void BM_EncodeAbstract(benchmark::State& state) {
  const auto task = load("drawer", "train");
  const auto x = task.world->reset(1);
  const auto& op = task.groundings.front();
  for (auto _ : state) benchmark::DoNotOptimize(encode(extract(x, op, *task.world)));
}
BENCHMARK(BM_EncodeAbstract);

void BM_TrainDrawerSeed(benchmark::State& state) {
  const auto cfg = load_config(std::string(SKILLPLAN_SOURCE_DIR) + "/configs/drawer.ini");
  const auto task = load_task(cfg, "train");
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto run = run_seed(cfg, task, seed++);
    benchmark::DoNotOptimize(run.result.env_steps);
  }
}
BENCHMARK(BM_TrainDrawerSeed)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
