// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "support.hpp"

using namespace skillplan;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& title,
            const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::cout << fmt::format("{} {} {}: {} ({:.1f}s)\n", o.pass ? "PASS" : "FAIL",
                           id, title, o.detail, secs)
            << std::flush;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared across criteria: the drawer training runs feed C6, C7, C8 and C9.
std::vector<SeedRun> drawer_runs;
ExperimentConfig drawer_cfg;

Outcome optimal_plans() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t checked = 0, mismatched = 0;
  for (const char* d : {"drawer", "peg"}) {
    auto task = ts::load(d);
    const auto ops = ts::string_groundings(task.domain, task.problem);
    const auto init = ts::to_strings(task.problem.init, task.domain, task.problem);
    Rng rng(mix_seed(0xc1, checked));
    for (int i = 0; i < 100; ++i) {
      const auto goal = ts::random_reachable_goal(task, rng);
      const auto r = plan(task.problem.init, goal, task.groundings);
      const auto oracle = ts::bfs_plan_length(
          init, ts::to_strings(goal.atoms, task.domain, task.problem), ops);
      ++checked;
      if (!r.solved() || !oracle || r.plan.size() != *oracle ||
          !validate_plan(r.plan, task.problem.init, goal)) {
        ++mismatched;
      }
    }
  }
  const double secs = elapsed_since(t0);
  return {mismatched == 0 && secs < 30.0,
          fmt::format("{} goals, {} differ from the breadth-first oracle, {:.2f}s",
                      checked, mismatched, secs)};
}

Outcome abstract_trajectories() {
  std::size_t files = 0, bad_segments = 0;
  for (const auto& entry : fs::directory_iterator(ts::corpus("trajectories"))) {
    const auto stem = entry.path().stem().string();
    const auto domain = stem.substr(0, stem.find('_'));
    const auto rest = stem.substr(domain.size() + 1);
    const auto goal = rest.substr(0, rest.find('_'));
    const auto traj = parse_trajectory(read_text_file(entry.path().string()));
    auto task = ts::load(domain, goal, traj.randomize_layout);
    Environment env(task.world);
    env.reset(traj.seed);
    std::vector<GroundOperator> steps;
    for (const auto& seg : traj.segments) {
      steps.push_back(read_plan(seg.op, task.groundings, task.problem).at(0));
    }
    const auto p = make_plan(steps, task.parse(env.state()));
    if (!validate_plan(p, task.parse(env.state()), task.problem.goal)) ++bad_segments;
    for (std::size_t i = 0; i < traj.segments.size(); ++i) {
      for (const auto& a : traj.segments[i].actions) env.step(parse_action(a, *task.world));
      if (task.parse(env.state()) != p.expected_states[i + 1]) ++bad_segments;
    }
    ++files;
  }

  // Validation sweep: optimal plans validate, plans with a step removed do not.
  std::size_t instances = 0, wrong = 0;
  Rng rng(0xc2);
  const char* domains[] = {"drawer", "peg", "coffee"};
  std::vector<TaskContext> tasks;
  for (const char* d : domains) tasks.push_back(ts::load(d));
  while (instances < 1000) {
    const auto& task = tasks[instances % tasks.size()];
    const auto goal = ts::random_reachable_goal(task, rng);
    auto r = plan(task.problem.init, goal, task.groundings);
    ++instances;
    if (!r.solved() || !validate_plan(r.plan, task.problem.init, goal)) {
      ++wrong;
      continue;
    }
    if (r.plan.empty()) continue;
    TaskPlan cut = r.plan;
    cut.steps.erase(cut.steps.begin() +
                    static_cast<std::ptrdiff_t>(uniform_below(rng, cut.steps.size())));
    // Removing a step from a shortest plan can never leave a valid plan.
    if (validate_plan(cut, task.problem.init, goal)) ++wrong;
  }
  return {files >= 6 && bad_segments == 0 && wrong == 0,
          fmt::format("{} golden trajectories, {} segment mismatches; {} sweep "
                      "instances, {} wrong verdicts",
                      files, bad_segments, instances, wrong)};
}

std::string mutate(const std::string& text, Rng& rng) {
  static const std::string alphabet = "()?-: \n\tabcxyz019;$#\"";
  std::string s = text;
  const auto edits = 1 + uniform_below(rng, 4);
  for (std::uint64_t e = 0; e < edits; ++e) {
    const auto pos = s.empty() ? 0 : uniform_below(rng, s.size());
    switch (uniform_below(rng, 5)) {
      case 0:
        if (!s.empty()) s.erase(pos, 1 + uniform_below(rng, 8));
        break;
      case 1:
        s.insert(pos, 1, alphabet[uniform_below(rng, alphabet.size())]);
        break;
      case 2:
        if (!s.empty()) s[pos] = alphabet[uniform_below(rng, alphabet.size())];
        break;
      case 3:
        s.resize(pos);
        break;
      default: {
        // Swap two characters.
        const auto other = s.empty() ? 0 : uniform_below(rng, s.size());
        if (!s.empty()) std::swap(s[pos], s[other]);
      }
    }
  }
  return s;
}

Outcome parser_robustness() {
  std::vector<std::pair<std::string, std::string>> files;  // domain dir, file
  std::size_t roundtrip_failures = 0;
  for (const char* d : {"drawer", "peg", "coffee"}) {
    const auto dom_text = read_text_file(ts::corpus(std::string(d) + "/domain.pddl"));
    const auto dom = parse_domain(dom_text);
    if (parse_domain(serialize_domain(dom)) != dom) ++roundtrip_failures;
    files.emplace_back(d, dom_text);
    for (const auto& entry : fs::directory_iterator(ts::corpus(d))) {
      if (entry.path().filename() == "domain.pddl") continue;
      const auto text = read_text_file(entry.path().string());
      const auto prob = parse_problem(text, dom);
      if (parse_problem(serialize_problem(prob, dom), dom) != prob) ++roundtrip_failures;
      files.emplace_back(d, text);
    }
  }

  std::map<std::string, DomainSpec> domains;
  for (const char* d : {"drawer", "peg", "coffee"}) {
    domains[d] = parse_domain(read_text_file(ts::corpus(std::string(d) + "/domain.pddl")));
  }
  Rng rng(0xc3);
  std::size_t parse_errors = 0, accepted = 0, other = 0;
  std::string first_other;
  for (int i = 0; i < 100000; ++i) {
    const auto& [d, text] = files[uniform_below(rng, files.size())];
    const auto input = mutate(text, rng);
    try {
      if (input.find("(:action") != std::string::npos ||
          input.find("(:predicates") != std::string::npos) {
        parse_domain(input);
      } else {
        parse_problem(input, domains.at(d));
      }
      ++accepted;
    } catch (const ParseError& e) {
      if (e.line() == 0 || e.column() == 0) {
        ++other;
        if (first_other.empty()) first_other = "unpositioned: " + std::string(e.what());
      } else {
        ++parse_errors;
      }
    } catch (const std::exception& e) {
      ++other;
      if (first_other.empty()) first_other = e.what();
    }
  }
  return {roundtrip_failures == 0 && other == 0,
          fmt::format("{} round-trip failures; fuzz: {} positioned parse errors, "
                      "{} accepted, {} other{}",
                      roundtrip_failures, parse_errors, accepted, other,
                      first_other.empty() ? "" : " (" + first_other + ")")};
}

SeedRun train_drawer_seed(std::uint64_t seed) {
  const auto task = load_task(drawer_cfg, "train");
  return run_seed(drawer_cfg, task, seed);
}

Outcome abstraction_invariance() {
  auto task = ts::load("drawer");
  const auto run = train_drawer_seed(0);
  TabularLearner learner(run.library, 0);
  const auto& world = *task.world;
  Rng rng(0xc4);
  std::size_t trials = 0, changed = 0;
  while (trials < 10000) {
    const auto& op = task.groundings[uniform_below(rng, task.groundings.size())];
    auto x = world.with_focus(world.reset(uniform_below(rng, 1000)), op.substitution.front());
    for (int i = 0, n = static_cast<int>(uniform_below(rng, 6)); i < n; ++i) {
      x = world.step(x, Action::policy(uniform_below(rng, kPolicyActionCount))).next;
    }
    const auto a = extract(x, op, world);
    const auto& policy = learner.library().slot(op, task).policy;
    const auto act = policy.greedy(encode(a));
    auto y = x;
    for (EntityId e = 0; e < y.features.size(); ++e) {
      if (e == world.robot() ||
          std::find(op.substitution.begin(), op.substitution.end(), e) !=
              op.substitution.end()) {
        continue;
      }
      for (auto& f : y.features[e]) f = uniform_unit(rng) * 20.0 - 10.0;
    }
    const auto b = extract(y, op, world);
    if (!(a == b) || policy.greedy(encode(b)) != act) ++changed;
    ++trials;
  }
  return {changed == 0,
          fmt::format("{} perturbations, {} changed the abstract state or action",
                      trials, changed)};
}

Outcome reward_bounds() {
  std::vector<TaskContext> tasks;
  for (const char* d : {"drawer", "peg", "coffee"}) tasks.push_back(ts::load(d));
  Rng rng(0xc5);
  std::size_t pairs = 0, out_of_range = 0, iff_violations = 0;
  const double specials[] = {std::nan(""), INFINITY, -INFINITY, -1e300, 1e300};
  while (pairs < 100000) {
    const auto& task = tasks[pairs % tasks.size()];
    const auto& world = *task.world;
    auto x = world.reset(uniform_below(rng, 1 << 20));
    for (int i = 0, n = static_cast<int>(uniform_below(rng, 12)); i < n; ++i) {
      x = world.step(x, Action::policy(uniform_below(rng, kPolicyActionCount))).next;
    }
    auto y = x;
    if (uniform_below(rng, 2)) {
      for (int i = 0, n = static_cast<int>(1 + uniform_below(rng, 4)); i < n; ++i) {
        auto& f = y.features[uniform_below(rng, y.features.size())];
        auto& v = f[uniform_below(rng, f.size())];
        v = uniform_below(rng, 10) == 0 ? specials[uniform_below(rng, 5)]
                                        : uniform_unit(rng) * 12.0 - 3.0;
      }
    }
    const auto& op = task.groundings[uniform_below(rng, task.groundings.size())];
    const double r = reward(x, y, op, RewardSpec{uniform_unit(rng)}, task);
    if (!(r >= 0.0 && r <= 1.0)) ++out_of_range;

    const auto parsed = task.parse(y);
    bool all = true;
    for (const auto& a : op.eff_add) all = all && parsed.contains(a);
    for (const auto& a : op.eff_del) all = all && !parsed.contains(a);
    const double r1 = reward(x, y, op, RewardSpec{1.0}, task);
    if ((r1 == 1.0) != all) ++iff_violations;
    ++pairs;
  }
  return {out_of_range == 0 && iff_violations == 0,
          fmt::format("{} pairs, {} out of [0,1], {} effect-only mismatches", pairs,
                      out_of_range, iff_violations)};
}

Outcome drawer_training() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t solved = 0;
  std::string steps;
  for (auto seed : drawer_cfg.seeds) {
    drawer_runs.push_back(train_drawer_seed(seed));
    const auto& r = drawer_runs.back().result;
    const bool ok = r.steps_to_solve && *r.steps_to_solve <= 200000;
    solved += ok ? 1 : 0;
    steps += (steps.empty() ? "" : " ") +
             (r.steps_to_solve ? std::to_string(*r.steps_to_solve) : std::string("-"));
  }
  const double secs = elapsed_since(t0);
  return {solved >= 8 && secs < 600.0,
          fmt::format("{}/{} seeds solved within 200000 env steps [{}], {:.1f}s",
                      solved, drawer_cfg.seeds.size(), steps, secs)};
}

Outcome curriculum_order() {
  if (drawer_runs.empty()) return {false, "no drawer runs"};
  std::size_t violations = 0;
  for (const auto& run : drawer_runs) {
    const auto& log = run.result.log;
    std::optional<std::string> first;
    std::optional<std::size_t> pull_success, pick_scheduled;
    for (const auto& rec : log) {
      if (rec.kind == LogRecord::Kind::Optimize) {
        if (!first) first = rec.skill;
        if (rec.skill == "pick" && !pick_scheduled) pick_scheduled = rec.iteration;
      }
      // The training plan starts with pull, so any progress means pull verified.
      if (rec.kind == LogRecord::Kind::Episode && rec.progress > 0.0 && !pull_success) {
        pull_success = rec.iteration;
      }
    }
    const bool ok = first == "pull" &&
                    (!pick_scheduled || (pull_success && *pick_scheduled >= *pull_success));
    violations += ok ? 0 : 1;
  }
  return {violations == 0,
          fmt::format("{} runs, {} with pick scheduled before pull succeeded or "
                      "pull not first",
                      drawer_runs.size(), violations)};
}

Outcome generalization() {
  if (drawer_runs.empty()) return {false, "no drawer runs"};
  std::map<std::string, std::vector<double>> progress;
  for (const auto& [goal, path] : drawer_cfg.problems) {
    const auto task = load_task(drawer_cfg, goal);
    for (const auto& run : drawer_runs) {
      const auto p = evaluate_goal(run.library, task, run.seed, 50);
      progress[goal].insert(progress[goal].end(), p.begin(), p.end());
    }
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double train_mean = mean(progress.at("train"));
  bool ok = true;
  std::string detail = fmt::format("train {:.3f}", train_mean);
  for (const auto& [goal, v] : progress) {
    if (goal == "train") continue;
    const double m = mean(v);
    ok = ok && m >= 0.75 * train_mean;
    detail += fmt::format(", {} {:.3f}", goal, m);
  }
  return {ok, detail + fmt::format(" (need >= {:.3f})", 0.75 * train_mean)};
}

Outcome transfer() {
  if (drawer_runs.empty()) return {false, "no drawer runs"};
  const auto cfg = ts::config("coffee");
  const auto task = load_task(cfg, "train");
  std::vector<double> cold, warm;
  for (const auto& run : drawer_runs) {
    auto steps = [](const TrainResult& r) {
      return static_cast<double>(r.steps_to_solve.value_or(r.env_steps));
    };
    cold.push_back(steps(run_seed(cfg, task, run.seed).result));
    warm.push_back(steps(
        run_seed(cfg, task, run.seed, remap_library(run.library, task, cfg.remap)).result));
  }
  const double cm = median(cold), wm = median(warm);
  return {wm <= 0.5 * cm,
          fmt::format("median steps cold {}, warm {}, ratio {:.3f} (need <= 0.5)", cm,
                      wm, wm / cm)};
}

Outcome sharing_ablation() {
  auto task = ts::load("peg");
  const GroundOperator *pick1 = nullptr, *pick2 = nullptr;
  for (const auto& g : task.groundings) {
    const auto name = format_operator(g, task.problem);
    if (name == "(pick peg1)") pick1 = &g;
    if (name == "(pick peg2)") pick2 = &g;
  }
  auto zero_shot = [&](SharingMode mode, std::uint64_t seed) {
    TabularLearner learner({}, mode, seed);
    Environment env(task.world);
    std::uint64_t k = 0;
    learner.optimize(env, *pick1, task, 200, [&](Environment& e) {
      e.reset(mix_seed(seed, 0xa1, k++));
      return true;
    });
    int ok = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
      env.reset(mix_seed(seed, 0xa2, i));
      ok += learner.execute(env, *pick2, task).success ? 1 : 0;
    }
    return ok;
  };
  int better = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int shared = zero_shot(SharingMode::PerLiftedOperator, seed);
    const int separate = zero_shot(SharingMode::PerGrounding, seed);
    better += shared > separate ? 1 : 0;
    detail += fmt::format("{}{}/{}", detail.empty() ? "" : " ", shared, separate);
  }
  return {better >= 8,
          fmt::format("shared beats per-grounding on {}/10 seeds (successes of 20, "
                      "shared/separate: {})",
                      better, detail)};
}

Outcome determinism() {
  auto run = [](const std::string& tag) {
    auto cfg = ts::config("drawer");
    cfg.seeds = {0, 1, 2};
    cfg.eval_episodes = 10;
    cfg.output_dir = (fs::temp_directory_path() / ("skillplan-accept-" + tag)).string();
    fs::remove_all(cfg.output_dir);
    std::ostringstream log;
    cmd_train(cfg, log);
    cmd_eval(cfg, log);
    const fs::path out(cfg.output_dir);
    auto files = std::vector<std::string>{
        read_text_file((out / "train_metrics.csv").string()),
        read_text_file((out / "eval_metrics.csv").string())};
    for (auto seed : cfg.seeds) {
      files.push_back(read_text_file(
          (out / fmt::format("seed-{}", seed) / "training_log.csv").string()));
    }
    fs::remove_all(out);
    return files;
  };
  const auto a = run("a");
  const auto b = run("b");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] == b[i] ? 0 : 1;
  return {differing == 0,
          fmt::format("{} output files compared, {} differ", a.size(), differing)};
}

}  // namespace

int main() {
  drawer_cfg = ts::config("drawer");

  report("C1", "optimal symbolic plans", optimal_plans);
  report("C2", "plans chain through abstract trajectories", abstract_trajectories);
  report("C3", "parser round-trip and fuzzing", parser_robustness);
  report("C4", "abstraction hides non-parameter entities", abstraction_invariance);
  report("C5", "reward bounds and effect-only reward", reward_bounds);
  report("C6", "drawer training converges", drawer_training);
  report("C7", "curriculum schedules the plan frontier", curriculum_order);
  report("C8", "generalization to test goals", generalization);
  report("C9", "warm start speeds up coffee", transfer);
  report("C10", "operator-level sharing generalizes across groundings", sharing_ablation);
  report("C11", "metrics are reproducible", determinism);

  std::cout << (failures == 0 ? "all criteria passed\n"
                              : fmt::format("{} criteria failed\n", failures));
  return failures == 0 ? 0 : 1;
}
