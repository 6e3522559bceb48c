#include "skillplan/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "skillplan/rng.hpp"

namespace skillplan {

namespace fs = std::filesystem;

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  if (!(in >> out) || !in.eof() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string resolve(const std::string& base, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base) / p).lexically_normal().string();
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment",
       {"name", "domain", "domain_file", "train", "test1", "test2", "goal",
        "seeds", "learner", "output_dir"}},
      {"env", {"width", "height", "randomize_layout"}},
      {"learner",
       {"gamma", "alpha", "epsilon_start", "epsilon_end",
        "epsilon_decay_episodes", "horizon", "replay_capacity", "minibatch",
        "effect_weight", "sharing"}},
      {"curriculum",
       {"episodes", "optimize_episodes", "max_outer", "convergence_window",
        "max_env_steps"}},
      {"eval", {"episodes"}},
      {"transfer", {"source", "remap", "ratio"}},
  };
  return keys;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (auto dash = item.find('-'); dash != std::string::npos) {
      const auto lo = to_u64("seeds", trim(item.substr(0, dash)));
      const auto hi = to_u64("seeds", trim(item.substr(dash + 1)));
      if (hi < lo || hi - lo > 100'000) {
        throw ConfigError("seeds: bad range '" + item + "'");
      }
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(to_u64("seeds", item));
    }
  }
  if (seeds.empty()) throw ConfigError("seeds: list is empty");
  return seeds;
}

ExperimentConfig parse_config(std::string_view text,
                              const std::string& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }

  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      throw ConfigError("unknown config section [" + section + "]");
    }
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside of a section");
    }
    for (const auto& [key, node] : body) {
      if (!known->second.count(key)) {
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      }
      const std::string v = trim(node.data());
      const std::string where = section + "." + key;
      if (section == "experiment") {
        if (key == "name") cfg.name = v;
        else if (key == "domain") cfg.env.domain = parse_domain_id(v);
        else if (key == "domain_file") cfg.domain_file = resolve(base_dir, v);
        else if (key == "train" || key == "test1" || key == "test2")
          cfg.problems[key] = resolve(base_dir, v);
        else if (key == "goal") cfg.goal = v;
        else if (key == "seeds") cfg.seeds = parse_seed_list(v);
        else if (key == "output_dir") cfg.output_dir = resolve(base_dir, v);
        else if (key == "learner") {
          if (v == "tabular") cfg.learner = LearnerKind::Tabular;
          else if (v == "scripted") cfg.learner = LearnerKind::Scripted;
          else throw ConfigError(where + ": expected tabular or scripted");
        }
      } else if (section == "env") {
        if (key == "width") cfg.env.width = static_cast<int>(to_u64(where, v));
        else if (key == "height") cfg.env.height = static_cast<int>(to_u64(where, v));
        else cfg.env.randomize_layout = to_bool(where, v);
      } else if (section == "learner") {
        auto& hp = cfg.hp;
        if (key == "gamma") hp.gamma = to_double(where, v);
        else if (key == "alpha") hp.alpha = to_double(where, v);
        else if (key == "epsilon_start") hp.epsilon_start = to_double(where, v);
        else if (key == "epsilon_end") hp.epsilon_end = to_double(where, v);
        else if (key == "epsilon_decay_episodes") hp.epsilon_decay_episodes = to_u64(where, v);
        else if (key == "horizon") hp.horizon = to_u64(where, v);
        else if (key == "replay_capacity") hp.replay_capacity = to_u64(where, v);
        else if (key == "minibatch") hp.minibatch = to_u64(where, v);
        else if (key == "effect_weight") hp.reward.effect_weight = to_double(where, v);
        else cfg.sharing = parse_sharing_mode(v);
      } else if (section == "curriculum") {
        auto& c = cfg.curriculum;
        if (key == "episodes") c.episodes = to_u64(where, v);
        else if (key == "optimize_episodes") c.optimize_episodes = to_u64(where, v);
        else if (key == "max_outer") c.max_outer = to_u64(where, v);
        else if (key == "convergence_window") c.convergence_window = to_u64(where, v);
        else c.max_env_steps = to_u64(where, v);
      } else if (section == "eval") {
        cfg.eval_episodes = to_u64(where, v);
      } else if (section == "transfer") {
        if (key == "source") cfg.transfer_source = resolve(base_dir, v);
        else if (key == "ratio") cfg.transfer_ratio = to_double(where, v);
        else {
          std::istringstream pairs(v);
          std::string pair;
          while (pairs >> pair) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos || colon == 0 ||
                colon + 1 == pair.size()) {
              throw ConfigError(where + ": expected source:target pairs");
            }
            cfg.remap.emplace_back(pair.substr(0, colon), pair.substr(colon + 1));
          }
        }
      }
    }
  }
  try {
    cfg.hp.validate();
    cfg.curriculum.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = fs::path(path).parent_path().string();
  return parse_config(buf.str(), base.empty() ? "." : base);
}

void ExperimentConfig::validate() const {
  auto must_exist = [](const std::string& what, const std::string& path) {
    if (path.empty()) throw ConfigError(what + " is not set");
    if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
  };
  must_exist("domain_file", domain_file);
  if (!problems.count(goal)) {
    throw ConfigError("no problem file configured for goal '" + goal + "'");
  }
  for (const auto& [id, path] : problems) must_exist("problem " + id, path);
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (eval_episodes == 0) throw ConfigError("eval.episodes must be positive");
  try {
    env.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

void MetricsTable::add(MetricRow row) { rows_.push_back(std::move(row)); }

std::vector<double> MetricsTable::values(std::string_view subject,
                                         std::string_view metric) const {
  std::vector<double> out;
  for (const auto& r : rows_) {
    if (r.subject == subject && r.metric == metric) out.push_back(r.value);
  }
  return out;
}

std::string MetricsTable::to_csv() const {
  std::string out = fmt::format("#schema={}\n", kMetricsSchema);
  out += "experiment,seed,iteration,subject,metric,value\n";
  for (const auto& r : rows_) {
    out += fmt::format("{},{},{},{},{},{}\n", r.experiment, r.seed, r.iteration,
                       r.subject, r.metric, r.value);
  }
  return out;
}

void MetricsTable::write(const std::string& path) const {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << to_csv();
  if (!out) throw ConfigError("cannot write " + path);
}

MetricsTable MetricsTable::parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != fmt::format("#schema={}", kMetricsSchema)) {
    throw ConfigError("metrics file lacks the schema line");
  }
  if (!std::getline(in, line) ||
      line != "experiment,seed,iteration,subject,metric,value") {
    throw ConfigError("metrics file has an unexpected header");
  }
  MetricsTable t;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw ConfigError(fmt::format("metrics line {}: expected 6 columns", line_no));
    }
    const auto where = fmt::format("metrics line {}", line_no);
    double value = 0.0;
    if (cells[5] == "nan") value = std::nan("");
    else value = to_double(where, cells[5]);
    t.add({cells[0], to_u64(where, cells[1]), to_u64(where, cells[2]), cells[3],
           cells[4], value});
  }
  return t;
}

TaskContext load_task(const ExperimentConfig& cfg, const std::string& goal) {
  auto it = cfg.problems.find(goal);
  if (it == cfg.problems.end()) {
    throw ConfigError("no problem file configured for goal '" + goal + "'");
  }
  auto domain = parse_domain(read_text_file(cfg.domain_file));
  auto problem = parse_problem(read_text_file(it->second), domain);
  return make_task(std::move(domain), std::move(problem), cfg.env);
}

std::string seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return (fs::path(cfg.output_dir) / fmt::format("seed-{}", seed)).string();
}

SeedRun run_seed(const ExperimentConfig& cfg, const TaskContext& task,
                 std::uint64_t seed, std::optional<SkillLibrary> warm) {
  Environment env(task.world);
  CurriculumConfig cc = cfg.curriculum;
  cc.seed = seed;
  if (cfg.learner == LearnerKind::Scripted) {
    ScriptedLearner learner;
    learner.horizon = cfg.hp.horizon;
    learner.reward_spec = cfg.hp.reward;
    auto result = train(env, task.problem.goal, task, learner, cc);
    return {seed, std::move(result), SkillLibrary(cfg.hp, cfg.sharing)};
  }
  TabularLearner learner =
      warm ? TabularLearner(std::move(*warm), seed)
           : TabularLearner(cfg.hp, cfg.sharing, seed);
  auto result = train(env, task.problem.goal, task, learner, cc);
  return {seed, std::move(result), learner.library()};
}

std::vector<double> evaluate_goal(const SkillLibrary& library,
                                  const TaskContext& task, std::uint64_t seed,
                                  std::size_t episodes) {
  const auto first = plan(task.problem.init, task.problem.goal, task.groundings);
  if (!first.solved()) {
    throw PlanningError("goal of problem '" + task.problem.name +
                        "' is unreachable");
  }
  for (const auto& op : first.plan.steps) {
    if (!library.find(library.key_for(op))) {
      throw DomainError("no checkpoint for operator " +
                        format_operator(op, task.problem));
    }
  }
  TabularLearner learner(library, seed);  // private copy; nothing is written back
  Environment env(task.world);
  std::vector<double> progress;
  for (std::size_t e = 0; e < episodes; ++e) {
    progress.push_back(planning_with_skills(env, mix_seed(seed, 0xe7a1u, e),
                                            task.problem.goal, task, learner, e)
                           .progress);
  }
  return progress;
}

SkillLibrary remap_library(
    const SkillLibrary& source, const TaskContext& target,
    const std::vector<std::pair<std::string, std::string>>& remap) {
  if (source.mode() != SharingMode::PerLiftedOperator) {
    throw DomainError("only per-operator skill libraries can be transferred");
  }
  SkillLibrary out(source.hyperparameters(), SharingMode::PerLiftedOperator);
  for (const auto& [from, to] : remap) {
    const auto* slot = source.find(from);
    if (!slot) throw DomainError("source has no skill '" + from + "'");
    const auto sig = abstract_space_signature(target.lifted(to), target.domain,
                                              *target.world);
    SkillSlot copy = *slot;
    copy.policy.rebind(sig);
    out.put(to, std::move(copy));
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_plan(const std::string& domain_file, const std::string& problem_file,
             std::ostream& out) {
  const auto domain = parse_domain(read_text_file(domain_file));
  const auto problem = parse_problem(read_text_file(problem_file), domain);
  const auto grounded = enumerate_groundings(domain.operators, problem.objects);
  const auto result = plan(problem.init, problem.goal, grounded);
  if (!result.solved()) {
    out << "UNSOLVABLE\n";
    return kExitUsage;
  }
  out << dump_plan(result.plan, problem);
  return kExitOk;
}

namespace {

void add_training_rows(MetricsTable& table, const std::string& experiment,
                       std::uint64_t seed, const TrainResult& r,
                       const std::string& prefix = "") {
  std::map<std::size_t, std::pair<double, std::size_t>> progress;
  std::map<std::size_t, std::uint64_t> steps;
  for (const auto& l : r.log) {
    switch (l.kind) {
      case LogRecord::Kind::Episode:
        progress[l.iteration].first += l.progress;
        ++progress[l.iteration].second;
        steps[l.iteration] = l.env_steps;
        break;
      case LogRecord::Kind::Proficiency:
        table.add({experiment, seed, l.iteration, l.skill,
                   prefix + "proficiency", l.proficiency});
        break;
      case LogRecord::Kind::Optimize:
        table.add({experiment, seed, l.iteration, l.skill, prefix + "scheduled",
                   1.0});
        break;
    }
  }
  for (const auto& [it, acc] : progress) {
    table.add({experiment, seed, it, "task", prefix + "progress",
               acc.first / static_cast<double>(acc.second)});
    table.add({experiment, seed, it, "task", prefix + "env_steps",
               static_cast<double>(steps[it])});
  }
  const auto last = r.iterations;
  table.add({experiment, seed, last, "task", prefix + "converged",
             r.converged ? 1.0 : 0.0});
  table.add({experiment, seed, last, "task", prefix + "total_env_steps",
             static_cast<double>(r.env_steps)});
  table.add({experiment, seed, last, "task", prefix + "steps_to_solve",
             r.steps_to_solve ? static_cast<double>(*r.steps_to_solve)
                              : std::nan("")});
  table.add({experiment, seed, last, "task", prefix + "optimize_calls",
             static_cast<double>(r.optimize_calls)});
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ConfigError("cannot write " + path);
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto task = load_task(cfg, cfg.goal);
  MetricsTable table;
  bool all_converged = true;
  for (auto seed : cfg.seeds) {
    auto run = run_seed(cfg, task, seed);
    const auto dir = seed_dir(cfg, seed);
    save_library(run.library, (fs::path(dir) / "checkpoints").string());
    write_text((fs::path(dir) / "training_log.csv").string(),
               format_log(run.result.log));
    add_training_rows(table, cfg.name, seed, run.result);
    all_converged = all_converged && run.result.converged;
    log << fmt::format("seed {}: {} after {} iterations, {} env steps\n", seed,
                       run.result.converged ? "converged" : "not converged",
                       run.result.iterations, run.result.env_steps);
  }
  table.write((fs::path(cfg.output_dir) / "train_metrics.csv").string());
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::map<std::string, TaskContext> tasks;
  for (const auto& [goal, path] : cfg.problems) tasks.emplace(goal, load_task(cfg, goal));
  MetricsTable table;
  for (auto seed : cfg.seeds) {
    const auto library =
        load_library((fs::path(seed_dir(cfg, seed)) / "checkpoints").string());
    for (const auto& [goal, task] : tasks) {
      const auto progress = evaluate_goal(library, task, seed, cfg.eval_episodes);
      const double n = static_cast<double>(progress.size());
      const double mean = std::accumulate(progress.begin(), progress.end(), 0.0) / n;
      double var = 0.0;
      for (double p : progress) var += (p - mean) * (p - mean);
      const double sd = std::sqrt(var / n);
      table.add({cfg.name, seed, 0, goal, "progress_mean", mean});
      table.add({cfg.name, seed, 0, goal, "progress_std", sd});
      table.add({cfg.name, seed, 0, goal, "episodes", n});
      log << fmt::format("seed {} goal {}: progress {:.3f} +/- {:.3f}\n", seed,
                         goal, mean, sd);
    }
  }
  table.write((fs::path(cfg.output_dir) / "eval_metrics.csv").string());
  return kExitOk;
}

int cmd_transfer(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.transfer_source.empty() || cfg.remap.empty()) {
    throw ConfigError("transfer needs [transfer] source and remap");
  }
  const auto task = load_task(cfg, cfg.goal);
  MetricsTable table;
  std::vector<double> cold_steps, warm_steps;
  bool all_converged = true;
  for (auto seed : cfg.seeds) {
    ExperimentConfig source_dirs = cfg;
    source_dirs.output_dir = cfg.transfer_source;
    const auto source = load_library(
        (fs::path(seed_dir(source_dirs, seed)) / "checkpoints").string());
    auto warm_lib = remap_library(source, task, cfg.remap);

    const auto cold = run_seed(cfg, task, seed);
    const auto warm = run_seed(cfg, task, seed, std::move(warm_lib));
    add_training_rows(table, cfg.name, seed, cold.result, "cold_");
    add_training_rows(table, cfg.name, seed, warm.result, "warm_");
    // Runs that never solve count with their whole budget.
    auto solved_at = [](const TrainResult& r) {
      return static_cast<double>(r.steps_to_solve.value_or(r.env_steps));
    };
    cold_steps.push_back(solved_at(cold.result));
    warm_steps.push_back(solved_at(warm.result));
    all_converged = all_converged && cold.result.converged && warm.result.converged;
    log << fmt::format("seed {}: cold {} steps, warm {} steps\n", seed,
                       cold_steps.back(), warm_steps.back());
  }
  const double cm = median(cold_steps), wm = median(warm_steps);
  table.add({cfg.name, 0, 0, "all", "cold_median_steps", cm});
  table.add({cfg.name, 0, 0, "all", "warm_median_steps", wm});
  table.add({cfg.name, 0, 0, "all", "warm_over_cold", wm / cm});
  table.write((fs::path(cfg.output_dir) / "transfer_metrics.csv").string());
  log << fmt::format("median steps to solve: cold {}, warm {} (ratio {:.3f}, target <= {})\n",
                     cm, wm, wm / cm, cfg.transfer_ratio);
  return all_converged ? kExitOk : kExitNotConverged;
}

}  // namespace skillplan
