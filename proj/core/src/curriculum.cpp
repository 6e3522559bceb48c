#include "skillplan/curriculum.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

#include "skillplan/rng.hpp"

namespace skillplan {

double progress_score(std::size_t verified, std::size_t plan_length) {
  if (plan_length == 0) return 1.0;
  return static_cast<double>(std::min(verified, plan_length)) /
         static_cast<double>(plan_length);
}

double progress_score(const ExecutionRecord& record) {
  std::size_t verified = 0;
  for (const auto& o : record.outcomes) {
    if (!o.success) break;
    ++verified;
  }
  return progress_score(verified, record.plan.size());
}

namespace {

TaskPlan plan_or_throw(const SymbolicState& init, const Goal& goal,
                       const TaskContext& task) {
  auto result = plan(init, goal, task.groundings);
  if (!result.solved()) {
    throw PlanningError("no plan reaches the goal of problem '" +
                        task.problem.name + "'");
  }
  return std::move(result.plan);
}

}  // namespace

ExecutionRecord planning_with_skills(Environment& env, std::uint64_t seed,
                                     const Goal& goal, const TaskContext& task,
                                     SkillLearner& learner,
                                     std::size_t episode) {
  ExecutionRecord rec;
  rec.episode = episode;
  rec.seed = seed;
  const auto start_steps = env.total_steps();
  env.reset(seed);
  rec.plan = plan_or_throw(task.parse(env.state()), goal, task);
  for (std::size_t i = 0; i < rec.plan.size(); ++i) {
    const auto& op = rec.plan.steps[i];
    EnvState before = env.state();
    if (!applicable(op, task.parse(before))) {
      // A previous skill verified its effects but left a side effect that
      // breaks this step's preconditions.
      rec.outcomes.push_back({op, false, 0.0});
      rec.failed_step = i;
      rec.failure_snapshot = std::move(before);
      break;
    }
    const auto r = learner.execute(env, op, task);
    rec.outcomes.push_back({op, r.success, r.final_reward});
    if (!r.success) {
      rec.failed_step = i;
      rec.failure_snapshot = std::move(before);
      break;
    }
  }
  rec.progress = progress_score(rec);
  rec.env_steps = env.total_steps() - start_steps;
  return rec;
}

void CurriculumConfig::validate() const {
  if (episodes == 0) throw DomainError("curriculum needs at least one episode");
  if (optimize_episodes == 0) {
    throw DomainError("curriculum needs at least one optimize episode");
  }
  if (convergence_window == 0) {
    throw DomainError("convergence window must be positive");
  }
}

TrainResult train(Environment& env, const Goal& goal, const TaskContext& task,
                  SkillLearner& learner, const CurriculumConfig& cfg) {
  cfg.validate();
  TrainResult result;
  const auto start_steps = env.total_steps();
  auto steps_so_far = [&] { return env.total_steps() - start_steps; };
  std::size_t streak = 0;

  for (std::size_t t = 0; t < cfg.max_outer; ++t) {
    result.iterations = t + 1;

    // Evaluate the current skills; failures are collected afresh each round.
    struct Failure {
      std::size_t step;
      EnvState snapshot;
      TaskPlan plan;
    };
    std::vector<std::pair<std::string, Failure>> failures;
    std::map<std::string, std::pair<double, std::size_t>> reward_sums;
    bool all_solved = true;
    double progress_sum = 0.0;
    for (std::size_t i = 0; i < cfg.episodes; ++i) {
      auto rec = planning_with_skills(env, mix_seed(cfg.seed, t, i), goal,
                                      task, learner, i);
      progress_sum += rec.progress;
      for (const auto& o : rec.outcomes) {
        auto& acc = reward_sums[o.op.lifted_name];
        acc.first += o.final_reward;
        ++acc.second;
      }
      result.log.push_back({LogRecord::Kind::Episode, t, i, "task", 0.0,
                            rec.progress, steps_so_far()});
      if (rec.progress < 1.0) all_solved = false;
      if (rec.failed_step) {
        const auto& name = rec.plan.steps[*rec.failed_step].lifted_name;
        const bool seen = std::any_of(
            failures.begin(), failures.end(),
            [&](const auto& f) { return f.first == name; });
        if (!seen) {
          failures.push_back(
              {name, {*rec.failed_step, rec.failure_snapshot, rec.plan}});
        }
      }
    }
    const double mean_progress = progress_sum / static_cast<double>(cfg.episodes);
    for (const auto& [name, acc] : reward_sums) {
      result.log.push_back({LogRecord::Kind::Proficiency, t, 0, name,
                            acc.first / static_cast<double>(acc.second),
                            mean_progress, steps_so_far()});
    }

    if (all_solved && !result.steps_to_solve) {
      result.steps_to_solve = steps_so_far();
    }
    streak = all_solved ? streak + 1 : 0;
    if (streak >= cfg.convergence_window) {
      result.converged = true;
      break;
    }
    if (cfg.max_env_steps && steps_so_far() >= cfg.max_env_steps) break;

    // Schedule each distinct failed lifted operator once.
    for (std::size_t f = 0; f < failures.size(); ++f) {
      const auto& [name, failure] = failures[f];
      const auto& op = failure.plan.steps[failure.step];
      std::size_t k = 0;
      auto reset = [&](Environment& e) {
        e.reset(mix_seed(cfg.seed, t, 0x10000 + f * 0x1000 + k++));
        // Reach the skill's preconditions with the current prefix skills.
        bool reached = true;
        for (std::size_t s = 0; s < failure.step && reached; ++s) {
          const auto& prefix_op = failure.plan.steps[s];
          if (!applicable(prefix_op, task.parse(e.state()))) {
            reached = false;
            break;
          }
          reached = learner.execute(e, prefix_op, task).success;
        }
        if (!reached || !applicable(op, task.parse(e.state()))) {
          e.set_state(failure.snapshot);
        }
        return applicable(op, task.parse(e.state()));
      };
      learner.optimize(env, op, task, cfg.optimize_episodes, reset);
      ++result.optimize_calls;
      const auto it = reward_sums.find(name);
      const double prof =
          it == reward_sums.end() || it->second.second == 0
              ? 0.0
              : it->second.first / static_cast<double>(it->second.second);
      result.log.push_back({LogRecord::Kind::Optimize, t, 0, name, prof,
                            mean_progress, steps_so_far()});
    }
    if (cfg.max_env_steps && steps_so_far() >= cfg.max_env_steps) break;
  }
  result.env_steps = steps_so_far();
  return result;
}

std::string to_string(LogRecord::Kind k) {
  switch (k) {
    case LogRecord::Kind::Episode: return "episode";
    case LogRecord::Kind::Proficiency: return "proficiency";
    case LogRecord::Kind::Optimize: return "optimize";
  }
  return "?";
}

std::string format_log(const std::vector<LogRecord>& log) {
  std::string out = "kind,iteration,episode,skill,proficiency,progress,env_steps\n";
  for (const auto& r : log) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.kind), r.iteration,
                       r.episode, r.skill, r.proficiency, r.progress,
                       r.env_steps);
  }
  return out;
}

}  // namespace skillplan
