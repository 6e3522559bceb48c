#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillplan/envs.hpp"
#include "skillplan/planner.hpp"
#include "skillplan/skills.hpp"

namespace skillplan {

/// The task planner found no plan (or ran out of budget). Distinct from a
/// skill failing during execution.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepOutcome {
  GroundOperator op;
  bool success = false;
  double final_reward = 0.0;
};

struct ExecutionRecord {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  TaskPlan plan;
  std::vector<StepOutcome> outcomes;  // stops at the first failure
  std::optional<std::size_t> failed_step;
  EnvState failure_snapshot;  // state right before the failed skill started
  double progress = 0.0;
  std::uint64_t env_steps = 0;
};

/// Verified steps over plan length; 1 for an empty plan.
double progress_score(std::size_t verified, std::size_t plan_length);
double progress_score(const ExecutionRecord& record);

/// Plans from the parse of `env.reset(seed)` and executes the plan step by
/// step with the learner's skills, stopping at the first step whose expected
/// effects do not verify. Throws PlanningError if the goal is unreachable.
ExecutionRecord planning_with_skills(Environment& env, std::uint64_t seed,
                                     const Goal& goal, const TaskContext& task,
                                     SkillLearner& learner,
                                     std::size_t episode = 0);

struct CurriculumConfig {
  std::size_t episodes = 10;          // N
  std::size_t optimize_episodes = 50; // K
  std::size_t max_outer = 500;
  std::size_t convergence_window = 3;
  std::uint64_t max_env_steps = 0;    // 0 means unlimited
  std::uint64_t seed = 0;

  void validate() const;
};

/// One line of the training log.
struct LogRecord {
  enum class Kind { Episode, Proficiency, Optimize };
  Kind kind = Kind::Episode;
  std::size_t iteration = 0;
  std::size_t episode = 0;     // Episode rows only
  std::string skill;           // lifted operator, or "task"
  double proficiency = 0.0;    // mean final reward of the skill's greedy runs
  double progress = 0.0;
  std::uint64_t env_steps = 0; // cumulative primitive steps
};

struct TrainResult {
  bool converged = false;
  std::size_t iterations = 0;
  std::uint64_t env_steps = 0;
  /// Cumulative steps at the end of the first iteration in which every
  /// episode reached progress 1.
  std::optional<std::uint64_t> steps_to_solve;
  std::size_t optimize_calls = 0;
  std::vector<LogRecord> log;
};

/// Alternates N plan-execution episodes with optimization of every lifted
/// operator that failed in them. Converged once `convergence_window`
/// consecutive iterations have all episodes at progress 1.
TrainResult train(Environment& env, const Goal& goal, const TaskContext& task,
                  SkillLearner& learner, const CurriculumConfig& cfg);

std::string to_string(LogRecord::Kind k);
/// CSV with header "kind,iteration,episode,skill,proficiency,progress,env_steps".
std::string format_log(const std::vector<LogRecord>& log);

}  // namespace skillplan
