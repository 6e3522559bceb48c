#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "skillplan/pddl.hpp"
#include "skillplan/symbolic.hpp"

namespace skillplan {

struct TaskPlan {
  std::vector<GroundOperator> steps;
  /// expected_states[0] is the initial state; expected_states[i + 1] is the
  /// state after steps[i].
  std::vector<SymbolicState> expected_states;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

enum class Heuristic { Zero, GoalCount };

struct PlannerConfig {
  Heuristic heuristic = Heuristic::Zero;
  std::size_t max_expansions = 1'000'000;
};

enum class PlanStatus { Solved, Unsolvable, BudgetExceeded };

struct PlanResult {
  PlanStatus status = PlanStatus::Unsolvable;
  TaskPlan plan;
  std::size_t expansions = 0;

  bool solved() const { return status == PlanStatus::Solved; }
};

/// Every type-correct grounding of every operator, sorted by
/// (operator name, argument names). This order is the planner's tie-break.
std::vector<GroundOperator> enumerate_groundings(
    std::span<const LiftedOperator> operators,
    std::span<const ObjectEntity> entities);

/// Best-first search over symbolic states with unit action costs. Open list
/// ordered by (g + h, g, insertion). With Heuristic::Zero the result is a
/// shortest plan.
PlanResult plan(const SymbolicState& init, const Goal& goal,
                std::span<const GroundOperator> grounded,
                const PlannerConfig& cfg = {});

/// Chains apply() from init and checks the goal at the end.
bool validate_plan(const TaskPlan& p, const SymbolicState& init,
                   const Goal& goal);

/// Builds expected_states by chaining apply(); throws PreconditionViolation.
TaskPlan make_plan(std::vector<GroundOperator> steps,
                   const SymbolicState& init);

/// Number of goal atoms missing from s.
std::size_t goal_count(const Goal& goal, const SymbolicState& s);

/// One step per line, "(op-name arg1 arg2)".
std::string dump_plan(const TaskPlan& p, const ProblemSpec& problem);

/// Inverse of dump_plan. Operators are looked up in `grounded` by printed
/// form; blank lines and ';' comments are skipped.
std::vector<GroundOperator> read_plan(std::string_view text,
                                      std::span<const GroundOperator> grounded,
                                      const ProblemSpec& problem);

}  // namespace skillplan
