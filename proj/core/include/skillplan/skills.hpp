#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillplan/abstraction.hpp"
#include "skillplan/envs.hpp"
#include "skillplan/pddl.hpp"
#include "skillplan/planner.hpp"
#include "skillplan/rng.hpp"
#include "skillplan/symbolic.hpp"

namespace skillplan {

/// A domain file, one of its problems, and the environment it is grounded in.
struct TaskContext {
  DomainSpec domain;
  ProblemSpec problem;
  std::shared_ptr<const World> world;
  std::vector<Predicate> predicates;
  StateParser parser;
  std::vector<GroundOperator> groundings;

  SymbolicState parse(const EnvState& x) const { return parser(x); }
  const LiftedOperator& lifted(std::string_view name) const;
};

/// Binds classifiers, checks the problem roster against the environment and
/// checks that the problem's init equals the parse of a reset state.
TaskContext make_task(DomainSpec domain, ProblemSpec problem, EnvConfig env);

struct RewardSpec {
  double effect_weight = 0.5;  // shaping weight is 1 - effect_weight

  void validate() const;
};

/// (#add atoms true + #delete atoms false) / (|add| + |delete|).
/// Throws DomainError for operators without effects.
double effect_fraction(const SymbolicState& next, const GroundOperator& op);

/// effect_weight * effect_fraction + (1 - effect_weight) * shaping potential,
/// both evaluated on x_next. Always in [0, 1].
double reward(const EnvState& x, const EnvState& x_next,
              const GroundOperator& op, const RewardSpec& spec,
              const TaskContext& task);

/// Discretized abstract state. Robot gripper bit, then for each parameter
/// slot the offset to the robot clipped to [-3, 3] and the slot's status
/// feature binned at 0.25. Only relative quantities enter the key, so one
/// table serves every grounding and every layout.
using StateKey = std::uint64_t;
StateKey encode(const AbstractState& a);

struct Hyperparameters {
  double gamma = 0.99;
  double alpha = 0.1;
  double epsilon_start = 0.3;
  double epsilon_end = 0.05;
  std::size_t epsilon_decay_episodes = 200;
  std::size_t horizon = 64;
  std::size_t replay_capacity = 50'000;
  std::size_t minibatch = 32;
  RewardSpec reward;

  void validate() const;
  bool operator==(const Hyperparameters& o) const;
};

struct Transition {
  StateKey state = 0;
  std::uint8_t action = 0;
  double reward = 0.0;
  StateKey next = 0;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

/// Bounded FIFO of transitions.
class ReplayStore {
 public:
  explicit ReplayStore(std::size_t capacity = 50'000);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  const Transition& sample(Rng& rng) const;

  bool operator==(const ReplayStore&) const = default;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

using ActionValues = std::array<double, kPolicyActionCount>;

/// Tabular action-value policy for one lifted operator.
class SkillPolicy {
 public:
  SkillPolicy() = default;
  SkillPolicy(AbstractSignature signature, Hyperparameters hp);

  const AbstractSignature& signature() const { return signature_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  const std::string& name() const { return signature_.op; }

  double epsilon() const;
  std::size_t episodes() const { return episodes_; }
  void count_episode() { ++episodes_; }

  /// Greedy ties go to the lowest action index.
  std::size_t greedy(StateKey s) const;
  std::size_t act(StateKey s, bool explore, Rng& rng) const;
  void update(const Transition& t);
  const ActionValues* values(StateKey s) const;

  std::size_t table_size() const { return table_.size(); }
  const std::unordered_map<StateKey, ActionValues>& table() const {
    return table_;
  }

  /// Adopts another operator's signature, e.g. when transferring a policy
  /// across domains. Throws DomainError unless the layouts are compatible.
  void rebind(AbstractSignature signature);

  void write(std::ostream& out) const;
  static SkillPolicy read(std::istream& in);

  bool operator==(const SkillPolicy& o) const;

 private:
  AbstractSignature signature_;
  Hyperparameters hp_;
  std::size_t episodes_ = 0;
  std::unordered_map<StateKey, ActionValues> table_;
};

/// A policy with the replay store it learns from.
struct SkillSlot {
  SkillPolicy policy;
  ReplayStore store;
};

struct RolloutRecord {
  GroundOperator op;
  std::vector<Transition> transitions;
  bool success = false;
  std::size_t steps = 0;           // policy steps, at most the horizon
  std::size_t approach_steps = 0;  // primitive steps of the approach macro
  double final_reward = 0.0;
};

struct RolloutOptions {
  bool explore = false;
  bool learn = false;  // update the policy from the store after each step
};

/// Approaches the first parameter, then runs up to `horizon` policy steps.
/// Stops as soon as the expected successor of the pre-rollout symbolic state
/// is contained in the parsed state. Throws PreconditionViolation when `op`
/// is not applicable in the current state.
RolloutRecord rollout_skill(Environment& env, SkillSlot& slot,
                            const GroundOperator& op, const TaskContext& task,
                            const RolloutOptions& options, Rng& rng);

/// Shortest primitive action sequence, found by breadth-first search over the
/// simulator, that reaches the operator's expected successor. Used as a
/// perfect reference controller. Empty optional when none exists within
/// `max_depth` steps.
std::optional<std::vector<Action>> scripted_controller(
    const World& world, const EnvState& start, const GroundOperator& op,
    const TaskContext& task, std::size_t max_depth = 64);

enum class SharingMode {
  PerLiftedOperator,  // one policy and one replay store per lifted operator
  PerGrounding,       // ablation: separate policy and store per grounding
};

std::string to_string(SharingMode m);
SharingMode parse_sharing_mode(std::string_view text);

class SkillLibrary {
 public:
  SkillLibrary(Hyperparameters hp, SharingMode mode);

  const Hyperparameters& hyperparameters() const { return hp_; }
  SharingMode mode() const { return mode_; }

  /// Policy slot for a grounding; created on first use.
  SkillSlot& slot(const GroundOperator& op, const TaskContext& task);
  const SkillSlot* find(const std::string& key) const;
  std::string key_for(const GroundOperator& op) const;

  const std::map<std::string, SkillSlot>& slots() const { return slots_; }
  void put(const std::string& key, SkillSlot slot);

  bool operator==(const SkillLibrary& o) const;

 private:
  Hyperparameters hp_;
  SharingMode mode_;
  std::map<std::string, SkillSlot> slots_;
};

/// Skill execution and improvement contract used by the curriculum.
class SkillLearner {
 public:
  virtual ~SkillLearner() = default;

  /// Runs the skill greedily from the current environment state.
  virtual RolloutRecord execute(Environment& env, const GroundOperator& op,
                                const TaskContext& task) = 0;

  /// Runs `episodes` learning episodes. `reset` puts the environment in a
  /// state where `op` is applicable and returns false if it could not.
  virtual void optimize(Environment& env, const GroundOperator& op,
                        const TaskContext& task, std::size_t episodes,
                        const std::function<bool(Environment&)>& reset) = 0;
};

/// Q-learning with replay over the relative state key.
class TabularLearner final : public SkillLearner {
 public:
  TabularLearner(Hyperparameters hp, SharingMode mode, std::uint64_t seed);
  /// Warm start from previously trained skills.
  TabularLearner(SkillLibrary library, std::uint64_t seed);

  RolloutRecord execute(Environment& env, const GroundOperator& op,
                        const TaskContext& task) override;
  void optimize(Environment& env, const GroundOperator& op,
                const TaskContext& task, std::size_t episodes,
                const std::function<bool(Environment&)>& reset) override;

  SkillLibrary& library() { return library_; }
  const SkillLibrary& library() const { return library_; }

 private:
  SkillLibrary library_;
  Rng rng_;
};

/// Executes the reference controller; never learns. Useful as a stand-in for
/// fully trained skills.
class ScriptedLearner final : public SkillLearner {
 public:
  RolloutRecord execute(Environment& env, const GroundOperator& op,
                        const TaskContext& task) override;
  void optimize(Environment&, const GroundOperator&, const TaskContext&,
                std::size_t, const std::function<bool(Environment&)>&) override {}
  std::size_t horizon = 64;
  RewardSpec reward_spec;
};

/// Mean final reward over greedy rollouts of `ops`, one episode per seed.
/// `reset` prepares the environment for (op, seed) and returns false to skip.
double proficiency(SkillLearner& learner, Environment& env,
                   std::span<const GroundOperator> ops,
                   std::span<const std::uint64_t> seeds,
                   const TaskContext& task,
                   const std::function<bool(Environment&, const GroundOperator&,
                                            std::uint64_t)>& reset);

// Checkpoints: one binary file per slot plus a text manifest.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const SkillSlot& slot);
SkillSlot read_checkpoint(const std::string& path);

/// Writes every slot to `dir` and a manifest listing them.
void save_library(const SkillLibrary& lib, const std::string& dir);
/// Reads the manifest in `dir` and loads every listed slot.
SkillLibrary load_library(const std::string& dir);

}  // namespace skillplan
