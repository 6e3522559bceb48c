#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillplan/pddl.hpp"
#include "skillplan/symbolic.hpp"

namespace skillplan {

enum class DomainId { Drawer, Peg, Coffee };

DomainId parse_domain_id(std::string_view name);
std::string to_string(DomainId id);

struct EnvConfig {
  DomainId domain = DomainId::Drawer;
  int width = 6;
  int height = 5;
  std::uint64_t seed = 0;
  bool randomize_layout = true;

  /// Throws DomainError on grids smaller than 4x4.
  void validate() const;
};

enum class ActionKind : std::uint8_t {
  North,
  South,
  East,
  West,
  Grasp,
  Release,
  Pull,
  Push,
  Insert,
  Approach,
};

/// The policy action set: every primitive except approach, in a fixed order
/// shared by all domains.
inline constexpr std::size_t kPolicyActionCount = 9;

struct Action {
  ActionKind kind = ActionKind::North;
  EntityId target = 0;  // approach only

  static Action move(int dx, int dy);
  static Action approach(EntityId target) { return {ActionKind::Approach, target}; }
  static Action policy(std::size_t index);

  bool operator==(const Action&) const = default;
};

struct StepResult {
  EnvState next;
  bool terminated = false;
  std::size_t primitive_steps = 0;
};

/// Feature layout per entity kind.
///   robot    (x, y, gripper_open, target_dx, target_dy)
///   object   (x, y, attached, contained)
///   cabinet  (x, y, opening_extent)       handle cell is (x, y - 1)
///   hole     (x, y, filled)
///   machine  (x, y, lid_closed, filled)
enum class EntityKind { Robot, Object, Cabinet, Hole, Machine };

/// Immutable description of one desk-scale domain: entity roster, grid,
/// rule table and classifier registry. All state transitions are pure
/// functions of (EnvState, Action).
class World {
 public:
  explicit World(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  DomainId domain() const { return cfg_.domain; }
  int width() const { return cfg_.width; }
  int height() const { return cfg_.height; }

  /// Sorted by name, matching the corpus problem files' EntityId order.
  const std::vector<ObjectEntity>& entities() const { return entities_; }
  const std::vector<ObjectType>& types() const { return types_; }
  std::size_t feature_dim(std::string_view type) const;
  EntityKind kind(EntityId e) const { return kinds_.at(e); }
  EntityId robot() const { return robot_; }
  std::optional<EntityId> find_entity(std::string_view name) const;

  /// Deterministic in (seed, randomize_layout).
  EnvState reset(std::uint64_t seed) const;
  EnvState reset() const { return reset(cfg_.seed); }

  /// Infeasible actions leave the state unchanged.
  StepResult step(const EnvState& s, const Action& a) const;

  /// Moves the gripper along a shortest passable path to the nearest cell
  /// within Manhattan distance 1 of the target. The macro-step consumes one
  /// primitive step per cell moved. Unreachable targets (including objects in
  /// closed containers) leave the state unchanged.
  StepResult approach(const EnvState& s, EntityId target) const;

  /// Sets the entity the robot's offset features refer to.
  EnvState with_focus(const EnvState& s, EntityId target) const;

  /// Classifier per predicate name for this domain.
  const std::map<std::string, Classifier>& registry() const {
    return registry_;
  }
  /// Binds the domain's predicate signatures to classifiers in declaration
  /// (sorted) order. Missing bindings raise DomainError.
  std::vector<Predicate> bind(const DomainSpec& domain) const;

  /// Throws DomainError if the problem's objects differ from the roster.
  void check_problem(const ProblemSpec& problem) const;

  /// Normalized shaping potential in [0, 1] for a ground operator. For an
  /// object delivered to a second parameter: 0.5 x closeness of the gripper
  /// to the object, 0.5 + 0.5 x closeness of the held object to the target,
  /// 1 once they share a cell. Otherwise closeness of the gripper to the
  /// first parameter's interaction cell.
  double shaping_potential(const EnvState& s, const GroundOperator& op) const;

  bool passable(const EnvState& s, int x, int y) const;
  std::pair<int, int> position(const EnvState& s, EntityId e) const;
  std::pair<int, int> interaction_cell(const EnvState& s, EntityId e) const;

  std::string render(const EnvState& s) const;

 private:
  void build_roster();
  void build_registry();
  void refresh_offsets(EnvState& s) const;
  std::optional<EntityId> held_object(const EnvState& s) const;
  bool reachable_target(const EnvState& s, EntityId target) const;

  EnvConfig cfg_;
  std::vector<ObjectEntity> entities_;
  std::vector<EntityKind> kinds_;
  std::vector<ObjectType> types_;
  std::map<std::string, Classifier> registry_;
  EntityId robot_ = 0;
};

/// A running episode: owns its state and counts primitive steps.
class Environment {
 public:
  explicit Environment(std::shared_ptr<const World> world);

  const World& world() const { return *world_; }
  std::shared_ptr<const World> world_ptr() const { return world_; }

  const EnvState& reset(std::uint64_t seed);
  const EnvState& state() const { return state_; }
  /// State injection, e.g. restoring a recorded snapshot.
  void set_state(EnvState s) { state_ = std::move(s); }

  StepResult step(const Action& a);
  StepResult approach(EntityId target);
  void focus(EntityId target);

  std::uint64_t total_steps() const { return total_steps_; }

  /// Episode-level budget; step results report terminated once exceeded.
  void set_step_budget(std::optional<std::uint64_t> budget) { budget_ = budget; }

 private:
  std::shared_ptr<const World> world_;
  EnvState state_;
  std::uint64_t total_steps_ = 0;
  std::uint64_t episode_steps_ = 0;
  std::optional<std::uint64_t> budget_;
};

/// Text form of an action: "move 1 0", "grasp", "approach cab1", ...
std::string format_action(const Action& a, const World& world);
Action parse_action(std::string_view text, const World& world);

/// Golden trajectory file: header lines ("domain", "seed", "layout") then
/// segments introduced by "op (name args)" lines, each followed by actions.
struct TrajectorySegment {
  std::string op;                    // printed ground operator
  std::vector<std::string> actions;  // resolved with parse_action
};

struct Trajectory {
  DomainId domain = DomainId::Drawer;
  std::uint64_t seed = 0;
  bool randomize_layout = false;
  std::vector<TrajectorySegment> segments;
};

Trajectory parse_trajectory(std::string_view text);
std::string format_trajectory(const Trajectory& t);

}  // namespace skillplan
