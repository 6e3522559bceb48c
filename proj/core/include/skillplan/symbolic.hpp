#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skillplan {

using EntityId = std::uint16_t;
using PredicateId = std::uint16_t;

inline constexpr std::size_t kMaxArity = 4;

/// Raised when a domain, problem or classifier binding is inconsistent.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by apply() when the operator's preconditions do not hold.
class PreconditionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectType {
  std::string name;
  std::size_t feature_dim = 1;

  bool operator==(const ObjectType&) const = default;
};

struct ObjectEntity {
  std::string name;
  std::string type;

  bool operator==(const ObjectEntity&) const = default;
};

/// Continuous observation: one feature vector per entity, indexed by EntityId.
/// `focus` names the entity the robot's relative-offset features refer to.
struct EnvState {
  std::vector<std::vector<double>> features;
  std::optional<EntityId> focus;

  bool operator==(const EnvState&) const = default;
};

struct PredicateSignature {
  std::string name;
  std::vector<std::string> arg_types;

  bool operator==(const PredicateSignature&) const = default;
};

using Classifier =
    std::function<bool(const EnvState&, std::span<const EntityId>)>;

struct Predicate {
  PredicateSignature signature;
  Classifier classifier;
};

/// Predicate applied to entities. Ordering is (predicate id, args), which is
/// the canonical name order as long as predicate and entity tables are sorted
/// by name (DomainSpec and ProblemSpec guarantee this).
struct GroundAtom {
  PredicateId predicate = 0;
  std::uint8_t arity = 0;
  std::array<EntityId, kMaxArity> args{};

  GroundAtom() = default;
  GroundAtom(PredicateId pred, std::span<const EntityId> arguments);

  std::span<const EntityId> arguments() const { return {args.data(), arity}; }

  auto operator<=>(const GroundAtom&) const = default;
  bool operator==(const GroundAtom&) const = default;
};

/// Predicate applied to operator parameters (indices into PAR).
struct LiftedAtom {
  PredicateId predicate = 0;
  std::vector<std::uint8_t> params;

  auto operator<=>(const LiftedAtom&) const = default;
  bool operator==(const LiftedAtom&) const = default;
};

/// Sorted, duplicate-free set of true ground atoms. Absent atoms are false.
class SymbolicState {
 public:
  SymbolicState() = default;
  explicit SymbolicState(std::vector<GroundAtom> atoms);

  const std::vector<GroundAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  bool contains(const GroundAtom& atom) const;
  bool includes(const SymbolicState& other) const;

  void insert(const GroundAtom& atom);
  void erase(const GroundAtom& atom);

  auto begin() const { return atoms_.begin(); }
  auto end() const { return atoms_.end(); }

  bool operator==(const SymbolicState&) const = default;
  auto operator<=>(const SymbolicState&) const = default;

 private:
  std::vector<GroundAtom> atoms_;
};

struct Goal {
  SymbolicState atoms;

  bool operator==(const Goal&) const = default;
};

struct TypedVariable {
  std::string name;
  std::string type;

  bool operator==(const TypedVariable&) const = default;
};

/// Lifted skill operator <PAR, PRE, EFF+, EFF->. Construct through make();
/// the constructor-time checks enforce the scoping and disjointness rules.
struct LiftedOperator {
  std::string name;
  std::vector<TypedVariable> params;
  std::vector<LiftedAtom> pre;
  std::vector<LiftedAtom> eff_add;
  std::vector<LiftedAtom> eff_del;

  /// Canonicalizes atom lists and validates: every param index in range,
  /// eff_add and eff_del disjoint. Throws DomainError otherwise.
  static LiftedOperator make(std::string name, std::vector<TypedVariable> params,
                             std::vector<LiftedAtom> pre,
                             std::vector<LiftedAtom> eff_add,
                             std::vector<LiftedAtom> eff_del);

  bool operator==(const LiftedOperator&) const = default;
};

struct GroundOperator {
  std::string lifted_name;
  std::vector<EntityId> substitution;
  SymbolicState pre;
  SymbolicState eff_add;
  SymbolicState eff_del;

  /// Two ground operators are the same skill instance iff the lifted operator
  /// and the substitution agree.
  bool operator==(const GroundOperator& other) const {
    return lifted_name == other.lifted_name &&
           substitution == other.substitution;
  }
  auto operator<=>(const GroundOperator& other) const {
    if (auto c = lifted_name <=> other.lifted_name; c != 0) return c;
    return substitution <=> other.substitution;
  }
};

/// Substitutes `substitution` into `lifted`. Checks totality and that every
/// entity's type matches the parameter type.
GroundOperator ground_operator(const LiftedOperator& lifted,
                               std::span<const EntityId> substitution,
                               std::span<const ObjectEntity> entities);

bool applicable(const GroundOperator& op, const SymbolicState& s);

/// (s \ EFF-) ∪ EFF+. Throws PreconditionViolation when not applicable.
SymbolicState apply(const GroundOperator& op, const SymbolicState& s);

/// Set algebra only, no precondition check. Used for effect verification.
SymbolicState successor(const GroundOperator& op, const SymbolicState& s);

bool holds(const Goal& g, const SymbolicState& s);

/// Evaluates a fixed predicate set over a fixed entity set. Candidate atoms
/// (all type-correct tuples) are enumerated once at construction.
class StateParser {
 public:
  StateParser() = default;
  StateParser(std::span<const Predicate> predicates,
              std::span<const ObjectEntity> entities);

  SymbolicState operator()(const EnvState& x) const;
  std::size_t candidate_count() const { return candidates_.size(); }

 private:
  struct Candidate {
    std::size_t predicate_index;
    GroundAtom atom;
  };
  std::vector<Predicate> predicates_;
  std::vector<Candidate> candidates_;
  std::size_t entity_count_ = 0;
};

/// One-shot form of StateParser. Predicates are identified by their position
/// in `predicates`, which must be sorted by name for canonical ordering.
SymbolicState parse_state(const EnvState& x,
                          std::span<const Predicate> predicates,
                          std::span<const ObjectEntity> entities);

/// Every type-correct entity tuple for the given argument types, in
/// lexicographic order of entity ids.
std::vector<std::vector<EntityId>> typed_tuples(
    std::span<const std::string> arg_types,
    std::span<const ObjectEntity> entities);

}  // namespace skillplan
