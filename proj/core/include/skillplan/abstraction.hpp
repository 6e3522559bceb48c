#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "skillplan/pddl.hpp"
#include "skillplan/symbolic.hpp"

namespace skillplan {

class World;

/// Raised when an EnvState lacks features for an entity a skill refers to.
class StateIntegrityError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct AbstractSlot {
  std::string entity;
  std::vector<double> features;

  bool operator==(const AbstractSlot&) const = default;
};

/// Robot slot first, then one slot per operator parameter in PAR order.
/// Every other entity is hidden.
struct AbstractState {
  std::vector<AbstractSlot> slots;

  std::size_t dimension() const;
  std::vector<double> flatten() const;

  bool operator==(const AbstractState&) const = default;
};

AbstractState extract(const EnvState& x, const GroundOperator& op,
                      std::span<const ObjectEntity> entities, EntityId robot);
AbstractState extract(const EnvState& x, const GroundOperator& op,
                      const World& world);

/// Writes the slots of `a` back into `base`; the inverse of extract on the
/// exposed entities.
EnvState embed(const AbstractState& a, const GroundOperator& op,
               EnvState base, EntityId robot);

struct SignatureSlot {
  std::string type;
  std::size_t dim = 0;

  bool operator==(const SignatureSlot&) const = default;
};

/// Layout of the abstract space of a lifted operator. Depends only on the
/// parameter types, so all groundings share it.
struct AbstractSignature {
  std::string op;
  std::vector<SignatureSlot> slots;  // robot first

  std::size_t dimension() const;
  /// Same slot count and per-slot dimensions; type names may differ.
  bool layout_compatible(const AbstractSignature& other) const;

  bool operator==(const AbstractSignature&) const = default;
};

AbstractSignature abstract_space_signature(const LiftedOperator& op,
                                           const DomainSpec& domain,
                                           std::span<const ObjectType> types,
                                           const std::string& robot_type =
                                               "robot");
AbstractSignature abstract_space_signature(const LiftedOperator& op,
                                           const DomainSpec& domain,
                                           const World& world);

std::string to_string(const AbstractSignature& sig);

}  // namespace skillplan
