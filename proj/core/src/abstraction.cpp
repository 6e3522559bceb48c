#include "skillplan/abstraction.hpp"

#include <algorithm>

#include "skillplan/envs.hpp"

namespace skillplan {

std::size_t AbstractState::dimension() const {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.features.size();
  return n;
}

std::vector<double> AbstractState::flatten() const {
  std::vector<double> out;
  out.reserve(dimension());
  for (const auto& s : slots) {
    out.insert(out.end(), s.features.begin(), s.features.end());
  }
  return out;
}

AbstractState extract(const EnvState& x, const GroundOperator& op,
                      std::span<const ObjectEntity> entities, EntityId robot) {
  auto slot = [&](EntityId e) {
    if (e >= entities.size() || e >= x.features.size() ||
        x.features[e].empty()) {
      throw StateIntegrityError("state has no features for entity " +
                                std::to_string(e) + " used by " +
                                op.lifted_name);
    }
    return AbstractSlot{entities[e].name, x.features[e]};
  };
  AbstractState a;
  a.slots.reserve(op.substitution.size() + 1);
  a.slots.push_back(slot(robot));
  for (auto e : op.substitution) a.slots.push_back(slot(e));
  return a;
}

AbstractState extract(const EnvState& x, const GroundOperator& op,
                      const World& world) {
  return extract(x, op, world.entities(), world.robot());
}

EnvState embed(const AbstractState& a, const GroundOperator& op, EnvState base,
               EntityId robot) {
  if (a.slots.size() != op.substitution.size() + 1) {
    throw StateIntegrityError("abstract state has " +
                              std::to_string(a.slots.size()) +
                              " slots, operator needs " +
                              std::to_string(op.substitution.size() + 1));
  }
  auto put = [&](EntityId e, const AbstractSlot& s) {
    if (e >= base.features.size()) {
      throw StateIntegrityError("embed target lacks entity " +
                                std::to_string(e));
    }
    base.features[e] = s.features;
  };
  put(robot, a.slots[0]);
  for (std::size_t i = 0; i < op.substitution.size(); ++i) {
    put(op.substitution[i], a.slots[i + 1]);
  }
  return base;
}

std::size_t AbstractSignature::dimension() const {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.dim;
  return n;
}

bool AbstractSignature::layout_compatible(const AbstractSignature& other) const {
  return std::equal(slots.begin(), slots.end(), other.slots.begin(),
                    other.slots.end(),
                    [](const SignatureSlot& a, const SignatureSlot& b) {
                      return a.dim == b.dim;
                    });
}

AbstractSignature abstract_space_signature(const LiftedOperator& op,
                                           const DomainSpec& domain,
                                           std::span<const ObjectType> types,
                                           const std::string& robot_type) {
  auto dim = [&](const std::string& t) -> std::size_t {
    for (const auto& ot : types) {
      if (ot.name == t) return ot.feature_dim;
    }
    throw DomainError("type '" + t + "' used by " + op.name +
                      " has no feature layout");
  };
  AbstractSignature sig{op.name, {}};
  sig.slots.push_back({robot_type, dim(robot_type)});
  for (const auto& p : op.params) {
    if (!domain.has_type(p.type)) {
      throw DomainError("operator " + op.name + " uses undeclared type " +
                        p.type);
    }
    sig.slots.push_back({p.type, dim(p.type)});
  }
  return sig;
}

AbstractSignature abstract_space_signature(const LiftedOperator& op,
                                           const DomainSpec& domain,
                                           const World& world) {
  return abstract_space_signature(op, domain, world.types());
}

std::string to_string(const AbstractSignature& sig) {
  std::string out = sig.op + "(";
  for (std::size_t i = 0; i < sig.slots.size(); ++i) {
    if (i) out += ' ';
    out += sig.slots[i].type + ":" + std::to_string(sig.slots[i].dim);
  }
  return out + ")";
}

}  // namespace skillplan
