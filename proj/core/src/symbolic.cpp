#include "skillplan/symbolic.hpp"

#include <algorithm>
#include <iterator>
#include <utility>

namespace skillplan {

GroundAtom::GroundAtom(PredicateId pred, std::span<const EntityId> arguments)
    : predicate(pred), arity(static_cast<std::uint8_t>(arguments.size())) {
  if (arguments.size() > kMaxArity) {
    throw DomainError("ground atom arity " + std::to_string(arguments.size()) +
                      " exceeds supported maximum");
  }
  std::copy(arguments.begin(), arguments.end(), args.begin());
}

SymbolicState::SymbolicState(std::vector<GroundAtom> atoms)
    : atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end());
  atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
}

bool SymbolicState::contains(const GroundAtom& atom) const {
  return std::binary_search(atoms_.begin(), atoms_.end(), atom);
}

bool SymbolicState::includes(const SymbolicState& other) const {
  return std::includes(atoms_.begin(), atoms_.end(), other.atoms_.begin(),
                       other.atoms_.end());
}

void SymbolicState::insert(const GroundAtom& atom) {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), atom);
  if (it == atoms_.end() || *it != atom) atoms_.insert(it, atom);
}

void SymbolicState::erase(const GroundAtom& atom) {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), atom);
  if (it != atoms_.end() && *it == atom) atoms_.erase(it);
}

namespace {

void check_params(const std::string& op, const std::vector<LiftedAtom>& atoms,
                  std::size_t n_params) {
  for (const auto& atom : atoms) {
    if (atom.params.size() > kMaxArity) {
      throw DomainError("operator " + op + ": atom arity exceeds maximum");
    }
    for (auto p : atom.params) {
      if (p >= n_params) {
        throw DomainError("operator " + op +
                          ": atom refers to a variable outside PAR");
      }
    }
  }
}

void canonicalize(std::vector<LiftedAtom>& atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
}

SymbolicState substitute(const std::vector<LiftedAtom>& atoms,
                         std::span<const EntityId> substitution) {
  std::vector<GroundAtom> out;
  out.reserve(atoms.size());
  std::array<EntityId, kMaxArity> args{};
  for (const auto& atom : atoms) {
    for (std::size_t i = 0; i < atom.params.size(); ++i) {
      args[i] = substitution[atom.params[i]];
    }
    out.emplace_back(atom.predicate,
                     std::span<const EntityId>(args.data(), atom.params.size()));
  }
  return SymbolicState(std::move(out));
}

}  // namespace

LiftedOperator LiftedOperator::make(std::string name,
                                    std::vector<TypedVariable> params,
                                    std::vector<LiftedAtom> pre,
                                    std::vector<LiftedAtom> eff_add,
                                    std::vector<LiftedAtom> eff_del) {
  check_params(name, pre, params.size());
  check_params(name, eff_add, params.size());
  check_params(name, eff_del, params.size());
  canonicalize(pre);
  canonicalize(eff_add);
  canonicalize(eff_del);
  std::vector<LiftedAtom> both;
  std::set_intersection(eff_add.begin(), eff_add.end(), eff_del.begin(),
                        eff_del.end(), std::back_inserter(both));
  if (!both.empty()) {
    throw DomainError("operator " + name +
                      ": an atom is both added and deleted");
  }
  return LiftedOperator{std::move(name), std::move(params), std::move(pre),
                        std::move(eff_add), std::move(eff_del)};
}

GroundOperator ground_operator(const LiftedOperator& lifted,
                               std::span<const EntityId> substitution,
                               std::span<const ObjectEntity> entities) {
  if (substitution.size() != lifted.params.size()) {
    throw DomainError("grounding " + lifted.name + ": substitution binds " +
                      std::to_string(substitution.size()) + " of " +
                      std::to_string(lifted.params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < substitution.size(); ++i) {
    const auto id = substitution[i];
    if (id >= entities.size()) {
      throw DomainError("grounding " + lifted.name + ": unknown entity id");
    }
    if (entities[id].type != lifted.params[i].type) {
      throw DomainError("grounding " + lifted.name + ": " + entities[id].name +
                        " has type " + entities[id].type + ", parameter " +
                        lifted.params[i].name + " needs " +
                        lifted.params[i].type);
    }
  }
  GroundOperator op;
  op.lifted_name = lifted.name;
  op.substitution.assign(substitution.begin(), substitution.end());
  op.pre = substitute(lifted.pre, substitution);
  op.eff_add = substitute(lifted.eff_add, substitution);
  op.eff_del = substitute(lifted.eff_del, substitution);
  return op;
}

bool applicable(const GroundOperator& op, const SymbolicState& s) {
  return s.includes(op.pre);
}

SymbolicState successor(const GroundOperator& op, const SymbolicState& s) {
  std::vector<GroundAtom> kept;
  kept.reserve(s.size() + op.eff_add.size());
  std::set_difference(s.begin(), s.end(), op.eff_del.begin(),
                      op.eff_del.end(), std::back_inserter(kept));
  std::vector<GroundAtom> merged;
  merged.reserve(kept.size() + op.eff_add.size());
  std::set_union(kept.begin(), kept.end(), op.eff_add.begin(),
                 op.eff_add.end(), std::back_inserter(merged));
  return SymbolicState(std::move(merged));
}

SymbolicState apply(const GroundOperator& op, const SymbolicState& s) {
  if (!applicable(op, s)) {
    throw PreconditionViolation("operator " + op.lifted_name +
                                " applied in a state that violates PRE");
  }
  return successor(op, s);
}

bool holds(const Goal& g, const SymbolicState& s) {
  return s.includes(g.atoms);
}

std::vector<std::vector<EntityId>> typed_tuples(
    std::span<const std::string> arg_types,
    std::span<const ObjectEntity> entities) {
  std::vector<std::vector<EntityId>> domains(arg_types.size());
  for (std::size_t i = 0; i < arg_types.size(); ++i) {
    for (std::size_t e = 0; e < entities.size(); ++e) {
      if (entities[e].type == arg_types[i]) {
        domains[i].push_back(static_cast<EntityId>(e));
      }
    }
    if (domains[i].empty()) return {};
  }
  std::vector<std::vector<EntityId>> out;
  std::vector<std::size_t> cursor(arg_types.size(), 0);
  while (true) {
    std::vector<EntityId> tuple(arg_types.size());
    for (std::size_t i = 0; i < arg_types.size(); ++i) {
      tuple[i] = domains[i][cursor[i]];
    }
    out.push_back(std::move(tuple));
    // Odometer increment, last position fastest.
    std::size_t pos = arg_types.size();
    while (pos > 0) {
      --pos;
      if (++cursor[pos] < domains[pos].size()) break;
      cursor[pos] = 0;
      if (pos == 0) return out;
    }
    if (arg_types.empty()) return out;
  }
}

StateParser::StateParser(std::span<const Predicate> predicates,
                         std::span<const ObjectEntity> entities)
    : predicates_(predicates.begin(), predicates.end()),
      entity_count_(entities.size()) {
  for (std::size_t p = 0; p < predicates_.size(); ++p) {
    const auto& sig = predicates_[p].signature;
    if (!predicates_[p].classifier) {
      throw DomainError("predicate " + sig.name + " has no classifier bound");
    }
    for (auto& tuple : typed_tuples(sig.arg_types, entities)) {
      candidates_.push_back(
          {p, GroundAtom(static_cast<PredicateId>(p), tuple)});
    }
  }
}

SymbolicState StateParser::operator()(const EnvState& x) const {
  if (x.features.size() != entity_count_) {
    throw DomainError("environment state covers " +
                      std::to_string(x.features.size()) + " entities, expected " +
                      std::to_string(entity_count_));
  }
  std::vector<GroundAtom> atoms;
  for (const auto& c : candidates_) {
    if (predicates_[c.predicate_index].classifier(x, c.atom.arguments())) {
      atoms.push_back(c.atom);
    }
  }
  return SymbolicState(std::move(atoms));
}

SymbolicState parse_state(const EnvState& x,
                          std::span<const Predicate> predicates,
                          std::span<const ObjectEntity> entities) {
  return StateParser(predicates, entities)(x);
}

}  // namespace skillplan
