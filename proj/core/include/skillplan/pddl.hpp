#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "skillplan/symbolic.hpp"

namespace skillplan {

/// Positioned failure from the planning-language reader. `line` and `column`
/// are 1-based; `token` is the offending lexeme (empty at end of input).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t line, std::size_t column,
             std::string token);

  const std::string& message() const { return message_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& token() const { return token_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
  std::string token_;
};

/// Typed STRIPS domain. Predicates are kept sorted by name so PredicateId
/// order is the canonical atom order; operators keep declaration order.
struct DomainSpec {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<std::string> types;
  std::vector<PredicateSignature> predicates;
  std::vector<LiftedOperator> operators;

  std::optional<PredicateId> find_predicate(std::string_view name) const;
  const LiftedOperator* find_operator(std::string_view name) const;
  bool has_type(std::string_view name) const;

  bool operator==(const DomainSpec&) const = default;
};

/// Problem instance. Objects are sorted by name, which fixes EntityId order.
struct ProblemSpec {
  std::string name;
  std::string domain_name;
  std::vector<ObjectEntity> objects;
  SymbolicState init;
  Goal goal;

  std::optional<EntityId> find_object(std::string_view name) const;

  bool operator==(const ProblemSpec&) const = default;
};

DomainSpec parse_domain(std::string_view text);
ProblemSpec parse_problem(std::string_view text, const DomainSpec& domain);

std::string serialize_domain(const DomainSpec& domain);
std::string serialize_problem(const ProblemSpec& problem,
                              const DomainSpec& domain);

/// "(pred arg1 arg2)"
std::string format_atom(const GroundAtom& atom, const DomainSpec& domain,
                        const ProblemSpec& problem);
/// Space-separated atoms in canonical order.
std::string format_state(const SymbolicState& state, const DomainSpec& domain,
                         const ProblemSpec& problem);
/// "(op-name arg1 arg2)"
std::string format_operator(const GroundOperator& op,
                            const ProblemSpec& problem);

/// Parses a ground atom written as "(pred arg ...)" against the problem's
/// vocabulary. Throws ParseError on unknown names or arity mismatch.
GroundAtom parse_ground_atom(std::string_view text, const DomainSpec& domain,
                             const ProblemSpec& problem);

std::string read_text_file(const std::string& path);

}  // namespace skillplan
