#include "skillplan/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace skillplan {

ParseError::ParseError(std::string message, std::size_t line,
                       std::size_t column, std::string token)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + message +
                         (token.empty() ? std::string(" at end of input")
                                        : " near '" + token + "'")),
      message_(std::move(message)),
      line_(line),
      column_(column),
      token_(std::move(token)) {}

std::optional<PredicateId> DomainSpec::find_predicate(
    std::string_view name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (predicates[i].name == name) return static_cast<PredicateId>(i);
  }
  return std::nullopt;
}

const LiftedOperator* DomainSpec::find_operator(std::string_view name) const {
  for (const auto& op : operators) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

bool DomainSpec::has_type(std::string_view name) const {
  return std::find(types.begin(), types.end(), name) != types.end();
}

std::optional<EntityId> ProblemSpec::find_object(std::string_view name) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].name == name) return static_cast<EntityId>(i);
  }
  return std::nullopt;
}

namespace {

constexpr std::size_t kMaxDepth = 64;

struct Token {
  enum class Kind { Open, Close, Symbol, End } kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

bool is_symbol_char(unsigned char c) {
  if (std::isalnum(c)) return true;
  switch (c) {
    case '-': case '_': case '?': case ':': case '.': case '=': case '<':
    case '>': case '+': case '*': case '/': case '!': case '@': case '$':
    case '%': case '^': case '&': case '~': case '\'':
      return true;
    default:
      return false;
  }
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  };
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == ';') {
      while (i < text.size() && text[i] != '\n') {
        ++i;
        ++col;
      }
      continue;
    }
    if (std::isspace(c)) {
      advance(text[i]);
      ++i;
      continue;
    }
    if (c == '(' || c == ')') {
      tokens.push_back({c == '(' ? Token::Kind::Open : Token::Kind::Close,
                        std::string(1, static_cast<char>(c)), line, col});
      advance(text[i]);
      ++i;
      continue;
    }
    if (is_symbol_char(c)) {
      const std::size_t start_col = col;
      std::string sym;
      while (i < text.size() &&
             is_symbol_char(static_cast<unsigned char>(text[i]))) {
        sym.push_back(static_cast<char>(
            std::tolower(static_cast<unsigned char>(text[i]))));
        ++i;
        ++col;
      }
      tokens.push_back({Token::Kind::Symbol, std::move(sym), line, start_col});
      continue;
    }
    std::string bad;
    if (c >= 0x20 && c < 0x7f) {
      bad.push_back(static_cast<char>(c));
    } else {
      static const char* hex = "0123456789abcdef";
      bad = "\\x";
      bad.push_back(hex[c >> 4]);
      bad.push_back(hex[c & 0xf]);
    }
    throw ParseError("unexpected character", line, col, bad);
  }
  tokens.push_back({Token::Kind::End, "", line, col});
  return tokens;
}

struct SExpr {
  bool is_list = false;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
  std::vector<SExpr> items;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line, column, is_list ? "(" : text);
  }
  bool is_symbol(std::string_view s) const { return !is_list && text == s; }
  bool head_is(std::string_view s) const {
    return is_list && !items.empty() && items.front().is_symbol(s);
  }
};

/// Reads exactly one top-level expression; trailing tokens are an error.
SExpr read_sexpr(const std::vector<Token>& tokens) {
  std::vector<SExpr> stack;
  std::size_t pos = 0;
  const auto& first = tokens[0];
  if (first.kind == Token::Kind::End) {
    throw ParseError("empty input", first.line, first.column, "");
  }
  if (first.kind != Token::Kind::Open) {
    throw ParseError("expected '('", first.line, first.column, first.text);
  }
  std::optional<SExpr> root;
  for (; pos < tokens.size(); ++pos) {
    const auto& t = tokens[pos];
    if (root) {
      if (t.kind != Token::Kind::End) {
        throw ParseError("trailing input after definition", t.line, t.column,
                         t.text);
      }
      break;
    }
    switch (t.kind) {
      case Token::Kind::Open: {
        if (stack.size() >= kMaxDepth) {
          throw ParseError("nesting too deep", t.line, t.column, t.text);
        }
        SExpr e;
        e.is_list = true;
        e.line = t.line;
        e.column = t.column;
        stack.push_back(std::move(e));
        break;
      }
      case Token::Kind::Close: {
        if (stack.empty()) {
          throw ParseError("unbalanced ')'", t.line, t.column, t.text);
        }
        SExpr done = std::move(stack.back());
        stack.pop_back();
        if (stack.empty()) {
          root = std::move(done);
        } else {
          stack.back().items.push_back(std::move(done));
        }
        break;
      }
      case Token::Kind::Symbol: {
        if (stack.empty()) {
          throw ParseError("symbol outside of list", t.line, t.column, t.text);
        }
        SExpr e;
        e.text = t.text;
        e.line = t.line;
        e.column = t.column;
        stack.back().items.push_back(std::move(e));
        break;
      }
      case Token::Kind::End:
        throw ParseError("unexpected end of input, missing ')'", t.line,
                         t.column, "");
    }
  }
  return std::move(*root);
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

const std::set<std::string>& unsupported_heads() {
  static const std::set<std::string> heads = {
      "or",       "not",       "when",    "forall",   "exists", "imply",
      "=",        "increase",  "decrease", "assign",  "scale-up",
      "scale-down", "<",       ">",       "<=",       ">=",     "at",
      "over",     "preference"};
  return heads;
}

const std::string& expect_identifier(const SExpr& e, std::string_view what) {
  if (e.is_list || !is_identifier(e.text)) {
    e.fail("expected " + std::string(what));
  }
  return e.text;
}

/// Typed list "a b - t c - u". Every group must carry a type.
std::vector<std::pair<std::string, std::string>> read_typed_list(
    const std::vector<SExpr>& items, std::size_t begin, bool variables,
    const DomainSpec* domain) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<const SExpr*> pending;
  for (std::size_t i = begin; i < items.size(); ++i) {
    const auto& e = items[i];
    if (e.is_list) e.fail("unexpected list in typed list");
    if (e.text == "-") {
      if (pending.empty()) e.fail("type annotation without names");
      if (i + 1 >= items.size()) e.fail("missing type after '-'");
      const auto& type_expr = items[i + 1];
      if (type_expr.is_list) {
        type_expr.fail("unsupported construct: composite type");
      }
      const std::string& type = expect_identifier(type_expr, "type name");
      if (domain && !domain->has_type(type)) type_expr.fail("unknown type");
      for (const auto* name : pending) out.emplace_back(name->text, type);
      pending.clear();
      ++i;
      continue;
    }
    if (variables) {
      if (e.text.size() < 2 || e.text[0] != '?' ||
          !is_identifier(e.text.substr(1))) {
        e.fail(e.text[0] != '?' ? "unsupported construct: constant in domain"
                                : "malformed variable");
      }
    } else if (!is_identifier(e.text)) {
      e.fail("malformed name");
    }
    pending.push_back(&e);
  }
  if (!pending.empty()) {
    pending.front()->fail("typing required: name without type");
  }
  return out;
}

struct ParsedSection {
  const SExpr* expr;
  std::string keyword;
};

void check_define(const SExpr& root, std::string_view kind, std::string& name) {
  if (!root.head_is("define")) root.fail("expected (define ...)");
  if (root.items.size() < 2 || !root.items[1].head_is(kind) ||
      root.items[1].items.size() != 2) {
    const auto& at = root.items.size() > 1 ? root.items[1] : root;
    at.fail("expected (" + std::string(kind) + " <name>)");
  }
  name = expect_identifier(root.items[1].items[1], std::string(kind) + " name");
}

/// Conjunction of atoms; `allow_negation` permits (not atom) entries.
template <typename AtomFn>
void read_conjunction(const SExpr& e, bool allow_negation, AtomFn&& on_atom) {
  if (!e.is_list) e.fail("expected a list");
  if (e.items.empty()) return;  // "()" = empty conjunction
  auto read_literal = [&](const SExpr& lit) {
    if (!lit.is_list || lit.items.empty()) lit.fail("expected an atom");
    const auto& head = lit.items.front();
    if (head.is_list) head.fail("expected predicate name");
    if (head.text == "not") {
      if (!allow_negation) {
        head.fail("unsupported construct: negative precondition");
      }
      if (lit.items.size() != 2 || !lit.items[1].is_list) {
        lit.fail("malformed negation");
      }
      const auto& inner = lit.items[1];
      if (inner.items.empty() || inner.items.front().is_list) {
        inner.fail("expected an atom");
      }
      if (unsupported_heads().count(inner.items.front().text) ||
          inner.items.front().text == "and") {
        inner.items.front().fail("unsupported construct");
      }
      on_atom(inner, true);
      return;
    }
    if (head.text == "and") head.fail("unsupported construct: nested 'and'");
    if (unsupported_heads().count(head.text)) {
      head.fail("unsupported construct");
    }
    on_atom(lit, false);
  };
  if (e.head_is("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) read_literal(e.items[i]);
  } else {
    read_literal(e);
  }
}

LiftedOperator read_action(const SExpr& e, const DomainSpec& domain) {
  if (e.items.size() < 2) e.fail("action needs a name");
  std::string name = expect_identifier(e.items[1], "action name");
  const SExpr* params = nullptr;
  const SExpr* pre = nullptr;
  const SExpr* eff = nullptr;
  for (std::size_t i = 2; i < e.items.size(); i += 2) {
    const auto& key = e.items[i];
    if (key.is_list) key.fail("expected action keyword");
    if (i + 1 >= e.items.size()) key.fail("keyword without value");
    const SExpr* value = &e.items[i + 1];
    if (key.text == ":parameters") {
      if (params) key.fail("duplicate :parameters");
      params = value;
    } else if (key.text == ":precondition") {
      if (pre) key.fail("duplicate :precondition");
      pre = value;
    } else if (key.text == ":effect") {
      if (eff) key.fail("duplicate :effect");
      eff = value;
    } else {
      key.fail("unknown action keyword");
    }
  }
  std::vector<TypedVariable> vars;
  if (params) {
    if (!params->is_list) params->fail("expected parameter list");
    for (auto& [var, type] :
         read_typed_list(params->items, 0, true, &domain)) {
      for (const auto& v : vars) {
        if (v.name == var) params->fail("duplicate parameter " + var);
      }
      vars.push_back({var, type});
    }
  }
  if (vars.size() > 255) e.fail("too many parameters");

  auto lift = [&](const SExpr& atom) {
    const auto& head = atom.items.front();
    auto pid = domain.find_predicate(head.text);
    if (!pid) head.fail("unknown predicate");
    const auto& sig = domain.predicates[*pid];
    if (atom.items.size() - 1 != sig.arg_types.size()) {
      atom.fail("arity mismatch for predicate " + sig.name);
    }
    LiftedAtom lifted{*pid, {}};
    for (std::size_t i = 1; i < atom.items.size(); ++i) {
      const auto& arg = atom.items[i];
      if (arg.is_list) arg.fail("unsupported construct: nested term");
      if (arg.text.empty() || arg.text[0] != '?') {
        arg.fail("unsupported construct: constant in domain");
      }
      auto it = std::find_if(vars.begin(), vars.end(),
                             [&](const auto& v) { return v.name == arg.text; });
      if (it == vars.end()) arg.fail("variable not declared in :parameters");
      if (it->type != sig.arg_types[i - 1]) {
        arg.fail("type mismatch: " + it->type + " given, " +
                 sig.arg_types[i - 1] + " expected");
      }
      lifted.params.push_back(static_cast<std::uint8_t>(it - vars.begin()));
    }
    return lifted;
  };

  std::vector<LiftedAtom> pre_atoms, add_atoms, del_atoms;
  if (pre) {
    read_conjunction(*pre, false, [&](const SExpr& atom, bool) {
      pre_atoms.push_back(lift(atom));
    });
  }
  if (eff) {
    read_conjunction(*eff, true, [&](const SExpr& atom, bool negated) {
      (negated ? del_atoms : add_atoms).push_back(lift(atom));
    });
  }
  try {
    return LiftedOperator::make(std::move(name), std::move(vars),
                                std::move(pre_atoms), std::move(add_atoms),
                                std::move(del_atoms));
  } catch (const DomainError& err) {
    e.fail(err.what());
  }
}

void read_predicates(const SExpr& section, DomainSpec& d) {
  for (std::size_t i = 1; i < section.items.size(); ++i) {
    const auto& p = section.items[i];
    if (!p.is_list || p.items.empty()) p.fail("expected predicate declaration");
    const auto& name = expect_identifier(p.items.front(), "predicate name");
    if (unsupported_heads().count(name)) {
      p.items.front().fail("reserved word");
    }
    if (d.find_predicate(name)) p.items.front().fail("duplicate predicate");
    PredicateSignature sig{name, {}};
    for (auto& [var, type] : read_typed_list(p.items, 1, true, &d)) {
      sig.arg_types.push_back(type);
    }
    if (sig.arg_types.size() > kMaxArity) p.fail("predicate arity too large");
    d.predicates.push_back(std::move(sig));
  }
  std::sort(d.predicates.begin(), d.predicates.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string format_lifted(const LiftedAtom& atom, const LiftedOperator& op,
                          const DomainSpec& d) {
  std::string out = "(" + d.predicates[atom.predicate].name;
  for (auto p : atom.params) out += " " + op.params[p].name;
  return out + ")";
}

GroundAtom read_ground_atom(const SExpr& atom, const DomainSpec& d,
                            const ProblemSpec& p) {
  if (!atom.is_list || atom.items.empty() || atom.items.front().is_list) {
    atom.fail("expected an atom");
  }
  const auto& head = atom.items.front();
  auto pid = d.find_predicate(head.text);
  if (!pid) head.fail("unknown predicate");
  const auto& sig = d.predicates[*pid];
  std::vector<EntityId> args;
  std::string shown = "(" + head.text;
  for (std::size_t i = 1; i < atom.items.size(); ++i) {
    if (atom.items[i].is_list) atom.items[i].fail("nested term");
    shown += " " + atom.items[i].text;
  }
  shown += ")";
  if (atom.items.size() - 1 != sig.arg_types.size()) {
    throw ParseError("arity mismatch in atom " + shown + ": " + sig.name +
                         " takes " + std::to_string(sig.arg_types.size()) +
                         " argument(s)",
                     atom.line, atom.column, "(");
  }
  for (std::size_t i = 1; i < atom.items.size(); ++i) {
    const auto& arg = atom.items[i];
    auto oid = p.find_object(arg.text);
    if (!oid) arg.fail("undeclared object in atom " + shown);
    if (p.objects[*oid].type != sig.arg_types[i - 1]) {
      arg.fail("type mismatch in atom " + shown);
    }
    args.push_back(*oid);
  }
  return GroundAtom(*pid, args);
}

}  // namespace

DomainSpec parse_domain(std::string_view text) {
  const auto tokens = lex(text);
  const SExpr root = read_sexpr(tokens);
  DomainSpec d;
  check_define(root, "domain", d.name);
  bool seen_types = false, seen_predicates = false, seen_requirements = false;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const auto& section = root.items[i];
    if (!section.is_list || section.items.empty() ||
        section.items.front().is_list) {
      section.fail("expected a section");
    }
    const auto& key = section.items.front();
    if (key.text == ":requirements") {
      if (seen_requirements || seen_types || seen_predicates ||
          !d.operators.empty()) {
        key.fail("misplaced :requirements");
      }
      seen_requirements = true;
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const auto& r = section.items[j];
        if (r.is_symbol(":strips") || r.is_symbol(":typing")) {
          d.requirements.push_back(r.text);
        } else {
          r.fail("unsupported requirement");
        }
      }
    } else if (key.text == ":types") {
      if (seen_types || seen_predicates || !d.operators.empty()) {
        key.fail("misplaced :types");
      }
      seen_types = true;
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const auto& t = section.items[j];
        if (t.is_symbol("-")) t.fail("unsupported construct: type hierarchy");
        const auto& name = expect_identifier(t, "type name");
        if (d.has_type(name)) t.fail("duplicate type");
        d.types.push_back(name);
      }
    } else if (key.text == ":predicates") {
      if (seen_predicates || !d.operators.empty()) {
        key.fail("misplaced :predicates");
      }
      seen_predicates = true;
      read_predicates(section, d);
    } else if (key.text == ":action") {
      auto op = read_action(section, d);
      if (d.find_operator(op.name)) section.items[1].fail("duplicate action");
      d.operators.push_back(std::move(op));
    } else if (key.text == ":functions" || key.text == ":constants" ||
               key.text == ":durative-action" || key.text == ":derived") {
      key.fail("unsupported construct");
    } else {
      key.fail("unknown section");
    }
  }
  return d;
}

ProblemSpec parse_problem(std::string_view text, const DomainSpec& domain) {
  const auto tokens = lex(text);
  const SExpr root = read_sexpr(tokens);
  ProblemSpec p;
  check_define(root, "problem", p.name);
  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  bool seen_objects = false;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const auto& section = root.items[i];
    if (!section.is_list || section.items.empty() ||
        section.items.front().is_list) {
      section.fail("expected a section");
    }
    const auto& key = section.items.front();
    if (key.text == ":domain") {
      if (section.items.size() != 2) section.fail("expected (:domain <name>)");
      p.domain_name = expect_identifier(section.items[1], "domain name");
      if (p.domain_name != domain.name) {
        section.items[1].fail("problem is for a different domain");
      }
    } else if (key.text == ":objects") {
      if (seen_objects) key.fail("duplicate :objects");
      seen_objects = true;
      for (auto& [name, type] :
           read_typed_list(section.items, 1, false, &domain)) {
        p.objects.push_back({name, type});
      }
      std::sort(p.objects.begin(), p.objects.end(),
                [](const auto& a, const auto& b) { return a.name < b.name; });
      for (std::size_t j = 1; j < p.objects.size(); ++j) {
        if (p.objects[j].name == p.objects[j - 1].name) {
          section.fail("duplicate object " + p.objects[j].name);
        }
      }
      if (p.objects.size() > 0xffff) section.fail("too many objects");
    } else if (key.text == ":init") {
      if (init) key.fail("duplicate :init");
      init = &section;
    } else if (key.text == ":goal") {
      if (goal) key.fail("duplicate :goal");
      if (section.items.size() != 2) section.fail("expected (:goal <formula>)");
      goal = &section;
    } else {
      key.fail("unknown section");
    }
  }
  if (p.domain_name.empty()) root.fail("missing (:domain ...)");
  std::vector<GroundAtom> init_atoms, goal_atoms;
  if (init) {
    for (std::size_t j = 1; j < init->items.size(); ++j) {
      const auto& atom = init->items[j];
      if (atom.head_is("not")) {
        atom.items.front().fail("unsupported construct: negative literal");
      }
      if (atom.is_list && !atom.items.empty() && !atom.items[0].is_list &&
          (unsupported_heads().count(atom.items[0].text) ||
           atom.items[0].text == "and")) {
        atom.items.front().fail("unsupported construct");
      }
      init_atoms.push_back(read_ground_atom(atom, domain, p));
    }
  }
  if (goal) {
    read_conjunction(goal->items[1], false, [&](const SExpr& atom, bool) {
      goal_atoms.push_back(read_ground_atom(atom, domain, p));
    });
  }
  p.init = SymbolicState(std::move(init_atoms));
  p.goal = Goal{SymbolicState(std::move(goal_atoms))};
  return p;
}

std::string serialize_domain(const DomainSpec& d) {
  std::ostringstream out;
  out << "(define (domain " << d.name << ")\n";
  if (!d.requirements.empty()) {
    out << "  (:requirements " << join(d.requirements, " ") << ")\n";
  }
  out << "  (:types";
  for (const auto& t : d.types) out << " " << t;
  out << ")\n";
  out << "  (:predicates";
  for (const auto& p : d.predicates) {
    out << "\n    (" << p.name;
    for (std::size_t i = 0; i < p.arg_types.size(); ++i) {
      out << " ?a" << i << " - " << p.arg_types[i];
    }
    out << ")";
  }
  out << ")\n";
  for (const auto& op : d.operators) {
    out << "  (:action " << op.name << "\n";
    out << "    :parameters (";
    for (std::size_t i = 0; i < op.params.size(); ++i) {
      if (i) out << " ";
      out << op.params[i].name << " - " << op.params[i].type;
    }
    out << ")\n";
    out << "    :precondition (and";
    for (const auto& a : op.pre) out << " " << format_lifted(a, op, d);
    out << ")\n";
    out << "    :effect (and";
    for (const auto& a : op.eff_add) out << " " << format_lifted(a, op, d);
    for (const auto& a : op.eff_del) {
      out << " (not " << format_lifted(a, op, d) << ")";
    }
    out << "))\n";
  }
  out << ")\n";
  return out.str();
}

std::string serialize_problem(const ProblemSpec& p, const DomainSpec& d) {
  std::ostringstream out;
  out << "(define (problem " << p.name << ")\n";
  out << "  (:domain " << p.domain_name << ")\n";
  out << "  (:objects";
  for (const auto& o : p.objects) out << " " << o.name << " - " << o.type;
  out << ")\n";
  out << "  (:init";
  for (const auto& a : p.init) out << "\n    " << format_atom(a, d, p);
  out << ")\n";
  out << "  (:goal (and";
  for (const auto& a : p.goal.atoms) out << " " << format_atom(a, d, p);
  out << ")))\n";
  return out.str();
}

std::string format_atom(const GroundAtom& atom, const DomainSpec& d,
                        const ProblemSpec& p) {
  std::string out = "(" + d.predicates.at(atom.predicate).name;
  for (auto e : atom.arguments()) out += " " + p.objects.at(e).name;
  return out + ")";
}

std::string format_state(const SymbolicState& s, const DomainSpec& d,
                         const ProblemSpec& p) {
  std::vector<std::string> parts;
  for (const auto& a : s) parts.push_back(format_atom(a, d, p));
  return join(parts, " ");
}

std::string format_operator(const GroundOperator& op, const ProblemSpec& p) {
  std::string out = "(" + op.lifted_name;
  for (auto e : op.substitution) out += " " + p.objects.at(e).name;
  return out + ")";
}

GroundAtom parse_ground_atom(std::string_view text, const DomainSpec& d,
                             const ProblemSpec& p) {
  const auto tokens = lex(text);
  const SExpr e = read_sexpr(tokens);
  return read_ground_atom(e, d, p);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace skillplan
