#include "skillplan/planner.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace skillplan {

std::vector<GroundOperator> enumerate_groundings(
    std::span<const LiftedOperator> operators,
    std::span<const ObjectEntity> entities) {
  std::vector<GroundOperator> out;
  for (const auto& lifted : operators) {
    std::vector<std::string> types;
    for (const auto& p : lifted.params) types.push_back(p.type);
    for (const auto& tuple : typed_tuples(types, entities)) {
      out.push_back(ground_operator(lifted, tuple, entities));
    }
  }
  // Entity ids follow name order, so this is (name, argument names) order.
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t goal_count(const Goal& goal, const SymbolicState& s) {
  std::size_t missing = 0;
  for (const auto& a : goal.atoms) missing += s.contains(a) ? 0 : 1;
  return missing;
}

namespace {

std::string state_key(const SymbolicState& s) {
  std::string key;
  key.reserve(s.size() * (2 + kMaxArity * 2));
  for (const auto& a : s) {
    key.push_back(static_cast<char>(a.predicate & 0xff));
    key.push_back(static_cast<char>(a.predicate >> 8));
    key.push_back(static_cast<char>(a.arity));
    for (std::size_t i = 0; i < a.arity; ++i) {
      key.push_back(static_cast<char>(a.args[i] & 0xff));
      key.push_back(static_cast<char>(a.args[i] >> 8));
    }
  }
  return key;
}

struct Node {
  SymbolicState state;
  std::size_t parent;
  std::size_t op;  // index into grounded; unused for the root
  std::size_t g;
};

struct OpenEntry {
  std::size_t f;
  std::size_t g;
  std::size_t order;
  std::size_t node;

  // std::priority_queue is a max-heap; invert for (f, g, order) ascending.
  bool operator<(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (g != o.g) return g > o.g;
    return order > o.order;
  }
};

}  // namespace

PlanResult plan(const SymbolicState& init, const Goal& goal,
                std::span<const GroundOperator> grounded,
                const PlannerConfig& cfg) {
  PlanResult result;
  auto h = [&](const SymbolicState& s) -> std::size_t {
    return cfg.heuristic == Heuristic::GoalCount ? goal_count(goal, s) : 0;
  };

  std::vector<Node> nodes;
  std::unordered_map<std::string, std::size_t> best_g;
  std::priority_queue<OpenEntry> open;
  std::size_t order = 0;

  nodes.push_back({init, 0, 0, 0});
  best_g.emplace(state_key(init), 0);
  open.push({h(init), 0, order++, 0});

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const Node& node = nodes[top.node];
    if (top.g > best_g[state_key(node.state)]) continue;  // stale entry

    if (holds(goal, node.state)) {
      std::vector<std::size_t> chain;
      for (std::size_t n = top.node; n != 0; n = nodes[n].parent) {
        chain.push_back(n);
      }
      std::reverse(chain.begin(), chain.end());
      result.plan.expected_states.push_back(init);
      for (auto n : chain) {
        result.plan.steps.push_back(grounded[nodes[n].op]);
        result.plan.expected_states.push_back(nodes[n].state);
      }
      result.status = PlanStatus::Solved;
      return result;
    }
    if (result.expansions >= cfg.max_expansions) {
      result.status = PlanStatus::BudgetExceeded;
      return result;
    }
    ++result.expansions;

    const std::size_t g = top.g + 1;
    for (std::size_t i = 0; i < grounded.size(); ++i) {
      if (!applicable(grounded[i], nodes[top.node].state)) continue;
      SymbolicState next = successor(grounded[i], nodes[top.node].state);
      auto key = state_key(next);
      auto it = best_g.find(key);
      if (it != best_g.end() && it->second <= g) continue;
      best_g[std::move(key)] = g;
      const std::size_t f = g + h(next);
      nodes.push_back({std::move(next), top.node, i, g});
      open.push({f, g, order++, nodes.size() - 1});
    }
  }
  result.status = PlanStatus::Unsolvable;
  return result;
}

TaskPlan make_plan(std::vector<GroundOperator> steps,
                   const SymbolicState& init) {
  TaskPlan p;
  p.expected_states.push_back(init);
  for (const auto& op : steps) {
    p.expected_states.push_back(apply(op, p.expected_states.back()));
  }
  p.steps = std::move(steps);
  return p;
}

bool validate_plan(const TaskPlan& p, const SymbolicState& init,
                   const Goal& goal) {
  SymbolicState s = init;
  for (const auto& op : p.steps) {
    if (!applicable(op, s)) return false;
    s = successor(op, s);
  }
  return holds(goal, s);
}

std::string dump_plan(const TaskPlan& p, const ProblemSpec& problem) {
  std::string out;
  for (const auto& op : p.steps) {
    out += format_operator(op, problem);
    out += '\n';
  }
  return out;
}

std::vector<GroundOperator> read_plan(std::string_view text,
                                      std::span<const GroundOperator> grounded,
                                      const ProblemSpec& problem) {
  std::unordered_map<std::string, const GroundOperator*> by_name;
  for (const auto& op : grounded) by_name[format_operator(op, problem)] = &op;

  std::vector<GroundOperator> steps;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find(';'); c != std::string::npos) line.erase(c);
    // Normalize whitespace and case so "(Pull  cab1)" matches "(pull cab1)".
    std::istringstream words(line);
    std::string word, norm;
    while (words >> word) {
      for (auto& ch : word) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      }
      if (!norm.empty() && norm.back() != '(' && word != ")") norm += ' ';
      norm += word;
    }
    if (norm.empty()) continue;
    auto it = by_name.find(norm);
    if (it == by_name.end()) {
      throw ParseError("unknown ground operator", line_no, 1, norm);
    }
    steps.push_back(*it->second);
  }
  return steps;
}

}  // namespace skillplan
