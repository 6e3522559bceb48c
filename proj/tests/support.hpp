#pragma once

// Shared fixtures and independent oracles for the test binaries. The oracles
// deliberately avoid the library's symbolic machinery: atoms are plain strings
// and grounding is textual substitution.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skillplan/experiment.hpp"

namespace testing_support {

inline std::string corpus(const std::string& rel) {
  return std::string(SKILLPLAN_SOURCE_DIR) + "/corpus/" + rel;
}

inline std::string test_data(const std::string& rel) {
  return std::string(SKILLPLAN_SOURCE_DIR) + "/tests/data/" + rel;
}

inline skillplan::TaskContext load(const std::string& domain,
                                   const std::string& goal = "train",
                                   bool random_layout = true) {
  using namespace skillplan;
  auto d = parse_domain(read_text_file(corpus(domain + "/domain.pddl")));
  auto p = parse_problem(read_text_file(corpus(domain + "/" + goal + ".pddl")), d);
  EnvConfig ec;
  ec.domain = parse_domain_id(domain);
  ec.randomize_layout = random_layout;
  return make_task(std::move(d), std::move(p), ec);
}

inline skillplan::ExperimentConfig config(const std::string& domain) {
  return skillplan::load_config(std::string(SKILLPLAN_SOURCE_DIR) + "/configs/" +
                                domain + ".ini");
}

using StringState = std::set<std::string>;

struct StringOp {
  std::string name;
  std::vector<std::string> pre, add, del;
};

inline std::string atom_text(const std::string& pred,
                             const std::vector<std::string>& args) {
  std::string s = "(" + pred;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

/// Grounds every operator by enumerating objects per parameter type.
inline std::vector<StringOp> string_groundings(const skillplan::DomainSpec& d,
                                               const skillplan::ProblemSpec& p) {
  std::vector<StringOp> out;
  for (const auto& op : d.operators) {
    std::vector<std::vector<std::string>> choices;
    for (const auto& param : op.params) {
      std::vector<std::string> names;
      for (const auto& o : p.objects) {
        if (o.type == param.type) names.push_back(o.name);
      }
      choices.push_back(names);
    }
    std::vector<std::string> binding(op.params.size());
    auto expand = [&](auto&& self, std::size_t i) -> void {
      if (i == binding.size()) {
        StringOp g{op.name, {}, {}, {}};
        auto fill = [&](const std::vector<skillplan::LiftedAtom>& atoms,
                        std::vector<std::string>& dst) {
          for (const auto& a : atoms) {
            std::vector<std::string> args;
            for (auto idx : a.params) args.push_back(binding[idx]);
            dst.push_back(atom_text(d.predicates[a.predicate].name, args));
          }
        };
        fill(op.pre, g.pre);
        fill(op.eff_add, g.add);
        fill(op.eff_del, g.del);
        for (const auto& b : binding) g.name += " " + b;
        out.push_back(g);
        return;
      }
      for (const auto& c : choices[i]) {
        binding[i] = c;
        self(self, i + 1);
      }
    };
    expand(expand, 0);
  }
  return out;
}

inline StringState to_strings(const skillplan::SymbolicState& s,
                              const skillplan::DomainSpec& d,
                              const skillplan::ProblemSpec& p) {
  StringState out;
  for (const auto& a : s) out.insert(skillplan::format_atom(a, d, p));
  return out;
}

/// Breadth-first search over string states. Returns the shortest plan length,
/// or nullopt when the goal is unreachable.
inline std::optional<std::size_t> bfs_plan_length(
    const StringState& init, const StringState& goal,
    const std::vector<StringOp>& ops) {
  auto satisfied = [&](const StringState& s) {
    for (const auto& g : goal) {
      if (!s.count(g)) return false;
    }
    return true;
  };
  std::map<StringState, std::size_t> depth{{init, 0}};
  std::deque<StringState> frontier{init};
  while (!frontier.empty()) {
    auto s = frontier.front();
    frontier.pop_front();
    const auto d = depth[s];
    if (satisfied(s)) return d;
    for (const auto& op : ops) {
      bool ok = true;
      for (const auto& a : op.pre) ok = ok && s.count(a);
      if (!ok) continue;
      StringState n = s;
      for (const auto& a : op.del) n.erase(a);
      for (const auto& a : op.add) n.insert(a);
      if (depth.emplace(n, d + 1).second) frontier.push_back(n);
    }
  }
  return std::nullopt;
}

/// Declared feature dimension per type, written out independently of the
/// environment's own table.
inline std::size_t declared_dim(const std::string& type) {
  static const std::map<std::string, std::size_t> dims = {
      {"robot", 5}, {"hammer", 4}, {"peg", 4},  {"pod", 4},
      {"cabinet", 3}, {"hole", 3}, {"machine", 4}};
  return dims.at(type);
}

/// Random reachable goal: a symbolic random walk of 1..max_walk applicable
/// steps, then a random non-empty subset (up to 4 atoms) of the final state.
inline skillplan::Goal random_reachable_goal(const skillplan::TaskContext& task,
                                             skillplan::Rng& rng,
                                             std::size_t max_walk = 12) {
  using namespace skillplan;
  SymbolicState s = task.problem.init;
  const auto walk = 1 + uniform_below(rng, max_walk);
  for (std::size_t i = 0; i < walk; ++i) {
    std::vector<const GroundOperator*> options;
    for (const auto& g : task.groundings) {
      if (applicable(g, s)) options.push_back(&g);
    }
    if (options.empty()) break;
    s = successor(*options[uniform_below(rng, options.size())], s);
  }
  std::vector<GroundAtom> atoms(s.begin(), s.end());
  Goal g;
  const auto want = 1 + uniform_below(rng, std::min<std::size_t>(4, atoms.size()));
  while (g.atoms.size() < want) {
    g.atoms.insert(atoms[uniform_below(rng, atoms.size())]);
  }
  return g;
}

/// Learner wrapper: named lifted operators use the reference controller, the
/// rest an untrained greedy table.
class MixedLearner : public skillplan::SkillLearner {
 public:
  explicit MixedLearner(std::set<std::string> scripted)
      : scripted_(std::move(scripted)),
        untrained_(skillplan::Hyperparameters{},
                   skillplan::SharingMode::PerLiftedOperator, 0) {}

  skillplan::RolloutRecord execute(skillplan::Environment& env,
                                   const skillplan::GroundOperator& op,
                                   const skillplan::TaskContext& task) override {
    if (scripted_.count(op.lifted_name)) return reference_.execute(env, op, task);
    return untrained_.execute(env, op, task);
  }
  void optimize(skillplan::Environment&, const skillplan::GroundOperator&,
                const skillplan::TaskContext&, std::size_t,
                const std::function<bool(skillplan::Environment&)>&) override {
    ++optimize_calls;
  }
  std::size_t optimize_calls = 0;

 private:
  std::set<std::string> scripted_;
  skillplan::ScriptedLearner reference_;
  skillplan::TabularLearner untrained_;
};

/// Succeeds with the reference controller once a lifted operator has been
/// optimized `rounds` times; before that it fails without acting.
class MastersAfter : public skillplan::SkillLearner {
 public:
  explicit MastersAfter(std::size_t rounds) : rounds_(rounds) {}

  skillplan::RolloutRecord execute(skillplan::Environment& env,
                                   const skillplan::GroundOperator& op,
                                   const skillplan::TaskContext& task) override {
    if (count_[op.lifted_name] >= rounds_) return reference_.execute(env, op, task);
    skillplan::RolloutRecord r;
    r.op = op;
    return r;
  }
  void optimize(skillplan::Environment&, const skillplan::GroundOperator& op,
                const skillplan::TaskContext&, std::size_t,
                const std::function<bool(skillplan::Environment&)>&) override {
    ++count_[op.lifted_name];
    order.push_back(op.lifted_name);
  }
  std::vector<std::string> order;

 private:
  std::size_t rounds_;
  std::map<std::string, std::size_t> count_;
  skillplan::ScriptedLearner reference_;
};

}  // namespace testing_support
