#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace skillplan;
namespace ts = testing_support;

namespace {

const GroundOperator& find_op(const TaskContext& task, const std::string& printed) {
  for (const auto& g : task.groundings) {
    if (format_operator(g, task.problem) == printed) return g;
  }
  throw std::runtime_error("no grounding " + printed);
}

EnvState run(const World& w, EnvState s, std::initializer_list<const char*> actions) {
  for (const auto* a : actions) s = w.step(s, parse_action(a, w)).next;
  return s;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("skillplan-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("skills") {

TEST_CASE("reward mixes effect fraction with closeness") {
  auto task = ts::load("drawer", "train", false);
  const auto& w = *task.world;
  const auto& pull = find_op(task, "(pull cab1)");
  const auto& pick = find_op(task, "(pick hammer1)");
  RewardSpec spec;  // weight 0.5; grid 6x5 normalizes distances by 9

  auto x0 = w.reset(0);  // robot (0,0), cab1 handle (1,3), hammer1 (1,1)
  CHECK(reward(x0, x0, pull, spec, task) == doctest::Approx(0.5 * (1 - 4.0 / 9)));
  CHECK(reward(x0, x0, pick, spec, task) == doctest::Approx(0.5 * (1 - 2.0 / 9)));

  auto at_handle = run(w, x0, {"move 0 1", "move 0 1", "move 0 1", "move 1 0"});
  auto midway = run(w, at_handle, {"pull", "pull"});
  CHECK(reward(at_handle, midway, pull, spec, task) == doctest::Approx(0.5));
  auto opened = run(w, midway, {"pull"});
  CHECK(reward(midway, opened, pull, spec, task) == doctest::Approx(1.0));

  RewardSpec effects_only{1.0};
  CHECK(reward(midway, midway, pull, effects_only, task) == 0.0);
  CHECK(reward(midway, opened, pull, effects_only, task) == 1.0);
  CHECK(effect_fraction(task.parse(opened), pull) == 1.0);
  CHECK(effect_fraction(task.parse(x0), pick) == 0.0);
}

TEST_CASE("delivery potential is staged") {
  auto task = ts::load("drawer", "train", false);
  const auto& w = *task.world;
  const auto& place = find_op(task, "(place hammer1 cab1)");
  auto s = run(w, w.reset(0), {"move 0 1", "move 0 1", "move 0 1", "move 1 0",
                               "pull", "pull", "pull", "move 0 -1", "move 0 -1"});
  const double reaching = w.shaping_potential(s, place);
  CHECK(reaching == doctest::Approx(0.5));
  s = run(w, s, {"grasp"});
  const double carrying = w.shaping_potential(s, place);
  CHECK(carrying == doctest::Approx(0.5 + 0.5 * (1 - 3.0 / 9)));
  s = run(w, s, {"move 0 1", "move 0 1", "move 0 1"});
  CHECK(w.shaping_potential(s, place) == doctest::Approx(1.0));
}

TEST_CASE("reward stays in the unit interval on random walks") {
  for (const char* d : {"drawer", "peg", "coffee"}) {
    auto task = ts::load(d);
    Rng rng(99);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto x = task.world->reset(seed);
      for (int i = 0; i < 40; ++i) {
        auto y = task.world->step(x, Action::policy(uniform_below(rng, kPolicyActionCount))).next;
        for (const auto& g : task.groundings) {
          const double r = reward(x, y, g, RewardSpec{uniform_unit(rng)}, task);
          CHECK(r >= 0.0);
          CHECK(r <= 1.0);
        }
        x = y;
      }
    }
  }
}

TEST_CASE("state key bins offsets and status") {
  AbstractState a{{{"robot", {2, 1, 1, 0, 0}}, {"cab1", {3, 4, 0.5}}}};
  // gripper 1; dx 1 -> 4, dy 3 -> 6, status 2, packed from bit 1.
  CHECK(encode(a) == (1u | (4u | 6u << 3 | 2u << 6) << 1));
  AbstractState far{{{"robot", {0, 0, 0, 0, 0}}, {"cab1", {10, -10, 2.0}}}};
  CHECK(encode(far) == ((6u | 0u << 3 | 4u << 6) << 1));
  CHECK_THROWS_AS(encode(AbstractState{}), StateIntegrityError);
}

TEST_CASE("replay store drops the oldest transition") {
  ReplayStore store(3);
  for (StateKey k = 0; k < 5; ++k) store.push({k, 0, 0.0, k + 1, false});
  CHECK(store.size() == 3);
  CHECK(store.at(0).state == 2);
  CHECK(store.at(2).state == 4);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) CHECK(store.sample(rng).state >= 2);
  CHECK_THROWS_AS(ReplayStore(0), DomainError);
  CHECK_THROWS_AS(ReplayStore(2).sample(rng), DomainError);
}

TEST_CASE("q update matches a hand computation") {
  SkillPolicy p(AbstractSignature{"pull", {{"robot", 5}, {"cabinet", 3}}}, {});
  p.update({1, 2, 0.5, 2, false});
  CHECK((*p.values(1))[2] == doctest::Approx(0.05));
  p.update({2, 0, 1.0, 3, true});
  CHECK((*p.values(2))[0] == doctest::Approx(0.1));
  p.update({1, 2, 0.5, 2, false});
  // target 0.5 + 0.99 * 0.1; 0.05 + 0.1 * (0.599 - 0.05)
  CHECK((*p.values(1))[2] == doctest::Approx(0.1049));
  CHECK(p.greedy(1) == 2);
  CHECK(p.greedy(77) == 0);
  CHECK(p.table_size() == 2);
}

TEST_CASE("epsilon decays linearly then holds") {
  SkillPolicy p(AbstractSignature{"pull", {{"robot", 5}}}, {});
  CHECK(p.epsilon() == doctest::Approx(0.3));
  for (int i = 0; i < 100; ++i) p.count_episode();
  CHECK(p.epsilon() == doctest::Approx(0.175));
  for (int i = 0; i < 150; ++i) p.count_episode();
  CHECK(p.epsilon() == doctest::Approx(0.05));
}

TEST_CASE("hyperparameters are validated") {
  Hyperparameters hp;
  hp.gamma = 1.0;
  CHECK_THROWS_AS(hp.validate(), DomainError);
  hp = {};
  hp.horizon = 0;
  CHECK_THROWS_AS(hp.validate(), DomainError);
  hp = {};
  hp.reward.effect_weight = 1.5;
  CHECK_THROWS_AS(hp.validate(), DomainError);
}

TEST_CASE("rollout respects the horizon and preconditions") {
  auto task = ts::load("drawer");
  Environment env(task.world);
  env.reset(4);
  Hyperparameters hp;
  hp.horizon = 1;
  SkillLibrary lib(hp, SharingMode::PerLiftedOperator);
  Rng rng(0);
  const auto& pick = find_op(task, "(pick hammer1)");
  auto rec = rollout_skill(env, lib.slot(pick, task), pick, task, {}, rng);
  CHECK(rec.steps == 1);
  CHECK(rec.transitions.size() == 1);
  CHECK_FALSE(rec.success);
  CHECK(lib.slot(pick, task).store.empty());

  env.reset(4);
  const auto& place = find_op(task, "(place hammer1 cab1)");
  CHECK_THROWS_AS(rollout_skill(env, lib.slot(place, task), place, task, {}, rng),
                  PreconditionViolation);
}

TEST_CASE("reference controller solves every applicable operator") {
  for (const char* d : {"drawer", "peg", "coffee"}) {
    auto task = ts::load(d);
    Environment env(task.world);
    ScriptedLearner ref;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      env.reset(seed);
      auto r = plan(task.parse(env.state()), task.problem.goal, task.groundings);
      for (const auto& op : r.plan.steps) {
        CHECK(ref.execute(env, op, task).success);
      }
      CHECK(holds(task.problem.goal, task.parse(env.state())));
    }
  }
}

TEST_CASE("sharing mode decides the slot key") {
  auto task = ts::load("peg");
  const auto& pick1 = find_op(task, "(pick peg1)");
  const auto& pick2 = find_op(task, "(pick peg2)");
  SkillLibrary shared({}, SharingMode::PerLiftedOperator);
  CHECK(shared.key_for(pick1) == "pick");
  CHECK(&shared.slot(pick1, task) == &shared.slot(pick2, task));
  SkillLibrary separate({}, SharingMode::PerGrounding);
  CHECK(separate.key_for(pick1) == "pick-2");
  CHECK(&separate.slot(pick1, task) != &separate.slot(pick2, task));
  CHECK(parse_sharing_mode(to_string(SharingMode::PerGrounding)) ==
        SharingMode::PerGrounding);
  CHECK_THROWS_AS(parse_sharing_mode("both"), DomainError);
}

TEST_CASE("rebind requires a compatible layout") {
  auto peg = ts::load("peg");
  auto drawer = ts::load("drawer");
  SkillPolicy p(abstract_space_signature(peg.lifted("pick"), peg.domain, *peg.world), {});
  CHECK_THROWS_AS(
      p.rebind(abstract_space_signature(peg.lifted("insert"), peg.domain, *peg.world)),
      DomainError);
  p.rebind(abstract_space_signature(drawer.lifted("pick"), drawer.domain, *drawer.world));
  CHECK(to_string(p.signature()) == "pick(robot:5 hammer:4)");
}

TEST_CASE("a single-cell pull skill is learned") {
  auto task = ts::load("drawer");
  const auto& pull = find_op(task, "(pull cab1)");
  double total = 0.0;
  const int seeds = 10, trials = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    TabularLearner learner({}, SharingMode::PerLiftedOperator, static_cast<std::uint64_t>(seed));
    Environment env(task.world);
    std::uint64_t k = 0;
    learner.optimize(env, pull, task, 200, [&](Environment& e) {
      e.reset(mix_seed(static_cast<std::uint64_t>(seed), k++));
      return true;
    });
    int ok = 0;
    for (int i = 0; i < trials; ++i) {
      env.reset(mix_seed(1000 + static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(i)));
      ok += learner.execute(env, pull, task).success ? 1 : 0;
    }
    total += static_cast<double>(ok) / trials;
  }
  CHECK(total / seeds >= 0.95);
}

TEST_CASE("training is deterministic and zero episodes change nothing") {
  auto task = ts::load("peg");
  const auto& pick = find_op(task, "(pick peg1)");
  auto train = [&](std::uint64_t seed, std::size_t episodes) {
    TabularLearner learner({}, SharingMode::PerLiftedOperator, seed);
    Environment env(task.world);
    std::uint64_t k = 0;
    learner.optimize(env, pick, task, episodes, [&](Environment& e) {
      e.reset(k++);
      return true;
    });
    return learner;
  };
  auto a = train(3, 30);
  auto b = train(3, 30);
  CHECK(a.library() == b.library());
  CHECK_FALSE(a.library() == train(4, 30).library());

  auto before = a.library();
  Environment env(task.world);
  a.optimize(env, pick, task, 0, [](Environment&) { return true; });
  CHECK(a.library() == before);
}

TEST_CASE("checkpoints round-trip") {
  auto task = ts::load("drawer");
  TabularLearner learner({}, SharingMode::PerGrounding, 1);
  Environment env(task.world);
  std::uint64_t k = 0;
  for (const char* name : {"(pull cab1)", "(pick hammer2)"}) {
    learner.optimize(env, find_op(task, name), task, 20, [&](Environment& e) {
      e.reset(k++);
      return true;
    });
  }
  const auto dir = scratch("ckpt");
  save_library(learner.library(), dir.string());
  const auto loaded = load_library(dir.string());
  CHECK(loaded == learner.library());
  CHECK(loaded.mode() == SharingMode::PerGrounding);
  CHECK(loaded.slots().size() == 2);

  const auto file = dir / (loaded.slots().begin()->first + ".ckpt");
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
  }
  CHECK_THROWS_AS(read_checkpoint(file.string()), DomainError);
  std::filesystem::resize_file(file, 20);
  CHECK_THROWS_AS(read_checkpoint(file.string()), DomainError);
  CHECK_THROWS_AS(load_library((dir / "missing").string()), std::exception);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
