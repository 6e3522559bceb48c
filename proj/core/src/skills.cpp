#include "skillplan/skills.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace skillplan {

const LiftedOperator& TaskContext::lifted(std::string_view name) const {
  if (const auto* op = domain.find_operator(name)) return *op;
  throw DomainError("unknown operator '" + std::string(name) + "'");
}

TaskContext make_task(DomainSpec domain, ProblemSpec problem, EnvConfig env) {
  TaskContext t;
  t.world = std::make_shared<const World>(env);
  t.predicates = t.world->bind(domain);
  t.world->check_problem(problem);
  t.parser = StateParser(t.predicates, problem.objects);
  t.groundings = enumerate_groundings(domain.operators, problem.objects);
  const auto parsed = t.parser(t.world->reset(env.seed));
  if (parsed != problem.init) {
    throw DomainError("problem '" + problem.name +
                      "' init differs from the environment reset state: "
                      "expected " + format_state(parsed, domain, problem) +
                      ", file has " + format_state(problem.init, domain, problem));
  }
  t.domain = std::move(domain);
  t.problem = std::move(problem);
  return t;
}

void RewardSpec::validate() const {
  if (!(effect_weight >= 0.0 && effect_weight <= 1.0)) {
    throw DomainError("effect weight must lie in [0, 1]");
  }
}

double effect_fraction(const SymbolicState& next, const GroundOperator& op) {
  const std::size_t total = op.eff_add.size() + op.eff_del.size();
  if (total == 0) {
    throw DomainError("operator " + op.lifted_name +
                      " has no effects; reward is undefined");
  }
  std::size_t hits = 0;
  for (const auto& a : op.eff_add) hits += next.contains(a) ? 1 : 0;
  for (const auto& a : op.eff_del) hits += next.contains(a) ? 0 : 1;
  return static_cast<double>(hits) / static_cast<double>(total);
}

double reward(const EnvState& x, const EnvState& x_next,
              const GroundOperator& op, const RewardSpec& spec,
              const TaskContext& task) {
  (void)x;  // the reward depends on the successor only
  const double eff = effect_fraction(task.parse(x_next), op);
  const double phi = task.world->shaping_potential(x_next, op);
  const double r = spec.effect_weight * eff + (1.0 - spec.effect_weight) * phi;
  return std::clamp(std::isfinite(r) ? r : 0.0, 0.0, 1.0);
}

namespace {

std::uint64_t bin(double v, int lo, int hi) {
  if (!std::isfinite(v)) v = 0.0;
  const double c = std::clamp(std::round(v), static_cast<double>(lo),
                              static_cast<double>(hi));
  return static_cast<std::uint64_t>(static_cast<int>(c) - lo);
}

}  // namespace

StateKey encode(const AbstractState& a) {
  if (a.slots.empty() || a.slots.size() > 8) {
    throw StateIntegrityError("abstract state must have 1 to 8 slots");
  }
  const auto& robot = a.slots[0].features;
  if (robot.size() < 3) throw StateIntegrityError("robot slot too short");
  StateKey key = bin(robot[2], 0, 1);
  int shift = 1;
  for (std::size_t i = 1; i < a.slots.size(); ++i) {
    const auto& f = a.slots[i].features;
    if (f.size() < 2) throw StateIntegrityError("entity slot too short");
    const std::uint64_t dx = bin(f[0] - robot[0], -3, 3);
    const std::uint64_t dy = bin(f[1] - robot[1], -3, 3);
    const std::uint64_t status = f.size() > 2 ? bin(4.0 * f[2], 0, 4) : 0;
    key |= (dx | dy << 3 | status << 6) << shift;
    shift += 9;
  }
  return key;
}

void Hyperparameters::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  for (double e : {epsilon_start, epsilon_end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
  }
  if (horizon == 0) throw DomainError("horizon must be positive");
  if (replay_capacity == 0) throw DomainError("replay capacity must be positive");
  reward.validate();
}

bool Hyperparameters::operator==(const Hyperparameters& o) const {
  return gamma == o.gamma && alpha == o.alpha &&
         epsilon_start == o.epsilon_start && epsilon_end == o.epsilon_end &&
         epsilon_decay_episodes == o.epsilon_decay_episodes &&
         horizon == o.horizon && replay_capacity == o.replay_capacity &&
         minibatch == o.minibatch &&
         reward.effect_weight == o.reward.effect_weight;
}

ReplayStore::ReplayStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw DomainError("replay capacity must be positive");
}

void ReplayStore::push(const Transition& t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(t);
}

const Transition& ReplayStore::sample(Rng& rng) const {
  if (items_.empty()) throw DomainError("sampling from an empty replay store");
  return items_[uniform_below(rng, items_.size())];
}

SkillPolicy::SkillPolicy(AbstractSignature signature, Hyperparameters hp)
    : signature_(std::move(signature)), hp_(hp) {
  hp_.validate();
}

double SkillPolicy::epsilon() const {
  if (hp_.epsilon_decay_episodes == 0 || episodes_ >= hp_.epsilon_decay_episodes) {
    return hp_.epsilon_end;
  }
  const double frac = static_cast<double>(episodes_) /
                      static_cast<double>(hp_.epsilon_decay_episodes);
  return hp_.epsilon_start + (hp_.epsilon_end - hp_.epsilon_start) * frac;
}

const ActionValues* SkillPolicy::values(StateKey s) const {
  auto it = table_.find(s);
  return it == table_.end() ? nullptr : &it->second;
}

std::size_t SkillPolicy::greedy(StateKey s) const {
  const auto* q = values(s);
  if (!q) return 0;
  return static_cast<std::size_t>(std::max_element(q->begin(), q->end()) -
                                  q->begin());
}

std::size_t SkillPolicy::act(StateKey s, bool explore, Rng& rng) const {
  if (explore && uniform_unit(rng) < epsilon()) {
    return uniform_below(rng, kPolicyActionCount);
  }
  return greedy(s);
}

void SkillPolicy::update(const Transition& t) {
  double target = t.reward;
  if (!t.done) {
    if (const auto* next = values(t.next)) {
      target += hp_.gamma * *std::max_element(next->begin(), next->end());
    }
  }
  auto& q = table_[t.state];  // value-initialized to zeros
  q[t.action] += hp_.alpha * (target - q[t.action]);
}

void SkillPolicy::rebind(AbstractSignature signature) {
  if (!signature_.layout_compatible(signature)) {
    throw DomainError("cannot map skill " + to_string(signature_) + " onto " +
                      to_string(signature) + ": layouts differ");
  }
  signature_ = std::move(signature);
}

bool SkillPolicy::operator==(const SkillPolicy& o) const {
  return signature_ == o.signature_ && hp_ == o.hp_ &&
         episodes_ == o.episodes_ && table_ == o.table_;
}

// Binary encoding helpers. Values are written in host byte order; every
// supported target is little-endian.
namespace {

constexpr char kMagic[8] = {'S', 'K', 'P', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DomainError("checkpoint truncated");
  }
  return v;
}

void put_str(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 20)) throw DomainError("checkpoint string too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw DomainError("checkpoint truncated");
  return s;
}

}  // namespace

void SkillPolicy::write(std::ostream& out) const {
  put_str(out, signature_.op);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(signature_.slots.size()));
  for (const auto& s : signature_.slots) {
    put_str(out, s.type);
    put<std::uint64_t>(out, s.dim);
  }
  put(out, hp_.gamma);
  put(out, hp_.alpha);
  put(out, hp_.epsilon_start);
  put(out, hp_.epsilon_end);
  put<std::uint64_t>(out, hp_.epsilon_decay_episodes);
  put<std::uint64_t>(out, hp_.horizon);
  put<std::uint64_t>(out, hp_.replay_capacity);
  put<std::uint64_t>(out, hp_.minibatch);
  put(out, hp_.reward.effect_weight);
  put<std::uint64_t>(out, episodes_);

  std::vector<StateKey> keys;
  keys.reserve(table_.size());
  for (const auto& [k, v] : table_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  put<std::uint64_t>(out, keys.size());
  for (auto k : keys) {
    put(out, k);
    for (double q : table_.at(k)) put(out, q);
  }
}

SkillPolicy SkillPolicy::read(std::istream& in) {
  SkillPolicy p;
  p.signature_.op = get_str(in);
  const auto nslots = get<std::uint32_t>(in);
  if (nslots > 16) throw DomainError("checkpoint signature too wide");
  for (std::uint32_t i = 0; i < nslots; ++i) {
    SignatureSlot s;
    s.type = get_str(in);
    s.dim = get<std::uint64_t>(in);
    p.signature_.slots.push_back(s);
  }
  p.hp_.gamma = get<double>(in);
  p.hp_.alpha = get<double>(in);
  p.hp_.epsilon_start = get<double>(in);
  p.hp_.epsilon_end = get<double>(in);
  p.hp_.epsilon_decay_episodes = get<std::uint64_t>(in);
  p.hp_.horizon = get<std::uint64_t>(in);
  p.hp_.replay_capacity = get<std::uint64_t>(in);
  p.hp_.minibatch = get<std::uint64_t>(in);
  p.hp_.reward.effect_weight = get<double>(in);
  p.hp_.validate();
  p.episodes_ = get<std::uint64_t>(in);
  const auto n = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto k = get<StateKey>(in);
    ActionValues q{};
    for (auto& v : q) v = get<double>(in);
    p.table_.emplace(k, q);
  }
  return p;
}

RolloutRecord rollout_skill(Environment& env, SkillSlot& slot,
                            const GroundOperator& op, const TaskContext& task,
                            const RolloutOptions& options, Rng& rng) {
  const World& world = env.world();
  const SymbolicState before = task.parse(env.state());
  if (!applicable(op, before)) {
    throw PreconditionViolation("skill " + format_operator(op, task.problem) +
                                " started outside its preconditions");
  }
  const SymbolicState expected = successor(op, before);
  const auto& hp = slot.policy.hyperparameters();

  RolloutRecord rec;
  rec.op = op;
  if (!op.substitution.empty()) {
    env.focus(op.substitution.front());
    rec.approach_steps = env.approach(op.substitution.front()).primitive_steps;
  }
  auto verified = [&](const EnvState& x) {
    return task.parse(x).includes(expected);
  };
  auto potential = [&](const EnvState& x) {
    return reward(x, x, op, hp.reward, task);
  };

  EnvState x = env.state();
  double px = potential(x);
  rec.success = verified(x);
  while (!rec.success && rec.steps < hp.horizon) {
    const StateKey s = encode(extract(x, op, world));
    const auto a = slot.policy.act(s, options.explore, rng);
    const auto step = env.step(Action::policy(a));
    ++rec.steps;
    EnvState nx = env.state();
    rec.success = verified(nx);
    const double pn = potential(nx);
    // Potential-difference shaping; success is terminal with reward 1.
    const Transition t{s, static_cast<std::uint8_t>(a),
                       rec.success ? 1.0 : hp.gamma * pn - px,
                       encode(extract(nx, op, world)), rec.success};
    rec.transitions.push_back(t);
    if (options.explore) slot.store.push(t);
    if (options.learn) {
      slot.policy.update(t);
      for (std::size_t i = 0; i < hp.minibatch && !slot.store.empty(); ++i) {
        slot.policy.update(slot.store.sample(rng));
      }
    }
    x = std::move(nx);
    px = pn;
    if (step.terminated) break;
  }
  rec.final_reward = px;
  if (options.explore) slot.policy.count_episode();
  return rec;
}

namespace {

std::string state_bytes(const EnvState& x) {
  std::string out;
  for (const auto& f : x.features) {
    out.append(reinterpret_cast<const char*>(f.data()), f.size() * sizeof(double));
  }
  return out;
}

}  // namespace

std::optional<std::vector<Action>> scripted_controller(
    const World& world, const EnvState& start, const GroundOperator& op,
    const TaskContext& task, std::size_t max_depth) {
  const SymbolicState expected = successor(op, task.parse(start));
  struct Node {
    EnvState state;
    std::size_t parent;
    std::uint8_t action;
    std::size_t depth;
  };
  std::vector<Node> nodes{{start, 0, 0, 0}};
  std::unordered_set<std::string> seen{state_bytes(start)};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (task.parse(nodes[i].state).includes(expected)) {
      std::vector<Action> out;
      for (std::size_t n = i; n != 0; n = nodes[n].parent) {
        out.push_back(Action::policy(nodes[n].action));
      }
      std::reverse(out.begin(), out.end());
      return out;
    }
    if (nodes[i].depth == max_depth) continue;
    for (std::size_t a = 0; a < kPolicyActionCount; ++a) {
      auto next = world.step(nodes[i].state, Action::policy(a)).next;
      if (!seen.insert(state_bytes(next)).second) continue;
      nodes.push_back({std::move(next), i, static_cast<std::uint8_t>(a),
                       nodes[i].depth + 1});
    }
  }
  return std::nullopt;
}

std::string to_string(SharingMode m) {
  return m == SharingMode::PerLiftedOperator ? "lifted" : "grounding";
}

SharingMode parse_sharing_mode(std::string_view text) {
  if (text == "lifted") return SharingMode::PerLiftedOperator;
  if (text == "grounding") return SharingMode::PerGrounding;
  throw DomainError("sharing mode must be 'lifted' or 'grounding', got '" +
                    std::string(text) + "'");
}

SkillLibrary::SkillLibrary(Hyperparameters hp, SharingMode mode)
    : hp_(hp), mode_(mode) {
  hp_.validate();
}

std::string SkillLibrary::key_for(const GroundOperator& op) const {
  std::string key = op.lifted_name;
  if (mode_ == SharingMode::PerGrounding) {
    for (auto e : op.substitution) key += "-" + std::to_string(e);
  }
  return key;
}

SkillSlot& SkillLibrary::slot(const GroundOperator& op,
                              const TaskContext& task) {
  const auto key = key_for(op);
  auto it = slots_.find(key);
  if (it != slots_.end()) return it->second;
  auto sig = abstract_space_signature(task.lifted(op.lifted_name), task.domain,
                                      *task.world);
  return slots_
      .emplace(key, SkillSlot{SkillPolicy(std::move(sig), hp_),
                              ReplayStore(hp_.replay_capacity)})
      .first->second;
}

const SkillSlot* SkillLibrary::find(const std::string& key) const {
  auto it = slots_.find(key);
  return it == slots_.end() ? nullptr : &it->second;
}

void SkillLibrary::put(const std::string& key, SkillSlot slot) {
  slots_.insert_or_assign(key, std::move(slot));
}

bool SkillLibrary::operator==(const SkillLibrary& o) const {
  if (!(hp_ == o.hp_) || mode_ != o.mode_ || slots_.size() != o.slots_.size()) {
    return false;
  }
  for (const auto& [k, s] : slots_) {
    const auto* other = o.find(k);
    if (!other || !(s.policy == other->policy) || !(s.store == other->store)) {
      return false;
    }
  }
  return true;
}

TabularLearner::TabularLearner(Hyperparameters hp, SharingMode mode,
                               std::uint64_t seed)
    : library_(hp, mode), rng_(mix_seed(seed, 0x5ca1ab1eu)) {}

TabularLearner::TabularLearner(SkillLibrary library, std::uint64_t seed)
    : library_(std::move(library)), rng_(mix_seed(seed, 0x5ca1ab1eu)) {}

RolloutRecord TabularLearner::execute(Environment& env, const GroundOperator& op,
                                      const TaskContext& task) {
  return rollout_skill(env, library_.slot(op, task), op, task, {}, rng_);
}

void TabularLearner::optimize(Environment& env, const GroundOperator& op,
                              const TaskContext& task, std::size_t episodes,
                              const std::function<bool(Environment&)>& reset) {
  auto& slot = library_.slot(op, task);
  for (std::size_t k = 0; k < episodes; ++k) {
    if (!reset(env)) continue;
    rollout_skill(env, slot, op, task, {true, true}, rng_);
  }
}

RolloutRecord ScriptedLearner::execute(Environment& env,
                                       const GroundOperator& op,
                                       const TaskContext& task) {
  const SymbolicState before = task.parse(env.state());
  if (!applicable(op, before)) {
    throw PreconditionViolation("skill " + format_operator(op, task.problem) +
                                " started outside its preconditions");
  }
  RolloutRecord rec;
  rec.op = op;
  if (auto actions = scripted_controller(env.world(), env.state(), op, task,
                                         horizon)) {
    for (const auto& a : *actions) {
      env.step(a);
      ++rec.steps;
    }
  }
  rec.success = task.parse(env.state()).includes(successor(op, before));
  rec.final_reward = reward(env.state(), env.state(), op, reward_spec, task);
  return rec;
}

double proficiency(SkillLearner& learner, Environment& env,
                   std::span<const GroundOperator> ops,
                   std::span<const std::uint64_t> seeds,
                   const TaskContext& task,
                   const std::function<bool(Environment&, const GroundOperator&,
                                            std::uint64_t)>& reset) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& op : ops) {
    for (auto seed : seeds) {
      if (!reset(env, op, seed)) continue;
      sum += learner.execute(env, op, task).final_reward;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void write_checkpoint(const std::string& path, const SkillSlot& slot) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DomainError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  slot.policy.write(out);
  put<std::uint64_t>(out, slot.store.capacity());
  put<std::uint64_t>(out, slot.store.size());
  for (std::size_t i = 0; i < slot.store.size(); ++i) {
    const auto& t = slot.store.at(i);
    put(out, t.state);
    put(out, t.action);
    put(out, t.reward);
    put(out, t.next);
    put<std::uint8_t>(out, t.done ? 1 : 0);
  }
  if (!out) throw DomainError("failed writing checkpoint " + path);
}

SkillSlot read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open checkpoint " + path);
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DomainError(path + " is not a skill checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DomainError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  SkillSlot slot{SkillPolicy::read(in), ReplayStore(get<std::uint64_t>(in))};
  const auto n = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    Transition t;
    t.state = get<StateKey>(in);
    t.action = get<std::uint8_t>(in);
    t.reward = get<double>(in);
    t.next = get<StateKey>(in);
    t.done = get<std::uint8_t>(in) != 0;
    if (t.action >= kPolicyActionCount) {
      throw DomainError(path + ": corrupt transition action");
    }
    slot.store.push(t);
  }
  return slot;
}

void save_library(const SkillLibrary& lib, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt", std::ios::trunc);
  if (!manifest) throw DomainError("cannot write manifest in " + dir);
  manifest << "skillplan-checkpoints " << kCheckpointVersion << "\n";
  manifest << "mode " << to_string(lib.mode()) << "\n";
  for (const auto& [key, slot] : lib.slots()) {
    const std::string file = key + ".ckpt";
    write_checkpoint((fs::path(dir) / file).string(), slot);
    manifest << "skill " << key << " " << file << "\n";
  }
}

SkillLibrary load_library(const std::string& dir) {
  namespace fs = std::filesystem;
  std::istringstream in(read_text_file((fs::path(dir) / "manifest.txt").string()));
  std::string word;
  std::uint32_t version = 0;
  if (!(in >> word >> version) || word != "skillplan-checkpoints" ||
      version != kCheckpointVersion) {
    throw DomainError(dir + "/manifest.txt: bad header");
  }
  std::string mode;
  if (!(in >> word >> mode) || word != "mode") {
    throw DomainError(dir + "/manifest.txt: missing mode line");
  }
  std::vector<std::pair<std::string, SkillSlot>> loaded;
  std::string key, file;
  while (in >> word >> key >> file) {
    if (word != "skill") throw DomainError(dir + "/manifest.txt: bad entry");
    loaded.emplace_back(key, read_checkpoint((fs::path(dir) / file).string()));
  }
  Hyperparameters hp;
  if (!loaded.empty()) hp = loaded.front().second.policy.hyperparameters();
  SkillLibrary lib(hp, parse_sharing_mode(mode));
  for (auto& [k, s] : loaded) lib.put(k, std::move(s));
  return lib;
}

}  // namespace skillplan
