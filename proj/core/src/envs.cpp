#include "skillplan/envs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <utility>

#include "skillplan/rng.hpp"

namespace skillplan {

DomainId parse_domain_id(std::string_view name) {
  if (name == "drawer") return DomainId::Drawer;
  if (name == "peg") return DomainId::Peg;
  if (name == "coffee") return DomainId::Coffee;
  throw DomainError("unknown domain '" + std::string(name) +
                    "' (expected drawer, peg or coffee)");
}

std::string to_string(DomainId id) {
  switch (id) {
    case DomainId::Drawer: return "drawer";
    case DomainId::Peg: return "peg";
    case DomainId::Coffee: return "coffee";
  }
  return "?";
}

void EnvConfig::validate() const {
  if (width < 4 || height < 4) {
    throw DomainError("grid must be at least 4x4, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
}

Action Action::move(int dx, int dy) {
  if (std::abs(dx) + std::abs(dy) != 1) {
    throw DomainError("move must change exactly one coordinate by 1");
  }
  if (dy == 1) return {ActionKind::North, 0};
  if (dy == -1) return {ActionKind::South, 0};
  if (dx == 1) return {ActionKind::East, 0};
  return {ActionKind::West, 0};
}

Action Action::policy(std::size_t index) {
  if (index >= kPolicyActionCount) throw DomainError("policy action out of range");
  return {static_cast<ActionKind>(index), 0};
}

namespace {

// Feature slots.
constexpr std::size_t kX = 0, kY = 1;
constexpr std::size_t kGripperOpen = 2, kTargetDx = 3, kTargetDy = 4;
constexpr std::size_t kAttached = 2, kContained = 3;
constexpr std::size_t kExtent = 2;
constexpr std::size_t kFilled = 2;
constexpr std::size_t kLidClosed = 2, kMachineFilled = 3;

constexpr double kPullStep = 0.25;
constexpr double kOpenThreshold = 0.5;

struct RosterEntry {
  const char* name;
  const char* type;
  EntityKind kind;
};

std::vector<RosterEntry> roster_for(DomainId d) {
  switch (d) {
    case DomainId::Drawer:
      return {{"cab1", "cabinet", EntityKind::Cabinet},
              {"cab2", "cabinet", EntityKind::Cabinet},
              {"hammer1", "hammer", EntityKind::Object},
              {"hammer2", "hammer", EntityKind::Object},
              {"robot", "robot", EntityKind::Robot}};
    case DomainId::Peg:
      return {{"hole1", "hole", EntityKind::Hole},
              {"hole2", "hole", EntityKind::Hole},
              {"peg1", "peg", EntityKind::Object},
              {"peg2", "peg", EntityKind::Object},
              {"robot", "robot", EntityKind::Robot}};
    case DomainId::Coffee:
      return {{"cab1", "cabinet", EntityKind::Cabinet},
              {"machine1", "machine", EntityKind::Machine},
              {"pod1", "pod", EntityKind::Object},
              {"robot", "robot", EntityKind::Robot}};
  }
  return {};
}

std::size_t dim_of(EntityKind k) {
  switch (k) {
    case EntityKind::Robot: return 5;
    case EntityKind::Object: return 4;
    case EntityKind::Cabinet: return 3;
    case EntityKind::Hole: return 3;
    case EntityKind::Machine: return 4;
  }
  return 1;
}

bool flag(double v) { return v >= 0.5; }

void require_arity(std::string_view name, std::span<const EntityId> args,
                   std::size_t n) {
  if (args.size() != n) {
    throw DomainError("classifier " + std::string(name) + " expects " +
                      std::to_string(n) + " argument(s), got " +
                      std::to_string(args.size()));
  }
}

}  // namespace

World::World(EnvConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  build_roster();
  build_registry();
}

void World::build_roster() {
  for (const auto& r : roster_for(cfg_.domain)) {
    entities_.push_back({r.name, r.type});
    kinds_.push_back(r.kind);
    if (r.kind == EntityKind::Robot) {
      robot_ = static_cast<EntityId>(entities_.size() - 1);
    }
    const bool known =
        std::any_of(types_.begin(), types_.end(),
                    [&](const ObjectType& t) { return t.name == r.type; });
    if (!known) types_.push_back({r.type, dim_of(r.kind)});
  }
}

std::size_t World::feature_dim(std::string_view type) const {
  for (const auto& t : types_) {
    if (t.name == type) return t.feature_dim;
  }
  throw DomainError("type '" + std::string(type) + "' is not part of domain " +
                    to_string(cfg_.domain));
}

std::optional<EntityId> World::find_entity(std::string_view name) const {
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    if (entities_[i].name == name) return static_cast<EntityId>(i);
  }
  return std::nullopt;
}

void World::build_registry() {
  std::vector<EntityId> cabinets;
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    if (kinds_[i] == EntityKind::Cabinet) {
      cabinets.push_back(static_cast<EntityId>(i));
    }
  }
  const EntityId robot = robot_;
  auto same_cell = [](const EnvState& x, EntityId a, EntityId b) {
    return x.features[a][kX] == x.features[b][kX] &&
           x.features[a][kY] == x.features[b][kY];
  };
  auto contained_at = [same_cell](const EnvState& x, EntityId o, EntityId c) {
    const auto& f = x.features[o];
    return flag(f[kContained]) && !flag(f[kAttached]) && same_cell(x, o, c);
  };

  registry_["handempty"] = [robot](const EnvState& x, std::span<const EntityId> a) {
    require_arity("handempty", a, 0);
    return flag(x.features[robot][kGripperOpen]);
  };
  registry_["holding"] = [](const EnvState& x, std::span<const EntityId> a) {
    require_arity("holding", a, 1);
    return flag(x.features[a[0]][kAttached]);
  };
  registry_["ontable"] = [](const EnvState& x, std::span<const EntityId> a) {
    require_arity("ontable", a, 1);
    const auto& f = x.features[a[0]];
    return !flag(f[kAttached]) && !flag(f[kContained]);
  };
  if (!cabinets.empty()) {
    registry_["open"] = [](const EnvState& x, std::span<const EntityId> a) {
      require_arity("open", a, 1);
      return x.features[a[0]][kExtent] > kOpenThreshold;
    };
    registry_["closed"] = [](const EnvState& x, std::span<const EntityId> a) {
      require_arity("closed", a, 1);
      return x.features[a[0]][kExtent] <= kOpenThreshold;
    };
    registry_["allclosed"] = [cabinets](const EnvState& x,
                                        std::span<const EntityId> a) {
      require_arity("allclosed", a, 0);
      return std::all_of(cabinets.begin(), cabinets.end(), [&](EntityId c) {
        return x.features[c][kExtent] <= kOpenThreshold;
      });
    };
    registry_["anyopen"] = [cabinets](const EnvState& x,
                                      std::span<const EntityId> a) {
      require_arity("anyopen", a, 0);
      return std::any_of(cabinets.begin(), cabinets.end(), [&](EntityId c) {
        return x.features[c][kExtent] > kOpenThreshold;
      });
    };
    registry_["incabinet"] = [contained_at](const EnvState& x,
                                            std::span<const EntityId> a) {
      require_arity("incabinet", a, 2);
      return contained_at(x, a[0], a[1]);
    };
    registry_["stored"] = [contained_at, cabinets](const EnvState& x,
                                                   std::span<const EntityId> a) {
      require_arity("stored", a, 1);
      return std::any_of(cabinets.begin(), cabinets.end(), [&](EntityId c) {
        return contained_at(x, a[0], c);
      });
    };
  }
  if (cfg_.domain == DomainId::Peg) {
    registry_["inhole"] = [contained_at](const EnvState& x,
                                         std::span<const EntityId> a) {
      require_arity("inhole", a, 2);
      return contained_at(x, a[0], a[1]);
    };
    registry_["free"] = [](const EnvState& x, std::span<const EntityId> a) {
      require_arity("free", a, 1);
      return !flag(x.features[a[0]][kFilled]);
    };
  }
  if (cfg_.domain == DomainId::Coffee) {
    registry_["inholder"] = [contained_at](const EnvState& x,
                                           std::span<const EntityId> a) {
      require_arity("inholder", a, 2);
      return contained_at(x, a[0], a[1]);
    };
    registry_["lidopen"] = [](const EnvState& x, std::span<const EntityId> a) {
      require_arity("lidopen", a, 1);
      return !flag(x.features[a[0]][kLidClosed]);
    };
    registry_["lidclosed"] = [](const EnvState& x, std::span<const EntityId> a) {
      require_arity("lidclosed", a, 1);
      return flag(x.features[a[0]][kLidClosed]);
    };
  }
}

std::vector<Predicate> World::bind(const DomainSpec& domain) const {
  std::vector<Predicate> out;
  for (const auto& sig : domain.predicates) {
    auto it = registry_.find(sig.name);
    if (it == registry_.end()) {
      throw DomainError("no classifier bound for predicate '" + sig.name +
                        "' in environment " + to_string(cfg_.domain));
    }
    for (const auto& t : sig.arg_types) {
      (void)feature_dim(t);  // throws for types foreign to this environment
    }
    out.push_back({sig, it->second});
  }
  return out;
}

void World::check_problem(const ProblemSpec& problem) const {
  if (problem.objects != entities_) {
    std::string want;
    for (const auto& e : entities_) want += " " + e.name + ":" + e.type;
    throw DomainError("problem '" + problem.name +
                      "' objects do not match environment " +
                      to_string(cfg_.domain) + " roster:" + want);
  }
}

std::pair<int, int> World::position(const EnvState& s, EntityId e) const {
  return {static_cast<int>(s.features[e][kX]),
          static_cast<int>(s.features[e][kY])};
}

std::pair<int, int> World::interaction_cell(const EnvState& s,
                                            EntityId e) const {
  auto [x, y] = position(s, e);
  if (kinds_[e] == EntityKind::Cabinet) return {x, y - 1};
  return {x, y};
}

bool World::passable(const EnvState& s, int x, int y) const {
  if (x < 0 || y < 0 || x >= cfg_.width || y >= cfg_.height) return false;
  for (std::size_t e = 0; e < kinds_.size(); ++e) {
    if (kinds_[e] != EntityKind::Cabinet) continue;
    const auto& f = s.features[e];
    if (f[kX] == x && f[kY] == y && f[kExtent] <= kOpenThreshold) return false;
  }
  return true;
}

std::optional<EntityId> World::held_object(const EnvState& s) const {
  for (std::size_t e = 0; e < kinds_.size(); ++e) {
    if (kinds_[e] == EntityKind::Object && flag(s.features[e][kAttached])) {
      return static_cast<EntityId>(e);
    }
  }
  return std::nullopt;
}

void World::refresh_offsets(EnvState& s) const {
  auto& r = s.features[robot_];
  if (s.focus && *s.focus < s.features.size()) {
    const auto& t = s.features[*s.focus];
    r[kTargetDx] = t[kX] - r[kX];
    r[kTargetDy] = t[kY] - r[kY];
  } else {
    r[kTargetDx] = 0.0;
    r[kTargetDy] = 0.0;
  }
}

EnvState World::with_focus(const EnvState& s, EntityId target) const {
  EnvState out = s;
  out.focus = target;
  refresh_offsets(out);
  return out;
}

EnvState World::reset(std::uint64_t seed) const {
  const int W = cfg_.width, H = cfg_.height;
  EnvState s;
  s.features.resize(entities_.size());
  for (std::size_t e = 0; e < entities_.size(); ++e) {
    s.features[e].assign(dim_of(kinds_[e]), 0.0);
  }
  auto put = [&](EntityId e, int x, int y) {
    s.features[e][kX] = x;
    s.features[e][kY] = y;
  };
  auto id = [&](const char* name) { return *find_entity(name); };

  // Fixed furniture.
  switch (cfg_.domain) {
    case DomainId::Drawer:
      put(id("cab1"), 1, H - 1);
      put(id("cab2"), W - 2, H - 1);
      break;
    case DomainId::Peg:
      put(id("hole1"), 1, H - 1);
      put(id("hole2"), W - 2, H - 1);
      break;
    case DomainId::Coffee:
      put(id("cab1"), 1, H - 1);
      put(id("machine1"), W - 2, H - 2);
      break;
  }

  // Movable entities: robot first, then loose objects in roster order.
  std::vector<EntityId> movers{robot_};
  for (std::size_t e = 0; e < kinds_.size(); ++e) {
    if (kinds_[e] != EntityKind::Object) continue;
    if (cfg_.domain == DomainId::Coffee) continue;  // the pod starts stored
    movers.push_back(static_cast<EntityId>(e));
  }
  if (cfg_.randomize_layout) {
    Rng rng(mix_seed(seed, 0x1a70u));
    std::vector<std::pair<int, int>> free_cells;
    for (int y = 0; y <= H - 3; ++y) {
      for (int x = 0; x < W; ++x) free_cells.emplace_back(x, y);
    }
    for (auto e : movers) {
      const auto k = uniform_below(rng, free_cells.size());
      put(e, free_cells[k].first, free_cells[k].second);
      free_cells.erase(free_cells.begin() + static_cast<std::ptrdiff_t>(k));
    }
  } else {
    put(robot_, 0, 0);
    if (movers.size() > 1) put(movers[1], 1, 1);
    if (movers.size() > 2) put(movers[2], W - 2, 1);
  }

  s.features[robot_][kGripperOpen] = 1.0;
  if (cfg_.domain == DomainId::Coffee) {
    const auto pod = id("pod1"), cab = id("cab1");
    put(pod, static_cast<int>(s.features[cab][kX]),
        static_cast<int>(s.features[cab][kY]));
    s.features[pod][kContained] = 1.0;
  }
  refresh_offsets(s);
  return s;
}

StepResult World::step(const EnvState& s, const Action& a) const {
  if (a.kind == ActionKind::Approach) return approach(s, a.target);

  StepResult r{s, false, 1};
  auto& f = r.next.features;
  auto& robot = f[robot_];
  const int rx = static_cast<int>(robot[kX]);
  const int ry = static_cast<int>(robot[kY]);
  const auto held = held_object(s);
  const bool hand_empty = flag(robot[kGripperOpen]);
  auto at_robot = [&](EntityId e) {
    return f[e][kX] == rx && f[e][kY] == ry;
  };

  switch (a.kind) {
    case ActionKind::North:
    case ActionKind::South:
    case ActionKind::East:
    case ActionKind::West: {
      int nx = rx, ny = ry;
      if (a.kind == ActionKind::North) ++ny;
      if (a.kind == ActionKind::South) --ny;
      if (a.kind == ActionKind::East) ++nx;
      if (a.kind == ActionKind::West) --nx;
      if (!passable(s, nx, ny)) break;
      robot[kX] = nx;
      robot[kY] = ny;
      if (held) {
        f[*held][kX] = nx;
        f[*held][kY] = ny;
      }
      break;
    }
    case ActionKind::Grasp: {
      if (!hand_empty || held) break;
      for (std::size_t e = 0; e < kinds_.size(); ++e) {
        if (kinds_[e] != EntityKind::Object || !at_robot(e)) continue;
        auto& o = f[e];
        if (flag(o[kAttached])) continue;
        if (flag(o[kContained])) {
          // Only cabinet contents can be taken back out; inserted items stay.
          bool in_open_cabinet = false;
          for (std::size_t c = 0; c < kinds_.size(); ++c) {
            if (kinds_[c] == EntityKind::Cabinet && at_robot(c) &&
                f[c][kExtent] > kOpenThreshold) {
              in_open_cabinet = true;
            }
          }
          if (!in_open_cabinet) continue;
        }
        o[kAttached] = 1.0;
        o[kContained] = 0.0;
        robot[kGripperOpen] = 0.0;
        break;
      }
      break;
    }
    case ActionKind::Release: {
      if (!held) break;
      auto& o = f[*held];
      o[kAttached] = 0.0;
      o[kContained] = 0.0;
      for (std::size_t c = 0; c < kinds_.size(); ++c) {
        if (kinds_[c] == EntityKind::Cabinet && at_robot(c) &&
            f[c][kExtent] > kOpenThreshold) {
          o[kContained] = 1.0;
        }
      }
      robot[kGripperOpen] = 1.0;
      break;
    }
    case ActionKind::Pull:
    case ActionKind::Push: {
      if (!hand_empty) break;
      const bool pull = a.kind == ActionKind::Pull;
      for (std::size_t e = 0; e < kinds_.size(); ++e) {
        if (kinds_[e] == EntityKind::Cabinet) {
          auto& c = f[e];
          if (c[kX] != rx || c[kY] - 1 != ry) continue;
          if (pull) {
            // Tight workspace: no cabinet opens while another one is open.
            bool other_open = false;
            for (std::size_t o = 0; o < kinds_.size(); ++o) {
              if (o != e && kinds_[o] == EntityKind::Cabinet &&
                  f[o][kExtent] > kOpenThreshold) {
                other_open = true;
              }
            }
            if (!other_open) c[kExtent] = std::min(1.0, c[kExtent] + kPullStep);
          } else {
            c[kExtent] = std::max(0.0, c[kExtent] - kPullStep);
          }
        } else if (kinds_[e] == EntityKind::Machine && at_robot(e)) {
          f[e][kLidClosed] = pull ? 0.0 : 1.0;
        }
      }
      break;
    }
    case ActionKind::Insert: {
      if (!held) break;
      for (std::size_t e = 0; e < kinds_.size(); ++e) {
        if (!at_robot(e)) continue;
        bool accepts = false;
        std::size_t filled_slot = 0;
        if (kinds_[e] == EntityKind::Hole && !flag(f[e][kFilled])) {
          accepts = true;
          filled_slot = kFilled;
        } else if (kinds_[e] == EntityKind::Machine &&
                   !flag(f[e][kLidClosed]) && !flag(f[e][kMachineFilled])) {
          accepts = true;
          filled_slot = kMachineFilled;
        }
        if (!accepts) continue;
        f[e][filled_slot] = 1.0;
        f[*held][kAttached] = 0.0;
        f[*held][kContained] = 1.0;
        robot[kGripperOpen] = 1.0;
        break;
      }
      break;
    }
    case ActionKind::Approach:
      break;
  }
  refresh_offsets(r.next);
  return r;
}

bool World::reachable_target(const EnvState& s, EntityId target) const {
  if (kinds_[target] == EntityKind::Object &&
      flag(s.features[target][kContained])) {
    auto [x, y] = position(s, target);
    return passable(s, x, y);
  }
  return true;
}

StepResult World::approach(const EnvState& s, EntityId target) const {
  StepResult r{s, false, 0};
  if (target >= entities_.size()) {
    throw DomainError("approach target out of range");
  }
  if (!reachable_target(s, target)) return r;
  const auto [tx, ty] = position(s, target);
  const auto [rx, ry] = position(s, robot_);
  auto near = [&](int x, int y) { return std::abs(x - tx) + std::abs(y - ty) <= 1; };
  if (near(rx, ry)) return r;

  const int W = cfg_.width, H = cfg_.height;
  std::vector<int> dist(static_cast<std::size_t>(W * H), -1);
  std::deque<std::pair<int, int>> frontier;
  dist[static_cast<std::size_t>(ry * W + rx)] = 0;
  frontier.emplace_back(rx, ry);
  static constexpr int kDirs[4][2] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
  while (!frontier.empty()) {
    auto [x, y] = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<std::size_t>(y * W + x)];
    if (near(x, y)) {
      auto& robot = r.next.features[robot_];
      robot[kX] = x;
      robot[kY] = y;
      if (auto held = held_object(s)) {
        r.next.features[*held][kX] = x;
        r.next.features[*held][kY] = y;
      }
      r.primitive_steps = static_cast<std::size_t>(d);
      refresh_offsets(r.next);
      return r;
    }
    for (const auto& dir : kDirs) {
      const int nx = x + dir[0], ny = y + dir[1];
      if (!passable(s, nx, ny)) continue;
      auto& nd = dist[static_cast<std::size_t>(ny * W + nx)];
      if (nd >= 0) continue;
      nd = d + 1;
      frontier.emplace_back(nx, ny);
    }
  }
  return r;
}

double World::shaping_potential(const EnvState& s,
                                const GroundOperator& op) const {
  if (op.substitution.empty()) return 1.0;
  const double norm = static_cast<double>(cfg_.width + cfg_.height - 2);
  auto closeness = [&](double ax, double ay, double bx, double by) {
    return 1.0 - (std::abs(ax - bx) + std::abs(ay - by)) / norm;
  };
  const EntityId first = op.substitution.front();
  const auto& ff = s.features.at(first);
  const auto& robot = s.features.at(robot_);
  double phi;
  if (kinds_.at(first) == EntityKind::Object && op.substitution.size() >= 2) {
    // Delivery: reach the object, then carry it to the second parameter.
    // Staging keeps an early release from raising the potential.
    const auto& target = s.features.at(op.substitution[1]);
    if (ff[kX] == target[kX] && ff[kY] == target[kY]) {
      phi = 1.0;
    } else if (flag(ff[kAttached])) {
      phi = 0.5 + 0.5 * closeness(ff[kX], ff[kY], target[kX], target[kY]);
    } else {
      phi = 0.5 * closeness(robot[kX], robot[kY], ff[kX], ff[kY]);
    }
  } else {
    const double dy = kinds_.at(first) == EntityKind::Cabinet ? 1.0 : 0.0;
    phi = closeness(robot[kX], robot[kY], ff[kX], ff[kY] - dy);
  }
  if (!std::isfinite(phi)) return 0.0;
  return std::clamp(phi, 0.0, 1.0);
}

std::string World::render(const EnvState& s) const {
  const int W = cfg_.width, H = cfg_.height;
  std::vector<std::string> rows(static_cast<std::size_t>(H), std::string(static_cast<std::size_t>(W), '.'));
  auto mark = [&](EntityId e, char c) {
    auto [x, y] = position(s, e);
    if (x >= 0 && y >= 0 && x < W && y < H) {
      rows[static_cast<std::size_t>(H - 1 - y)][static_cast<std::size_t>(x)] = c;
    }
  };
  for (std::size_t e = 0; e < kinds_.size(); ++e) {
    const auto id = static_cast<EntityId>(e);
    switch (kinds_[e]) {
      case EntityKind::Cabinet:
        mark(id, s.features[e][kExtent] > kOpenThreshold ? 'c' : 'C');
        break;
      case EntityKind::Hole: mark(id, 'H'); break;
      case EntityKind::Machine: mark(id, 'M'); break;
      default: break;
    }
  }
  for (std::size_t e = 0; e < kinds_.size(); ++e) {
    if (kinds_[e] == EntityKind::Object) mark(static_cast<EntityId>(e), 'o');
  }
  mark(robot_, held_object(s) ? 'R' : 'r');
  std::string out;
  for (const auto& row : rows) out += row + '\n';
  return out;
}

Environment::Environment(std::shared_ptr<const World> world)
    : world_(std::move(world)), state_(world_->reset()) {}

const EnvState& Environment::reset(std::uint64_t seed) {
  state_ = world_->reset(seed);
  episode_steps_ = 0;
  return state_;
}

StepResult Environment::step(const Action& a) {
  auto r = world_->step(state_, a);
  state_ = r.next;
  total_steps_ += r.primitive_steps;
  episode_steps_ += r.primitive_steps;
  r.terminated = budget_ && episode_steps_ >= *budget_;
  return r;
}

StepResult Environment::approach(EntityId target) {
  return step(Action::approach(target));
}

void Environment::focus(EntityId target) {
  state_ = world_->with_focus(state_, target);
}

std::string format_action(const Action& a, const World& world) {
  switch (a.kind) {
    case ActionKind::North: return "move 0 1";
    case ActionKind::South: return "move 0 -1";
    case ActionKind::East: return "move 1 0";
    case ActionKind::West: return "move -1 0";
    case ActionKind::Grasp: return "grasp";
    case ActionKind::Release: return "release";
    case ActionKind::Pull: return "pull";
    case ActionKind::Push: return "push";
    case ActionKind::Insert: return "insert";
    case ActionKind::Approach:
      return "approach " + world.entities().at(a.target).name;
  }
  return "?";
}

Action parse_action(std::string_view text, const World& world) {
  std::istringstream in{std::string(text)};
  std::string verb;
  in >> verb;
  if (verb == "move") {
    int dx = 0, dy = 0;
    if (!(in >> dx >> dy)) throw DomainError("malformed move: " + std::string(text));
    return Action::move(dx, dy);
  }
  if (verb == "grasp") return {ActionKind::Grasp, 0};
  if (verb == "release") return {ActionKind::Release, 0};
  if (verb == "pull") return {ActionKind::Pull, 0};
  if (verb == "push") return {ActionKind::Push, 0};
  if (verb == "insert") return {ActionKind::Insert, 0};
  if (verb == "approach") {
    std::string name;
    in >> name;
    auto id = world.find_entity(name);
    if (!id) throw DomainError("approach to unknown entity '" + name + "'");
    return Action::approach(*id);
  }
  throw DomainError("unknown action '" + std::string(text) + "'");
}

Trajectory parse_trajectory(std::string_view text) {
  Trajectory t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
      line.pop_back();
    }
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) {
      ++start;
    }
    line.erase(0, start);
    if (line.empty()) continue;
    std::istringstream words(line);
    std::string key;
    words >> key;
    if (key == "domain") {
      std::string d;
      words >> d;
      t.domain = parse_domain_id(d);
    } else if (key == "seed") {
      words >> t.seed;
    } else if (key == "layout") {
      std::string l;
      words >> l;
      if (l != "canonical" && l != "random") {
        throw DomainError("layout must be canonical or random");
      }
      t.randomize_layout = l == "random";
    } else if (key == "op") {
      t.segments.push_back({line.substr(3), {}});
    } else {
      if (t.segments.empty()) {
        throw DomainError("trajectory action before any 'op' line: " + line);
      }
      t.segments.back().actions.push_back(line);
    }
  }
  return t;
}

std::string format_trajectory(const Trajectory& t) {
  std::ostringstream out;
  out << "domain " << to_string(t.domain) << "\n";
  out << "seed " << t.seed << "\n";
  out << "layout " << (t.randomize_layout ? "random" : "canonical") << "\n";
  for (const auto& seg : t.segments) {
    out << "op " << seg.op << "\n";
    for (const auto& a : seg.actions) out << a << "\n";
  }
  return out.str();
}

}  // namespace skillplan
