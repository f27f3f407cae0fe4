#pragma once

// Gridworld analogs of four first-person shooter scenarios. Every scenario
// emits the same four utility channels each tick:
//   0 health delta   (-2 per adjacent enemy, in [-10, 0])
//   1 ammo delta     (-1 per shot fired, else 0)
//   2 env reward     (living bonus, or corridor progress / vest bonus, in [0, 1])
//   3 kills delta    (1 when a shot removes an enemy)
//
// Actions are composites: bit i of the action id switches basic action i of
// the scenario on, so A = 2^(number of basics).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/env.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

enum class ScenarioId { center, line, corridor, arena, chain_oracle };

inline const char* to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::center: return "center";
    case ScenarioId::line: return "line";
    case ScenarioId::corridor: return "corridor";
    case ScenarioId::arena: return "arena";
    case ScenarioId::chain_oracle: return "chain-oracle";
  }
  return "?";
}

inline ScenarioId parse_scenario(std::string name) {
  const std::string suffix = "-grid";
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    name.resize(name.size() - suffix.size());
  }
  if (name == "center") return ScenarioId::center;
  if (name == "line") return ScenarioId::line;
  if (name == "corridor") return ScenarioId::corridor;
  if (name == "arena") return ScenarioId::arena;
  if (name == "chain-oracle" || name == "chain") return ScenarioId::chain_oracle;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

enum class BasicAction { move_left, move_right, move_forward, move_backward, turn_left, turn_right, attack };

inline constexpr std::size_t kGridChannels = 4;
inline constexpr std::size_t kGridObservationSize = 19;
inline constexpr int kLayoutVersion = 1;

namespace channel {
inline constexpr std::size_t health = 0;
inline constexpr std::size_t ammo = 1;
inline constexpr std::size_t env_reward = 2;
inline constexpr std::size_t kills = 3;
}  // namespace channel

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

struct ScenarioConfig {
  ScenarioId id = ScenarioId::center;
  int rows = 11;
  int cols = 11;
  double spawn_rate = 0.0;
  std::size_t episode_cap = 200;
  std::size_t action_count = 8;
  std::uint64_t seed = 0;

  static ScenarioConfig defaults(ScenarioId id, std::uint64_t seed = 0);
};

// Fixed geometry and rules of a scenario, versioned by kLayoutVersion.
struct ScenarioLayout {
  std::vector<BasicAction> basics;
  Cell agent_start;
  int agent_facing = 0;  // 0 = north, clockwise in 45 degree steps
  std::vector<Cell> initial_enemies;
  std::vector<Cell> spawn_cells;
  std::optional<Cell> vest;
  std::size_t max_enemies = 5;
  double enemy_move_prob = 0.5;
  int max_health = 20;
  int max_ammo = 40;
  bool living_bonus = true;
};

inline constexpr double kLivingBonus = 0.01;
inline constexpr double kProgressBonus = 0.1;
inline constexpr double kVestBonus = 1.0;
inline constexpr int kDamagePerEnemy = 2;

inline ScenarioConfig ScenarioConfig::defaults(ScenarioId id, std::uint64_t seed) {
  ScenarioConfig c;
  c.id = id;
  c.seed = seed;
  switch (id) {
    case ScenarioId::center:
      c.rows = 11, c.cols = 11, c.spawn_rate = 0.15, c.episode_cap = 200, c.action_count = 8;
      break;
    case ScenarioId::line:
      c.rows = 7, c.cols = 15, c.spawn_rate = 0.15, c.episode_cap = 200, c.action_count = 32;
      break;
    case ScenarioId::corridor:
      c.rows = 3, c.cols = 15, c.spawn_rate = 0.0, c.episode_cap = 60, c.action_count = 64;
      break;
    case ScenarioId::arena:
      c.rows = 15, c.cols = 15, c.spawn_rate = 0.2, c.episode_cap = 300, c.action_count = 128;
      break;
    case ScenarioId::chain_oracle:
      c.rows = 1, c.cols = 5, c.spawn_rate = 0.0, c.episode_cap = 50, c.action_count = 2;
      break;
  }
  return c;
}

inline ScenarioLayout scenario_layout(const ScenarioConfig& config) {
  ScenarioLayout l;
  const int rows = config.rows;
  const int cols = config.cols;
  using B = BasicAction;
  switch (config.id) {
    case ScenarioId::center: {
      l.basics = {B::turn_left, B::turn_right, B::attack};
      l.agent_start = {rows / 2, cols / 2};
      // Monsters enter from the eight compass spokes of the outer ring.
      const int r = std::min(rows, cols) / 2;
      const Cell c = l.agent_start;
      l.spawn_cells = {{c.row - r, c.col},     {c.row - r, c.col + r}, {c.row, c.col + r}, {c.row + r, c.col + r},
                       {c.row + r, c.col},     {c.row + r, c.col - r}, {c.row, c.col - r}, {c.row - r, c.col - r}};
      l.initial_enemies = {l.spawn_cells[0], l.spawn_cells[4]};
      l.max_health = 20;
      l.max_ammo = 40;
      break;
    }
    case ScenarioId::line: {
      l.basics = {B::move_left, B::move_right, B::turn_left, B::turn_right, B::attack};
      l.agent_start = {rows - 1, cols / 2};
      for (int col = 0; col < cols; ++col) l.spawn_cells.push_back({0, col});
      l.initial_enemies = {{0, cols / 4}, {0, cols / 2}, {0, 3 * cols / 4}};
      l.max_health = 20;
      l.max_ammo = 40;
      break;
    }
    case ScenarioId::corridor: {
      l.basics = {B::move_left, B::move_right, B::move_forward, B::turn_left, B::turn_right, B::attack};
      l.agent_start = {rows / 2, 0};
      l.agent_facing = 2;
      l.vest = Cell{rows / 2, cols - 1};
      for (int col : {4, 8, 12}) {
        if (col >= cols - 1) continue;
        l.initial_enemies.push_back({0, col});
        l.initial_enemies.push_back({rows - 1, col});
      }
      l.max_enemies = l.initial_enemies.size();
      l.enemy_move_prob = 0.0;
      l.max_health = 30;
      l.max_ammo = 10;
      l.living_bonus = false;
      break;
    }
    case ScenarioId::arena: {
      l.basics = {B::move_left, B::move_right, B::move_forward, B::move_backward, B::turn_left, B::turn_right, B::attack};
      l.agent_start = {rows / 2, cols / 2};
      for (int col = 0; col < cols; ++col) {
        l.spawn_cells.push_back({0, col});
        l.spawn_cells.push_back({rows - 1, col});
      }
      for (int row = 1; row + 1 < rows; ++row) {
        l.spawn_cells.push_back({row, 0});
        l.spawn_cells.push_back({row, cols - 1});
      }
      l.initial_enemies = {{0, 0}, {rows - 1, cols - 1}};
      l.max_health = 30;
      l.max_ammo = 60;
      break;
    }
    case ScenarioId::chain_oracle:
      throw std::invalid_argument("chain-oracle is a tabular MDP, not a grid scenario");
  }
  return l;
}

class GridEnv final : public Environment {
 public:
  explicit GridEnv(ScenarioConfig config) : GridEnv(config, scenario_layout(config)) {}

  GridEnv(ScenarioConfig config, ScenarioLayout layout) : config_(config), layout_(std::move(layout)) {
    if (config_.rows < 1 || config_.cols < 1) throw std::invalid_argument("grid dimensions must be positive");
    if (config_.episode_cap == 0) throw std::invalid_argument("episode cap must be positive");
    const std::size_t declared = std::size_t{1} << layout_.basics.size();
    if (config_.action_count != declared) {
      throw std::invalid_argument(std::string("scenario ") + to_string(config_.id) + " has " +
                                  std::to_string(declared) + " actions, config declares " +
                                  std::to_string(config_.action_count));
    }
    reset(config_.seed);
  }

  const ScenarioConfig& config() const { return config_; }
  const ScenarioLayout& layout() const { return layout_; }

  std::size_t observation_size() const override { return kGridObservationSize; }
  std::size_t action_count() const override { return config_.action_count; }
  std::size_t channel_count() const override { return kGridChannels; }
  const std::vector<std::string>& channel_labels() const override {
    static const std::vector<std::string> labels = {"health", "ammo", "env_reward", "kills"};
    return labels;
  }
  std::size_t episode_cap() const override { return config_.episode_cap; }

  Observation reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    agent_ = layout_.agent_start;
    facing_ = layout_.agent_facing;
    enemies_ = layout_.initial_enemies;
    health_ = layout_.max_health;
    ammo_ = layout_.max_ammo;
    tick_ = 0;
    kills_ = 0;
    best_col_ = agent_.col;
    reached_vest_ = false;
    done_ = false;
    return observe();
  }

  StepOutcome step(std::size_t action) override {
    if (action >= config_.action_count) {
      throw std::out_of_range("action " + std::to_string(action) + " outside [0, " +
                              std::to_string(config_.action_count) + ")");
    }
    if (done_) throw StepAfterDone();

    StepOutcome out;
    out.utilities.values.assign(kGridChannels, 0.0);
    auto& u = out.utilities.values;

    // Enemies adjacent at the start of the tick strike before the agent acts,
    // so the damage taken this tick is a function of the current observation.
    const int adjacent = adjacent_enemies();
    const int damage = std::min({adjacent * kDamagePerEnemy, 10, health_});
    health_ -= damage;
    u[channel::health] = -static_cast<double>(damage);

    if (health_ > 0) act(action, u);

    double env_reward = 0.0;
    if (layout_.living_bonus && health_ > 0) env_reward += kLivingBonus;
    if (layout_.vest) {
      if (agent_.col > best_col_) {
        env_reward += kProgressBonus * (agent_.col - best_col_);
        best_col_ = agent_.col;
      }
      if (reached_vest_) env_reward = kVestBonus;
    }
    u[channel::env_reward] = std::min(env_reward, 1.0);

    ++tick_;
    const bool terminal = health_ <= 0 || reached_vest_;
    done_ = terminal || tick_ >= config_.episode_cap;
    out.truncated = done_ && !terminal;

    out.next_obs = observe();
    out.done = done_;
    out.info = info();
    return out;
  }

  bool done() const override { return done_; }

  StepInfo info() const {
    StepInfo i;
    i.survival_ticks = tick_;
    i.total_kills = kills_;
    if (layout_.vest) {
      const double span = static_cast<double>(layout_.vest->col - layout_.agent_start.col);
      i.task_score = static_cast<double>(best_col_ - layout_.agent_start.col) / span + (reached_vest_ ? 1.0 : 0.0);
    } else {
      i.task_score = static_cast<double>(kills_);
    }
    return i;
  }

  Observation observe() const override {
    Observation obs(kGridObservationSize, 0.0);
    obs[0] = normalize_coord(agent_.row, config_.rows);
    obs[1] = normalize_coord(agent_.col, config_.cols);
    const double angle = facing_ * (M_PI / 4.0);
    obs[2] = std::cos(angle);
    obs[3] = std::sin(angle);
    obs[4] = static_cast<double>(health_) / layout_.max_health;
    obs[5] = layout_.max_ammo > 0 ? static_cast<double>(ammo_) / layout_.max_ammo : 0.0;
    const double reach = static_cast<double>(std::max(config_.rows, config_.cols));
    for (int j = 0; j < 8; ++j) {
      if (auto hit = first_enemy_on_ray((facing_ + j) % 8)) {
        obs[6 + j] = 1.0 - static_cast<double>(hit->distance - 1) / reach;
      }
    }
    const double scale = std::max(1.0, reach - 1.0);
    if (!enemies_.empty()) {
      const Cell* nearest = &enemies_.front();
      for (const auto& e : enemies_) {
        if (chebyshev(e, agent_) < chebyshev(*nearest, agent_)) nearest = &e;
      }
      obs[14] = (nearest->row - agent_.row) / scale;
      obs[15] = (nearest->col - agent_.col) / scale;
    }
    if (layout_.vest) {
      obs[16] = (layout_.vest->row - agent_.row) / scale;
      obs[17] = (layout_.vest->col - agent_.col) / scale;
    }
    obs[18] = adjacent_enemies() / 8.0;
    return obs;
  }

  std::string render() const override {
    static constexpr char arrows[8] = {'^', '/', '>', '\\', 'v', '/', '<', '\\'};
    std::string out;
    for (int r = 0; r < config_.rows; ++r) {
      for (int c = 0; c < config_.cols; ++c) {
        const Cell cell{r, c};
        char ch = '.';
        if (layout_.vest && *layout_.vest == cell) ch = 'V';
        if (std::find(layout_.spawn_cells.begin(), layout_.spawn_cells.end(), cell) != layout_.spawn_cells.end()) ch = ':';
        if (enemy_at(cell)) ch = 'E';
        if (agent_ == cell) ch = arrows[facing_];
        out.push_back(ch);
      }
      out.push_back('\n');
    }
    return out;
  }

  Cell agent() const { return agent_; }
  int facing() const { return facing_; }
  int health() const { return health_; }
  int ammo() const { return ammo_; }
  const std::vector<Cell>& enemies() const { return enemies_; }

  // Test hooks for hand-built situations.
  void place_enemies(std::vector<Cell> enemies) { enemies_ = std::move(enemies); }
  void set_health(int h) { health_ = h; }
  void set_facing(int f) { facing_ = ((f % 8) + 8) % 8; }

 private:
  struct RayHit {
    std::size_t index;
    int distance;
  };

  static constexpr std::array<int, 8> kDr = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr std::array<int, 8> kDc = {0, 1, 1, 1, 0, -1, -1, -1};

  static void add_move(int direction, int& dr, int& dc) {
    dr += kDr[direction % 8];
    dc += kDc[direction % 8];
  }

  static int chebyshev(const Cell& a, const Cell& b) { return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col)); }

  static double normalize_coord(int v, int extent) {
    return extent > 1 ? 2.0 * v / (extent - 1) - 1.0 : 0.0;
  }

  bool in_bounds(const Cell& c) const { return c.row >= 0 && c.row < config_.rows && c.col >= 0 && c.col < config_.cols; }

  bool enemy_at(const Cell& c) const { return std::find(enemies_.begin(), enemies_.end(), c) != enemies_.end(); }

  // The firing line is a 90 degree cone: the ray itself and the two rays 45
  // degrees either side. The nearest enemy wins; at equal range the centre
  // ray, then the left, then the right.
  std::optional<RayHit> first_enemy_on_ray(int direction) const {
    const std::array<int, 3> rays = {direction, (direction + 7) % 8, (direction + 1) % 8};
    for (int d = 1; d <= std::max(config_.rows, config_.cols); ++d) {
      for (int ray : rays) {
        const Cell cell{agent_.row + d * kDr[ray], agent_.col + d * kDc[ray]};
        if (!in_bounds(cell)) continue;
        for (std::size_t i = 0; i < enemies_.size(); ++i) {
          if (enemies_[i] == cell) return RayHit{i, d};
        }
      }
    }
    return std::nullopt;
  }

  // Agent phase (turn, move, fire) followed by the enemy phase.
  void act(std::size_t action, std::vector<double>& u) {
    bool turn_left = false, turn_right = false, attack = false;
    int move_dr = 0, move_dc = 0;
    for (std::size_t bit = 0; bit < layout_.basics.size(); ++bit) {
      if (((action >> bit) & 1U) == 0) continue;
      switch (layout_.basics[bit]) {
        case BasicAction::turn_left: turn_left = true; break;
        case BasicAction::turn_right: turn_right = true; break;
        case BasicAction::attack: attack = true; break;
        case BasicAction::move_forward: add_move(facing_, move_dr, move_dc); break;
        case BasicAction::move_backward: add_move(facing_ + 4, move_dr, move_dc); break;
        case BasicAction::move_left: add_move(facing_ + 6, move_dr, move_dc); break;
        case BasicAction::move_right: add_move(facing_ + 2, move_dr, move_dc); break;
      }
    }

    if (turn_left != turn_right) facing_ = (facing_ + (turn_left ? 7 : 1)) % 8;

    move_dr = std::clamp(move_dr, -1, 1);
    move_dc = std::clamp(move_dc, -1, 1);
    if (move_dr != 0 || move_dc != 0) {
      const Cell target{agent_.row + move_dr, agent_.col + move_dc};
      if (in_bounds(target) && !enemy_at(target)) agent_ = target;
    }

    if (attack && ammo_ > 0) {
      --ammo_;
      u[channel::ammo] = -1.0;
      if (auto hit = first_enemy_on_ray(facing_)) {
        enemies_.erase(enemies_.begin() + static_cast<std::ptrdiff_t>(hit->index));
        ++kills_;
        u[channel::kills] = 1.0;
      }
    }

    if (layout_.vest && agent_ == *layout_.vest) reached_vest_ = true;

    if (!reached_vest_) {
      move_enemies();
      spawn();
    }
  }

  int adjacent_enemies() const {
    return static_cast<int>(
        std::count_if(enemies_.begin(), enemies_.end(), [&](const Cell& e) { return chebyshev(e, agent_) <= 1; }));
  }

  bool free_for_enemy(const Cell& c) const { return in_bounds(c) && !(c == agent_) && !enemy_at(c); }

  void move_enemies() {
    for (auto& e : enemies_) {
      // One draw per enemy per tick keeps the stream aligned regardless of moves.
      const bool moves = rng_.uniform() < layout_.enemy_move_prob;
      if (!moves || chebyshev(e, agent_) <= 1) continue;
      const int dr = (agent_.row > e.row) - (agent_.row < e.row);
      const int dc = (agent_.col > e.col) - (agent_.col < e.col);
      for (const Cell cand : {Cell{e.row + dr, e.col + dc}, Cell{e.row + dr, e.col}, Cell{e.row, e.col + dc}}) {
        if (cand == e) continue;
        if (free_for_enemy(cand)) {
          e = cand;
          break;
        }
      }
    }
  }

  void spawn() {
    if (layout_.spawn_cells.empty()) return;
    if (!(rng_.uniform() < config_.spawn_rate)) return;
    if (enemies_.size() >= layout_.max_enemies) return;
    std::vector<Cell> free;
    for (const auto& c : layout_.spawn_cells) {
      if (free_for_enemy(c) && chebyshev(c, agent_) > 1) free.push_back(c);
    }
    if (free.empty()) return;
    enemies_.push_back(free[rng_.uniform_int(free.size())]);
  }

  ScenarioConfig config_;
  ScenarioLayout layout_;
  Rng rng_;
  Cell agent_;
  int facing_ = 0;
  std::vector<Cell> enemies_;
  int health_ = 0;
  int ammo_ = 0;
  std::size_t tick_ = 0;
  std::size_t kills_ = 0;
  int best_col_ = 0;
  bool reached_vest_ = false;
  bool done_ = false;
};

}  // namespace ivrl
