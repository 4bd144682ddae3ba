#pragma once

// ASCII gridworlds: parsing, compilation to an Mdp, the true (hidden) chance
// tile dynamics and the agent's initial belief template.
//
// Map alphabet: S start, G goal, # wall, O hole, . regular, ^ > v < chance tile
// whose most likely push goes in the arrow direction. Off-grid counts as wall.

#include <array>
#include <cstddef>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "fevi/belief.hpp"
#include "fevi/errors.hpp"
#include "fevi/mdp.hpp"
#include "fevi/rng.hpp"

namespace fevi {

enum class Direction : int { Up = 0, Right = 1, Down = 2, Left = 3 };
inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Right, Direction::Down,
                                                      Direction::Left};

inline constexpr char direction_glyph(Direction d) {
  constexpr std::array<char, 4> glyphs{'^', '>', 'v', '<'};
  return glyphs[static_cast<int>(d)];
}

inline constexpr std::string_view direction_name(Direction d) {
  constexpr std::array<std::string_view, 4> names{"up", "right", "down", "left"};
  return names[static_cast<int>(d)];
}

enum class CellKind { Start, Goal, Wall, Hole, Regular, Chance };

struct Cell {
  CellKind kind = CellKind::Wall;
  Direction arrow = Direction::Up;  // meaningful for Chance only
};

struct CellPos {
  int row;
  int col;
  bool operator==(const CellPos&) const = default;
};

inline constexpr CellPos neighbor(CellPos p, Direction d) {
  switch (d) {
    case Direction::Up: return {p.row - 1, p.col};
    case Direction::Right: return {p.row, p.col + 1};
    case Direction::Down: return {p.row + 1, p.col};
    case Direction::Left: return {p.row, p.col - 1};
  }
  return p;
}

class GridMap {
 public:
  GridMap(int width, int height, std::vector<Cell> cells)
      : width_(width), height_(height), cells_(std::move(cells)) {}

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(CellPos p) const { return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_; }

  /// Off-grid positions read as walls.
  const Cell& at(CellPos p) const {
    static const Cell wall{};
    return in_bounds(p) ? cells_[static_cast<std::size_t>(p.row * width_ + p.col)] : wall;
  }

  bool passable(CellPos p) const { return at(p).kind != CellKind::Wall; }

  CellPos find_unique(CellKind kind) const {
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c)
        if (at({r, c}).kind == kind) return {r, c};
    return {-1, -1};
  }

  CellPos start() const { return find_unique(CellKind::Start); }
  CellPos goal() const { return find_unique(CellKind::Goal); }

  /// Non-wall neighbours in Up, Right, Down, Left order.
  std::vector<std::pair<Direction, CellPos>> open_neighbors(CellPos p) const {
    std::vector<std::pair<Direction, CellPos>> out;
    for (auto d : kDirections)
      if (passable(neighbor(p, d))) out.emplace_back(d, neighbor(p, d));
    return out;
  }

 private:
  int width_;
  int height_;
  std::vector<Cell> cells_;
};

inline GridMap parse_map(std::string_view text) {
  std::vector<std::string_view> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    rows.push_back(line);
    pos = end + 1;
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty()) throw Error(Errc::NonRectangular, "map is empty");

  const auto width = rows.front().size();
  if (width == 0) throw Error(Errc::NonRectangular, "first row is empty");
  std::vector<Cell> cells;
  cells.reserve(width * rows.size());
  int starts = 0, goals = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width)
      throw Error(Errc::NonRectangular, "row " + std::to_string(r) + " has length " +
                                            std::to_string(rows[r].size()) + ", expected " + std::to_string(width));
    for (std::size_t c = 0; c < width; ++c) {
      Cell cell;
      switch (rows[r][c]) {
        case 'S': cell.kind = CellKind::Start; ++starts; break;
        case 'G': cell.kind = CellKind::Goal; ++goals; break;
        case '#': cell.kind = CellKind::Wall; break;
        case 'O': cell.kind = CellKind::Hole; break;
        case '.': cell.kind = CellKind::Regular; break;
        case '^': cell = {CellKind::Chance, Direction::Up}; break;
        case '>': cell = {CellKind::Chance, Direction::Right}; break;
        case 'v': cell = {CellKind::Chance, Direction::Down}; break;
        case '<': cell = {CellKind::Chance, Direction::Left}; break;
        default:
          throw Error(Errc::UnknownCell, std::string("'") + rows[r][c] + "' at row " + std::to_string(r) +
                                             ", col " + std::to_string(c));
      }
      cells.push_back(cell);
    }
  }
  if (starts == 0) throw Error(Errc::MissingStart, "no 'S' cell");
  if (goals == 0) throw Error(Errc::MissingGoal, "no 'G' cell");
  if (starts > 1) throw Error(Errc::MultipleStart, std::to_string(starts) + " 'S' cells");
  if (goals > 1) throw Error(Errc::MultipleGoal, std::to_string(goals) + " 'G' cells");

  GridMap map(static_cast<int>(width), static_cast<int>(rows.size()), std::move(cells));
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      const auto& cell = map.at({r, c});
      if (cell.kind == CellKind::Chance && !map.passable(neighbor({r, c}, cell.arrow)))
        throw Error(Errc::ArrowIntoWall, "chance tile at row " + std::to_string(r) + ", col " + std::to_string(c));
    }
  return map;
}

inline constexpr double kGoalReward = 1.0;
inline constexpr double kHoleReward = -1.0;
inline constexpr double kStepReward = -0.01;
inline constexpr double kArrowProbability = 0.999;

/// True transition rows of the environment, one per state-action pair over the
/// pair's outcome list.
struct EnvDynamics {
  TransitionModel rows;
};

/// A map compiled into planning structures. States are the cells the agent can
/// occupy (start, regular and chance tiles) in row-major order; entering a goal
/// or hole yields its reward and lands the agent on the start state.
struct CompiledGrid {
  GridMap map;
  Mdp mdp;
  EnvDynamics env;
  BeliefSet belief_template;
  std::vector<CellPos> cell_of_state;
  std::vector<std::optional<StateId>> state_of_cell;  // row-major, empty for non-states
  StateId start = 0;
  std::vector<bool> chance_state;
  std::vector<bool> chance_pair;

  std::optional<StateId> state_at(CellPos p) const {
    if (!map.in_bounds(p)) return std::nullopt;
    return state_of_cell[static_cast<std::size_t>(p.row * map.width() + p.col)];
  }

  std::size_t chance_pair_count() const {
    std::size_t n = 0;
    for (bool b : chance_pair) n += b;
    return n;
  }
};

namespace detail {

inline bool goal_reachable(const GridMap& map) {
  const auto start = map.start();
  std::vector<char> seen(static_cast<std::size_t>(map.width() * map.height()), false);
  std::queue<CellPos> frontier;
  frontier.push(start);
  seen[static_cast<std::size_t>(start.row * map.width() + start.col)] = 1;
  while (!frontier.empty()) {
    const auto p = frontier.front();
    frontier.pop();
    for (const auto& [d, q] : map.open_neighbors(p)) {
      const auto kind = map.at(q).kind;
      if (kind == CellKind::Goal) return true;
      auto& mark = seen[static_cast<std::size_t>(q.row * map.width() + q.col)];
      if (mark || kind == CellKind::Hole) continue;
      mark = 1;
      frontier.push(q);
    }
  }
  return false;
}

}  // namespace detail

inline CompiledGrid compile_mdp(const GridMap& map, double discount = 0.9) {
  if (!detail::goal_reachable(map)) throw Error(Errc::GoalUnreachable, "no path from start to goal");

  CompiledGrid grid{map, {}, {}, {}, {}, {}, 0, {}, {}};
  grid.state_of_cell.assign(static_cast<std::size_t>(map.width() * map.height()), std::nullopt);
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      const auto kind = map.at({r, c}).kind;
      if (kind == CellKind::Start || kind == CellKind::Regular || kind == CellKind::Chance) {
        grid.state_of_cell[static_cast<std::size_t>(r * map.width() + c)] = grid.cell_of_state.size();
        grid.cell_of_state.push_back({r, c});
        grid.chance_state.push_back(kind == CellKind::Chance);
      }
    }
  grid.start = *grid.state_at(map.start());

  auto landing = [&](CellPos target) -> Outcome {
    switch (map.at(target).kind) {
      case CellKind::Goal: return {grid.start, kGoalReward};
      case CellKind::Hole: return {grid.start, kHoleReward};
      default: return {*grid.state_at(target), kStepReward};
    }
  };

  std::vector<std::vector<ActionEntry>> actions(grid.cell_of_state.size());
  for (StateId s = 0; s < grid.cell_of_state.size(); ++s) {
    const auto here = grid.cell_of_state[s];
    const auto open = map.open_neighbors(here);
    const auto& cell = map.at(here);
    if (cell.kind == CellKind::Chance) {
      std::vector<Outcome> outcomes;
      std::vector<double> true_row;
      const double rest = open.size() > 1 ? (1.0 - kArrowProbability) / static_cast<double>(open.size() - 1) : 0.0;
      for (const auto& [d, q] : open) {
        outcomes.push_back(landing(q));
        true_row.push_back(open.size() == 1 ? 1.0 : (d == cell.arrow ? kArrowProbability : rest));
      }
      for (const auto& [d, q] : open) {
        actions[s].push_back({static_cast<ActionId>(d), outcomes});
        grid.env.rows.push_back(true_row);
        grid.belief_template.emplace_back(DirichletCounts{std::vector<double>(open.size(), 1.0)});
        grid.chance_pair.push_back(true);
      }
    } else {
      for (const auto& [d, q] : open) {
        actions[s].push_back({static_cast<ActionId>(d), {landing(q)}});
        grid.env.rows.push_back({1.0});
        grid.belief_template.emplace_back(PointMass{{1.0}});
        grid.chance_pair.push_back(false);
      }
    }
  }
  grid.mdp = Mdp(std::move(actions), discount);
  return grid;
}

struct StepResult {
  StateId next;
  double reward;
  std::size_t outcome;  // index into the pair's outcome list
};

/// Samples one environment transition for action id `a` in state `s`.
inline StepResult step(const Mdp& mdp, const EnvDynamics& env, StateId s, ActionId a, Rng& rng) {
  const auto slot = mdp.slot_of(s, a);
  if (slot == Mdp::npos)
    throw Error(Errc::UnavailableAction, "action " + std::to_string(a) + " in state " + std::to_string(s));
  const auto& row = env.rows[mdp.pair_index(s, slot)];
  std::size_t idx = 0;
  if (row.size() > 1) {
    std::vector<double> cdf(row.size());
    std::partial_sum(row.begin(), row.end(), cdf.begin());
    idx = sample_cdf(cdf, rng);
  }
  const auto& o = mdp.action(s, slot).outcomes[idx];
  return {o.next, o.reward, idx};
}

inline StepResult step(const CompiledGrid& grid, StateId s, ActionId a, Rng& rng) {
  return step(grid.mdp, grid.env, s, a, rng);
}

}  // namespace fevi
