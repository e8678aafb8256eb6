/*
 * 4-connected grid maps in the MAPF benchmark text format, oriented agent
 * states, and the structural check PIBT-style planners rely on (every edge
 * lies on a simple cycle of length >= 3).
 */
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace epibt {

using CellId = std::int32_t;
using AgentId = std::int32_t;
inline constexpr CellId kNoCell = -1;

enum class Orientation : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

inline constexpr std::array<Orientation, 4> kOrientations = {
    Orientation::north, Orientation::east, Orientation::south, Orientation::west};

constexpr int index_of(Orientation o) { return static_cast<int>(o); }
constexpr Orientation orientation_from_index(int i) { return static_cast<Orientation>(((i % 4) + 4) % 4); }
constexpr Orientation clockwise(Orientation o) { return orientation_from_index(index_of(o) + 1); }
constexpr Orientation counterclockwise(Orientation o) { return orientation_from_index(index_of(o) + 3); }
constexpr Orientation rotate_by(Orientation o, Orientation by) { return orientation_from_index(index_of(o) + index_of(by)); }

// row delta / column delta of one step in direction o; north is row - 1
constexpr int row_delta(Orientation o) { return o == Orientation::north ? -1 : (o == Orientation::south ? 1 : 0); }
constexpr int col_delta(Orientation o) { return o == Orientation::east ? 1 : (o == Orientation::west ? -1 : 0); }

inline char orientation_letter(Orientation o) { return "NESW"[index_of(o)]; }

inline std::optional<Orientation> parse_orientation(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (s[0]) {
    case 'N': return Orientation::north;
    case 'E': return Orientation::east;
    case 'S': return Orientation::south;
    case 'W': return Orientation::west;
    default: return std::nullopt;
  }
}

enum class ActionModel : std::uint8_t { rotation, omnidirectional };

inline std::string_view to_string(ActionModel m) { return m == ActionModel::rotation ? "rotation" : "omnidirectional"; }

inline std::optional<ActionModel> parse_action_model(std::string_view s) {
  if (s == "rotation") return ActionModel::rotation;
  if (s == "omnidirectional" || s == "omni") return ActionModel::omnidirectional;
  return std::nullopt;
}

struct Position {
  int row = 0;
  int col = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

struct AgentState {
  CellId cell = kNoCell;
  Orientation orientation = Orientation::north;
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

// Thrown for malformed map, scenario, weight and log files.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    std::ostringstream os;
    os << "line " << line;
    if (column > 0) os << ", column " << column;
    os << ": " << what;
    return os.str();
  }
  int line_;
  int column_;
};

class GridMap {
 public:
  GridMap() = default;

  // passable.size() must equal width * height (row-major)
  GridMap(int width, int height, std::vector<std::uint8_t> passable)
      : width_(width), height_(height), passable_(std::move(passable)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (passable_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("passable mask size does not match width * height");
    id_of_index_.assign(passable_.size(), kNoCell);
    for (int r = 0; r < height_; ++r) {
      for (int c = 0; c < width_; ++c) {
        const std::size_t idx = static_cast<std::size_t>(r) * width_ + c;
        if (passable_[idx] == 0) continue;
        id_of_index_[idx] = static_cast<CellId>(positions_.size());
        positions_.push_back({r, c});
      }
    }
    steps_.resize(positions_.size());
    for (std::size_t id = 0; id < positions_.size(); ++id) {
      for (Orientation o : kOrientations)
        steps_[id][index_of(o)] = cell_at(positions_[id].row + row_delta(o), positions_[id].col + col_delta(o));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t num_cells() const { return positions_.size(); }
  const std::vector<std::uint8_t>& passable_mask() const { return passable_; }

  bool in_bounds(int row, int col) const { return row >= 0 && row < height_ && col >= 0 && col < width_; }

  bool is_passable(int row, int col) const {
    return in_bounds(row, col) && passable_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }

  // kNoCell for blocked or out-of-bounds coordinates
  CellId cell_at(int row, int col) const {
    if (!in_bounds(row, col)) return kNoCell;
    return id_of_index_[static_cast<std::size_t>(row) * width_ + col];
  }
  CellId cell_at(Position p) const { return cell_at(p.row, p.col); }

  Position position(CellId cell) const { return positions_.at(static_cast<std::size_t>(cell)); }

  // Neighbor in direction o, or kNoCell.
  CellId step(CellId cell, Orientation o) const { return steps_[static_cast<std::size_t>(cell)][index_of(o)]; }

  // Passable 4-neighbors in north, east, south, west order.
  std::vector<CellId> neighbors(CellId cell) const {
    std::vector<CellId> out;
    out.reserve(4);
    for (Orientation o : kOrientations) {
      const CellId n = step(cell, o);
      if (n != kNoCell) out.push_back(n);
    }
    return out;
  }

  int degree(CellId cell) const {
    int d = 0;
    for (Orientation o : kOrientations) d += step(cell, o) != kNoCell;
    return d;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> passable_;
  std::vector<CellId> id_of_index_;
  std::vector<Position> positions_;
  std::vector<std::array<CellId, 4>> steps_;
};

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

inline std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::istringstream is{std::string(line)};
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

inline bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace detail

// Parses the MAPF benchmark map format: `type`, `height H`, `width W`, `map`,
// then H rows of W glyphs. `.` and `G` are passable, `@`, `T`, `O`, `W` blocked.
inline GridMap load_map(std::string_view text) {
  const auto lines = detail::split_lines(text);
  long long height = -1, width = -1;
  std::size_t i = 0;
  bool saw_map = false;
  for (; i < lines.size(); ++i) {
    const auto words = detail::split_words(lines[i]);
    const int line_no = static_cast<int>(i) + 1;
    if (words.empty()) continue;
    if (words[0] == "map") {
      if (words.size() != 1) throw ParseError("unexpected tokens after 'map'", line_no);
      saw_map = true;
      ++i;
      break;
    }
    if (words[0] == "type") continue;
    if (words[0] == "height" || words[0] == "width") {
      long long v = 0;
      if (words.size() != 2 || !detail::parse_int(words[1], v) || v <= 0)
        throw ParseError("malformed '" + words[0] + "' header", line_no);
      (words[0] == "height" ? height : width) = v;
      continue;
    }
    throw ParseError("unknown header key '" + words[0] + "'", line_no);
  }
  if (!saw_map) throw ParseError("missing 'map' line", static_cast<int>(lines.size()) + 1);
  if (height < 0) throw ParseError("missing 'height' header", 1);
  if (width < 0) throw ParseError("missing 'width' header", 1);

  std::vector<std::uint8_t> passable;
  passable.reserve(static_cast<std::size_t>(height * width));
  for (long long r = 0; r < height; ++r, ++i) {
    const int line_no = static_cast<int>(i) + 1;
    if (i >= lines.size()) throw ParseError("expected " + std::to_string(height) + " map rows", line_no);
    const std::string& row = lines[i];
    if (static_cast<long long>(row.size()) != width)
      throw ParseError("row has " + std::to_string(row.size()) + " cells, expected " + std::to_string(width),
                       line_no, static_cast<int>(std::min<long long>(row.size(), width)) + 1);
    for (std::size_t c = 0; c < row.size(); ++c) {
      switch (row[c]) {
        case '.':
        case 'G': passable.push_back(1); break;
        case '@':
        case 'T':
        case 'O':
        case 'W': passable.push_back(0); break;
        default:
          throw ParseError(std::string("unknown glyph '") + row[c] + "'", line_no, static_cast<int>(c) + 1);
      }
    }
  }
  for (; i < lines.size(); ++i) {
    if (!detail::split_words(lines[i]).empty())
      throw ParseError("trailing content after map rows", static_cast<int>(i) + 1);
  }
  return GridMap(static_cast<int>(width), static_cast<int>(height), std::move(passable));
}

inline std::string serialize_map(const GridMap& map) {
  std::string out = "type octile\nheight " + std::to_string(map.height()) + "\nwidth " +
                    std::to_string(map.width()) + "\nmap\n";
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) out.push_back(map.is_passable(r, c) ? '.' : '@');
    out.push_back('\n');
  }
  return out;
}

struct GridEdge {
  CellId a = kNoCell;  // a < b
  CellId b = kNoCell;
  friend bool operator==(const GridEdge&, const GridEdge&) = default;
  friend auto operator<=>(const GridEdge&, const GridEdge&) = default;
};

// Edges that do not lie on any simple cycle of length >= 3, i.e. the bridges
// of the traversability graph (grid graphs are simple). Empty means the
// cycle condition holds everywhere. Sorted ascending.
inline std::vector<GridEdge> check_cycle_condition(const GridMap& map) {
  const std::size_t n = map.num_cells();
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<GridEdge> bridges;
  int timer = 0;

  struct Frame {
    CellId v;
    CellId parent;
    int next_dir;
  };
  std::vector<Frame> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    stack.push_back({static_cast<CellId>(root), kNoCell, 0});
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_dir < 4) {
        const CellId u = map.step(f.v, orientation_from_index(f.next_dir++));
        if (u == kNoCell || u == f.parent) continue;
        if (disc[u] >= 0) {
          low[f.v] = std::min(low[f.v], disc[u]);
        } else {
          disc[u] = low[u] = timer++;
          stack.push_back({u, f.v, 0});
        }
        continue;
      }
      const Frame done = f;
      stack.pop_back();
      if (done.parent != kNoCell) {
        low[done.parent] = std::min(low[done.parent], low[done.v]);
        if (low[done.v] > disc[done.parent])
          bridges.push_back({std::min(done.v, done.parent), std::max(done.v, done.parent)});
      }
    }
  }
  std::sort(bridges.begin(), bridges.end());
  return bridges;
}

// Passable cells that are dead ends (degree <= 1); agents parked there cannot
// be pushed aside.
inline std::vector<CellId> dead_end_cells(const GridMap& map) {
  std::vector<CellId> out;
  for (CellId c = 0; c < static_cast<CellId>(map.num_cells()); ++c)
    if (map.degree(c) <= 1) out.push_back(c);
  return out;
}

// Component label per cell; labels are dense starting at 0.
inline std::vector<int> connected_components(const GridMap& map, int* count = nullptr) {
  std::vector<int> label(map.num_cells(), -1);
  int next = 0;
  std::vector<CellId> queue;
  for (CellId s = 0; s < static_cast<CellId>(map.num_cells()); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    queue.assign(1, s);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      for (Orientation o : kOrientations) {
        const CellId u = map.step(queue[qi], o);
        if (u != kNoCell && label[u] < 0) {
          label[u] = next;
          queue.push_back(u);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

}  // namespace epibt
