#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rdalab/errors.hpp"

namespace rdalab {

using Point = std::array<double, 2>;

/// Uniform cell-centered grid on (0, Lx) or (0, Lx) x (0, Ly).
/// Cells are numbered row-major: index = i + nx * j, x fastest.
class Grid {
public:
  Grid() = default;

  static Grid line(double length, std::size_t cells) { return Grid(1, {length, 1.0}, {cells, 1}); }
  static Grid rectangle(double lx, double ly, std::size_t nx, std::size_t ny) { return Grid(2, {lx, ly}, {nx, ny}); }

  int dim() const noexcept { return dim_; }
  double length(int axis) const noexcept { return lengths_[axis]; }
  std::size_t cells(int axis) const noexcept { return cells_[axis]; }
  double h(int axis) const noexcept { return lengths_[axis] / static_cast<double>(cells_[axis]); }
  std::size_t cell_count() const noexcept { return cells_[0] * cells_[1]; }
  double cell_volume() const noexcept { return dim_ == 1 ? h(0) : h(0) * h(1); }
  double domain_volume() const noexcept { return dim_ == 1 ? lengths_[0] : lengths_[0] * lengths_[1]; }

  std::size_t index(std::size_t i, std::size_t j = 0) const noexcept { return i + cells_[0] * j; }
  std::size_t ix(std::size_t idx) const noexcept { return idx % cells_[0]; }
  std::size_t iy(std::size_t idx) const noexcept { return idx / cells_[0]; }

  Point center(std::size_t idx) const noexcept {
    return {(static_cast<double>(ix(idx)) + 0.5) * h(0), dim_ == 1 ? 0.0 : (static_cast<double>(iy(idx)) + 0.5) * h(1)};
  }

  /// Same domain, each active axis refined by `factor`.
  Grid refined(std::size_t factor) const {
    return dim_ == 1 ? line(lengths_[0], cells_[0] * factor)
                     : rectangle(lengths_[0], lengths_[1], cells_[0] * factor, cells_[1] * factor);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  Grid(int dim, std::array<double, 2> lengths, std::array<std::size_t, 2> cells)
      : dim_(dim), lengths_(lengths), cells_(cells) {
    for (int a = 0; a < dim_; ++a) {
      if (cells_[a] < 2) throw DomainError("grid needs at least two cells per axis");
      if (!(lengths_[a] > 0) || !std::isfinite(lengths_[a])) throw DomainError("grid lengths must be positive");
    }
  }

  int dim_ = 1;
  std::array<double, 2> lengths_{1.0, 1.0};
  std::array<std::size_t, 2> cells_{2, 1};
};

/// Cell-centered values of one species.
struct Field {
  std::size_t species = 0;
  std::vector<double> values;
};

using State = std::vector<Field>;

inline State make_state(std::size_t species, std::size_t cells, double fill = 0.0) {
  State s(species);
  for (std::size_t i = 0; i < species; ++i) s[i] = Field{i, std::vector<double>(cells, fill)};
  return s;
}

/// Integral of a cell field by the midpoint rule.
inline double integrate(const Grid& grid, const std::vector<double>& values) {
  double sum = 0;
  for (double v : values) sum += v;
  return sum * grid.cell_volume();
}

// ---------------------------------------------------------------------------
// Snapshot files

/// Writes
///   dim = 2
///   cells = 32 32
///   lengths = 1 1
///   time = 0.5
///   species = 3
///   data
/// followed by one line per cell (row-major) holding one column per species.
inline void write_snapshot(std::ostream& out, const Grid& grid, double time, const State& state) {
  out << std::setprecision(17);
  out << "dim = " << grid.dim() << '\n';
  out << "cells = " << grid.cells(0);
  if (grid.dim() == 2) out << ' ' << grid.cells(1);
  out << "\nlengths = " << grid.length(0);
  if (grid.dim() == 2) out << ' ' << grid.length(1);
  out << "\ntime = " << time << "\nspecies = " << state.size() << "\ndata\n";
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    for (std::size_t s = 0; s < state.size(); ++s) {
      if (s) out << ' ';
      out << state[s].values[c];
    }
    out << '\n';
  }
}

struct Snapshot {
  Grid grid;
  double time = 0;
  State state;
};

inline Snapshot read_snapshot(std::istream& in) {
  Snapshot snap;
  int dim = 0;
  std::vector<std::size_t> cells;
  std::vector<double> lengths;
  std::size_t species = 0;
  std::string line;
  bool have_time = false;
  while (std::getline(in, line)) {
    if (line == "data") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("snapshot: malformed header line '" + line + "'");
    const std::string key = line.substr(0, line.find_last_not_of(' ', eq - 1) + 1);
    std::istringstream values(line.substr(eq + 1));
    if (key == "dim") values >> dim;
    else if (key == "cells") for (std::size_t v; values >> v;) cells.push_back(v);
    else if (key == "lengths") for (double v; values >> v;) lengths.push_back(v);
    else if (key == "time") have_time = static_cast<bool>(values >> snap.time);
    else if (key == "species") values >> species;
  }
  if ((dim != 1 && dim != 2) || cells.size() != static_cast<std::size_t>(dim) ||
      lengths.size() != static_cast<std::size_t>(dim) || !have_time)
    throw ConfigError("snapshot: incomplete header");
  snap.grid = dim == 1 ? Grid::line(lengths[0], cells[0]) : Grid::rectangle(lengths[0], lengths[1], cells[0], cells[1]);
  snap.state = make_state(species, snap.grid.cell_count());
  for (std::size_t c = 0; c < snap.grid.cell_count(); ++c)
    for (std::size_t s = 0; s < species; ++s)
      if (!(in >> snap.state[s].values[c])) throw ConfigError("snapshot: truncated data");
  return snap;
}

} // namespace rdalab
