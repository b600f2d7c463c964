#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdalab/coefficients.hpp"
#include "rdalab/errors.hpp"
#include "rdalab/grid.hpp"
#include "rdalab/kinetics.hpp"
#include "rdalab/sparse.hpp"

namespace rdalab {

struct SpeciesTransport {
  TensorField diffusion;
  AdvectionField advection;
};

enum class FaceAveraging { arithmetic, harmonic };

struct SolverOptions {
  double nonneg_tol = 1e-12;
  double linsolve_tol = 1e-10;
  int max_halvings = 40;
  FaceAveraging averaging = FaceAveraging::arithmetic;
};

/// Extra source term g_i(t, x) added to the right-hand side.
using SourceFunction = std::function<double(std::size_t species, double t, const Point& x)>;

struct SimulationConfig {
  Grid grid;
  std::vector<SpeciesTransport> transport;
  Kinetics kinetics = Kinetics::none(1);
  State initial;
  SourceFunction forcing;
  double T = 1.0;
  double dt_init = 1e-3;
  double cfl = 0.9;
  std::vector<double> snapshot_times;
  /// Conservation vector e used for the drift column of the ledger.
  std::optional<std::vector<double>> conservation;
  SolverOptions options;
  std::uint64_t seed = 0;

  std::size_t species() const noexcept { return transport.size(); }

  void validate() const {
    if (!(T >= 0) || !std::isfinite(T)) throw ConfigError("final time must be nonnegative");
    if (!(dt_init > 0)) throw ConfigError("dt_init must be positive");
    if (!(cfl > 0 && cfl <= 1)) throw ConfigError("cfl must lie in (0, 1]");
    if (transport.empty()) throw ConfigError("at least one species is required");
    if (kinetics.species() != species()) throw ConfigError("kinetics and transport disagree on the species count");
    if (initial.size() != species()) throw ConfigError("initial state has the wrong species count");
    for (const auto& f : initial) {
      if (f.values.size() != grid.cell_count()) throw ConfigError("initial field has the wrong cell count");
      for (double v : f.values)
        if (!std::isfinite(v) || v < -options.nonneg_tol) throw ConfigError("initial data must be finite and nonnegative");
    }
    if (conservation && conservation->size() != species()) throw ConfigError("conservation vector has wrong length");
  }
};

// ---------------------------------------------------------------------------
// Spatial operators

namespace detail {

struct StencilTerm {
  std::size_t cell;
  double weight;
};

/// Cell-centered derivative along `axis`: centered in the interior,
/// one-sided in boundary cells.
inline void gradient_stencil(const Grid& grid, std::size_t cell, int axis, std::vector<StencilTerm>& out) {
  out.clear();
  const std::size_t n = grid.cells(axis);
  const std::size_t pos = axis == 0 ? grid.ix(cell) : grid.iy(cell);
  const std::size_t stride = axis == 0 ? 1 : grid.cells(0);
  const double h = grid.h(axis);
  if (pos == 0) {
    out.push_back({cell + stride, 1.0 / h});
    out.push_back({cell, -1.0 / h});
  } else if (pos + 1 == n) {
    out.push_back({cell, 1.0 / h});
    out.push_back({cell - stride, -1.0 / h});
  } else {
    out.push_back({cell + stride, 0.5 / h});
    out.push_back({cell - stride, -0.5 / h});
  }
}

inline double apply_stencil(const std::vector<StencilTerm>& st, std::span<const double> c) {
  double v = 0;
  for (const auto& t : st) v += t.weight * c[t.cell];
  return v;
}

inline double face_average(double a, double b, FaceAveraging mode) {
  if (mode == FaceAveraging::harmonic && a > 0 && b > 0) return 2 * a * b / (a + b);
  return 0.5 * (a + b);
}

} // namespace detail

/// Discrete -div(D grad .) with zero flux through the boundary, split into
/// the part solved implicitly and cross-diffusion faces treated explicitly.
struct DiffusionOperator {
  std::size_t size = 0;
  std::vector<SparseMatrix::Triplet> implicit_terms;
  std::vector<SparseMatrix::Triplet> explicit_terms;
  bool symmetric = true;

  SparseMatrix implicit_matrix() const { return SparseMatrix(size, implicit_terms); }
  SparseMatrix explicit_matrix() const { return SparseMatrix(size, explicit_terms); }

  /// I + dt A_implicit.
  SparseMatrix system_matrix(double dt) const {
    std::vector<SparseMatrix::Triplet> t;
    t.reserve(implicit_terms.size() + size);
    for (std::size_t i = 0; i < size; ++i) t.push_back({i, i, 1.0});
    for (const auto& e : implicit_terms) t.push_back({e.row, e.col, dt * e.value});
    return SparseMatrix(size, std::move(t));
  }

  /// (A c) for both parts together.
  std::vector<double> apply(std::span<const double> c) const {
    std::vector<double> out(size, 0.0);
    for (const auto& e : implicit_terms) out[e.row] += e.value * c[e.col];
    for (const auto& e : explicit_terms) out[e.row] += e.value * c[e.col];
    return out;
  }
};

/// Cell-centered finite-volume discretization of c -> -div(D grad c).
///
/// Face tensors average the adjacent cell evaluations at time t. The normal
/// flux uses the two-point difference; the tangential part uses the two
/// diagonal differences aligned with the sign of the cross coefficient
/// (nine-point stencil in 2D, nonpositive off-diagonals while
/// |D12| <= min(D11, D22) on square cells). Boundary faces carry no flux.
/// A face whose off-diagonal entry exceeds its smaller diagonal entry has
/// its cross flux moved to the explicit part.
inline DiffusionOperator diffusion_operator(const Grid& grid, const TensorField& d, double t,
                                            FaceAveraging averaging = FaceAveraging::arithmetic) {
  const std::size_t n = grid.cell_count();
  DiffusionOperator op;
  op.size = n;
  std::vector<Tensor> cell_tensor(n);
  for (std::size_t c = 0; c < n; ++c) cell_tensor[c] = d(t, grid.center(c));

  for (int axis = 0; axis < grid.dim(); ++axis) {
    const int other = 1 - axis;
    const double h = grid.h(axis);
    const std::size_t stride = axis == 0 ? 1 : grid.cells(0);
    for (std::size_t left = 0; left < n; ++left) {
      const std::size_t pos = axis == 0 ? grid.ix(left) : grid.iy(left);
      if (pos + 1 == grid.cells(axis)) continue;
      const std::size_t right = left + stride;
      const Tensor& dl = cell_tensor[left];
      const Tensor& dr = cell_tensor[right];
      const double normal = detail::face_average(dl[axis][axis], dr[axis][axis], averaging);
      const double a = normal / (h * h);
      op.implicit_terms.push_back({left, left, a});
      op.implicit_terms.push_back({left, right, -a});
      op.implicit_terms.push_back({right, right, a});
      op.implicit_terms.push_back({right, left, -a});

      if (grid.dim() == 1) continue;
      const double cross = 0.5 * (dl[axis][other] + dr[axis][other]);
      if (cross == 0.0) continue;
      const double tangential = detail::face_average(dl[other][other], dr[other][other], averaging);
      const bool explicit_face = std::abs(cross) > std::min(normal, tangential);
      auto& sink = explicit_face ? op.explicit_terms : op.implicit_terms;
      if (!explicit_face) op.symmetric = false;
      // Tangential derivative at the face from the two diagonal one-sided
      // differences picked by the sign of the cross coefficient; a missing
      // one at the wall leaves the other with full weight.
      const std::size_t other_stride = other == 0 ? 1 : grid.cells(0);
      const std::size_t opos = other == 0 ? grid.ix(left) : grid.iy(left);
      const bool has_up = opos + 1 < grid.cells(other);
      const bool has_down = opos > 0;
      const std::size_t up_cell = cross > 0 ? right : left;
      const std::size_t down_cell = cross > 0 ? left : right;
      const double share = (has_up && has_down) ? 0.5 : 1.0;
      const double k = -cross * share / (grid.h(other) * h);
      auto add = [&](std::size_t hi, std::size_t lo) {
        sink.push_back({left, hi, k});
        sink.push_back({left, lo, -k});
        sink.push_back({right, hi, -k});
        sink.push_back({right, lo, k});
      };
      if (has_up) add(up_cell + other_stride, up_cell);
      if (has_down) add(down_cell, down_cell - other_stride);
    }
  }
  return op;
}

/// Upwind advective fluxes through interior faces (boundary faces carry
/// none). Faces normal to x are stored first, indexed by their left cell;
/// then faces normal to y, indexed by their lower cell. Faces on the upper
/// boundary hold zero.
struct FaceFluxes {
  std::vector<double> x_faces;
  std::vector<double> y_faces;
};

inline FaceFluxes advection_flux(const Grid& grid, const AdvectionField& u, std::span<const double> c, double t) {
  const std::size_t n = grid.cell_count();
  FaceFluxes f{std::vector<double>(n, 0.0), std::vector<double>(grid.dim() == 2 ? n : 0, 0.0)};
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const std::size_t stride = axis == 0 ? 1 : grid.cells(0);
    auto& out = axis == 0 ? f.x_faces : f.y_faces;
    for (std::size_t left = 0; left < n; ++left) {
      const std::size_t pos = axis == 0 ? grid.ix(left) : grid.iy(left);
      if (pos + 1 == grid.cells(axis)) continue;
      Point mid = grid.center(left);
      mid[axis] += 0.5 * grid.h(axis);
      const double un = u(t, mid)[axis];
      out[left] = un * (un > 0 ? c[left] : c[left + stride]);
    }
  }
  return f;
}

/// -div of the advective fluxes, per cell.
inline std::vector<double> advection_rate(const Grid& grid, const AdvectionField& u, std::span<const double> c, double t) {
  const auto f = advection_flux(grid, u, c, t);
  const std::size_t n = grid.cell_count();
  std::vector<double> rate(n, 0.0);
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const std::size_t stride = axis == 0 ? 1 : grid.cells(0);
    const auto& flux = axis == 0 ? f.x_faces : f.y_faces;
    const double h = grid.h(axis);
    for (std::size_t left = 0; left < n; ++left) {
      const std::size_t pos = axis == 0 ? grid.ix(left) : grid.iy(left);
      if (pos + 1 == grid.cells(axis)) continue;
      rate[left] -= flux[left] / h;
      rate[left + stride] += flux[left] / h;
    }
  }
  return rate;
}

/// sum_axes max|u_axis| / h_axis over face midpoints at time t.
inline double advective_rate_bound(const Grid& grid, const AdvectionField& u, double t) {
  double total = 0;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    double vmax = 0;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      Point mid = grid.center(c);
      mid[axis] += 0.5 * grid.h(axis);
      vmax = std::max(vmax, std::abs(u(t, mid)[axis]));
      if ((axis == 0 ? grid.ix(c) : grid.iy(c)) == 0) {
        Point low = grid.center(c);
        low[axis] -= 0.5 * grid.h(axis);
        vmax = std::max(vmax, std::abs(u(t, low)[axis]));
      }
    }
    total += vmax / grid.h(axis);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Time integration

struct LedgerEntry {
  double t = 0;
  double dt = 0;
  std::vector<double> mass;
  double min_value = 0;
  std::size_t linear_iterations = 0;
  std::size_t rejections = 0;
  /// Relative drift of sum_i e_i mass_i; NaN when no conservation vector.
  double conservation_drift = std::numeric_limits<double>::quiet_NaN();
};

/// States at every accepted step. states[n] is the solution at times[n];
/// ledger[n] describes the step from times[n] to times[n + 1].
struct SolutionTrajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<LedgerEntry> ledger;
  std::vector<std::size_t> snapshot_indices;

  std::size_t steps() const noexcept { return ledger.size(); }
  double final_time() const noexcept { return times.back(); }
  const State& final_state() const { return states.back(); }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : states)
      for (const auto& f : s)
        for (double v : f.values) m = std::min(m, v);
    return m;
  }
};

struct StepResult {
  State state;
  double dt = 0;
  std::size_t linear_iterations = 0;
  std::size_t rejections = 0;
};

/// IMEX backward Euler for the reaction-advection-diffusion system:
///   (I + dt A_i(t + dt)) c_i* = c_i + dt (adv_i(c, t) + f_i(c) + g_i(t + dt)) - dt E_i c_i
/// where A_i is the implicit diffusion part and E_i its explicit cross part.
class Integrator {
public:
  explicit Integrator(SimulationConfig config) : config_(std::move(config)) { config_.validate(); }

  const SimulationConfig& config() const noexcept { return config_; }

  /// Advances from t by dt, halving dt after each rejection caused by a
  /// negative cell value. The returned dt is the one actually taken.
  StepResult step(const State& c, double t, double dt) const {
    StepResult result;
    for (int attempt = 0; attempt <= config_.options.max_halvings; ++attempt) {
      std::size_t iterations = 0;
      State next = try_step(c, t, dt, iterations);
      result.linear_iterations += iterations;
      if (state_min(next) >= -config_.options.nonneg_tol) {
        result.state = std::move(next);
        result.dt = dt;
        return result;
      }
      ++result.rejections;
      dt *= 0.5;
    }
    throw StepFailure("nonnegativity not restored after " + std::to_string(config_.options.max_halvings) +
                      " halvings at t=" + std::to_string(t));
  }

  /// Largest dt allowed by dt_init and the advective CFL bound at time t.
  double nominal_dt(double t) const {
    double rate = 0;
    for (const auto& tr : config_.transport) rate = std::max(rate, advective_rate_bound(config_.grid, tr.advection, t));
    double dt = config_.dt_init;
    if (rate > 0) dt = std::min(dt, config_.cfl / rate);
    return dt;
  }

  SolutionTrajectory run() const {
    const auto& cfg = config_;
    SolutionTrajectory traj;
    traj.grid = cfg.grid;
    traj.times.push_back(0.0);
    traj.states.push_back(cfg.initial);
    traj.snapshot_indices.push_back(0);

    std::vector<double> targets;
    for (double s : cfg.snapshot_times)
      if (s > 0 && s < cfg.T) targets.push_back(s);
    targets.push_back(cfg.T);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    const double initial_e_mass = weighted_mass(cfg.initial);
    double t = 0;
    double dt_next = std::numeric_limits<double>::infinity();
    std::size_t target = 0;
    if (cfg.T == 0) return traj;
    while (target < targets.size()) {
      const double goal = targets[target];
      const double nominal = nominal_dt(t);
      double dt = std::min(nominal, dt_next);
      bool lands = false;
      if (t + dt >= goal - 1e-12 * std::max(1.0, goal)) {
        dt = goal - t;
        lands = true;
      }
      StepResult r = step(traj.states.back(), t, dt);
      const double t_new = (lands && r.rejections == 0) ? goal : t + r.dt;

      LedgerEntry e;
      e.t = t_new;
      e.dt = r.dt;
      e.linear_iterations = r.linear_iterations;
      e.rejections = r.rejections;
      e.min_value = state_min(r.state);
      for (const auto& f : r.state) e.mass.push_back(integrate(cfg.grid, f.values));
      if (cfg.conservation)
        e.conservation_drift = std::abs(weighted_mass(r.state) - initial_e_mass) / std::abs(initial_e_mass);
      traj.ledger.push_back(std::move(e));
      traj.times.push_back(t_new);
      traj.states.push_back(std::move(r.state));

      dt_next = r.rejections > 0 ? 2 * r.dt : std::numeric_limits<double>::infinity();
      t = t_new;
      if (t_new == goal) {
        traj.snapshot_indices.push_back(traj.times.size() - 1);
        ++target;
      }
    }
    return traj;
  }

private:
  static double state_min(const State& s) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : s)
      for (double v : f.values) m = std::min(m, v);
    return m;
  }

  double weighted_mass(const State& s) const {
    if (!config_.conservation) return 0.0;
    double total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) total += (*config_.conservation)[i] * integrate(config_.grid, s[i].values);
    return total;
  }

  State try_step(const State& c, double t, double dt, std::size_t& iterations) const {
    const auto& cfg = config_;
    const Grid& grid = cfg.grid;
    const std::size_t n = grid.cell_count();
    const std::size_t p = cfg.species();

    // Reaction at every cell from the current state.
    std::vector<std::vector<double>> reaction(p, std::vector<double>(n));
    std::vector<double> local(p), f(p);
    for (std::size_t cell = 0; cell < n; ++cell) {
      for (std::size_t s = 0; s < p; ++s) local[s] = std::max(c[s].values[cell], 0.0);
      cfg.kinetics(local, f);
      for (std::size_t s = 0; s < p; ++s) reaction[s][cell] = f[s];
    }

    State next = make_state(p, n);
    for (std::size_t s = 0; s < p; ++s) {
      const auto& values = c[s].values;
      const auto op = diffusion_operator(grid, cfg.transport[s].diffusion, t + dt, cfg.options.averaging);
      const auto adv = advection_rate(grid, cfg.transport[s].advection, values, t);
      std::vector<double> rhs(n);
      for (std::size_t cell = 0; cell < n; ++cell) {
        double source = adv[cell] + reaction[s][cell];
        if (cfg.forcing) source += cfg.forcing(s, t + dt, grid.center(cell));
        rhs[cell] = values[cell] + dt * source;
      }
      if (!op.explicit_terms.empty()) {
        std::vector<double> cross(n, 0.0);
        for (const auto& e : op.explicit_terms) cross[e.row] += e.value * values[e.col];
        for (std::size_t cell = 0; cell < n; ++cell) rhs[cell] -= dt * cross[cell];
      }
      // Starting from the right-hand side keeps the Krylov residuals
      // mean-free, so the solve does not perturb the total mass.
      next[s].values = rhs;
      const auto stats =
          solve_linear(op.system_matrix(dt), rhs, next[s].values, cfg.options.linsolve_tol, op.symmetric);
      iterations += stats.iterations;
    }
    return next;
  }

  SimulationConfig config_;
};

inline SolutionTrajectory run(const SimulationConfig& config) { return Integrator(config).run(); }

// ---------------------------------------------------------------------------
// Diagnostics

/// Smooth space-time test function with psi(T, .) = 0.
struct TestFunction {
  std::string name;
  ScalarFunction value;
  ScalarFunction time_derivative;
  VectorFunction gradient;
};

/// Fixed catalog: zero, (1 - t/T), (1 - t/T) cos(pi x / Lx),
/// (1 - t/T) x / Lx, and in 2D (1 - t/T)^2 cos(pi x / Lx) cos(pi y / Ly).
inline std::vector<TestFunction> test_function_catalog(const Grid& grid, double T) {
  constexpr double pi = std::numbers::pi;
  const double lx = grid.length(0);
  const double ly = grid.length(1);
  std::vector<TestFunction> out;
  out.push_back({"zero", [](double, const Point&) { return 0.0; }, [](double, const Point&) { return 0.0; },
                 [](double, const Point&) { return Vec{0.0, 0.0}; }});
  out.push_back({"ramp", [T](double t, const Point&) { return 1.0 - t / T; },
                 [T](double, const Point&) { return -1.0 / T; }, [](double, const Point&) { return Vec{0.0, 0.0}; }});
  out.push_back({"cos_x", [=](double t, const Point& x) { return (1.0 - t / T) * std::cos(pi * x[0] / lx); },
                 [=](double, const Point& x) { return -std::cos(pi * x[0] / lx) / T; },
                 [=](double t, const Point& x) { return Vec{-(1.0 - t / T) * (pi / lx) * std::sin(pi * x[0] / lx), 0.0}; }});
  out.push_back({"linear_x", [=](double t, const Point& x) { return (1.0 - t / T) * x[0] / lx; },
                 [=](double, const Point& x) { return -x[0] / (lx * T); },
                 [=](double t, const Point&) { return Vec{(1.0 - t / T) / lx, 0.0}; }});
  if (grid.dim() == 2) {
    out.push_back({"cos_xy",
                   [=](double t, const Point& x) {
                     const double s = 1.0 - t / T;
                     return s * s * std::cos(pi * x[0] / lx) * std::cos(pi * x[1] / ly);
                   },
                   [=](double t, const Point& x) {
                     return -2.0 * (1.0 - t / T) / T * std::cos(pi * x[0] / lx) * std::cos(pi * x[1] / ly);
                   },
                   [=](double t, const Point& x) {
                     const double s = (1.0 - t / T) * (1.0 - t / T);
                     return Vec{-s * (pi / lx) * std::sin(pi * x[0] / lx) * std::cos(pi * x[1] / ly),
                                -s * (pi / ly) * std::cos(pi * x[0] / lx) * std::sin(pi * x[1] / ly)};
                   }});
  }
  return out;
}

/// Defect of the weak formulation
///   -int c_i^0 psi(0) + int_QT (-c_i d_t psi + (D_i grad c_i - c_i u_i) . grad psi) - int_QT f_i(c) psi
/// per species, evaluated with midpoint quadrature in space and time
/// (the state on a step is the average of its endpoints).
inline std::vector<double> weak_residual(const SolutionTrajectory& traj, const SimulationConfig& cfg,
                                         const TestFunction& psi) {
  const Grid& grid = traj.grid;
  const std::size_t n = grid.cell_count();
  const std::size_t p = cfg.species();
  const double vol = grid.cell_volume();
  std::vector<double> defect(p, 0.0);
  for (std::size_t s = 0; s < p; ++s)
    for (std::size_t cell = 0; cell < n; ++cell)
      defect[s] -= traj.states[0][s].values[cell] * psi.value(0.0, grid.center(cell)) * vol;

  std::vector<detail::StencilTerm> st;
  std::vector<double> mid(n), local(p), f(p);
  std::vector<std::vector<double>> avg(p, std::vector<double>(n));
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    const double t0 = traj.times[k];
    const double dt = traj.times[k + 1] - t0;
    const double tm = t0 + 0.5 * dt;
    for (std::size_t s = 0; s < p; ++s)
      for (std::size_t cell = 0; cell < n; ++cell)
        avg[s][cell] = 0.5 * (traj.states[k][s].values[cell] + traj.states[k + 1][s].values[cell]);
    for (std::size_t cell = 0; cell < n; ++cell) {
      const Point x = grid.center(cell);
      const double psi_v = psi.value(tm, x);
      const double psi_t = psi.time_derivative(tm, x);
      const Vec psi_g = psi.gradient(tm, x);
      for (std::size_t s = 0; s < p; ++s) local[s] = std::max(avg[s][cell], 0.0);
      cfg.kinetics(local, f);
      for (std::size_t s = 0; s < p; ++s) {
        const double c = avg[s][cell];
        Vec grad{0.0, 0.0};
        for (int axis = 0; axis < grid.dim(); ++axis) {
          detail::gradient_stencil(grid, cell, axis, st);
          grad[axis] = detail::apply_stencil(st, avg[s]);
        }
        const Tensor d = cfg.transport[s].diffusion(tm, x);
        const Vec u = cfg.transport[s].advection(tm, x);
        double flux_dot = 0;
        for (int a = 0; a < grid.dim(); ++a) {
          double dgrad = 0;
          for (int b = 0; b < grid.dim(); ++b) dgrad += d[a][b] * grad[b];
          flux_dot += (dgrad - c * u[a]) * psi_g[a];
        }
        double source = f[s];
        if (cfg.forcing) source += cfg.forcing(s, tm, x);
        defect[s] += dt * vol * (-c * psi_t + flux_dot - source * psi_v);
      }
    }
  }
  for (auto& v : defect) v = std::abs(v);
  return defect;
}

using ExactSolution = std::function<double(std::size_t species, double t, const Point& x)>;

/// Space-time L2 error over all species: midpoint rule in space, left
/// endpoint in time.
inline double manufactured_error(const SolutionTrajectory& traj, const ExactSolution& exact) {
  const Grid& grid = traj.grid;
  double sum = 0;
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    const double dt = traj.times[k + 1] - traj.times[k];
    for (std::size_t s = 0; s < traj.states[k].size(); ++s)
      for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        const double e = traj.states[k][s].values[cell] - exact(s, traj.times[k], grid.center(cell));
        sum += dt * grid.cell_volume() * e * e;
      }
  }
  return std::sqrt(sum);
}

/// Max-norm error of the state stored at `index`.
inline double max_error(const SolutionTrajectory& traj, std::size_t index, const ExactSolution& exact) {
  double worst = 0;
  for (std::size_t s = 0; s < traj.states[index].size(); ++s)
    for (std::size_t cell = 0; cell < traj.grid.cell_count(); ++cell)
      worst = std::max(worst, std::abs(traj.states[index][s].values[cell] -
                                       exact(s, traj.times[index], traj.grid.center(cell))));
  return worst;
}

/// Source g_i that makes `exact` solve the forced system, built from
/// centered differences of the closed-form solution and coefficients:
///   g_i = d_t c_i + div(-D_i grad c_i + c_i u_i) - f_i(c).
inline SourceFunction manufactured_forcing(ExactSolution exact, std::vector<SpeciesTransport> transport, Kinetics kinetics,
                                           int dim, double step = 1e-4) {
  return [exact = std::move(exact), transport = std::move(transport), kinetics = std::move(kinetics), dim,
          step](std::size_t s, double t, const Point& x) {
    const auto& tr = transport[s];
    auto flux = [&](const Point& y) {
      Vec grad{0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        Point yp = y, ym = y;
        yp[a] += step;
        ym[a] -= step;
        grad[a] = (exact(s, t, yp) - exact(s, t, ym)) / (2 * step);
      }
      const Tensor d = tr.diffusion(t, y);
      const Vec u = tr.advection(t, y);
      const double c = exact(s, t, y);
      Vec j{0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) j[a] -= d[a][b] * grad[b];
        j[a] += c * u[a];
      }
      return j;
    };
    double div = 0;
    for (int a = 0; a < dim; ++a) {
      Point xp = x, xm = x;
      xp[a] += step;
      xm[a] -= step;
      div += (flux(xp)[a] - flux(xm)[a]) / (2 * step);
    }
    const double dt_c = (exact(s, t + step, x) - exact(s, t - step, x)) / (2 * step);
    std::vector<double> state(kinetics.species());
    for (std::size_t i = 0; i < state.size(); ++i) state[i] = exact(i, t, x);
    const auto f = kinetics(state);
    return dt_c + div - f[s];
  };
}

} // namespace rdalab
