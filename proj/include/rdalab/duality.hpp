#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "rdalab/coefficients.hpp"
#include "rdalab/errors.hpp"
#include "rdalab/estimates.hpp"
#include "rdalab/grid.hpp"
#include "rdalab/solver.hpp"
#include "rdalab/sparse.hpp"

namespace rdalab {

/// Backward problem  -(d_t Psi + A Lap Psi + u . grad Psi) = Theta,
/// d_nu Psi = 0, Psi(T) = 0.
struct DualProblem {
  ScalarFunction A;
  double a_lo = 1;
  double a_hi = 1;
  VectorFunction u = [](double, const Point&) { return Vec{0.0, 0.0}; };
  ScalarFunction theta;
  double T = 1;
};

/// Forward conservative problem  d_t W + div(-grad(A W) + W u) = H with zero
/// total flux through the boundary, W(0) = W0.
struct PrimalProblem {
  ScalarFunction A;
  double a_lo = 1;
  double a_hi = 1;
  VectorFunction u = [](double, const Point&) { return Vec{0.0, 0.0}; };
  ScalarFunction H;
  std::vector<double> W0;
  double T = 1;
};

namespace detail {

inline void check_scalar_bounds(const ScalarFunction& a, double lo, double hi, const Grid& g, double T, std::size_t steps) {
  if (!(lo > 0) || !(hi >= lo)) throw DomainError("coefficient bounds must satisfy 0 < a_lo <= a_hi");
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = T * static_cast<double>(n) / static_cast<double>(steps);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const double v = a(t, g.center(c));
      if (v < lo - 1e-12 || v > hi + 1e-12)
        throw DomainError("coefficient A=" + std::to_string(v) + " outside declared bounds at t=" + std::to_string(t));
    }
  }
}

/// Zero-flux discrete Laplacian stiffness (-Lap_h), symmetric.
inline DiffusionOperator laplacian(const Grid& g) {
  return diffusion_operator(g, TensorField::isotropic(1.0, g.dim()), 0.0);
}

/// diag(d) + dt * L as a sparse matrix.
inline SparseMatrix shifted(const DiffusionOperator& lap, const std::vector<double>& d, double dt) {
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(lap.implicit_terms.size() + d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
  for (const auto& e : lap.implicit_terms) t.push_back({e.row, e.col, dt * e.value});
  return SparseMatrix(d.size(), std::move(t));
}

} // namespace detail

/// Solves the dual problem on a uniform time grid with `steps` steps.
/// With s = T - t it is the forward problem d_s Phi = A Lap Phi + u . grad Phi + Theta,
/// integrated by backward Euler in the diffusion and explicit upwinding in
/// the drift. Dividing each row by A makes the implicit system symmetric
/// positive definite. Returned states are ordered by increasing t, so
/// states.back() is Psi(T) = 0.
inline SolutionTrajectory solve_dual(const DualProblem& dp, const Grid& g, std::size_t steps, double tol = 1e-12) {
  if (steps == 0) throw DomainError("dual solve needs at least one step");
  detail::check_scalar_bounds(dp.A, dp.a_lo, dp.a_hi, g, dp.T, steps);
  const std::size_t n = g.cell_count();
  const double ds = dp.T / static_cast<double>(steps);
  const auto lap = detail::laplacian(g);

  std::vector<std::vector<double>> phi{std::vector<double>(n, 0.0)};
  std::vector<double> inv_a(n), rhs(n), x(n);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double s = ds * static_cast<double>(k);
    const double t_new = dp.T - s;
    const double t_old = dp.T - (s - ds);
    const auto& prev = phi.back();
    for (std::size_t c = 0; c < n; ++c) {
      const Point xc = g.center(c);
      const Vec u = dp.u(t_old, xc);
      // u . grad Phi, upwinded for transport with velocity -u; the zero
      // normal derivative makes the outward difference vanish at walls.
      double drift = 0;
      for (int a = 0; a < g.dim(); ++a) {
        const std::size_t pos = a == 0 ? g.ix(c) : g.iy(c);
        const std::size_t stride = a == 0 ? 1 : g.cells(0);
        if (u[a] > 0 && pos + 1 < g.cells(a)) drift += u[a] * (prev[c + stride] - prev[c]) / g.h(a);
        if (u[a] < 0 && pos > 0) drift += u[a] * (prev[c] - prev[c - stride]) / g.h(a);
      }
      const double theta = dp.theta(t_new, xc);
      if (theta < 0) throw DomainError("dual source must be nonnegative");
      inv_a[c] = 1.0 / dp.A(t_new, xc);
      rhs[c] = inv_a[c] * (prev[c] + ds * (drift + theta));
      x[c] = prev[c];
    }
    solve_linear(detail::shifted(lap, inv_a, ds), rhs, x, tol, true);
    phi.push_back(x);
  }

  SolutionTrajectory traj;
  traj.grid = g;
  for (std::size_t k = 0; k <= steps; ++k) {
    traj.times.push_back(k == steps ? dp.T : ds * static_cast<double>(k));
    traj.states.push_back({Field{0, phi[steps - k]}});
  }
  traj.snapshot_indices = {0, steps};
  return traj;
}

/// Solves the primal W equation: backward Euler for -Lap(A W) with unknown
/// V = A W (the system diag(1/A) + dt(-Lap_h) is SPD and conservative),
/// explicit upwind fluxes for W u.
inline SolutionTrajectory solve_primal(const PrimalProblem& pp, const Grid& g, std::size_t steps, double tol = 1e-12) {
  if (steps == 0) throw DomainError("primal solve needs at least one step");
  if (pp.W0.size() != g.cell_count()) throw DomainError("W0 has the wrong cell count");
  detail::check_scalar_bounds(pp.A, pp.a_lo, pp.a_hi, g, pp.T, steps);
  const std::size_t n = g.cell_count();
  const double dt = pp.T / static_cast<double>(steps);
  const auto lap = detail::laplacian(g);
  const AdvectionField u(pp.u);

  SolutionTrajectory traj;
  traj.grid = g;
  traj.times.push_back(0.0);
  traj.states.push_back({Field{0, pp.W0}});
  std::vector<double> inv_a(n), rhs(n), v(n);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_old = dt * static_cast<double>(k - 1);
    const double t_new = k == steps ? pp.T : dt * static_cast<double>(k);
    const auto& w = traj.states.back()[0].values;
    const auto adv = advection_rate(g, u, w, t_old);
    for (std::size_t c = 0; c < n; ++c) {
      const Point xc = g.center(c);
      inv_a[c] = 1.0 / pp.A(t_new, xc);
      rhs[c] = w[c] + dt * (adv[c] + pp.H(t_new, xc));
      v[c] = w[c] / inv_a[c];
    }
    solve_linear(detail::shifted(lap, inv_a, dt), rhs, v, tol, true);
    std::vector<double> next(n);
    for (std::size_t c = 0; c < n; ++c) next[c] = v[c] * inv_a[c];
    traj.times.push_back(t_new);
    traj.states.push_back({Field{0, std::move(next)}});
  }
  traj.snapshot_indices = {0, steps};
  return traj;
}

struct PairingCheck {
  double lhs = 0;      // |int_QT W Theta|
  double rhs = 0;      // ||W0|| ||Psi(0)|| + ||H||_{L2(QT)} ||Psi||_{L2(QT)}
  double identity = 0; // int W0 Psi(0) + int_QT H Psi
  double defect = 0;   // |int_QT W Theta - identity|
  bool holds() const noexcept { return lhs <= rhs + defect; }
};

/// Both sides of the duality pairing by left-endpoint quadrature in time
/// and the midpoint rule in space. W and Psi must share grid and times.
inline PairingCheck duality_pairing_check(const SolutionTrajectory& w, const SolutionTrajectory& psi,
                                          const ScalarFunction& theta, const ScalarFunction& H) {
  if (w.times.size() != psi.times.size() || !(w.grid == psi.grid)) throw DomainError("W and Psi must share the discretization");
  const Grid& g = w.grid;
  const double vol = g.cell_volume();
  double w_theta = 0, h_psi = 0, h2 = 0, psi2 = 0;
  for (std::size_t k = 0; k + 1 < w.times.size(); ++k) {
    const double t = w.times[k];
    const double dt = w.times[k + 1] - t;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const Point x = g.center(c);
      const double hv = H(t, x);
      const double pv = psi.states[k][0].values[c];
      w_theta += dt * vol * w.states[k][0].values[c] * theta(t, x);
      h_psi += dt * vol * hv * pv;
      h2 += dt * vol * hv * hv;
      psi2 += dt * vol * pv * pv;
    }
  }
  const auto& w0 = w.states.front()[0].values;
  const auto& psi0 = psi.states.front()[0].values;
  double w0_psi0 = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) w0_psi0 += vol * w0[c] * psi0[c];
  PairingCheck r;
  r.lhs = std::abs(w_theta);
  r.rhs = field_norm(g, w0, 2) * field_norm(g, psi0, 2) + std::sqrt(h2) * std::sqrt(psi2);
  r.identity = w0_psi0 + h_psi;
  r.defect = std::abs(w_theta - r.identity);
  return r;
}

// ---------------------------------------------------------------------------
// Random ensembles

/// Smooth function on [0, L] x [0, T]: sum_{m < modes} a_m cos(m pi x / L + phi_m)
/// times (1 + b sin(omega t)), with |a_m| <= 1/(1+m)^2. bound() is a sup bound.
class TruncatedTrig {
public:
  TruncatedTrig() = default;
  TruncatedTrig(std::mt19937_64& rng, double length, std::size_t modes) : length_(length) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0), phase(0.0, 2 * std::numbers::pi);
    for (std::size_t m = 0; m < modes; ++m) {
      const double w = 1.0 / ((1.0 + m) * (1.0 + m));
      amp_.push_back(w * unit(rng));
      phase_.push_back(phase(rng));
      bound_ += std::abs(amp_.back());
    }
    time_amp_ = 0.5 * unit(rng);
    omega_ = 1.0 + 3.0 * (unit(rng) + 1.0);
    bound_ *= 1.0 + std::abs(time_amp_);
  }

  double operator()(double t, const Point& x) const {
    double s = 0;
    for (std::size_t m = 0; m < amp_.size(); ++m)
      s += amp_[m] * std::cos(static_cast<double>(m) * std::numbers::pi * x[0] / length_ + phase_[m]);
    return s * (1.0 + time_amp_ * std::sin(omega_ * t));
  }

  /// Value in [-1, 1].
  double normalized(double t, const Point& x) const { return bound_ > 0 ? (*this)(t, x) / bound_ : 0.0; }

private:
  double length_ = 1;
  std::vector<double> amp_, phase_;
  double time_amp_ = 0, omega_ = 1, bound_ = 0;
};

/// One member of the random duality ensemble: coefficient A in [a_lo, a_hi],
/// drift |u| <= u_max, W0 >= 0, signed H, Theta >= 0 vanishing at t = 0, T.
struct EnsembleMember {
  TruncatedTrig a, u, w0, h, theta;
  double w0_scale = 1, h_scale = 1;
};

struct DualityEnsembleSettings {
  double length = 1;
  double T = 0.5;
  double a_lo = 0.5;
  double a_hi = 2.0;
  double u_max = 1.0;
  std::size_t modes = 6;
  double dt_over_h = 0.5;
};

inline EnsembleMember draw_member(std::mt19937_64& rng, const DualityEnsembleSettings& s) {
  EnsembleMember m{TruncatedTrig(rng, s.length, s.modes), TruncatedTrig(rng, s.length, s.modes),
                   TruncatedTrig(rng, s.length, s.modes), TruncatedTrig(rng, s.length, s.modes),
                   TruncatedTrig(rng, s.length, s.modes)};
  std::uniform_real_distribution<double> scale(0.1, 2.0);
  m.w0_scale = scale(rng);
  m.h_scale = scale(rng);
  return m;
}

inline PrimalProblem primal_of(const EnsembleMember& m, const DualityEnsembleSettings& s, const Grid& g) {
  PrimalProblem p;
  const double mid = 0.5 * (s.a_lo + s.a_hi), rad = 0.5 * (s.a_hi - s.a_lo);
  p.A = [a = m.a, mid, rad](double t, const Point& x) { return mid + rad * a.normalized(t, x); };
  p.a_lo = s.a_lo;
  p.a_hi = s.a_hi;
  p.u = [u = m.u, um = s.u_max](double t, const Point& x) { return Vec{um * u.normalized(t, x), 0.0}; };
  p.H = [h = m.h, k = m.h_scale](double t, const Point& x) { return k * h.normalized(t, x); };
  p.W0.resize(g.cell_count());
  for (std::size_t c = 0; c < g.cell_count(); ++c) p.W0[c] = m.w0_scale * (1.0 + 0.9 * m.w0.normalized(0.0, g.center(c)));
  p.T = s.T;
  return p;
}

inline DualProblem dual_of(const EnsembleMember& m, const DualityEnsembleSettings& s) {
  const auto pp_a = [a = m.a, mid = 0.5 * (s.a_lo + s.a_hi), rad = 0.5 * (s.a_hi - s.a_lo)](double t, const Point& x) {
    return mid + rad * a.normalized(t, x);
  };
  DualProblem d;
  d.A = pp_a;
  d.a_lo = s.a_lo;
  d.a_hi = s.a_hi;
  d.u = [u = m.u, um = s.u_max](double t, const Point& x) { return Vec{um * u.normalized(t, x), 0.0}; };
  d.theta = [th = m.theta, T = s.T](double t, const Point& x) {
    const double bump = std::sin(std::numbers::pi * t / T);
    return bump * bump * (1.0 + 0.9 * th.normalized(t, x));
  };
  d.T = s.T;
  return d;
}

/// ||W+||_{L2(QT)} / (||W0||_{L2} + ||H||_{L2(QT)}).
inline double lemma_ratio(const SolutionTrajectory& w, const ScalarFunction& H) {
  const Grid& g = w.grid;
  double w2 = 0, h2 = 0;
  for (std::size_t k = 0; k + 1 < w.times.size(); ++k) {
    const double dt = w.times[k + 1] - w.times[k];
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const double wp = std::max(w.states[k][0].values[c], 0.0);
      const double hv = H(w.times[k], g.center(c));
      w2 += dt * g.cell_volume() * wp * wp;
      h2 += dt * g.cell_volume() * hv * hv;
    }
  }
  const double denom = field_norm(g, w.states.front()[0].values, 2) + std::sqrt(h2);
  return denom > 0 ? std::sqrt(w2) / denom : 0.0;
}

struct DualityMemberResult {
  std::size_t member = 0;
  bool training = true;
  std::size_t cells = 0;
  double ratio = 0;
  double pairing_lhs = 0;
  double pairing_rhs = 0;
  double defect = 0;
  double psi_min = 0;
};

struct DualityResult {
  std::vector<std::size_t> levels;
  std::vector<DualityMemberResult> members;
  std::vector<double> fitted_constant;  // per level, max training ratio
  std::vector<double> worst_held_out;   // per level
  std::vector<double> total_defect;     // per level, summed over members
  double constant_change = 0;           // relative change between the two finest levels
  std::vector<double> defect_ratios;    // total_defect[l + 1] / total_defect[l]
  bool held_out_ok = false;
  bool constant_stable = false;
  bool defect_ok = false;
  bool positivity_ok = false;
  bool pass() const noexcept { return held_out_ok && constant_stable && defect_ok && positivity_ok; }
};

/// Fits C_emp = max ratio over `ensemble_size` training members and checks
/// it against as many held-out members, on each grid level (1D, cells per
/// level). PASS iff on the finest level every held-out ratio is at most
/// 1.1 C_emp, C_emp moves by at most 20% between the two finest levels, the
/// summed pairing defect shrinks by a factor of at least 0.6 per halving,
/// and every dual solution stays nonnegative.
inline DualityResult verify_lemma5(std::size_t ensemble_size, std::uint64_t seed, std::vector<std::size_t> levels,
                                   const DualityEnsembleSettings& s = {}) {
  if (levels.size() < 2) throw ConfigError("duality study needs at least two grid levels");
  std::sort(levels.begin(), levels.end());
  std::mt19937_64 rng(seed);
  std::vector<EnsembleMember> members;
  for (std::size_t i = 0; i < 2 * ensemble_size; ++i) members.push_back(draw_member(rng, s));

  DualityResult r;
  r.levels = levels;
  r.positivity_ok = true;
  for (std::size_t cells : levels) {
    const Grid g = Grid::line(s.length, cells);
    const auto steps = static_cast<std::size_t>(std::ceil(s.T / (s.dt_over_h * g.h(0))));
    double fitted = 0, held = 0, defect = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto pp = primal_of(members[i], s, g);
      const auto dp = dual_of(members[i], s);
      const auto w = solve_primal(pp, g, steps);
      const auto psi = solve_dual(dp, g, steps);
      const auto pair = duality_pairing_check(w, psi, dp.theta, pp.H);
      DualityMemberResult m;
      m.member = i;
      m.training = i < ensemble_size;
      m.cells = cells;
      m.ratio = lemma_ratio(w, pp.H);
      m.pairing_lhs = pair.lhs;
      m.pairing_rhs = pair.rhs;
      m.defect = pair.defect;
      m.psi_min = psi.min_value();
      if (m.psi_min < -1e-12) r.positivity_ok = false;
      if (m.training) fitted = std::max(fitted, m.ratio);
      else held = std::max(held, m.ratio);
      defect += m.defect;
      r.members.push_back(m);
    }
    r.fitted_constant.push_back(fitted);
    r.worst_held_out.push_back(held);
    r.total_defect.push_back(defect);
  }
  const std::size_t L = levels.size();
  r.held_out_ok = r.worst_held_out[L - 1] <= 1.1 * r.fitted_constant[L - 1];
  r.constant_change = std::abs(r.fitted_constant[L - 1] - r.fitted_constant[L - 2]) / r.fitted_constant[L - 2];
  r.constant_stable = r.constant_change <= 0.20;
  r.defect_ok = true;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    r.defect_ratios.push_back(r.total_defect[l + 1] / r.total_defect[l]);
    if (!(r.defect_ratios.back() <= 0.6)) r.defect_ok = false;
  }
  return r;
}

} // namespace rdalab
