#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rdalab/coefficients.hpp"
#include "rdalab/errors.hpp"
#include "rdalab/grid.hpp"
#include "rdalab/reaction_network.hpp"
#include "rdalab/solver.hpp"

namespace rdalab {

inline constexpr double infinity_norm = std::numeric_limits<double>::infinity();

/// ||c_s||_{L^p(Q_T)}: midpoint rule in space, left endpoint in time.
/// p = infinity is the max of |c| over all stored states.
inline double spacetime_norm(const SolutionTrajectory& traj, std::size_t species, double p) {
  if (!(p >= 1)) throw DomainError("norm exponent must be at least 1");
  const Grid& g = traj.grid;
  if (std::isinf(p)) {
    double m = 0;
    for (const auto& s : traj.states)
      for (double v : s[species].values) m = std::max(m, std::abs(v));
    return m;
  }
  double sum = 0;
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    const double w = (traj.times[k + 1] - traj.times[k]) * g.cell_volume();
    double local = 0;
    for (double v : traj.states[k][species].values) local += std::pow(std::abs(v), p);
    sum += w * local;
  }
  return std::pow(sum, 1.0 / p);
}

/// sum_i ||c_i||_{L^p(Q_T)}.
inline double spacetime_norm_sum(const SolutionTrajectory& traj, double p) {
  double total = 0;
  for (std::size_t s = 0; s < traj.states.front().size(); ++s) total += spacetime_norm(traj, s, p);
  return total;
}

/// ||f||_{L^p(Omega)} of a cell field.
inline double field_norm(const Grid& g, const std::vector<double>& values, double p) {
  if (std::isinf(p)) {
    double m = 0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double sum = 0;
  for (double v : values) sum += std::pow(std::abs(v), p);
  return std::pow(sum * g.cell_volume(), 1.0 / p);
}

inline double state_norm_sum(const Grid& g, const State& s, double p) {
  double total = 0;
  for (const auto& f : s) total += field_norm(g, f.values, p);
  return total;
}

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct NormReport {
  std::vector<double> exponents;                // 1, (N+1)/N, 2, inf
  std::vector<std::vector<double>> per_species; // [species][exponent]
  std::vector<double> aggregate;                // sum over species, per exponent
  std::vector<double> initial_l1, initial_l2, initial_linf;
  double conservation_drift = std::numeric_limits<double>::quiet_NaN();
  std::vector<Verdict> verdicts;
  std::vector<std::pair<std::string, double>> constants;
};

inline NormReport norm_report(const SolutionTrajectory& traj) {
  NormReport r;
  const double n = traj.grid.dim();
  r.exponents = {1.0, (n + 1) / n, 2.0, infinity_norm};
  const std::size_t p = traj.states.front().size();
  r.per_species.assign(p, std::vector<double>(r.exponents.size()));
  r.aggregate.assign(r.exponents.size(), 0.0);
  for (std::size_t s = 0; s < p; ++s) {
    for (std::size_t e = 0; e < r.exponents.size(); ++e) {
      r.per_species[s][e] = spacetime_norm(traj, s, r.exponents[e]);
      r.aggregate[e] += r.per_species[s][e];
    }
    const auto& c0 = traj.states.front()[s].values;
    r.initial_l1.push_back(field_norm(traj.grid, c0, 1));
    r.initial_l2.push_back(field_norm(traj.grid, c0, 2));
    r.initial_linf.push_back(field_norm(traj.grid, c0, infinity_norm));
  }
  for (const auto& e : traj.ledger)
    if (!std::isnan(e.conservation_drift))
      r.conservation_drift = std::isnan(r.conservation_drift) ? e.conservation_drift
                                                              : std::max(r.conservation_drift, e.conservation_drift);
  return r;
}

/// sqrt(sum_i ||a_i - b_i||^2_{L2(QT)}) for trajectories on the same time grid.
inline double trajectory_distance(const SolutionTrajectory& a, const SolutionTrajectory& b) {
  if (a.times != b.times || !(a.grid == b.grid)) throw DomainError("trajectories are on different discretizations");
  double sum = 0;
  for (std::size_t k = 0; k + 1 < a.times.size(); ++k) {
    const double w = (a.times[k + 1] - a.times[k]) * a.grid.cell_volume();
    for (std::size_t s = 0; s < a.states[k].size(); ++s)
      for (std::size_t c = 0; c < a.grid.cell_count(); ++c) {
        const double d = a.states[k][s].values[c] - b.states[k][s].values[c];
        sum += w * d * d;
      }
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Fast-reaction sweep

/// Pointwise distance from the reaction equilibria:
/// sum_j |c^alpha_j - kappa_j c^beta_j| (the kappa = 0 reactions included).
inline std::function<double(std::span<const double>)> equilibrium_residual(const ReactionNetwork& net) {
  const auto alpha = net.alpha();
  const auto beta = net.beta();
  std::vector<double> kappa;
  for (const auto& v : net.kappa()) kappa.push_back(to_double(v));
  return [alpha, beta, kappa](std::span<const double> c) {
    double total = 0;
    for (std::size_t j = 0; j < kappa.size(); ++j) {
      double fwd = 1, bwd = 1;
      for (std::size_t i = 0; i < c.size(); ++i) {
        fwd *= std::pow(std::max(c[i], 0.0), static_cast<double>(alpha(j, i)));
        bwd *= std::pow(std::max(c[i], 0.0), static_cast<double>(beta(j, i)));
      }
      total += std::abs(fwd - kappa[j] * bwd);
    }
    return total;
  };
}

/// int_QT g(c) with the space-time quadrature of spacetime_norm.
inline double spacetime_integral(const SolutionTrajectory& traj, const std::function<double(std::span<const double>)>& g) {
  const std::size_t p = traj.states.front().size();
  std::vector<double> local(p);
  double sum = 0;
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    const double w = (traj.times[k + 1] - traj.times[k]) * traj.grid.cell_volume();
    for (std::size_t cell = 0; cell < traj.grid.cell_count(); ++cell) {
      for (std::size_t s = 0; s < p; ++s) local[s] = traj.states[k][s].values[cell];
      sum += w * g(local);
    }
  }
  return sum;
}

struct UniformityMember {
  double k = 0;
  double l2_sum = 0;
  double initial_l2_sum = 0;
  double ratio = 0;
  double equilibrium_l1 = 0;
  double min_value = 0;
};

struct UniformityResult {
  std::vector<UniformityMember> members;
  double variation = 0; // (max - min) / min over the ratios
  bool uniform = false;
  bool bounded = false;
  bool trend = false;
  bool pass() const noexcept { return uniform && bounded && trend; }
};

/// Runs make(k) for every k and compares
///   ratio_k = sum_i ||c_i||_{L2(QT)} / (1 + sum_i ||c_i^0||_{L2}).
/// PASS iff the ratios vary by at most 10%, none exceeds twice the first
/// member's, and the L1(QT) equilibrium residual strictly decreases.
inline UniformityResult l2_uniformity_experiment(const std::function<SimulationConfig(double k)>& make,
                                                 const std::vector<double>& k_list,
                                                 const std::function<double(std::span<const double>)>& residual) {
  if (k_list.empty()) throw ConfigError("k sweep is empty");
  UniformityResult r;
  for (double k : k_list) {
    const auto traj = run(make(k));
    UniformityMember m;
    m.k = k;
    m.l2_sum = spacetime_norm_sum(traj, 2);
    m.initial_l2_sum = state_norm_sum(traj.grid, traj.states.front(), 2);
    m.ratio = m.l2_sum / (1 + m.initial_l2_sum);
    m.equilibrium_l1 = spacetime_integral(traj, residual);
    m.min_value = traj.min_value();
    r.members.push_back(m);
  }
  double lo = infinity_norm, hi = 0;
  for (const auto& m : r.members) {
    lo = std::min(lo, m.ratio);
    hi = std::max(hi, m.ratio);
  }
  r.variation = lo > 0 ? (hi - lo) / lo : (hi > 0 ? infinity_norm : 0.0);
  r.uniform = r.variation <= 0.10;
  r.bounded = hi <= 2 * r.members.front().ratio;
  r.trend = true;
  for (std::size_t i = 1; i < r.members.size(); ++i)
    if (!(r.members[i].equilibrium_l1 < r.members[i - 1].equilibrium_l1)) r.trend = false;
  return r;
}

// ---------------------------------------------------------------------------
// Concentrating initial data

/// Plateau of total mass `mass` on the cell_count/factor cells nearest to
/// `center` (ties broken by cell index), normalized exactly on the grid.
inline std::vector<double> plateau(const Grid& g, const Point& center, double mass, double factor) {
  if (!(factor >= 1)) throw DomainError("concentration factor must be at least 1");
  const std::size_t n = g.cell_count();
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / factor)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto dist2 = [&](std::size_t c) {
    const Point x = g.center(c);
    double d = 0;
    for (int a = 0; a < g.dim(); ++a) d += (x[a] - center[a]) * (x[a] - center[a]);
    return d;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b); });
  std::vector<double> v(n, 0.0);
  const double level = mass / (static_cast<double>(count) * g.cell_volume());
  for (std::size_t i = 0; i < count; ++i) v[order[i]] = level;
  return v;
}

/// One state per factor; species s gets a plateau of mass masses[s].
inline std::vector<State> concentrating_family(const Grid& g, const Point& center, const std::vector<double>& masses,
                                               const std::vector<double>& factors) {
  std::vector<State> out;
  for (double f : factors) {
    State s = make_state(masses.size(), g.cell_count());
    for (std::size_t i = 0; i < masses.size(); ++i) s[i].values = plateau(g, center, masses[i], f);
    out.push_back(std::move(s));
  }
  return out;
}

struct ConcentrationMember {
  double initial_l1_sum = 0;
  double initial_linf_sum = 0;
  double norm_sum = 0; // sum_i ||c_i||_{L^{(N+1)/N}(QT)}
  double ratio = 0;
  double l2_ratio = 0; // sum_i ||c_i||_{L2(QT)} / (1 + sum_i ||c_i^0||_{L2}), recorded only
};

struct ConcentrationResult {
  double exponent = 0;
  std::vector<ConcentrationMember> members;
  double worst_over_baseline = 0;
  bool pass() const noexcept { return worst_over_baseline <= 2.0; }
};

/// Runs `base` once per initial state in the family (flattest first) and
/// compares ratio = sum_i ||c_i||_{L^{(N+1)/N}(QT)} / (1 + sum_i ||c_i^0||_{L1})
/// against the first member's.
inline ConcentrationResult l_n1_over_n_experiment(const SimulationConfig& base, const std::vector<State>& family) {
  if (family.empty()) throw ConfigError("initial family is empty");
  ConcentrationResult r;
  const double n = base.grid.dim();
  r.exponent = (n + 1) / n;
  for (const auto& init : family) {
    SimulationConfig cfg = base;
    cfg.initial = init;
    const auto traj = run(cfg);
    ConcentrationMember m;
    m.initial_l1_sum = state_norm_sum(cfg.grid, init, 1);
    m.initial_linf_sum = state_norm_sum(cfg.grid, init, infinity_norm);
    m.norm_sum = spacetime_norm_sum(traj, r.exponent);
    m.ratio = m.norm_sum / (1 + m.initial_l1_sum);
    m.l2_ratio = spacetime_norm_sum(traj, 2) / (1 + state_norm_sum(cfg.grid, init, 2));
    r.members.push_back(m);
  }
  const double baseline = r.members.front().ratio;
  for (const auto& m : r.members)
    r.worst_over_baseline = std::max(r.worst_over_baseline, baseline > 0 ? m.ratio / baseline : (m.ratio > 0 ? infinity_norm : 0.0));
  return r;
}

// ---------------------------------------------------------------------------
// Collapse to a single equation for W = 1 + sum_i c_i

struct CollapseFields {
  std::vector<double> W;
  std::vector<double> A;      // (1 + sum d_i c_i) / W, scalar diffusions
  std::vector<Vec> u;         // sum_i c_i / W (grad d_i + u_i)
  std::vector<Tensor> A_kl;   // (delta_kl + sum_i d^i_kl c_i) / W
  std::vector<Vec> B;         // B_k = sum_i c_i / W sum_l d_l d^i_kl
  std::vector<Vec> U;         // sum_i c_i / W u_i
};

namespace detail {

/// Centered difference of a tensor field along `axis`.
inline Tensor tensor_derivative(const TensorField& d, double t, const Point& x, int axis, double step = 1e-6) {
  Point xp = x, xm = x;
  xp[axis] += step;
  xm[axis] -= step;
  const Tensor a = d(t, xp), b = d(t, xm);
  Tensor out{};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) out[k][l] = (a[k][l] - b[k][l]) / (2 * step);
  return out;
}

} // namespace detail

/// Cellwise collapse fields at time t. Checks
///   min(1, d_lo) <= A <= max(1, d_hi)   (scalar part, from the (0,0) entries)
///   A_kl xi_k xi_l >= min(1, min_i alpha_i) |xi|^2   on 32 directions,
/// where d_lo, d_hi, alpha_i come from the declared tensor bounds.
inline CollapseFields collapse_scalar(const Grid& grid, double t, const State& state,
                                      const std::vector<SpeciesTransport>& transport, double tol = 1e-12) {
  const std::size_t n = grid.cell_count();
  const std::size_t p = transport.size();
  double d_lo = infinity_norm, d_hi = 0;
  for (const auto& tr : transport) {
    d_lo = std::min(d_lo, tr.diffusion.d_lo());
    d_hi = std::max(d_hi, tr.diffusion.d_hi());
  }
  const double a_lo = std::min(1.0, d_lo), a_hi = std::max(1.0, d_hi);
  const int dim = grid.dim();

  CollapseFields f;
  f.W.resize(n);
  f.A.resize(n);
  f.u.assign(n, Vec{0.0, 0.0});
  f.A_kl.assign(n, Tensor{});
  f.B.assign(n, Vec{0.0, 0.0});
  f.U.assign(n, Vec{0.0, 0.0});
  for (std::size_t cell = 0; cell < n; ++cell) {
    const Point x = grid.center(cell);
    double w = 1, num = 1;
    Tensor akl{{{1.0, 0.0}, {0.0, dim == 2 ? 1.0 : 0.0}}};
    Vec u{0.0, 0.0}, b{0.0, 0.0}, uu{0.0, 0.0};
    for (std::size_t i = 0; i < p; ++i) {
      const double c = std::max(state[i].values[cell], 0.0);
      const Tensor d = transport[i].diffusion(t, x);
      const Vec ui = transport[i].advection(t, x);
      w += c;
      num += d[0][0] * c;
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) akl[k][l] += d[k][l] * c;
      for (int a = 0; a < dim; ++a) {
        const Tensor dd = detail::tensor_derivative(transport[i].diffusion, t, x, a);
        u[a] += c * (dd[0][0] + ui[a]);
        uu[a] += c * ui[a];
        // B_k = sum_l d_l d_kl: the derivative along axis a feeds row k via column a.
        for (int k = 0; k < dim; ++k) b[k] += c * dd[k][a];
      }
    }
    f.W[cell] = w;
    f.A[cell] = num / w;
    for (int k = 0; k < 2; ++k) {
      f.u[cell][k] = u[k] / w;
      f.B[cell][k] = b[k] / w;
      f.U[cell][k] = uu[k] / w;
      for (int l = 0; l < 2; ++l) f.A_kl[cell][k][l] = akl[k][l] / w;
    }

    auto where = [&] {
      return " at t=" + std::to_string(t) + " x=(" + std::to_string(x[0]) + "," + std::to_string(x[1]) + ")";
    };
    if (f.A[cell] < a_lo - tol || f.A[cell] > a_hi + tol)
      throw CollapseBoundViolation("A=" + std::to_string(f.A[cell]) + " outside [" + std::to_string(a_lo) + "," +
                                   std::to_string(a_hi) + "]" + where());
    if (dim == 2) {
      for (int k = 0; k < 32; ++k) {
        const double th = std::numbers::pi * k / 32.0;
        const double xi0 = std::cos(th), xi1 = std::sin(th);
        const auto& m = f.A_kl[cell];
        const double q = m[0][0] * xi0 * xi0 + (m[0][1] + m[1][0]) * xi0 * xi1 + m[1][1] * xi1 * xi1;
        if (q < a_lo - tol) throw CollapseBoundViolation("A_kl not elliptic, form=" + std::to_string(q) + where());
      }
    }
  }
  return f;
}

/// Applies collapse_scalar at every snapshot of a trajectory; returns the
/// observed range of A.
inline std::pair<double, double> collapse_bounds_check(const SolutionTrajectory& traj,
                                                        const std::vector<SpeciesTransport>& transport) {
  double lo = infinity_norm, hi = -infinity_norm;
  for (std::size_t idx : traj.snapshot_indices) {
    const auto f = collapse_scalar(traj.grid, traj.times[idx], traj.states[idx], transport);
    for (double a : f.A) {
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  return {lo, hi};
}

} // namespace rdalab
