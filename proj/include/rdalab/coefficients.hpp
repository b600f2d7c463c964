#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdalab/errors.hpp"
#include "rdalab/grid.hpp"
#include "rdalab/keyvalue.hpp"

namespace rdalab {

using Vec = std::array<double, 2>;
using Tensor = std::array<std::array<double, 2>, 2>;

using ScalarFunction = std::function<double(double t, const Point& x)>;
using VectorFunction = std::function<Vec(double t, const Point& x)>;
using TensorFunction = std::function<Tensor(double t, const Point& x)>;

// ---------------------------------------------------------------------------
// Expression catalog
//
// Scalars are written "kind:p1,p2,...":
//   const:v                          v
//   affine:c0,cx,cy,ct               c0 + cx x + cy y + ct t
//   trig:a,b,fx,wx,fy,wy             a + b fx(wx pi x) fy(wy pi y)
//   exptrig:a,b,lam,fx,wx,fy,wy      a + b exp(-lam t) fx(wx pi x) fy(wy pi y)
// where fx, fy are one of sin, cos, one.
// Vectors are "s1|s2" (1D uses s1 only). Tensors are "iso(s)", "diag(s1|s2)"
// or "full(s11|s12|s21|s22)".

namespace detail {

inline double apply_profile(const std::string& kind, double arg) {
  if (kind == "sin") return std::sin(arg);
  if (kind == "cos") return std::cos(arg);
  return 1.0;
}

inline void check_profile(const std::string& kind) {
  if (kind != "sin" && kind != "cos" && kind != "one") throw ConfigError("unknown profile '" + kind + "'");
}

} // namespace detail

/// Closed-form scalar coefficient parsed from the catalog syntax above.
class ScalarExpr {
public:
  explicit ScalarExpr(std::string text) : text_(KeyValueDocument::trim(text)) { compile(); }

  double operator()(double t, const Point& x) const { return fn_(t, x); }
  const std::string& text() const noexcept { return text_; }
  operator ScalarFunction() const { return fn_; }

private:
  void compile() {
    const auto colon = text_.find(':');
    if (colon == std::string::npos) throw ConfigError("expression '" + text_ + "' lacks a kind prefix");
    const std::string kind = text_.substr(0, colon);
    const auto args = split(text_.substr(colon + 1), ',');
    auto num = [&](std::size_t i) {
      try {
        std::size_t used = 0;
        const double v = std::stod(args.at(i), &used);
        if (used != args.at(i).size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw ConfigError("expression '" + text_ + "': bad numeric argument " + std::to_string(i + 1));
      }
    };
    auto arity = [&](std::size_t n) {
      if (args.size() != n) throw ConfigError("expression '" + text_ + "' expects " + std::to_string(n) + " arguments");
    };
    constexpr double pi = std::numbers::pi;
    if (kind == "const") {
      arity(1);
      const double v = num(0);
      fn_ = [v](double, const Point&) { return v; };
    } else if (kind == "affine") {
      arity(4);
      const double c0 = num(0), cx = num(1), cy = num(2), ct = num(3);
      fn_ = [=](double t, const Point& x) { return c0 + cx * x[0] + cy * x[1] + ct * t; };
    } else if (kind == "trig") {
      arity(6);
      const double a = num(0), b = num(1), wx = num(3), wy = num(5);
      const std::string fx = args[2], fy = args[4];
      detail::check_profile(fx);
      detail::check_profile(fy);
      fn_ = [=](double, const Point& x) {
        return a + b * detail::apply_profile(fx, wx * pi * x[0]) * detail::apply_profile(fy, wy * pi * x[1]);
      };
    } else if (kind == "exptrig") {
      arity(7);
      const double a = num(0), b = num(1), lam = num(2), wx = num(4), wy = num(6);
      const std::string fx = args[3], fy = args[5];
      detail::check_profile(fx);
      detail::check_profile(fy);
      fn_ = [=](double t, const Point& x) {
        return a + b * std::exp(-lam * t) * detail::apply_profile(fx, wx * pi * x[0]) *
                       detail::apply_profile(fy, wy * pi * x[1]);
      };
    } else {
      throw ConfigError("unknown expression kind '" + kind + "'");
    }
  }

  std::string text_;
  ScalarFunction fn_;
};

inline VectorFunction parse_vector(const std::string& text) {
  const auto parts = split(text, '|');
  if (parts.empty() || parts.size() > 2) throw ConfigError("vector '" + text + "' needs one or two components");
  const ScalarExpr ux(parts[0]);
  const ScalarExpr uy(parts.size() == 2 ? parts[1] : "const:0");
  return [ux, uy](double t, const Point& x) { return Vec{ux(t, x), uy(t, x)}; };
}

struct ParsedTensor {
  TensorFunction fn;
  bool isotropic = false;
  /// For isotropic tensors, the scalar d with D = d I.
  ScalarFunction scalar;
};

inline ParsedTensor parse_tensor(const std::string& raw) {
  const std::string text = KeyValueDocument::trim(raw);
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw ConfigError("tensor '" + text + "' must be kind(...)");
  const std::string kind = text.substr(0, open);
  const auto parts = split(text.substr(open + 1, text.size() - open - 2), '|');
  ParsedTensor out;
  if (kind == "iso") {
    if (parts.size() != 1) throw ConfigError("iso(...) takes one scalar");
    const ScalarExpr d(parts[0]);
    out.isotropic = true;
    out.scalar = d;
    out.fn = [d](double t, const Point& x) {
      const double v = d(t, x);
      return Tensor{{{v, 0.0}, {0.0, v}}};
    };
  } else if (kind == "diag") {
    if (parts.size() != 2) throw ConfigError("diag(...) takes two scalars");
    const ScalarExpr d1(parts[0]), d2(parts[1]);
    out.fn = [d1, d2](double t, const Point& x) { return Tensor{{{d1(t, x), 0.0}, {0.0, d2(t, x)}}}; };
  } else if (kind == "full") {
    if (parts.size() != 4) throw ConfigError("full(...) takes four scalars");
    const ScalarExpr a(parts[0]), b(parts[1]), c(parts[2]), d(parts[3]);
    out.fn = [a, b, c, d](double t, const Point& x) { return Tensor{{{a(t, x), b(t, x)}, {c(t, x), d(t, x)}}}; };
  } else {
    throw ConfigError("unknown tensor kind '" + kind + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fields

/// Symmetric positive definite diffusion tensor D(t, x) with a declared
/// ellipticity interval. In 1D only the (0,0) entry is used.
class TensorField {
public:
  TensorField() = default;
  TensorField(TensorFunction fn, double d_lo, double d_hi, int dim = 2) : fn_(std::move(fn)), d_lo_(d_lo), d_hi_(d_hi), dim_(dim) {
    if (!(d_lo > 0) || !(d_hi >= d_lo)) throw DomainError("ellipticity interval must satisfy 0 < d_lo <= d_hi");
  }

  static TensorField isotropic(double d, int dim = 2) {
    return TensorField([d](double, const Point&) { return Tensor{{{d, 0.0}, {0.0, d}}}; }, d, d, dim);
  }

  Tensor operator()(double t, const Point& x) const {
    Tensor m = fn_(t, x);
    if (dim_ == 1) return Tensor{{{m[0][0], 0.0}, {0.0, m[0][0]}}};
    const double off = 0.5 * (m[0][1] + m[1][0]);
    m[0][1] = m[1][0] = off;
    return m;
  }

  double d_lo() const noexcept { return d_lo_; }
  double d_hi() const noexcept { return d_hi_; }
  int dim() const noexcept { return dim_; }

private:
  TensorFunction fn_ = [](double, const Point&) { return Tensor{{{1.0, 0.0}, {0.0, 1.0}}}; };
  double d_lo_ = 1.0;
  double d_hi_ = 1.0;
  int dim_ = 2;
};

class AdvectionField {
public:
  AdvectionField() = default;
  explicit AdvectionField(VectorFunction fn) : fn_(std::move(fn)) {}

  static AdvectionField zero() { return AdvectionField(); }

  Vec operator()(double t, const Point& x) const { return fn_(t, x); }

private:
  VectorFunction fn_ = [](double, const Point&) { return Vec{0.0, 0.0}; };
};

/// Closed-form eigenvalue range of a symmetric tensor (1D: the scalar itself).
inline std::pair<double, double> eigen_range(const Tensor& m, int dim) {
  if (dim == 1) return {m[0][0], m[0][0]};
  const double mean = 0.5 * (m[0][0] + m[1][1]);
  const double half_gap = 0.5 * (m[0][0] - m[1][1]);
  const double radius = std::hypot(half_gap, m[0][1]);
  return {mean - radius, mean + radius};
}

/// Minimum and maximum eigenvalue over all (time, cell center) samples.
/// Throws EllipticityViolation if one leaves the declared interval.
inline std::pair<double, double> ellipticity_scan(const TensorField& d, const Grid& grid, const std::vector<double>& times) {
  if (times.empty() || grid.cell_count() == 0) throw DomainError("ellipticity scan needs samples");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const double slack = 1e-12 * std::max(1.0, d.d_hi());
  for (double t : times)
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Point x = grid.center(c);
      const auto [emin, emax] = eigen_range(d(t, x), grid.dim());
      lo = std::min(lo, emin);
      hi = std::max(hi, emax);
      if (emin < d.d_lo() - slack || emax > d.d_hi() + slack) {
        std::ostringstream msg;
        msg << "eigenvalues [" << emin << ", " << emax << "] leave [" << d.d_lo() << ", " << d.d_hi() << "] at t=" << t
            << ", x=(" << x[0] << ", " << x[1] << ")";
        throw EllipticityViolation(msg.str());
      }
    }
  return {lo, hi};
}

/// Sampled modulus of continuity: for each delta, the largest |h(t,x) - h(s,y)|
/// over sample pairs with |t - s| + |x - y| <= delta.
inline std::vector<double> modulus_of_continuity(const ScalarFunction& h, const Grid& grid, const std::vector<double>& times,
                                                 const std::vector<double>& deltas) {
  struct Sample {
    double t;
    Point x;
    double value;
  };
  std::vector<Sample> samples;
  for (double t : times)
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Point x = grid.center(c);
      samples.push_back({t, x, h(t, x)});
    }
  std::vector<std::pair<double, double>> pairs;  // (distance, |difference|)
  pairs.reserve(samples.size() * (samples.size() + 1) / 2);
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a; b < samples.size(); ++b) {
      const double dist = std::abs(samples[a].t - samples[b].t) +
                          std::hypot(samples[a].x[0] - samples[b].x[0], samples[a].x[1] - samples[b].x[1]);
      pairs.emplace_back(dist, std::abs(samples[a].value - samples[b].value));
    }
  std::sort(pairs.begin(), pairs.end());
  std::vector<double> running(pairs.size());
  double best = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) running[i] = best = std::max(best, pairs[i].second);

  std::vector<double> out;
  for (double delta : deltas) {
    const auto it = std::upper_bound(pairs.begin(), pairs.end(), std::make_pair(delta, std::numeric_limits<double>::infinity()));
    out.push_back(it == pairs.begin() ? 0.0 : running[static_cast<std::size_t>(it - pairs.begin()) - 1]);
  }
  return out;
}

struct SymmetrizedTensor {
  TensorField symmetric;
  AdvectionField drift;
};

/// Splits a general tensor into D_sym = (D + D^T)/2 and the drift
/// (u_D)_l = sum_k d_k (D_sym - D)_kl, so that
/// div(-D grad c) = div(-D_sym grad c + u_D c).
/// Derivatives use centered differences with the grid spacing.
inline SymmetrizedTensor symmetrize(const TensorFunction& d, const Grid& grid, double d_lo, double d_hi) {
  const double hx = grid.h(0);
  const double hy = grid.dim() == 2 ? grid.h(1) : grid.h(0);
  auto skew = [d](double t, const Point& x) {
    const Tensor m = d(t, x);
    // (D_sym - D)_kl = (D_lk - D_kl) / 2
    Tensor s{};
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) s[k][l] = 0.5 * (m[l][k] - m[k][l]);
    return s;
  };
  VectorFunction drift = [skew, hx, hy](double t, const Point& x) {
    const Tensor xp = skew(t, {x[0] + hx, x[1]});
    const Tensor xm = skew(t, {x[0] - hx, x[1]});
    const Tensor yp = skew(t, {x[0], x[1] + hy});
    const Tensor ym = skew(t, {x[0], x[1] - hy});
    Vec u{};
    for (int l = 0; l < 2; ++l) u[l] = (xp[0][l] - xm[0][l]) / (2 * hx) + (yp[1][l] - ym[1][l]) / (2 * hy);
    return u;
  };
  TensorFunction sym = [d](double t, const Point& x) {
    Tensor m = d(t, x);
    const double off = 0.5 * (m[0][1] + m[1][0]);
    m[0][1] = m[1][0] = off;
    return m;
  };
  return {TensorField(std::move(sym), d_lo, d_hi, grid.dim()), AdvectionField(std::move(drift))};
}

} // namespace rdalab
