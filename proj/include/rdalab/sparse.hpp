#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

#include "rdalab/errors.hpp"

namespace rdalab {

/// Compressed sparse row matrix assembled from (row, col, value) triplets.
/// Duplicate entries are summed; column order within a row is ascending.
class SparseMatrix {
public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;

  SparseMatrix(std::size_t n, std::vector<Triplet> triplets) : n_(n), row_start_(n + 1, 0) {
    std::stable_sort(triplets.begin(), triplets.end(),
                     [](const Triplet& a, const Triplet& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      const auto& t = triplets[k];
      if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
        values_.back() += t.value;
        continue;
      }
      cols_.push_back(t.col);
      values_.push_back(t.value);
      ++row_start_[t.row + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) row_start_[i + 1] += row_start_[i];
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double sum = 0;
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) sum += values_[k] * x[cols_[k]];
      y[i] = sum;
    }
  }

  void multiply_transpose(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) y[cols_[k]] += values_[k] * x[i];
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
        if (cols_[k] == i) d[i] += values_[k];
    return d;
  }

  /// Entry lookup, O(row length).
  double at(std::size_t i, std::size_t j) const {
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
      if (cols_[k] == j) return values_[k];
    return 0.0;
  }

  bool is_symmetric(double tol = 0.0) const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
        if (std::abs(values_[k] - at(cols_[k], i)) > tol) return false;
    return true;
  }

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace detail

struct LinearSolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0;
  bool used_fallback = false;
};

/// Unpreconditioned conjugate gradients on A x = b (A symmetric positive
/// definite), or on the normal equations A^T A x = A^T b when `normal` is
/// set. x holds the initial guess. Returns false if the relative residual
/// |b - A x| / |b| does not reach `tol` within `max_iterations`.
inline bool conjugate_gradient(const SparseMatrix& a, std::span<const double> b, std::span<double> x, double tol,
                               std::size_t max_iterations, bool normal, LinearSolveStats& stats) {
  const std::size_t n = a.size();
  const double b_norm = detail::norm2(b);
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    stats.relative_residual = 0;
    return true;
  }
  auto residual = [&] { return detail::norm2(r) / b_norm; };
  if (residual() <= tol) {
    stats.relative_residual = residual();
    return true;
  }
  // z = A^T r for the normal equations, z = r otherwise.
  if (normal) a.multiply_transpose(r, z);
  else z = r;
  p = z;
  double rho = detail::dot(z, z);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    a.multiply(p, q);
    const double denom = detail::dot(normal ? std::span<const double>(q) : std::span<const double>(p), q);
    if (!(denom > 0)) break;
    const double step = rho / denom;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * q[i];
    }
    stats.iterations = it;
    stats.relative_residual = residual();
    if (stats.relative_residual <= tol) return true;
    if (normal) a.multiply_transpose(r, z);
    else z = r;
    const double rho_next = detail::dot(z, z);
    const double beta = rho_next / rho;
    rho = rho_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return false;
}

/// Jacobi iteration; converges for strictly diagonally dominant systems.
inline bool jacobi(const SparseMatrix& a, std::span<const double> b, std::span<double> x, double tol,
                   std::size_t max_iterations, LinearSolveStats& stats) {
  const std::size_t n = a.size();
  const auto diag = a.diagonal();
  const double b_norm = std::max(detail::norm2(b), 1e-300);
  std::vector<double> ax(n);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    a.multiply(x, ax);
    double r2 = 0;
    for (std::size_t i = 0; i < n; ++i) r2 += (b[i] - ax[i]) * (b[i] - ax[i]);
    stats.relative_residual = std::sqrt(r2) / b_norm;
    if (stats.relative_residual <= tol) return true;
    for (std::size_t i = 0; i < n; ++i) x[i] += (b[i] - ax[i]) / diag[i];
    stats.iterations += 1;
  }
  return false;
}

/// CG (plain when A is symmetric, on the normal equations otherwise) with a
/// Jacobi fallback. Throws LinearSolveFailure when both stagnate.
inline LinearSolveStats solve_linear(const SparseMatrix& a, std::span<const double> b, std::span<double> x, double tol,
                                     bool symmetric, std::size_t max_iterations = 0) {
  if (max_iterations == 0) max_iterations = std::max<std::size_t>(1000, 20 * a.size());
  LinearSolveStats stats;
  std::vector<double> guess(x.begin(), x.end());
  if (conjugate_gradient(a, b, x, tol, max_iterations, !symmetric, stats)) return stats;
  std::copy(guess.begin(), guess.end(), x.begin());
  stats.used_fallback = true;
  const std::size_t cg_iterations = stats.iterations;
  stats.iterations = 0;
  if (jacobi(a, b, x, tol, 50 * max_iterations, stats)) {
    stats.iterations += cg_iterations;
    return stats;
  }
  throw LinearSolveFailure("linear solve stagnated at relative residual " + std::to_string(stats.relative_residual));
}

} // namespace rdalab
