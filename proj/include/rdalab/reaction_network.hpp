#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rdalab/errors.hpp"
#include "rdalab/matrix.hpp"
#include "rdalab/rational.hpp"

namespace rdalab {

using IntMatrix = Matrix<std::int64_t>;
using RationalMatrix = Matrix<Rational>;

/// Mass-action network of R reactions among P species.
///
/// Reaction j consumes alpha(j, .) and produces beta(j, .), with forward rate
/// k_j and equilibrium constant kappa_j, so that its rate is
/// r_j(c) = c^alpha_j - kappa_j c^beta_j.
class ReactionNetwork {
public:
  ReactionNetwork(IntMatrix alpha, IntMatrix beta, std::vector<Rational> k, std::vector<Rational> kappa)
      : alpha_(std::move(alpha)), beta_(std::move(beta)), k_(std::move(k)), kappa_(std::move(kappa)) {
    validate();
    omega_ = IntMatrix(reactions(), species());
    for (std::size_t j = 0; j < reactions(); ++j)
      for (std::size_t i = 0; i < species(); ++i) omega_(j, i) = beta_(j, i) - alpha_(j, i);
  }

  /// As above, additionally checking a stored omega = beta - alpha.
  ReactionNetwork(IntMatrix alpha, IntMatrix beta, std::vector<Rational> k, std::vector<Rational> kappa,
                  const IntMatrix& stored_omega)
      : ReactionNetwork(std::move(alpha), std::move(beta), std::move(k), std::move(kappa)) {
    if (!(stored_omega == omega_)) throw DomainError("stored omega does not equal beta - alpha");
  }

  std::size_t species() const noexcept { return alpha_.cols(); }
  std::size_t reactions() const noexcept { return alpha_.rows(); }

  const IntMatrix& alpha() const noexcept { return alpha_; }
  const IntMatrix& beta() const noexcept { return beta_; }
  const std::vector<Rational>& k() const noexcept { return k_; }
  const std::vector<Rational>& kappa() const noexcept { return kappa_; }

  /// R x P, row j is omega_j = beta_j - alpha_j.
  const IntMatrix& omega() const noexcept { return omega_; }

  /// P x R matrix M = [omega_1 | ... | omega_R].
  IntMatrix stoichiometric_matrix() const { return omega_.transpose(); }

  friend bool operator==(const ReactionNetwork&, const ReactionNetwork&) = default;

private:
  void validate() const {
    if (alpha_.rows() == 0 || alpha_.cols() == 0) throw DomainError("network needs at least one species and reaction");
    if (beta_.rows() != alpha_.rows() || beta_.cols() != alpha_.cols())
      throw DomainError("alpha and beta must have the same shape");
    if (k_.size() != reactions() || kappa_.size() != reactions())
      throw DomainError("k and kappa need one entry per reaction");
    for (std::size_t j = 0; j < reactions(); ++j) {
      for (std::size_t i = 0; i < species(); ++i)
        if (alpha_(j, i) < 0 || beta_(j, i) < 0) throw DomainError("stoichiometric coefficients must be nonnegative");
      if (k_[j] <= 0) throw DomainError("rate constants must be positive");
      if (kappa_[j] < 0) throw DomainError("equilibrium constants must be nonnegative");
    }
  }

  IntMatrix alpha_;
  IntMatrix beta_;
  std::vector<Rational> k_;
  std::vector<Rational> kappa_;
  IntMatrix omega_;
};

// ---------------------------------------------------------------------------
// Exact linear algebra

/// Rank by fraction-free (Bareiss) elimination over the integers.
inline std::size_t integer_rank(const IntMatrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  Matrix<BigInt> a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a(i, j) = m(i, j);

  BigInt previous_pivot = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t p = rank;
    while (p < rows && a(p, c) == 0) ++p;
    if (p == rows) continue;
    if (p != rank)
      for (std::size_t j = 0; j < cols; ++j) std::swap(a(p, j), a(rank, j));
    for (std::size_t i = rank + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        BigInt v = a(rank, c) * a(i, j) - a(i, c) * a(rank, j);
        a(i, j) = v / previous_pivot;  // exact by Sylvester's identity
      }
      a(i, c) = 0;
    }
    previous_pivot = a(rank, c);
    ++rank;
  }
  return rank;
}

namespace detail {

/// Two-phase tableau simplex with Bland's rule over exact rationals:
/// minimize cost . x subject to A x = b, x >= 0. Returns nullopt when
/// infeasible. Callers guarantee a bounded objective.
class ExactSimplex {
public:
  static std::optional<std::vector<Rational>> minimize(const RationalMatrix& a, std::vector<Rational> b,
                                                      const std::vector<Rational>& cost) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    ExactSimplex s;
    s.n_ = n;
    s.tab_ = RationalMatrix(m, n + m + 1, Rational(0));
    for (std::size_t i = 0; i < m; ++i) {
      const Rational sign = b[i] < 0 ? Rational(-1) : Rational(1);
      for (std::size_t j = 0; j < n; ++j) s.tab_(i, j) = sign * a(i, j);
      s.tab_(i, n + i) = 1;
      s.tab_(i, n + m) = sign * b[i];
    }
    s.basis_.resize(m);
    std::iota(s.basis_.begin(), s.basis_.end(), n);

    // Phase 1: minimize the sum of artificials.
    std::vector<Rational> phase1(n + m, Rational(0));
    for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1;
    s.optimize(phase1, n + m);
    Rational infeasibility = 0;
    for (std::size_t i = 0; i < s.basis_.size(); ++i)
      if (s.basis_[i] >= n) infeasibility += s.rhs(i);
    if (infeasibility != 0) return std::nullopt;
    s.drive_out_artificials();

    std::vector<Rational> phase2(n + m, Rational(0));
    std::copy(cost.begin(), cost.end(), phase2.begin());
    s.optimize(phase2, n);

    std::vector<Rational> x(n, Rational(0));
    for (std::size_t i = 0; i < s.basis_.size(); ++i)
      if (s.basis_[i] < n) x[s.basis_[i]] = s.rhs(i);
    return x;
  }

private:
  const Rational& rhs(std::size_t i) const { return tab_(i, tab_.cols() - 1); }

  void pivot(std::size_t row, std::size_t col) {
    const Rational p = tab_(row, col);
    for (std::size_t j = 0; j < tab_.cols(); ++j) tab_(row, j) /= p;
    for (std::size_t i = 0; i < tab_.rows(); ++i) {
      if (i == row || tab_(i, col) == 0) continue;
      const Rational f = tab_(i, col);
      for (std::size_t j = 0; j < tab_.cols(); ++j) tab_(i, j) -= f * tab_(row, j);
    }
    basis_[row] = col;
  }

  // Columns >= allowed never enter the basis.
  void optimize(const std::vector<Rational>& cost, std::size_t allowed) {
    for (;;) {
      std::optional<std::size_t> entering;
      for (std::size_t j = 0; j < allowed && !entering; ++j) {
        Rational reduced = cost[j];
        for (std::size_t i = 0; i < basis_.size(); ++i) reduced -= cost[basis_[i]] * tab_(i, j);
        if (reduced < 0) entering = j;
      }
      if (!entering) return;
      std::optional<std::size_t> leaving;
      Rational best_ratio;
      for (std::size_t i = 0; i < basis_.size(); ++i) {
        if (tab_(i, *entering) <= 0) continue;
        Rational ratio = rhs(i) / tab_(i, *entering);
        if (!leaving || ratio < best_ratio || (ratio == best_ratio && basis_[i] < basis_[*leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
      if (!leaving) throw std::logic_error("exact simplex: unbounded objective");
      pivot(*leaving, *entering);
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < basis_.size();) {
      if (basis_[i] < n_) {
        ++i;
        continue;
      }
      std::optional<std::size_t> col;
      for (std::size_t j = 0; j < n_ && !col; ++j)
        if (tab_(i, j) != 0) col = j;
      if (col) {
        pivot(i, *col);
        ++i;
      } else {
        // Redundant equality: drop the row.
        RationalMatrix reduced(tab_.rows() - 1, tab_.cols());
        for (std::size_t r = 0, out = 0; r < tab_.rows(); ++r) {
          if (r == i) continue;
          for (std::size_t c = 0; c < tab_.cols(); ++c) reduced(out, c) = tab_(r, c);
          ++out;
        }
        tab_ = std::move(reduced);
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
  }

  std::size_t n_ = 0;
  RationalMatrix tab_;
  std::vector<std::size_t> basis_;
};

inline std::vector<std::size_t> identity_permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Structural hypotheses

/// Reaction vectors omega_1..omega_R are linearly independent.
inline bool check_a1(const ReactionNetwork& net) {
  return integer_rank(net.stoichiometric_matrix()) == net.reactions();
}

/// Every reaction has a single product with coefficient one.
inline bool check_a4(const ReactionNetwork& net) {
  for (std::size_t j = 0; j < net.reactions(); ++j) {
    int ones = 0;
    for (std::size_t i = 0; i < net.species(); ++i) {
      const auto v = net.beta()(j, i);
      if (v == 1) ++ones;
      else if (v != 0) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

/// Finds e >= 1 with M^T e = 0, minimizing sum(e) by exact simplex.
/// Throws NoConservationVector when no such e exists.
inline std::vector<Rational> find_conservation_vector(const ReactionNetwork& net) {
  const std::size_t p = net.species();
  const std::size_t r = net.reactions();
  // Substitute e = 1 + y, y >= 0:  M^T y = -M^T 1.
  RationalMatrix a(r, p);
  std::vector<Rational> rhs(r, Rational(0));
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < p; ++i) {
      a(j, i) = net.omega()(j, i);
      rhs[j] -= net.omega()(j, i);
    }
  const auto y = detail::ExactSimplex::minimize(a, rhs, std::vector<Rational>(p, Rational(1)));
  if (!y) throw NoConservationVector();
  std::vector<Rational> e(p);
  for (std::size_t i = 0; i < p; ++i) e[i] = Rational(1) + (*y)[i];
  return e;
}

/// Permutations bringing M into the lower block-staircase form.
/// row_perm[i] is the original row placed at
/// position i; likewise for col_perm. block_sizes[m] is the number of
/// columns in which pivot row m is strictly negative.
struct TriangularForm {
  std::vector<std::size_t> row_perm;
  std::vector<std::size_t> col_perm;
  std::vector<std::size_t> block_sizes;

  friend bool operator==(const TriangularForm&, const TriangularForm&) = default;
};

/// Inductive reordering: repeatedly pick the lowest-index row that is nonzero
/// and nonpositive on the remaining columns, move it up, and move its
/// strictly negative columns left in their original relative order.
inline TriangularForm triangularize(const IntMatrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  for (std::size_t j = 0; j < cols; ++j) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < rows; ++i) positives += m(i, j) > 0;
    if (positives != 1)
      throw StructureViolation("column " + std::to_string(j) + " must have exactly one positive entry");
  }

  std::vector<bool> row_used(rows, false);
  std::vector<bool> col_used(cols, false);
  std::size_t cols_left = cols;
  TriangularForm form;

  while (cols_left > 0) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < rows && !pick; ++i) {
      if (row_used[i]) continue;
      bool any_negative = false;
      bool any_positive = false;
      for (std::size_t j = 0; j < cols; ++j) {
        if (col_used[j]) continue;
        any_negative |= m(i, j) < 0;
        any_positive |= m(i, j) > 0;
      }
      if (any_negative && !any_positive) pick = i;
    }
    if (!pick)
      throw StructureViolation("no nonzero nonpositive row left after " + std::to_string(form.block_sizes.size()) +
                               " blocks");
    row_used[*pick] = true;
    form.row_perm.push_back(*pick);
    std::size_t block = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (col_used[j] || m(*pick, j) >= 0) continue;
      col_used[j] = true;
      form.col_perm.push_back(j);
      ++block;
      --cols_left;
    }
    form.block_sizes.push_back(block);
  }
  for (std::size_t i = 0; i < rows; ++i)
    if (!row_used[i]) form.row_perm.push_back(i);
  return form;
}

/// Applies a row and column permutation: out(i, j) = m(row_perm[i], col_perm[j]).
template <class T>
Matrix<T> permute(const Matrix<T>& m, std::span<const std::size_t> row_perm, std::span<const std::size_t> col_perm) {
  Matrix<T> out(row_perm.size(), col_perm.size());
  for (std::size_t i = 0; i < row_perm.size(); ++i)
    for (std::size_t j = 0; j < col_perm.size(); ++j) out(i, j) = m(row_perm[i], col_perm[j]);
  return out;
}

/// Builds Q = Q_1 ... Q_k with unit diagonal so that Q * permuted_m <= 0.
///
/// Blocks are processed last to first; block m adds to each lower row the
/// smallest multiple of pivot row m that cancels its positive entries in the
/// block's columns.
inline RationalMatrix build_Q(const RationalMatrix& permuted_m, std::span<const std::size_t> block_sizes) {
  const std::size_t p = permuted_m.rows();
  RationalMatrix current = permuted_m;
  RationalMatrix q = RationalMatrix::identity(p);

  std::vector<std::size_t> block_start(block_sizes.size() + 1, 0);
  for (std::size_t b = 0; b < block_sizes.size(); ++b) block_start[b + 1] = block_start[b] + block_sizes[b];
  if (block_sizes.size() > p || block_start.back() != permuted_m.cols())
    throw StructureViolation("block sizes do not match the matrix shape");

  for (std::size_t b = block_sizes.size(); b-- > 0;) {
    const std::size_t pivot_row = b;
    for (std::size_t i = pivot_row + 1; i < p; ++i) {
      Rational factor = 0;
      for (std::size_t j = block_start[b]; j < block_start[b + 1]; ++j) {
        if (current(i, j) <= 0) continue;
        const Rational& pivot = current(pivot_row, j);
        if (pivot >= 0)
          throw StructureViolation("pivot (" + std::to_string(pivot_row) + "," + std::to_string(j) +
                                   ") cannot cancel a positive entry");
        factor = std::max(factor, Rational(current(i, j) / -pivot));
      }
      if (factor == 0) continue;
      for (std::size_t j = 0; j < current.cols(); ++j) current(i, j) += factor * current(pivot_row, j);
      for (std::size_t j = 0; j < p; ++j) q(i, j) += factor * q(pivot_row, j);
    }
  }
  return q;
}

struct PositiveCombination {
  std::vector<Rational> q;
  Rational b0;
  Rational eps;
};

/// q_j = sum_{i>=j} eps^i Q_ij and b0 = sum_i eps^i b_i (0-based i), with eps
/// halved from 1 until every q_j is positive.
inline PositiveCombination compute_q(const RationalMatrix& Q, std::span<const Rational> b) {
  const std::size_t p = Q.rows();
  for (std::size_t i = 0; i < p; ++i) {
    if (Q(i, i) <= 0) throw StructureViolation("Q needs a strictly positive diagonal");
    for (std::size_t j = i + 1; j < p; ++j)
      if (Q(i, j) != 0) throw StructureViolation("Q must be lower triangular");
  }
  Rational eps = 1;
  for (;;) {
    std::vector<Rational> q(p, Rational(0));
    Rational weight = 1;
    Rational b0 = 0;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j <= i; ++j) q[j] += weight * Q(i, j);
      b0 += weight * b[i];
      weight *= eps;
    }
    if (std::all_of(q.begin(), q.end(), [](const Rational& v) { return v > 0; }))
      return {std::move(q), std::move(b0), eps};
    eps /= 2;
  }
}

/// b_i = sum_j |(Q M)_ij| k_j kappa_j in permuted coordinates.
inline std::vector<Rational> derive_b(const ReactionNetwork& net, const RationalMatrix& Q, const TriangularForm& form) {
  const RationalMatrix mp = permute(net.stoichiometric_matrix().cast<Rational>(), form.row_perm, form.col_perm);
  const RationalMatrix qm = Q * mp;
  std::vector<Rational> b(net.species(), Rational(0));
  for (std::size_t i = 0; i < qm.rows(); ++i)
    for (std::size_t j = 0; j < qm.cols(); ++j) {
      const std::size_t reaction = form.col_perm[j];
      b[i] += abs(qm(i, j)) * net.k()[reaction] * net.kappa()[reaction];
    }
  return b;
}

/// Machine-checkable witness of the triangular structure of a network.
///
/// Q, q and b live in the permuted species order (position i is species
/// row_perm[i]); e is indexed by the original species.
struct TriangularCertificate {
  std::vector<std::size_t> row_perm;
  std::vector<std::size_t> col_perm;
  std::vector<std::size_t> block_sizes;
  RationalMatrix Q;
  std::vector<Rational> e;
  std::vector<Rational> q;
  std::vector<Rational> b;
  Rational b0;
  Rational eps;

  /// q_i reindexed by original species.
  std::vector<Rational> q_by_species() const {
    std::vector<Rational> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[row_perm[i]] = q[i];
    return out;
  }

  /// Q * (permuted v) for a vector indexed by original species.
  template <class T>
  std::vector<T> apply_Q(std::span<const T> by_species) const {
    std::vector<T> out(Q.rows(), T(0));
    for (std::size_t i = 0; i < Q.rows(); ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        if (Q(i, j) == 0) continue;
        if constexpr (std::is_same_v<T, Rational>) out[i] += Q(i, j) * by_species[row_perm[j]];
        else out[i] += to_double(Q(i, j)) * by_species[row_perm[j]];
      }
    return out;
  }

  friend bool operator==(const TriangularCertificate&, const TriangularCertificate&) = default;
};

/// Checks reaction independence, single products, conservation, and assembles the full certificate.
inline TriangularCertificate certify(const ReactionNetwork& net) {
  if (!check_a1(net)) throw StructureViolation("reaction vectors are linearly dependent");
  if (!check_a4(net)) throw StructureViolation("a reaction has more than one product");
  TriangularCertificate cert;
  cert.e = find_conservation_vector(net);
  const IntMatrix m = net.stoichiometric_matrix();
  TriangularForm form = triangularize(m);
  const RationalMatrix mp = permute(m.cast<Rational>(), form.row_perm, form.col_perm);
  cert.Q = build_Q(mp, form.block_sizes);
  cert.b = derive_b(net, cert.Q, form);
  auto combo = compute_q(cert.Q, cert.b);
  cert.q = std::move(combo.q);
  cert.b0 = std::move(combo.b0);
  cert.eps = std::move(combo.eps);
  cert.row_perm = std::move(form.row_perm);
  cert.col_perm = std::move(form.col_perm);
  cert.block_sizes = std::move(form.block_sizes);
  return cert;
}

/// Exact re-verification of every certificate invariant. Returns the list of
/// failed checks; empty means valid.
inline std::vector<std::string> verify_certificate(const ReactionNetwork& net, const TriangularCertificate& cert) {
  std::vector<std::string> failures;
  const std::size_t p = net.species();
  const RationalMatrix mp = permute(net.stoichiometric_matrix().cast<Rational>(), cert.row_perm, cert.col_perm);
  if (cert.Q.rows() != p || cert.Q.cols() != p) {
    failures.emplace_back("Q has wrong shape");
    return failures;
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (cert.Q(i, i) <= 0) failures.emplace_back("diag(Q) not positive at " + std::to_string(i));
    for (std::size_t j = i + 1; j < p; ++j)
      if (cert.Q(i, j) != 0) failures.emplace_back("Q not lower triangular at (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  const RationalMatrix qm = cert.Q * mp;
  for (std::size_t i = 0; i < qm.rows(); ++i)
    for (std::size_t j = 0; j < qm.cols(); ++j)
      if (qm(i, j) > 0) failures.emplace_back("QM positive at (" + std::to_string(i) + "," + std::to_string(j) + ")");
  for (std::size_t i = 0; i < p; ++i)
    if (cert.e[i] <= 0) failures.emplace_back("e not positive");
  for (std::size_t j = 0; j < net.reactions(); ++j) {
    Rational dot = 0;
    for (std::size_t i = 0; i < p; ++i) dot += cert.e[i] * net.omega()(j, i);
    if (dot != 0) failures.emplace_back("<e, omega_" + std::to_string(j) + "> != 0");
  }
  for (const auto& v : cert.q)
    if (v <= 0) failures.emplace_back("q not positive");
  for (const auto& v : cert.b)
    if (v < 0) failures.emplace_back("b negative");
  if (cert.b0 < 0) failures.emplace_back("b0 negative");
  Rational weight = 1;
  std::vector<Rational> q(p, Rational(0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) q[j] += weight * cert.Q(i, j);
    weight *= cert.eps;
  }
  if (q != cert.q) failures.emplace_back("q is not the eps-weighted row combination of Q");
  return failures;
}

// ---------------------------------------------------------------------------
// Kinetics

namespace detail {

template <class T>
T monomial(std::span<const T> c, std::span<const std::int64_t> exponents) {
  T value(1);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::int64_t n = 0; n < exponents[i]; ++n) value *= c[i];  // 0^0 = 1
  return value;
}

template <class T>
T as_scalar(const Rational& r) {
  if constexpr (std::is_same_v<T, Rational>) return r;
  else return static_cast<T>(to_double(r));
}

} // namespace detail

/// r_j(c) = c^alpha_j - kappa_j c^beta_j.
template <class T>
std::vector<T> rates(const ReactionNetwork& net, std::span<const T> c) {
  if (c.size() != net.species()) throw DomainError("state has wrong number of species");
  for (const auto& v : c)
    if (v < 0) throw DomainError("concentrations must be nonnegative");
  std::vector<T> r(net.reactions());
  for (std::size_t j = 0; j < net.reactions(); ++j)
    r[j] = detail::monomial<T>(c, net.alpha().row(j)) -
           detail::as_scalar<T>(net.kappa()[j]) * detail::monomial<T>(c, net.beta().row(j));
  return r;
}

/// F(c) = M diag(k) r(c).
template <class T>
std::vector<T> production(const ReactionNetwork& net, std::span<const T> c) {
  const auto r = rates<T>(net, c);
  std::vector<T> f(net.species(), T(0));
  for (std::size_t j = 0; j < net.reactions(); ++j) {
    const T flux = detail::as_scalar<T>(net.k()[j]) * r[j];
    for (std::size_t i = 0; i < net.species(); ++i)
      if (net.omega()(j, i) != 0) f[i] += T(net.omega()(j, i)) * flux;
  }
  return f;
}

template <class T>
std::vector<T> rates(const ReactionNetwork& net, const std::vector<T>& c) {
  return rates<T>(net, std::span<const T>(c));
}
template <class T>
std::vector<T> production(const ReactionNetwork& net, const std::vector<T>& c) {
  return production<T>(net, std::span<const T>(c));
}

/// Worst margins of the sampled linear upper bounds implied by a certificate:
/// (Q F)(c) <= (1 + sum c) b and sum_i q_i F_i(c) <= (1 + sum c) b0.
struct BoundProbeReport {
  std::size_t samples = 0;
  double worst_triangular_margin = 0;  // min over samples/rows of rhs - lhs
  double worst_combination_margin = 0;
};

inline BoundProbeReport certificate_bound_probe(const ReactionNetwork& net, const TriangularCertificate& cert,
                                                std::size_t samples, std::uint64_t seed, double upper = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, upper);
  const std::size_t p = net.species();
  std::vector<double> b(p);
  for (std::size_t i = 0; i < p; ++i) b[i] = to_double(cert.b[i]);
  const auto q = cert.q_by_species();
  const double b0 = to_double(cert.b0);

  BoundProbeReport report;
  report.samples = samples;
  report.worst_triangular_margin = std::numeric_limits<double>::infinity();
  report.worst_combination_margin = std::numeric_limits<double>::infinity();
  std::vector<double> c(p);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : c) v = dist(rng);
    const double total = 1.0 + std::accumulate(c.begin(), c.end(), 0.0);
    const auto f = production<double>(net, c);
    const auto qf = cert.apply_Q<double>(f);
    for (std::size_t i = 0; i < p; ++i)
      report.worst_triangular_margin = std::min(report.worst_triangular_margin, total * b[i] - qf[i]);
    double combo = 0;
    for (std::size_t i = 0; i < p; ++i) combo += to_double(q[i]) * f[i];
    report.worst_combination_margin = std::min(report.worst_combination_margin, total * b0 - combo);
  }
  return report;
}

} // namespace rdalab
