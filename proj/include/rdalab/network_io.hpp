#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rdalab/keyvalue.hpp"
#include "rdalab/reaction_network.hpp"

namespace rdalab {

namespace detail {

inline IntMatrix parse_int_matrix(const std::string& text, std::size_t rows, std::size_t cols, const std::string& what) {
  const auto row_texts = split(text, ';');
  if (row_texts.size() != rows) throw ConfigError(what + ": expected " + std::to_string(rows) + " rows");
  IntMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto tokens = split_whitespace(row_texts[i]);
    if (tokens.size() != cols) throw ConfigError(what + ": expected " + std::to_string(cols) + " columns");
    for (std::size_t j = 0; j < cols; ++j) {
      const Rational v = parse_rational(tokens[j]);
      if (boost::multiprecision::denominator(v) != 1) throw ConfigError(what + ": entries must be integers");
      m(i, j) = boost::multiprecision::numerator(v).convert_to<std::int64_t>();
    }
  }
  return m;
}

inline std::vector<Rational> parse_rational_vector(const std::string& text, std::size_t n, const std::string& what) {
  const auto tokens = split_whitespace(text);
  if (tokens.size() != n) throw ConfigError(what + ": expected " + std::to_string(n) + " entries");
  std::vector<Rational> v;
  for (const auto& t : tokens) v.push_back(parse_rational(t));
  return v;
}

template <class T>
std::string join_matrix(const Matrix<T>& m) {
  std::ostringstream out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out << " ; ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      if constexpr (std::is_same_v<T, Rational>) out << to_string(m(i, j));
      else out << m(i, j);
    }
  }
  return out.str();
}

template <class T>
std::string join_vector(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    if constexpr (std::is_same_v<T, Rational>) out << to_string(v[i]);
    else out << v[i];
  }
  return out.str();
}

} // namespace detail

/// Reads a network from a key/value section:
///   species = 3
///   reactions = 1
///   alpha = 1 1 0          (rows separated by ';')
///   beta = 0 0 1
///   k = 1
///   kappa = 1/2
///   omega = -1 -1 1        (optional, checked against beta - alpha)
inline ReactionNetwork parse_network(const KeyValueDocument::Section& s) {
  const auto p = static_cast<std::size_t>(std::stoul(require(s, "species")));
  const auto r = static_cast<std::size_t>(std::stoul(require(s, "reactions")));
  IntMatrix alpha = detail::parse_int_matrix(require(s, "alpha"), r, p, "alpha");
  IntMatrix beta = detail::parse_int_matrix(require(s, "beta"), r, p, "beta");
  auto k = detail::parse_rational_vector(require(s, "k"), r, "k");
  auto kappa = detail::parse_rational_vector(require(s, "kappa"), r, "kappa");
  if (const auto it = s.find("omega"); it != s.end()) {
    const IntMatrix omega = detail::parse_int_matrix(it->second, r, p, "omega");
    return ReactionNetwork(std::move(alpha), std::move(beta), std::move(k), std::move(kappa), omega);
  }
  return ReactionNetwork(std::move(alpha), std::move(beta), std::move(k), std::move(kappa));
}

inline ReactionNetwork parse_network(std::string_view text) {
  return parse_network(KeyValueDocument::parse(text).section(""));
}

inline void write_network(std::ostream& out, const ReactionNetwork& net) {
  out << "species = " << net.species() << '\n'
      << "reactions = " << net.reactions() << '\n'
      << "alpha = " << detail::join_matrix(net.alpha()) << '\n'
      << "beta = " << detail::join_matrix(net.beta()) << '\n'
      << "k = " << detail::join_vector(net.k()) << '\n'
      << "kappa = " << detail::join_vector(net.kappa()) << '\n';
}

/// Certificate as exact fractions. Q, q and b are in permuted species order.
inline void write_certificate(std::ostream& out, const TriangularCertificate& cert) {
  out << "# triangular certificate (Q, q, b indexed by permuted species)\n"
      << "row_perm = " << detail::join_vector(cert.row_perm) << '\n'
      << "col_perm = " << detail::join_vector(cert.col_perm) << '\n'
      << "block_sizes = " << detail::join_vector(cert.block_sizes) << '\n'
      << "Q = " << detail::join_matrix(cert.Q) << '\n'
      << "e = " << detail::join_vector(cert.e) << '\n'
      << "q = " << detail::join_vector(cert.q) << '\n'
      << "b = " << detail::join_vector(cert.b) << '\n'
      << "b0 = " << to_string(cert.b0) << '\n'
      << "eps = " << to_string(cert.eps) << '\n';
}

inline TriangularCertificate parse_certificate(std::string_view text) {
  const auto doc = KeyValueDocument::parse(text);
  const auto& s = doc.section("");
  auto indices = [](const std::string& t) {
    std::vector<std::size_t> v;
    for (const auto& tok : split_whitespace(t)) v.push_back(static_cast<std::size_t>(std::stoul(tok)));
    return v;
  };
  TriangularCertificate cert;
  cert.row_perm = indices(require(s, "row_perm"));
  cert.col_perm = indices(require(s, "col_perm"));
  cert.block_sizes = indices(require(s, "block_sizes"));
  const std::size_t p = cert.row_perm.size();
  const auto rows = split(require(s, "Q"), ';');
  if (rows.size() != p) throw ConfigError("Q: expected " + std::to_string(p) + " rows");
  cert.Q = RationalMatrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    const auto row = detail::parse_rational_vector(rows[i], p, "Q");
    for (std::size_t j = 0; j < p; ++j) cert.Q(i, j) = row[j];
  }
  cert.e = detail::parse_rational_vector(require(s, "e"), p, "e");
  cert.q = detail::parse_rational_vector(require(s, "q"), p, "q");
  cert.b = detail::parse_rational_vector(require(s, "b"), p, "b");
  cert.b0 = parse_rational(require(s, "b0"));
  cert.eps = parse_rational(require(s, "eps"));
  return cert;
}

} // namespace rdalab
