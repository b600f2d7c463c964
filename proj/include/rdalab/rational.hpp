#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

#include "rdalab/errors.hpp"

namespace rdalab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace detail {

// cpp_int's string constructor reads a leading 0 as octal, so digits go through here.
inline BigInt parse_decimal_integer(std::string_view s) {
  bool negative = false;
  std::size_t pos = 0;
  if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) negative = s[pos++] == '-';
  if (pos == s.size()) throw ConfigError("missing digits in '" + std::string(s) + "'");
  BigInt value = 0;
  for (; pos < s.size(); ++pos) {
    const char c = s[pos];
    if (c < '0' || c > '9') throw ConfigError("bad digit in '" + std::string(s) + "'");
    value = value * 10 + (c - '0');
  }
  return negative ? BigInt(-value) : value;
}

} // namespace detail

/// Parses "3", "-7/2" or a plain decimal such as "0.25" into an exact fraction.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto trim = [](std::string& v) {
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t");
    v = b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
  };
  trim(s);
  if (s.empty()) throw ConfigError("empty rational literal");
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const BigInt num = detail::parse_decimal_integer(std::string_view(s).substr(0, slash));
    const BigInt den = detail::parse_decimal_integer(std::string_view(s).substr(slash + 1));
    if (den == 0) throw ConfigError("zero denominator in '" + s + "'");
    return Rational(num, den);
  }
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    const BigInt num = detail::parse_decimal_integer(digits);
    const BigInt den = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(s.size() - dot - 1));
    return Rational(num, den);
  }
  return Rational(detail::parse_decimal_integer(s));
}

/// "p/q" in lowest terms, or "p" when the denominator is one.
inline std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

} // namespace rdalab
