#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <string>

#include "bicforge/errors.hpp"

namespace bicforge {

// Exact rational scalar. All instance data is stored exactly; numeric
// pipelines pick `Rat` or `double` through ScalarTraits.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  Rat q(num, den);
  q.canonicalize();
  return q;
}

// Exact conversion: every finite double is a binary rational.
inline Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("non-finite value");
  return Rat(x);
}

inline double to_double(const Rat& q) { return q.get_d(); }
inline double to_double(double x) { return x; }

// Parses "3/4", "-2", "0.125" (exact decimal) into a rational.
inline Rat rat_parse(const std::string& text) {
  if (text.empty()) throw ParseError("empty rational literal");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rat q;
    if (q.set_str(text, 10) != 0) throw ParseError("bad rational: " + text);
    if (q.get_den() == 0) throw ParseError("zero denominator: " + text);
    q.canonicalize();
    return q;
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) {
    Rat q;
    if (q.set_str(text, 10) != 0) throw ParseError("bad integer: " + text);
    return q;
  }
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  std::size_t frac_len = text.size() - dot - 1;
  bool neg = !digits.empty() && digits[0] == '-';
  if (neg) digits = digits.substr(1);
  if (digits.empty()) throw ParseError("bad decimal: " + text);
  for (char c : digits)
    if (c < '0' || c > '9') throw ParseError("bad decimal: " + text);
  Rat num(digits, 10);
  Rat den(1);
  for (std::size_t k = 0; k < frac_len; ++k) den *= 10;
  Rat q = num / den;
  if (neg) q = -q;
  q.canonicalize();
  return q;
}

inline std::string rat_to_string(const Rat& q) { return q.get_str(); }

// Scalar policy for the templated numeric pipelines. Exact scalars compare
// with zero tolerance; floating pipelines use the library-wide 1e-9.
template <typename T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static double tolerance() { return 1e-9; }
  static double zero() { return 0.0; }
  static double from_rat(const Rat& q) { return q.get_d(); }
};

template <>
struct ScalarTraits<Rat> {
  static constexpr bool exact = true;
  static Rat tolerance() { return Rat(0); }
  static Rat zero() { return Rat(0); }
  static Rat from_rat(const Rat& q) { return q; }
};

template <typename T>
inline T abs_value(const T& x) {
  return x < T(0) ? T(-x) : x;
}

}  // namespace bicforge
