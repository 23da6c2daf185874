#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

#include "sft/errors.hpp"

namespace sft {

using Rational = mpq_class;

inline Rational make_rational(long p, long q = 1) {
  if (q == 0) throw InvalidInput("zero denominator");
  Rational r(p, q);
  r.canonicalize();
  return r;
}

// Accepts "p", "p/q", optionally signed; rejects anything else.
inline Rational parse_rational(std::string_view s) {
  auto digits = [](std::string_view t) {
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) t.remove_prefix(1);
    if (t.empty()) return false;
    for (char c : t)
      if (c < '0' || c > '9') return false;
    return true;
  };
  auto slash = s.find('/');
  std::string_view num = s.substr(0, slash);
  std::string_view den = slash == std::string_view::npos ? std::string_view("1") : s.substr(slash + 1);
  if (!digits(num) || !digits(den) || den[0] == '-' || den[0] == '+')
    throw InvalidInput("not a rational: '" + std::string(s) + "'");
  std::string n(num[0] == '+' ? num.substr(1) : num);
  mpz_class zn(n, 10), zd(std::string(den), 10);
  if (zd == 0) throw InvalidInput("zero denominator in '" + std::string(s) + "'");
  Rational r(zn, zd);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline int sign_of(const Rational& r) { return sgn(r); }

}  // namespace sft
