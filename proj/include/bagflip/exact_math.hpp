#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace bagflip {

/// Arbitrary-precision integer.
using BigInt = mpz_class;

/// Exact fraction. GMP keeps every arithmetic result in canonical form
/// (positive denominator, gcd(|num|, den) = 1); values built from a raw
/// numerator/denominator pair must go through make_rational().
using Rational = mpq_class;

/// Builds num/den in canonical form. Throws std::invalid_argument when den == 0.
Rational make_rational(const BigInt& num, const BigInt& den);

/// Parses "4/5", "-3/7", "0.9", "1e-3", "2.5E+2" or "7" exactly.
/// Decimal and scientific inputs are converted without rounding.
Rational parse_rational(std::string_view text);

Rational pow(const Rational& base, unsigned long exponent);

/// C(n, c); zero when c > n.
BigInt binomial(unsigned long n, unsigned long c);

/// C(k,c) p^c (1-p)^(k-c). Rejects p outside [0, 1].
Rational binom_pmf(unsigned long c, unsigned long k, const Rational& p);

/// Decimal rendering with `significant` significant digits, rounded half
/// away from zero. Values with a decimal exponent outside [-5, significant)
/// use scientific notation ("1.23e-05").
std::string to_decimal(const Rational& q, int significant = 12);

/// Fixed-point rendering with exactly `places` decimals, rounded half away
/// from zero ("12.5000").
std::string to_fixed(const Rational& q, int places);

/// "num/den", or "num" when the denominator is 1.
std::string to_exact(const Rational& q);

inline bool is_probability(const Rational& q) { return q >= 0 && q <= 1; }

}  // namespace bagflip
