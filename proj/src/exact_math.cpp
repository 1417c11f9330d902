#include "bagflip/exact_math.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace bagflip {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

BigInt pow10(unsigned long e) {
  BigInt out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, e);
  return out;
}

[[noreturn]] void bad_number(std::string_view text) {
  throw std::invalid_argument("not a rational number: '" + std::string(text) + "'");
}

}  // namespace

Rational make_rational(const BigInt& num, const BigInt& den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) bad_number(text);

  const std::string_view original = text;
  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::string_view num = text.substr(0, slash);
    std::string_view den = text.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) bad_number(original);
    BigInt d{std::string(den), 10};
    if (d == 0) throw std::invalid_argument("rational with zero denominator: '" + std::string(original) + "'");
    Rational q = make_rational(BigInt(std::string(num), 10), d);
    return negative ? Rational(-q) : q;
  }

  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
      exp_negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    if (!all_digits(exp_text) || exp_text.size() > 6) bad_number(original);
    exponent = std::stol(std::string(exp_text));
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }

  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
        (whole.empty() && frac.empty())) {
      bad_number(original);
    }
    digits = std::string(whole) + std::string(frac);
    exponent -= static_cast<long>(frac.size());
  } else {
    if (!all_digits(text)) bad_number(original);
    digits = std::string(text);
  }

  BigInt num(digits, 10);
  if (negative) num = -num;
  if (exponent >= 0) return Rational(num * pow10(static_cast<unsigned long>(exponent)));
  return make_rational(num, pow10(static_cast<unsigned long>(-exponent)));
}

Rational pow(const Rational& base, unsigned long exponent) {
  BigInt num, den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), exponent);
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), exponent);
  // Powers of coprime integers stay coprime, so the result is canonical.
  Rational out;
  mpz_swap(out.get_num_mpz_t(), num.get_mpz_t());
  mpz_swap(out.get_den_mpz_t(), den.get_mpz_t());
  return out;
}

BigInt binomial(unsigned long n, unsigned long c) {
  if (c > n) return 0;
  BigInt out;
  mpz_bin_uiui(out.get_mpz_t(), n, c);
  return out;
}

Rational binom_pmf(unsigned long c, unsigned long k, const Rational& p) {
  if (!is_probability(p)) throw std::invalid_argument("binomial success probability outside [0, 1]");
  if (c > k) return 0;
  return Rational(binomial(k, c)) * pow(p, c) * pow(Rational(1 - p), k - c);
}

std::string to_exact(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string to_fixed(const Rational& q, int places) {
  if (places < 0) throw std::invalid_argument("decimal places must be nonnegative");
  const Rational scaled = abs(q) * pow10(static_cast<unsigned long>(places));
  BigInt twice = scaled.get_num() * 2 + scaled.get_den();
  BigInt rounded;
  mpz_fdiv_q(rounded.get_mpz_t(), twice.get_mpz_t(), BigInt(scaled.get_den() * 2).get_mpz_t());
  std::string digits = rounded.get_str();
  if (digits.size() <= static_cast<std::size_t>(places)) {
    digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
  }
  std::string out = (q < 0 && rounded != 0) ? "-" : "";
  out += digits.substr(0, digits.size() - static_cast<std::size_t>(places));
  if (places > 0) out += "." + digits.substr(digits.size() - static_cast<std::size_t>(places));
  return out;
}

std::string to_decimal(const Rational& q, int significant) {
  if (significant < 1) throw std::invalid_argument("significant digits must be positive");
  if (q == 0) return "0";

  const bool negative = q < 0;
  const Rational mag = abs(q);

  // Decimal exponent e with 10^e <= mag < 10^(e+1).
  long e = static_cast<long>(mpz_sizeinbase(mag.get_num_mpz_t(), 10)) -
           static_cast<long>(mpz_sizeinbase(mag.get_den_mpz_t(), 10));
  auto scaled_by = [&](long power) {
    return power >= 0 ? Rational(mag * pow10(static_cast<unsigned long>(power)))
                      : Rational(mag / pow10(static_cast<unsigned long>(-power)));
  };
  while (scaled_by(-e) >= 10) ++e;
  while (scaled_by(-e) < 1) --e;

  // Round mag * 10^(significant-1-e) to an integer.
  Rational scaled = scaled_by(significant - 1 - e);
  BigInt twice = (scaled.get_num() * 2 + scaled.get_den());
  BigInt rounded;
  mpz_fdiv_q(rounded.get_mpz_t(), twice.get_mpz_t(), BigInt(scaled.get_den() * 2).get_mpz_t());
  std::string mantissa = rounded.get_str();
  if (static_cast<int>(mantissa.size()) > significant) {  // rounded up to the next power of ten
    ++e;
    mantissa.pop_back();
  }

  std::string out = negative ? "-" : "";
  if (e >= -4 && e < significant) {
    std::string body;
    if (e >= 0) {
      body = mantissa.substr(0, static_cast<std::size_t>(e + 1));
      std::string frac = mantissa.substr(static_cast<std::size_t>(e + 1));
      while (!frac.empty() && frac.back() == '0') frac.pop_back();
      if (!frac.empty()) body += "." + frac;
    } else {
      std::string frac = std::string(static_cast<std::size_t>(-e - 1), '0') + mantissa;
      while (!frac.empty() && frac.back() == '0') frac.pop_back();
      body = "0." + frac;
    }
    return out + body;
  }

  std::string frac = mantissa.substr(1);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  char exp_buf[32];
  std::snprintf(exp_buf, sizeof exp_buf, "e%c%02ld", e < 0 ? '-' : '+', e < 0 ? -e : e);
  out += mantissa.substr(0, 1);
  if (!frac.empty()) out += "." + frac;
  return out + exp_buf;
}

}  // namespace bagflip
