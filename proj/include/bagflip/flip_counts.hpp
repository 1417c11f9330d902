#pragma once

#include "bagflip/exact_math.hpp"
#include "bagflip/noise_model.hpp"

#include <memory>
#include <vector>

namespace bagflip {

/// Rationals indexed by a signed integer over a contiguous range; reads
/// outside the range are zero.
class SignedSeries {
 public:
  SignedSeries() = default;
  SignedSeries(long first, std::vector<Rational> values);

  /// The series with a single 1 at index 0.
  static SignedSeries unit();

  long first() const { return first_; }
  long last() const { return first_ + static_cast<long>(values_.size()) - 1; }
  bool empty() const { return values_.empty(); }
  const std::vector<Rational>& values() const { return values_; }

  Rational at(long t) const;
  Rational sum() const;

  /// Drops leading and trailing zeros.
  SignedSeries trimmed() const;
  /// s(t) -> s(-t).
  SignedSeries reflected() const;

  /// (a * b)(t) = sum_j a(t - j) b(j), over the full support of both.
  friend SignedSeries convolve(const SignedSeries& a, const SignedSeries& b);
  friend bool operator==(const SignedSeries&, const SignedSeries&) = default;

 private:
  long first_ = 0;
  std::vector<Rational> values_;
};

/// Number of x' in {0..K}^dim with Hamming distance u from x and v from x~,
/// for any fixed x, x~ at distance s. Symmetric in (u, v); zero for
/// arguments outside [0, dim] or when s > dim.
BigInt count_flips(long u, long v, unsigned s, unsigned dim, unsigned categories);

/// All counts for one (s, dim, K).
class FlipCountTable {
 public:
  FlipCountTable(unsigned s, unsigned dim, unsigned categories);

  unsigned budget() const { return s_; }
  unsigned dim() const { return dim_; }
  unsigned categories() const { return categories_; }

  const BigInt& at(unsigned u, unsigned v) const { return entries_[u * (dim_ + 1) + v]; }

 private:
  unsigned s_, dim_, categories_;
  std::vector<BigInt> entries_;
};

/// Shared, immutable table; built once per (s, dim, K) per process.
std::shared_ptr<const FlipCountTable> flip_count_table(unsigned s, unsigned dim, unsigned categories);

/// T(0,t) = sum_u L(u, u - t; s, dim) gamma^u rho^(dim - u), t in [-dim, dim]:
/// distribution of (clean distance - attacked distance) for one noised
/// example whose clean and attacked versions differ in s of dim values.
SignedSeries base_layer(unsigned s, unsigned dim, const NoiseModel& noise);

/// G(t): feature+label variant, the base layer over dim + 1 dimensions.
SignedSeries label_layer(unsigned s, unsigned dim, const NoiseModel& noise);

/// Layer contributed by one selected perturbed training example.
SignedSeries example_layer(const Problem& problem, const PerturbationSpec& spec, const NoiseModel& noise);

/// Layer contributed by the test input: the base layer with the test budget
/// in backdoor mode, the unit series otherwise.
SignedSeries test_layer(const Problem& problem, const PerturbationSpec& spec, const NoiseModel& noise);

}  // namespace bagflip
