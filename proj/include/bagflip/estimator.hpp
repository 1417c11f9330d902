#pragma once

#include "bagflip/exact_math.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bagflip {

inline constexpr unsigned kDefaultPrecisionBits = 60;

/// Label-count divisor applied to the per-input level inside the Beta
/// quantile: 1 for binary problems, |C| otherwise.
unsigned label_divisor(unsigned classes);

/// Lower end of the one-sided Clopper-Pearson interval: the
/// (level / divisor)-quantile of Beta(successes, N - successes + 1),
/// rounded down to a dyadic rational with `precision_bits` bits.
/// Returns 0 when successes == 0.
Rational clopper_pearson_lower(unsigned long successes, unsigned long trials, const Rational& level,
                               unsigned classes, unsigned precision_bits = kDefaultPrecisionBits);

/// Upper end: the (1 - level / divisor)-quantile of
/// Beta(successes + 1, N - successes), rounded up. Returns 1 when successes == N.
Rational clopper_pearson_upper(unsigned long successes, unsigned long trials, const Rational& level,
                               unsigned classes, unsigned precision_bits = kDefaultPrecisionBits);

/// alpha / m.
Rational bonferroni_level(const Rational& alpha, unsigned long m);

struct PredictionCounts {
  std::string test_id;
  long true_label = 0;
  unsigned long trials = 0;  // N; abstaining models count here but under no label
  std::vector<unsigned long> counts;
};

struct EstimatedProbs {
  Rational p_star;
  Rational p_prime;
  unsigned y_star = 0;
  unsigned y_prime = 0;
  Rational alpha;
  unsigned long m = 1;
};

/// Top label (ties to the lowest index) and runner-up among the others.
std::pair<unsigned, unsigned> top_two(const std::vector<unsigned long>& counts);

/// p* from the lower bound at level alpha/m, p' from the upper bound, then
/// p' <- min(p', 1 - p*).
EstimatedProbs estimate(const PredictionCounts& counts, const Rational& alpha, unsigned long m,
                        unsigned precision_bits = kDefaultPrecisionBits);

/// Throws std::invalid_argument on inconsistent counts (fewer than two
/// labels, or labels summing above N).
void validate(const PredictionCounts& counts);

/// Counts CSV: `test_id,true_label,N,count_0,...,count_{C-1}`.
std::vector<PredictionCounts> read_counts_csv(std::istream& in);
void write_counts_csv(std::ostream& out, const std::vector<PredictionCounts>& rows);

}  // namespace bagflip
