#include "bagflip/estimator.hpp"

#include "bagflip/csv.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace bagflip {

namespace {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<50>,
                                           boost::multiprecision::et_off>;

Real to_real(const Rational& q) {
  Real out;
  mpfr_set_q(out.backend().data(), q.get_mpq_t(), MPFR_RNDN);
  return out;
}

/// I_x(a, b) for integer a, b >= 1 as a binomial upper tail:
/// sum_{j=a}^{a+b-1} C(a+b-1, j) x^j (1-x)^(a+b-1-j).
Rational exact_ibeta(unsigned long a, unsigned long b, const Rational& x) {
  const unsigned long n = a + b - 1;
  const Rational y = 1 - x;
  Rational total = 0;
  for (unsigned long j = a; j <= n; ++j) total += Rational(binomial(n, j)) * pow(x, j) * pow(y, n - j);
  return total;
}

/// Sign of I_x(a, b) - target.
int compare_ibeta(unsigned long a, unsigned long b, const Rational& x, const Rational& target) {
  const Real value = boost::math::ibeta(Real(a), Real(b), to_real(x));
  const Real goal = to_real(target);
  const Real margin = Real("1e-30") * std::max(abs(value), abs(goal));
  if (value - goal > margin) return 1;
  if (goal - value > margin) return -1;
  const int exact = cmp(exact_ibeta(a, b, x), target);
  return exact > 0 ? 1 : (exact < 0 ? -1 : 0);
}

/// Bisection over dyadic rationals for I_x(a, b) = target. Returns the
/// bracket end on the requested side, or the exact root when hit.
Rational beta_quantile(unsigned long a, unsigned long b, const Rational& target, unsigned bits, bool round_up) {
  Rational lo = 0, hi = 1;
  for (unsigned i = 0; i < bits; ++i) {
    Rational mid = (lo + hi) / 2;
    const int sign = compare_ibeta(a, b, mid, target);
    if (sign == 0) return mid;
    if (sign < 0) {
      lo = std::move(mid);
    } else {
      hi = std::move(mid);
    }
  }
  return round_up ? hi : lo;
}

void check_interval_args(unsigned long successes, unsigned long trials, const Rational& level) {
  if (trials == 0) throw std::invalid_argument("N must be at least 1");
  if (successes > trials) throw std::invalid_argument("successes exceed N");
  if (level <= 0 || level >= 1) throw std::invalid_argument("confidence level must lie strictly between 0 and 1");
}

unsigned clamp_bits(unsigned bits) { return std::clamp(bits, 8u, 120u); }

using QuantileKey = std::tuple<bool, unsigned long, unsigned long, std::string, unsigned, unsigned>;

template <class Compute>
Rational memoized(const QuantileKey& key, Compute compute) {
  static std::mutex mutex;
  static std::map<QuantileKey, Rational> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  Rational value = compute();
  std::lock_guard lock(mutex);
  cache.emplace(key, value);
  return value;
}

}  // namespace

unsigned label_divisor(unsigned classes) { return classes <= 2 ? 1 : classes; }

Rational clopper_pearson_lower(unsigned long successes, unsigned long trials, const Rational& level,
                               unsigned classes, unsigned precision_bits) {
  check_interval_args(successes, trials, level);
  if (successes == 0) return 0;
  const unsigned bits = clamp_bits(precision_bits);
  return memoized({false, successes, trials, to_exact(level), classes, bits}, [&] {
    const Rational target = level / label_divisor(classes);
    return beta_quantile(successes, trials - successes + 1, target, bits, false);
  });
}

Rational clopper_pearson_upper(unsigned long successes, unsigned long trials, const Rational& level,
                               unsigned classes, unsigned precision_bits) {
  check_interval_args(successes, trials, level);
  if (successes == trials) return 1;
  const unsigned bits = clamp_bits(precision_bits);
  return memoized({true, successes, trials, to_exact(level), classes, bits}, [&] {
    const Rational target = 1 - level / label_divisor(classes);
    return beta_quantile(successes + 1, trials - successes, target, bits, true);
  });
}

Rational bonferroni_level(const Rational& alpha, unsigned long m) {
  if (m == 0) throw std::invalid_argument("m must be at least 1");
  return alpha / m;
}

std::pair<unsigned, unsigned> top_two(const std::vector<unsigned long>& counts) {
  if (counts.size() < 2) throw std::invalid_argument("at least two labels are required");
  unsigned best = 0;
  for (unsigned i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  unsigned second = best == 0 ? 1 : 0;
  for (unsigned i = 0; i < counts.size(); ++i) {
    if (i != best && counts[i] > counts[second]) second = i;
  }
  return {best, second};
}

void validate(const PredictionCounts& counts) {
  if (counts.counts.size() < 2) throw std::invalid_argument("at least two labels are required");
  if (counts.trials == 0) throw std::invalid_argument("N must be at least 1");
  unsigned long total = 0;
  for (auto c : counts.counts) total += c;
  if (total > counts.trials) throw std::invalid_argument("label counts sum above N for test " + counts.test_id);
}

EstimatedProbs estimate(const PredictionCounts& counts, const Rational& alpha, unsigned long m,
                        unsigned precision_bits) {
  validate(counts);
  const auto [y_star, y_prime] = top_two(counts.counts);
  const auto classes = static_cast<unsigned>(counts.counts.size());
  const Rational level = bonferroni_level(alpha, m);

  EstimatedProbs out;
  out.y_star = y_star;
  out.y_prime = y_prime;
  out.alpha = alpha;
  out.m = m;
  out.p_star = clopper_pearson_lower(counts.counts[y_star], counts.trials, level, classes, precision_bits);
  out.p_prime = clopper_pearson_upper(counts.counts[y_prime], counts.trials, level, classes, precision_bits);
  const Rational rest = 1 - out.p_star;
  if (rest < out.p_prime) out.p_prime = rest;
  return out;
}

std::vector<PredictionCounts> read_counts_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  if (table.header.size() < 5 || table.header[0] != "test_id" || table.header[1] != "true_label" ||
      table.header[2] != "N") {
    throw CsvError(1, "expected header test_id,true_label,N,count_0,count_1,...");
  }
  for (std::size_t i = 3; i < table.header.size(); ++i) {
    if (table.header[i] != "count_" + std::to_string(i - 3)) {
      throw CsvError(1, "expected column count_" + std::to_string(i - 3) + ", found '" + table.header[i] + "'");
    }
  }
  std::vector<PredictionCounts> rows;
  for (const auto& row : table.rows) {
    PredictionCounts counts;
    counts.test_id = row.cells[0];
    counts.true_label = parse_integer(row, 1);
    counts.trials = parse_count(row, 2);
    for (std::size_t i = 3; i < row.cells.size(); ++i) counts.counts.push_back(parse_count(row, i));
    try {
      validate(counts);
    } catch (const std::invalid_argument& e) {
      throw CsvError(row.line, e.what());
    }
    rows.push_back(std::move(counts));
  }
  return rows;
}

void write_counts_csv(std::ostream& out, const std::vector<PredictionCounts>& rows) {
  const std::size_t classes = rows.empty() ? 2 : rows.front().counts.size();
  out << "test_id,true_label,N";
  for (std::size_t i = 0; i < classes; ++i) out << ",count_" << i;
  out << '\n';
  for (const auto& row : rows) {
    out << row.test_id << ',' << row.true_label << ',' << row.trials;
    for (auto c : row.counts) out << ',' << c;
    out << '\n';
  }
}

}  // namespace bagflip
