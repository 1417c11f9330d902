#include "bagflip/flip_counts.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace bagflip {

SignedSeries::SignedSeries(long first, std::vector<Rational> values) : first_(first), values_(std::move(values)) {}

SignedSeries SignedSeries::unit() { return SignedSeries(0, {Rational(1)}); }

Rational SignedSeries::at(long t) const {
  if (values_.empty() || t < first_ || t > last()) return 0;
  return values_[static_cast<std::size_t>(t - first_)];
}

Rational SignedSeries::sum() const {
  Rational total = 0;
  for (const auto& v : values_) total += v;
  return total;
}

SignedSeries SignedSeries::trimmed() const {
  std::size_t lo = 0, hi = values_.size();
  while (lo < hi && values_[lo] == 0) ++lo;
  while (hi > lo && values_[hi - 1] == 0) --hi;
  if (lo == hi) return SignedSeries();
  return SignedSeries(first_ + static_cast<long>(lo),
                      std::vector<Rational>(values_.begin() + static_cast<long>(lo),
                                            values_.begin() + static_cast<long>(hi)));
}

SignedSeries SignedSeries::reflected() const {
  if (values_.empty()) return SignedSeries();
  return SignedSeries(-last(), std::vector<Rational>(values_.rbegin(), values_.rend()));
}

SignedSeries convolve(const SignedSeries& a, const SignedSeries& b) {
  if (a.empty() || b.empty()) return SignedSeries();
  std::vector<Rational> out(a.values_.size() + b.values_.size() - 1);
  Rational term;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (a.values_[i] == 0) continue;
    for (std::size_t j = 0; j < b.values_.size(); ++j) {
      if (b.values_[j] == 0) continue;
      mpq_mul(term.get_mpq_t(), a.values_[i].get_mpq_t(), b.values_[j].get_mpq_t());
      out[i + j] += term;
    }
  }
  return SignedSeries(a.first_ + b.first_, std::move(out));
}

BigInt count_flips(long u, long v, unsigned s, unsigned dim, unsigned categories) {
  if (u < 0 || v < 0 || u > dim || v > dim || s > dim) return 0;
  // Among the dim - s positions where x and x~ agree, i are changed (K ways
  // each). Among the s positions where they differ, j take a third value
  // (K - 1 ways), b take x~'s value and a keep x's value:
  //   u = i + b + j,  v = i + a + j,  a + b + j = s.
  BigInt total = 0;
  const long same = static_cast<long>(dim) - static_cast<long>(s);
  for (long i = 0; i <= std::min(same, u); ++i) {
    const long j = u + v - 2 * i - static_cast<long>(s);
    if (j < 0 || j > static_cast<long>(s)) continue;
    const long b = u - i - j;
    const long a = static_cast<long>(s) - j - b;
    if (b < 0 || a < 0) continue;
    BigInt ways = binomial(static_cast<unsigned long>(same), static_cast<unsigned long>(i)) *
                  binomial(s, static_cast<unsigned long>(j)) *
                  binomial(static_cast<unsigned long>(s - j), static_cast<unsigned long>(b));
    BigInt k_pow, k1_pow;
    mpz_ui_pow_ui(k_pow.get_mpz_t(), categories, static_cast<unsigned long>(i));
    mpz_ui_pow_ui(k1_pow.get_mpz_t(), categories - 1, static_cast<unsigned long>(j));
    total += ways * k_pow * k1_pow;
  }
  return total;
}

FlipCountTable::FlipCountTable(unsigned s, unsigned dim, unsigned categories)
    : s_(s), dim_(dim), categories_(categories), entries_((dim + 1) * (dim + 1)) {
  if (s > dim) throw std::invalid_argument("flip budget exceeds dimension");
  if (categories == 0) throw std::invalid_argument("K must be at least 1");
  for (unsigned u = 0; u <= dim; ++u) {
    for (unsigned v = 0; v <= dim; ++v) entries_[u * (dim + 1) + v] = count_flips(u, v, s, dim, categories);
  }
}

std::shared_ptr<const FlipCountTable> flip_count_table(unsigned s, unsigned dim, unsigned categories) {
  static std::mutex mutex;
  static std::map<std::tuple<unsigned, unsigned, unsigned>, std::shared_ptr<const FlipCountTable>> cache;
  const auto key = std::make_tuple(s, dim, categories);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_shared<const FlipCountTable>(s, dim, categories)).first;
  return it->second;
}

SignedSeries base_layer(unsigned s, unsigned dim, const NoiseModel& noise) {
  const auto table = flip_count_table(s, dim, noise.categories());
  std::vector<Rational> weight(dim + 1);
  for (unsigned u = 0; u <= dim; ++u) weight[u] = pow(noise.gamma(), u) * pow(noise.rho(), dim - u);

  const long span = static_cast<long>(dim);
  std::vector<Rational> values(2 * dim + 1);
  for (long t = -span; t <= span; ++t) {
    Rational acc = 0;
    for (long u = std::max(0L, t); u <= std::min(span, t + span); ++u) {
      const BigInt& count = table->at(static_cast<unsigned>(u), static_cast<unsigned>(u - t));
      if (count != 0) acc += count * weight[static_cast<std::size_t>(u)];
    }
    values[static_cast<std::size_t>(t + span)] = acc;
  }
  return SignedSeries(-span, std::move(values));
}

SignedSeries label_layer(unsigned s, unsigned dim, const NoiseModel& noise) {
  return base_layer(s, dim + 1, noise);
}

SignedSeries example_layer(const Problem& problem, const PerturbationSpec& spec, const NoiseModel& noise) {
  const unsigned s = spec.resolved_budget(problem.d);
  switch (spec.kind()) {
    case PerturbationKind::FeatureFlip: return base_layer(s, problem.d, noise);
    case PerturbationKind::FeatureLabelFlip: return label_layer(s, problem.d, noise);
    case PerturbationKind::LabelFlip: return base_layer(1, 1, noise);
  }
  throw std::logic_error("unknown perturbation kind");
}

SignedSeries test_layer(const Problem& problem, const PerturbationSpec& spec, const NoiseModel& noise) {
  const unsigned budget = test_budget(problem, spec);
  if (budget == 0) return SignedSeries::unit();
  return base_layer(budget, problem.d, noise);
}

}  // namespace bagflip
