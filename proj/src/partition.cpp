#include "bagflip/partition.hpp"

#include <stdexcept>

namespace bagflip {

bool operator==(const ExtendedRational& a, const ExtendedRational& b) {
  if (a.is_infinite() || b.is_infinite()) return a.is_infinite() == b.is_infinite();
  return a.value() == b.value();
}

std::strong_ordering operator<=>(const ExtendedRational& a, const ExtendedRational& b) {
  if (a.is_infinite()) return b.is_infinite() ? std::strong_ordering::equal : std::strong_ordering::greater;
  if (b.is_infinite()) return std::strong_ordering::less;
  const int c = cmp(a.value(), b.value());
  if (c < 0) return std::strong_ordering::less;
  if (c > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

FlipDistanceGrids::FlipDistanceGrids(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                                     unsigned long max_c)
    : problem_(problem), noise_(noise), spec_(spec) {
  validate(problem, spec);
  const SignedSeries layer = example_layer(problem, spec, noise).trimmed();
  grids_.reserve(max_c + 1);
  grids_.push_back(test_layer(problem, spec, noise).trimmed());
  for (unsigned long c = 1; c <= max_c; ++c) grids_.push_back(convolve(grids_.back(), layer).trimmed());
}

SignedSeries t_grid(unsigned long c, const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec) {
  return FlipDistanceGrids(problem, noise, spec, c).at(c);
}

Rational truncation_error(unsigned long k, unsigned long r, unsigned long n, unsigned long kappa) {
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (r > n) throw std::invalid_argument("radius exceeds the training-set size");
  if (kappa >= k) return 0;
  const Rational p = make_rational(r, n);
  Rational kept = 0;
  for (unsigned long c = 0; c <= kappa; ++c) kept += binom_pmf(c, k, p);
  return 1 - kept;
}

unsigned long kept_selections(const Problem& problem, std::optional<unsigned long> kappa) {
  return kappa ? std::min(problem.k, *kappa) : problem.k;
}

SubspaceTable build_table(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                          unsigned long r, std::optional<unsigned long> kappa) {
  return build_table(FlipDistanceGrids(problem, noise, spec, kept_selections(problem, kappa)), r, kappa);
}

SubspaceTable build_table(const FlipDistanceGrids& grids, unsigned long r, std::optional<unsigned long> kappa) {
  const Problem& problem = grids.problem();
  const NoiseModel& noise = grids.noise();
  if (r > problem.n) throw std::invalid_argument("radius exceeds the training-set size");
  const unsigned long max_c = kept_selections(problem, kappa);
  if (grids.max_c() < max_c) throw std::invalid_argument("flip-distance grids do not cover kappa");

  // eta = (gamma/rho)^t; powers are shared by every c.
  const bool closed_form_ratio = !noise.degenerate();
  Rational ratio = closed_form_ratio ? Rational(noise.gamma() / noise.rho()) : Rational(0);
  Rational inverse = closed_form_ratio ? Rational(noise.rho() / noise.gamma()) : Rational(0);

  SubspaceTable table;
  table.kappa = kappa;
  const Rational p = make_rational(r, problem.n);
  Rational kept_clean = 0, kept_poisoned = 0;
  for (unsigned long c = 0; c <= max_c; ++c) {
    const Rational selection = binom_pmf(c, problem.k, p);
    if (selection == 0) continue;
    const SignedSeries& grid = grids.at(c);
    // The attacked-side layer is the reflected clean layer, so the attacked
    // mass of (c, t) is the clean mass of (c, -t).
    const long lo = std::min(grid.first(), -grid.last());
    const long hi = std::max(grid.last(), -grid.first());
    for (long t = lo; t <= hi; ++t) {
      Subspace entry;
      entry.c = c;
      entry.t = t;
      entry.mass_clean = selection * grid.at(t);
      entry.mass_poisoned = selection * grid.at(-t);
      if (entry.mass_clean == 0 && entry.mass_poisoned == 0) continue;
      if (closed_form_ratio) {
        entry.eta = t >= 0 ? pow(ratio, static_cast<unsigned long>(t)) : pow(inverse, static_cast<unsigned long>(-t));
      } else if (entry.mass_poisoned == 0) {
        entry.eta = ExtendedRational::infinity();
      } else {
        entry.eta = Rational(entry.mass_clean / entry.mass_poisoned);
      }
      kept_clean += entry.mass_clean;
      kept_poisoned += entry.mass_poisoned;
      table.entries.push_back(std::move(entry));
    }
  }
  table.truncated_clean_mass = 1 - kept_clean;
  table.delta = 1 - kept_poisoned;
  return table;
}

}  // namespace bagflip
