#pragma once

#include "bagflip/exact_math.hpp"
#include "bagflip/flip_counts.hpp"
#include "bagflip/noise_model.hpp"

#include <compare>
#include <optional>
#include <vector>

namespace bagflip {

/// A likelihood ratio: a nonnegative rational or +infinity (clean mass
/// positive, attacked mass zero).
class ExtendedRational {
 public:
  ExtendedRational() = default;
  ExtendedRational(Rational value) : value_(std::move(value)) {}
  static ExtendedRational infinity() { return ExtendedRational(Infinite{}); }

  bool is_infinite() const { return !value_.has_value(); }
  /// Precondition: finite.
  const Rational& value() const { return *value_; }

  friend bool operator==(const ExtendedRational& a, const ExtendedRational& b);
  friend std::strong_ordering operator<=>(const ExtendedRational& a, const ExtendedRational& b);

 private:
  struct Infinite {};
  explicit ExtendedRational(Infinite) : value_(std::nullopt) {}
  std::optional<Rational> value_ = Rational(0);
};

/// One subspace L_{c,t}: outcomes with c selected perturbed examples and
/// signed distance difference t = (clean distance) - (attacked distance).
struct Subspace {
  unsigned long c = 0;
  long t = 0;
  Rational mass_clean;
  Rational mass_poisoned;
  ExtendedRational eta;
};

struct SubspaceTable {
  std::vector<Subspace> entries;
  /// Attacked mass of the subspaces left out by truncation.
  Rational delta = 0;
  /// Clean mass of the subspaces left out by truncation.
  Rational truncated_clean_mass = 0;
  std::optional<unsigned long> kappa;
};

/// T(c, .) for c = 0..max_c: the distribution of t conditioned on c perturbed
/// examples being selected. T(0, .) is the test-input layer and
/// T(c, .) = T(c - 1, .) * (per-example layer).
class FlipDistanceGrids {
 public:
  FlipDistanceGrids(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                    unsigned long max_c);

  unsigned long max_c() const { return grids_.size() - 1; }
  const SignedSeries& at(unsigned long c) const { return grids_.at(c); }

  const Problem& problem() const { return problem_; }
  const NoiseModel& noise() const { return noise_; }
  const PerturbationSpec& spec() const { return spec_; }

 private:
  Problem problem_;
  NoiseModel noise_;
  PerturbationSpec spec_;
  std::vector<SignedSeries> grids_;
};

/// T(c, .) computed from scratch.
SignedSeries t_grid(unsigned long c, const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec);

/// 1 - sum_{c <= kappa} Binom(c; k, r/n).
Rational truncation_error(unsigned long k, unsigned long r, unsigned long n, unsigned long kappa);

/// Subspace partition for radius r against the maximally perturbed dataset.
/// Keeps every (c, t) with c <= min(k, kappa) and nonzero mass.
/// Throws std::invalid_argument when r > n.
SubspaceTable build_table(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                          unsigned long r, std::optional<unsigned long> kappa);

/// Same, reusing precomputed grids (grids.max_c() must cover min(k, kappa)).
SubspaceTable build_table(const FlipDistanceGrids& grids, unsigned long r, std::optional<unsigned long> kappa);

/// min(k, kappa), or k when kappa is empty.
unsigned long kept_selections(const Problem& problem, std::optional<unsigned long> kappa);

}  // namespace bagflip
