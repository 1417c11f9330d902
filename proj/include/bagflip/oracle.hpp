#pragma once

#include "bagflip/exact_math.hpp"
#include "bagflip/noise_model.hpp"
#include "bagflip/partition.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bagflip {

struct TinyConfig {
  Problem problem;
  unsigned categories = 1;
  Rational rho = Rational(1, 2);
  PerturbationSpec spec{PerturbationKind::FeatureFlip, 1u};
  unsigned long r = 0;
  /// Empty: canonical placement (perturbed rows 0..r-1, lowest dimensions,
  /// value v -> v + 1 mod K + 1, all-zero clean data). Otherwise a random
  /// placement drawn from this seed.
  std::optional<std::uint64_t> placement_seed;

  std::string describe() const;
};

inline constexpr double kOracleSizeLimit = 1e5;

/// (n (K+1)^d_eff)^k (K+1)^d_test.
double sample_space_size(const TinyConfig& config);

/// Outcomes sharing (c, clean distance, attacked distance) have identical
/// probabilities; `count` is how many outcomes fall in the group and the
/// masses are per outcome.
struct OutcomeGroup {
  unsigned long c = 0;
  unsigned long clean_distance = 0;
  unsigned long poisoned_distance = 0;
  BigInt count = 0;
  Rational p_clean;
  Rational p_poisoned;

  long t() const { return static_cast<long>(clean_distance) - static_cast<long>(poisoned_distance); }
};

struct EnumeratedMasses {
  std::vector<OutcomeGroup> groups;
  BigInt outcomes = 0;
};

/// Walks every (bag, noised bag, noised test input) outcome and evaluates both
/// PMFs directly as products over dimensions. Throws std::invalid_argument
/// when the configuration is invalid or exceeds kOracleSizeLimit.
EnumeratedMasses enumerate_masses(const TinyConfig& config);

/// Total clean and attacked mass per (c, t).
std::map<std::pair<unsigned long, long>, std::pair<Rational, Rational>> group_by_subspace(
    const EnumeratedMasses& masses);

/// Neyman-Pearson minimum of the attacked mass of a region with clean mass
/// p*, by a greedy over per-outcome likelihood ratios.
Rational brute_force_lb(const EnumeratedMasses& masses, const Rational& p_star);
/// Maximum attacked mass of a region with clean mass p' (saturating at 1).
Rational brute_force_ub(const EnumeratedMasses& masses, const Rational& p_prime);

/// Minimum / maximum of sum x_i poisoned_i subject to sum x_i clean_i = p,
/// 0 <= x_i <= 1, by enumerating every vertex of the feasible polytope (at
/// most one fractional coordinate). Empty when infeasible. Meant for <= 16 items.
std::optional<Rational> exhaustive_fractional_lb(const std::vector<std::pair<Rational, Rational>>& items,
                                                 const Rational& p);
std::optional<Rational> exhaustive_fractional_ub(const std::vector<std::pair<Rational, Rational>>& items,
                                                 const Rational& p);

/// |{x' in {0..K}^dim : dis(x', x~) = u, dis(x', x) = v}| by enumeration;
/// entry [u][v].
std::vector<std::vector<BigInt>> enumerate_flip_counts(unsigned s, unsigned dim, unsigned categories);

struct CheckReport {
  TinyConfig config;
  bool normalized = false;
  bool masses_match = false;
  bool ratios_match = false;
  bool bounds_match = false;
  std::string detail;

  bool ok() const { return normalized && masses_match && ratios_match && bounds_match; }
};

/// Compares partition masses, pointwise likelihood ratios, lb and ub against
/// the enumeration.
CheckReport check_config(const TinyConfig& config);

/// n <= 3, k <= 2, d <= 2, K <= 2, s <= d (plus Unbounded), r <= n,
/// rho in {1/2, 4/5}, every kind, both modes where legal; the canonical
/// placement, and one random placement for each r > 0 configuration with n = 3.
std::vector<TinyConfig> default_grid();

}  // namespace bagflip
