#pragma once

#include "bagflip/exact_math.hpp"
#include "bagflip/noise_model.hpp"
#include "bagflip/partition.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace bagflip {

enum class CertMode { Binary, MultiClass };

struct NPResult {
  Rational lb = 0;
  Rational ub = 0;
  /// Pivot positions in the descending-eta (lb) and ascending-eta (ub)
  /// orders of the merged ratio classes; empty when no subspace was split.
  std::optional<std::size_t> i_lb;
  std::optional<std::size_t> i_ub;
  bool certified = false;
};

/// Subspaces merged by equal eta and sorted, with running mass totals, so a
/// greedy Neyman-Pearson fill is a binary search.
class BoundProfile {
 public:
  explicit BoundProfile(const SubspaceTable& table);

  /// min attacked mass of a region with clean mass p_star, filling in
  /// descending eta and skipping classes without clean mass.
  /// Throws std::invalid_argument when p_star exceeds the kept clean mass.
  Rational lower(const Rational& p_star, std::optional<std::size_t>* pivot = nullptr) const;

  /// max attacked mass of a region with clean mass p_prime, filling in
  /// ascending eta. Classes without clean mass come for free; classes without
  /// attacked mass are skipped. Saturates at the kept attacked mass.
  Rational upper(const Rational& p_prime, std::optional<std::size_t>* pivot = nullptr) const;

  const Rational& delta() const { return delta_; }
  const Rational& truncated_clean_mass() const { return truncated_clean_; }
  const Rational& kept_clean_mass() const { return kept_clean_; }

 private:
  struct Step {
    Rational clean, poisoned;
    Rational clean_before, poisoned_before;
  };
  std::vector<Step> descending_;  // clean > 0, eta descending
  std::vector<Step> ascending_;   // clean > 0 and poisoned > 0, eta ascending
  Rational free_poisoned_ = 0;    // attacked mass where the clean mass is 0
  Rational kept_clean_ = 0;
  Rational kept_poisoned_ = 0;
  Rational delta_ = 0;
  Rational truncated_clean_ = 0;
};

Rational lower_bound(const SubspaceTable& table, const Rational& p_star);
Rational upper_bound(const SubspaceTable& table, const Rational& p_prime);

/// lb_delta = lb(p* - truncated clean mass, clamped at 0) and
/// ub_delta = ub(p') + delta; certified per mode (lb > 1/2 or lb > ub).
NPResult relaxed_bounds(const SubspaceTable& table, const Rational& p_star, const Rational& p_prime,
                        CertMode mode = CertMode::Binary);
NPResult relaxed_bounds(const BoundProfile& profile, const Rational& p_star, const Rational& p_prime,
                        CertMode mode);

/// Radius queries for one (problem, noise, spec, kappa). Bound profiles are
/// built once per radius and cached; safe for concurrent use.
class RadiusCertifier {
 public:
  RadiusCertifier(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                  std::optional<unsigned long> kappa);

  const Problem& problem() const { return grids_.problem(); }

  std::shared_ptr<const BoundProfile> profile(unsigned long r) const;
  NPResult bounds(unsigned long r, const Rational& p_star, const Rational& p_prime, CertMode mode) const;
  bool certifies(unsigned long r, const Rational& p_star, const Rational& p_prime, CertMode mode) const;

  /// Largest r such that certification holds at r and fails at r + 1 (or r = n),
  /// located by binary search; empty (abstain) when r = 0 fails.
  std::optional<unsigned long> binary_search_radius(const Rational& p_star, const Rational& p_prime,
                                                    CertMode mode) const;
  /// Largest r such that every r' <= r certifies; empty when r = 0 fails.
  std::optional<unsigned long> linear_scan_radius(const Rational& p_star, const Rational& p_prime,
                                                  CertMode mode) const;
  /// Binary search plus the guard: for n <= kLinearScanLimit the linear scan
  /// decides; otherwise the answer is re-checked at r and r + 1.
  std::optional<unsigned long> certified_radius(const Rational& p_star, const Rational& p_prime,
                                                CertMode mode) const;

  static constexpr unsigned long kLinearScanLimit = 256;

 private:
  std::optional<unsigned long> kappa_;
  FlipDistanceGrids grids_;
  mutable std::mutex mutex_;
  mutable std::map<unsigned long, std::shared_ptr<const BoundProfile>> profiles_;
};

std::optional<unsigned long> certified_radius(const Problem& problem, const NoiseModel& noise,
                                              const PerturbationSpec& spec, const Rational& p_star,
                                              const Rational& p_prime, std::optional<unsigned long> kappa,
                                              CertMode mode);

struct RadiusRow {
  unsigned long n_star = 0;
  unsigned long n_prime = 0;
  Rational p_star;
  Rational p_prime;
  std::optional<unsigned long> radius;  // empty = abstain
};

struct RadiusTableOptions {
  unsigned long trials = 1;  // N
  Rational alpha = Rational(1, 1000);
  unsigned long m = 1;
  unsigned classes = 2;  // |C|; 2 selects binary mode
  std::optional<unsigned long> kappa;
  unsigned threads = 1;
  unsigned precision_bits = 60;
};

struct RadiusTable {
  CertMode mode = CertMode::Binary;
  unsigned long trials = 0;
  std::vector<RadiusRow> rows;

  /// Binary tables are keyed by n_star alone; multi-class by (n_star, n_prime).
  const RadiusRow* find(unsigned long n_star, unsigned long n_prime) const;
};

/// Binary: rows n_star = 0..N with n_prime = N - n_star. Multi-class: every
/// pair with n_prime <= min(n_star, N - n_star).
RadiusTable build_radius_table(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                               const RadiusTableOptions& options);

/// `n_star,n_prime,p_star,p_prime,radius` with radius -1 for abstain.
void write_radius_table(std::ostream& out, const RadiusTable& table, bool exact, int digits = 12);
/// Mode is inferred: binary when every row has n_star + n_prime = N.
RadiusTable read_radius_table(std::istream& in);

}  // namespace bagflip
