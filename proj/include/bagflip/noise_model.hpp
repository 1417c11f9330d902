#pragma once

#include "bagflip/exact_math.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace bagflip {

/// Flip noise applied independently to every noised dimension: a value is
/// kept with probability rho, otherwise replaced by one of the K other
/// categories of {0..K}, each with probability gamma = (1 - rho) / K.
class NoiseModel {
 public:
  NoiseModel(Rational rho, unsigned categories);

  const Rational& rho() const { return rho_; }
  const Rational& gamma() const { return gamma_; }
  /// K: number of alternative values per dimension.
  unsigned categories() const { return categories_; }

  /// rho == 1 (pure bagging) or rho == 0; likelihood ratios are not (gamma/rho)^t.
  bool degenerate() const { return rho_ == 0 || gamma_ == 0; }

 private:
  Rational rho_;
  Rational gamma_;
  unsigned categories_;
};

enum class PerturbationKind { FeatureFlip, FeatureLabelFlip, LabelFlip };
enum class AttackMode { TriggerLess, Backdoor };

/// Per-example flip budget. An empty budget means unbounded and resolves to
/// the effective dimension of the kind.
class PerturbationSpec {
 public:
  PerturbationSpec(PerturbationKind kind, std::optional<unsigned> budget);

  PerturbationKind kind() const { return kind_; }
  bool unbounded() const { return !budget_.has_value(); }
  const std::optional<unsigned>& budget() const { return budget_; }

  /// Dimensions noised (and perturbable) per training example:
  /// d for feature flips, d + 1 for feature+label flips, 1 for label flips.
  unsigned example_dims(unsigned d) const;
  /// Budget per training example after resolving Unbounded.
  unsigned resolved_budget(unsigned d) const;

 private:
  PerturbationKind kind_;
  std::optional<unsigned> budget_;
};

struct Problem {
  unsigned long n = 1;  // training-set size
  unsigned long k = 1;  // bag size
  unsigned d = 1;       // feature dimension
  AttackMode mode = AttackMode::TriggerLess;
};

/// Throws std::invalid_argument when the combination is not admissible
/// (zero sizes, s = 0, s above the effective dimension, label flips under a
/// backdoor attack).
void validate(const Problem& problem, const PerturbationSpec& spec);

/// Distance between the clean and the attacked test input. Zero unless the
/// attack is a backdoor on a kind that can touch features.
unsigned test_budget(const Problem& problem, const PerturbationSpec& spec);

/// Dimensions of the test input that the smoothing distribution noises.
unsigned test_dims(const Problem& problem, const PerturbationSpec& spec);

/// Total noised dimensions of one outcome (bag plus test input).
unsigned long outcome_dims(const Problem& problem, const PerturbationSpec& spec);

/// Probability of a single outcome (bag indices plus every noised value)
/// whose total number of flipped dimensions is `total_flips`:
/// rho^(dims - flips) * gamma^flips / n^k.
Rational outcome_probability(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                             unsigned long total_flips);

PerturbationKind parse_kind(std::string_view text);  // f | fl | l
AttackMode parse_mode(std::string_view text);        // triggerless | backdoor
std::optional<unsigned> parse_budget(std::string_view text);  // integer | inf
std::string to_string(PerturbationKind kind);
std::string to_string(AttackMode mode);

}  // namespace bagflip
