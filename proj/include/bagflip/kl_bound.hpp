#pragma once

#include "bagflip/exact_math.hpp"
#include "bagflip/noise_model.hpp"

namespace bagflip {

struct KlBoundInput {
  Rational p_star;
  unsigned long n = 1;
  unsigned long k = 1;
  NoiseModel noise{Rational(1), 1};
  unsigned s = 1;
  PerturbationKind kind = PerturbationKind::FeatureFlip;
  AttackMode mode = AttackMode::TriggerLess;
};

/// Largest integer r in [0, n] with
///   r < n log(4 p (1 - p)) / (2 k log(gamma / rho) (rho - gamma) s),
/// evaluated in 50-digit MPFR arithmetic and nudged downward before rounding.
/// Returns n when p* = 1 and 0 when gamma = 0.
/// Throws std::invalid_argument for p* <= 1/2, rho <= gamma, s = 0, or any
/// perturbation other than trigger-less feature flips.
unsigned long kl_radius(const KlBoundInput& input);

/// sum_{u,v} L(u, v; s, dim) gamma^u rho^(dim - u) (v - u).
Rational lemma_t_check(unsigned s, unsigned dim, unsigned categories, const Rational& rho);

}  // namespace bagflip
