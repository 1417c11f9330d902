#include "bagflip/kl_bound.hpp"

#include "bagflip/flip_counts.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <stdexcept>

namespace bagflip {

namespace {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<50>,
                                           boost::multiprecision::et_off>;

Real to_real(const Rational& q) {
  Real out;
  mpfr_set_q(out.backend().data(), q.get_mpq_t(), MPFR_RNDN);
  return out;
}

}  // namespace

unsigned long kl_radius(const KlBoundInput& input) {
  if (input.kind != PerturbationKind::FeatureFlip || input.mode != AttackMode::TriggerLess) {
    throw std::invalid_argument("the KL bound is only available for trigger-less feature flips");
  }
  if (input.s == 0) throw std::invalid_argument("flip budget s must be at least 1");
  if (input.n == 0 || input.k == 0) throw std::invalid_argument("n and k must be at least 1");
  if (input.p_star <= Rational(1, 2) || input.p_star > 1) {
    throw std::invalid_argument("the KL bound needs 1/2 < p* <= 1");
  }
  const Rational& rho = input.noise.rho();
  const Rational& gamma = input.noise.gamma();
  if (rho <= gamma) throw std::invalid_argument("the KL bound needs rho > gamma");
  if (gamma == 0) return 0;
  if (input.p_star == 1) return input.n;

  const Real p = to_real(input.p_star);
  const Real numerator = Real(input.n) * log(4 * p * (1 - p));
  const Real denominator =
      2 * Real(input.k) * log(to_real(Rational(gamma / rho))) * to_real(Rational(rho - gamma)) * Real(input.s);
  const Real bound = numerator / denominator * (1 - Real("1e-40"));
  const Real ceiling = ceil(bound);
  if (ceiling <= 0) return 0;
  if (ceiling - 1 >= Real(input.n)) return input.n;
  return ceiling.convert_to<unsigned long>() - 1;
}

Rational lemma_t_check(unsigned s, unsigned dim, unsigned categories, const Rational& rho) {
  const NoiseModel noise(rho, categories);
  const auto table = flip_count_table(s, dim, categories);
  Rational total = 0;
  for (unsigned u = 0; u <= dim; ++u) {
    const Rational weight = pow(noise.gamma(), u) * pow(noise.rho(), dim - u);
    for (unsigned v = 0; v <= dim; ++v) {
      const BigInt& count = table->at(u, v);
      if (count != 0) total += count * weight * (static_cast<long>(v) - static_cast<long>(u));
    }
  }
  return total;
}

}  // namespace bagflip
