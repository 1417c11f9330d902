#include "bagflip/certifier.hpp"
#include "bagflip/kl_bound.hpp"

#include <doctest.h>

using namespace bagflip;

namespace {

KlBoundInput example(unsigned s = 1) {
  KlBoundInput in;
  in.p_star = make_rational(9, 10);
  in.n = 1000;
  in.k = 50;
  in.noise = NoiseModel(make_rational(4, 5), 1);
  in.s = s;
  return in;
}

}  // namespace

TEST_CASE("closed-form examples") {
  CHECK(kl_radius(example(1)) == 12);
  CHECK(kl_radius(example(2)) == 6);

  KlBoundInput near_half = example();
  near_half.p_star = make_rational(500001, 1000000);
  CHECK(kl_radius(near_half) == 0);

  KlBoundInput certain = example();
  certain.p_star = 1;
  CHECK(kl_radius(certain) == 1000);
}

TEST_CASE("rejections") {
  KlBoundInput in = example();
  in.p_star = make_rational(1, 2);
  CHECK_THROWS_AS(kl_radius(in), std::invalid_argument);
  in = example();
  in.noise = NoiseModel(make_rational(1, 2), 1);
  CHECK_THROWS_AS(kl_radius(in), std::invalid_argument);
  in = example();
  in.kind = PerturbationKind::FeatureLabelFlip;
  CHECK_THROWS_AS(kl_radius(in), std::invalid_argument);
  in = example();
  in.mode = AttackMode::Backdoor;
  CHECK_THROWS_AS(kl_radius(in), std::invalid_argument);
  in = example();
  in.s = 0;
  CHECK_THROWS_AS(kl_radius(in), std::invalid_argument);
}

TEST_CASE("monotone in s, k, n and p*") {
  const KlBoundInput base = example();
  unsigned long previous = kl_radius(base);
  for (unsigned s = 2; s <= 6; ++s) {
    const unsigned long r = kl_radius(example(s));
    CHECK(r <= previous);
    previous = r;
  }
  KlBoundInput bigger_k = base;
  bigger_k.k = 80;
  CHECK(kl_radius(bigger_k) <= kl_radius(base));
  KlBoundInput bigger_n = base;
  bigger_n.n = 5000;
  CHECK(kl_radius(bigger_n) >= kl_radius(base));
  KlBoundInput bigger_p = base;
  bigger_p.p_star = make_rational(95, 100);
  CHECK(kl_radius(bigger_p) >= kl_radius(base));
}

TEST_CASE("KL radius never exceeds the exact radius") {
  const NoiseModel noise(make_rational(4, 5), 1);
  for (const Rational p : {make_rational(7, 10), make_rational(9, 10), make_rational(99, 100)}) {
    KlBoundInput in;
    in.p_star = p;
    in.n = 60;
    in.k = 6;
    in.noise = noise;
    in.s = 1;
    const auto exact = certified_radius(Problem{60, 6, 3, AttackMode::TriggerLess}, noise,
                                        PerturbationSpec(PerturbationKind::FeatureFlip, 1u), p, 1 - p, std::nullopt,
                                        CertMode::Binary);
    CHECK(kl_radius(in) <= exact.value_or(0));
  }
}

TEST_CASE("expected flip-distance shift") {
  CHECK(lemma_t_check(1, 1, 1, make_rational(4, 5)) == make_rational(3, 5));
  CHECK(lemma_t_check(0, 3, 2, make_rational(2, 3)) == 0);
  for (unsigned dim = 1; dim <= 5; ++dim) {
    for (unsigned K = 1; K <= 3; ++K) {
      for (const Rational rho : {make_rational(1, 2), make_rational(2, 3), make_rational(9, 10)}) {
        const NoiseModel noise(rho, K);
        for (unsigned s = 0; s <= dim; ++s) CHECK(lemma_t_check(s, dim, K, rho) == (noise.rho() - noise.gamma()) * s);
      }
    }
  }
}
