#include "bagflip/flip_counts.hpp"
#include "bagflip/kl_bound.hpp"
#include "bagflip/oracle.hpp"

#include <doctest.h>

using namespace bagflip;

TEST_CASE("dim 1 table") {
  for (long u = 0; u <= 1; ++u) {
    for (long v = 0; v <= 1; ++v) CHECK(count_flips(u, v, 1, 1, 1) == ((u + v == 1) ? 1 : 0));
  }
}

TEST_CASE("s = 0 gives distance shells") {
  for (unsigned dim = 1; dim <= 5; ++dim) {
    for (unsigned K = 1; K <= 3; ++K) {
      for (long u = 0; u <= dim; ++u) {
        for (long v = 0; v <= dim; ++v) {
          BigInt expected = 0;
          if (u == v) {
            mpz_ui_pow_ui(expected.get_mpz_t(), K, static_cast<unsigned long>(u));
            expected *= binomial(dim, static_cast<unsigned long>(u));
          }
          CHECK(count_flips(u, v, 0, dim, K) == expected);
        }
      }
    }
  }
}

TEST_CASE("counts match brute-force enumeration") {
  for (unsigned dim = 1; dim <= 4; ++dim) {
    for (unsigned K = 1; K <= 3; ++K) {
      for (unsigned s = 0; s <= dim; ++s) {
        const auto brute = enumerate_flip_counts(s, dim, K);
        const auto table = flip_count_table(s, dim, K);
        for (unsigned u = 0; u <= dim; ++u) {
          for (unsigned v = 0; v <= dim; ++v) {
            CHECK(table->at(u, v) == brute[u][v]);
            CHECK(count_flips(u, v, s, dim, K) == count_flips(v, u, s, dim, K));
            if ((u > v ? u - v : v - u) > s || u + v < s) CHECK(table->at(u, v) == 0);
          }
        }
      }
    }
  }
}

TEST_CASE("out-of-range arguments are zero") {
  CHECK(count_flips(-1, 0, 1, 2, 1) == 0);
  CHECK(count_flips(0, 3, 1, 2, 1) == 0);
  CHECK(count_flips(1, 1, 3, 2, 1) == 0);
}

TEST_CASE("weighted counts are normalized and give the expected distance shift") {
  for (unsigned dim = 1; dim <= 6; ++dim) {
    for (unsigned K = 1; K <= 3; ++K) {
      for (const Rational rho : {make_rational(1, 2), make_rational(2, 3), make_rational(9, 10)}) {
        const NoiseModel noise(rho, K);
        for (unsigned s = 0; s <= dim; ++s) {
          const auto table = flip_count_table(s, dim, K);
          Rational total = 0;
          for (unsigned u = 0; u <= dim; ++u) {
            for (unsigned v = 0; v <= dim; ++v) {
              total += table->at(u, v) * pow(noise.gamma(), u) * pow(noise.rho(), dim - u);
            }
          }
          CHECK(total == 1);
          CHECK(lemma_t_check(s, dim, K, rho) == (noise.rho() - noise.gamma()) * s);
        }
      }
    }
  }
}

TEST_CASE("base layer") {
  const NoiseModel noise(make_rational(4, 5), 1);
  const SignedSeries layer = base_layer(1, 1, noise);
  CHECK(layer.at(-1) == make_rational(4, 5));
  CHECK(layer.at(0) == 0);
  CHECK(layer.at(1) == make_rational(1, 5));
  CHECK(layer.first() == -1);
  CHECK(layer.last() == 1);

  for (unsigned dim = 1; dim <= 5; ++dim) {
    for (unsigned s = 0; s <= dim; ++s) CHECK(base_layer(s, dim, NoiseModel(make_rational(2, 3), 2)).sum() == 1);
  }
}

TEST_CASE("base layer matches enumeration for dim 2, s 2, K 1, rho 1/2") {
  const NoiseModel noise(make_rational(1, 2), 1);
  const auto brute = enumerate_flip_counts(2, 2, 1);
  const SignedSeries layer = base_layer(2, 2, noise);
  for (long t = -2; t <= 2; ++t) {
    Rational expected = 0;
    for (long u = 0; u <= 2; ++u) {
      const long v = u - t;
      if (v < 0 || v > 2) continue;
      expected += brute[u][v] * pow(noise.gamma(), u) * pow(noise.rho(), 2 - u);
    }
    CHECK(layer.at(t) == expected);
  }
}

TEST_CASE("label layer") {
  const NoiseModel noise(make_rational(3, 4), 1);
  const SignedSeries g = label_layer(1, 2, noise);
  CHECK(g.sum() == 1);
  CHECK(g.first() == -3);
  CHECK(g.last() == 3);
  CHECK(g == base_layer(1, 3, noise));

  const Problem problem{4, 2, 3, AttackMode::TriggerLess};
  CHECK(example_layer(problem, PerturbationSpec(PerturbationKind::LabelFlip, 1u), noise) == base_layer(1, 1, noise));
  CHECK(example_layer(problem, PerturbationSpec(PerturbationKind::FeatureLabelFlip, 2u), noise) ==
        base_layer(2, 4, noise));
}

TEST_CASE("test layer") {
  const NoiseModel noise(make_rational(3, 4), 1);
  const PerturbationSpec f(PerturbationKind::FeatureFlip, 1u);
  CHECK(test_layer(Problem{4, 2, 3, AttackMode::TriggerLess}, f, noise) == SignedSeries::unit());
  CHECK(test_layer(Problem{4, 2, 3, AttackMode::Backdoor}, f, noise) == base_layer(1, 3, noise));
}

TEST_CASE("series convolution and reflection") {
  const SignedSeries a(-1, {make_rational(1, 2), 0, make_rational(1, 2)});
  const SignedSeries b(0, {make_rational(1, 3), make_rational(2, 3)});
  const SignedSeries c = convolve(a, b);
  CHECK(c.first() == -1);
  CHECK(c.at(-1) == make_rational(1, 6));
  CHECK(c.at(0) == make_rational(1, 3));
  CHECK(c.at(1) == make_rational(1, 6));
  CHECK(c.at(2) == make_rational(1, 3));
  CHECK(c.sum() == 1);
  CHECK(b.reflected().at(-1) == make_rational(2, 3));
  CHECK(SignedSeries(-2, {0, 0, Rational(1), 0}).trimmed() == SignedSeries::unit());
  CHECK(convolve(a, SignedSeries()).empty());
}
