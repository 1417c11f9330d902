#include "bagflip/certifier.hpp"
#include "bagflip/oracle.hpp"
#include "bagflip/partition.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace bagflip;

namespace {

const PerturbationSpec kF1(PerturbationKind::FeatureFlip, 1u);

Rational sum_clean(const SubspaceTable& t) {
  Rational s = 0;
  for (const auto& e : t.entries) s += e.mass_clean;
  return s;
}

Rational sum_poisoned(const SubspaceTable& t) {
  Rational s = 0;
  for (const auto& e : t.entries) s += e.mass_poisoned;
  return s;
}

}  // namespace

TEST_CASE("extended rational ordering") {
  const ExtendedRational inf = ExtendedRational::infinity();
  CHECK(inf > ExtendedRational(Rational(1000)));
  CHECK(ExtendedRational(make_rational(1, 3)) < ExtendedRational(make_rational(1, 2)));
  CHECK(inf == ExtendedRational::infinity());
  CHECK_FALSE(inf == ExtendedRational(Rational(0)));
}

TEST_CASE("T(1, t) is the square of the base layer") {
  const SignedSeries t1 = t_grid(1, Problem{2, 1, 1, AttackMode::TriggerLess}, NoiseModel(make_rational(4, 5), 1), kF1);
  CHECK(t1.at(-1) == make_rational(4, 5));
  CHECK(t1.at(1) == make_rational(1, 5));

  // Backdoor: test layer times one example layer.
  const SignedSeries b1 = t_grid(1, Problem{2, 1, 1, AttackMode::Backdoor}, NoiseModel(make_rational(4, 5), 1), kF1);
  CHECK(b1.at(-2) == make_rational(16, 25));
  CHECK(b1.at(0) == make_rational(8, 25));
  CHECK(b1.at(2) == make_rational(1, 25));
  CHECK(b1.at(1) == 0);
}

TEST_CASE("T(c, .) sums to one") {
  const Problem problem{10, 4, 2, AttackMode::Backdoor};
  const NoiseModel noise(make_rational(2, 3), 1);
  const FlipDistanceGrids grids(problem, noise, kF1, 4);
  for (unsigned long c = 0; c <= 4; ++c) CHECK(grids.at(c).sum() == 1);
}

TEST_CASE("r = 0 trigger-less is a single subspace with eta 1") {
  const SubspaceTable t =
      build_table(Problem{20, 5, 3, AttackMode::TriggerLess}, NoiseModel(make_rational(4, 5), 1), kF1, 0, std::nullopt);
  REQUIRE(t.entries.size() == 1);
  CHECK(t.entries[0].mass_clean == 1);
  CHECK(t.entries[0].mass_poisoned == 1);
  CHECK(t.entries[0].eta == ExtendedRational(Rational(1)));
  CHECK(lower_bound(t, make_rational(7, 10)) == make_rational(7, 10));
}

TEST_CASE("truncation error") {
  CHECK(truncation_error(5, 2, 7, 5) == 0);
  CHECK(truncation_error(2, 1, 2, 0) == make_rational(3, 4));
  const double delta = truncation_error(150, 1, 200, 6).get_d();
  CHECK(std::abs(delta - 1.23e-5) / 1.23e-5 < 0.01);
  CHECK_THROWS_AS(truncation_error(5, 8, 7, 2), std::invalid_argument);

  const Problem problem{200, 150, 1, AttackMode::TriggerLess};
  const SubspaceTable t = build_table(problem, NoiseModel(make_rational(9, 10), 1), kF1, 1, 6ul);
  CHECK(t.delta == truncation_error(150, 1, 200, 6));
  CHECK(t.truncated_clean_mass == t.delta);
  CHECK(sum_clean(t) + t.truncated_clean_mass == 1);
  CHECK(sum_poisoned(t) + t.delta == 1);
  for (const auto& e : t.entries) CHECK(e.c <= 6);
}

TEST_CASE("untruncated tables are normalized, disjoint and consistent with eta") {
  for (auto kind : {PerturbationKind::FeatureFlip, PerturbationKind::FeatureLabelFlip, PerturbationKind::LabelFlip}) {
    for (auto mode : {AttackMode::TriggerLess, AttackMode::Backdoor}) {
      if (kind == PerturbationKind::LabelFlip && mode == AttackMode::Backdoor) continue;
      for (const Rational rho : {make_rational(1, 2), make_rational(2, 3), make_rational(9, 10)}) {
        const Problem problem{12, 4, 3, mode};
        const NoiseModel noise(rho, 2);
        const PerturbationSpec spec(kind, kind == PerturbationKind::LabelFlip ? 1u : 2u);
        const SubspaceTable t = build_table(problem, noise, spec, 5, std::nullopt);
        CHECK(sum_clean(t) == 1);
        CHECK(sum_poisoned(t) == 1);
        CHECK(t.delta == 0);
        std::set<std::pair<unsigned long, long>> keys;
        for (const auto& e : t.entries) {
          CHECK(keys.insert({e.c, e.t}).second);
          if (e.mass_clean != 0 && e.mass_poisoned != 0) CHECK(e.mass_clean == e.eta.value() * e.mass_poisoned);
          const long dim_eff = spec.example_dims(problem.d);
          const long test = test_dims(problem, spec);
          CHECK(std::labs(e.t) <= static_cast<long>(e.c) * dim_eff + test);
        }
      }
    }
  }
}

TEST_CASE("FLs backdoor range") {
  const Problem problem{6, 3, 2, AttackMode::Backdoor};
  const PerturbationSpec spec(PerturbationKind::FeatureLabelFlip, std::nullopt);
  const SubspaceTable t = build_table(problem, NoiseModel(make_rational(3, 5), 1), spec, 6, std::nullopt);
  long widest = 0;
  for (const auto& e : t.entries) {
    CHECK(std::labs(e.t) <= static_cast<long>((e.c + 1) * problem.d + e.c));
    if (e.c == 3) widest = std::max(widest, std::labs(e.t));
  }
  CHECK(widest == 4 * 2 + 3);
}

TEST_CASE("n=3, k=2, d=1, K=1, rho=4/5, r=1 backdoor matches enumeration") {
  const TinyConfig config{Problem{3, 2, 1, AttackMode::Backdoor}, 1, make_rational(4, 5), kF1, 1, std::nullopt};
  const CheckReport report = check_config(config);
  CHECK_MESSAGE(report.ok(), report.detail);
}

TEST_CASE("degenerate and tied noise levels match enumeration") {
  for (const Rational rho : {Rational(0), Rational(1), make_rational(1, 3), make_rational(1, 2)}) {
    for (auto kind : {PerturbationKind::FeatureFlip, PerturbationKind::FeatureLabelFlip, PerturbationKind::LabelFlip}) {
      for (auto mode : {AttackMode::TriggerLess, AttackMode::Backdoor}) {
        if (kind == PerturbationKind::LabelFlip && mode == AttackMode::Backdoor) continue;
        for (unsigned long r = 0; r <= 2; ++r) {
          const TinyConfig config{Problem{2, 2, 1, mode}, 2, rho, PerturbationSpec(kind, 1u), r, std::nullopt};
          const CheckReport report = check_config(config);
          CHECK_MESSAGE(report.ok(), config.describe() << " " << report.detail);
        }
      }
    }
  }
}

TEST_CASE("rho = 1 keeps every attacked outcome") {
  const SubspaceTable t =
      build_table(Problem{4, 2, 2, AttackMode::Backdoor}, NoiseModel(Rational(1), 1), kF1, 2, std::nullopt);
  CHECK(sum_clean(t) == 1);
  CHECK(sum_poisoned(t) == 1);
  bool saw_infinite = false, saw_zero = false;
  for (const auto& e : t.entries) {
    if (e.t < 0) CHECK(e.eta.is_infinite());
    if (e.t > 0) CHECK(e.eta == ExtendedRational(Rational(0)));
    saw_infinite |= e.eta.is_infinite();
    saw_zero |= !e.eta.is_infinite() && e.eta.value() == 0;
  }
  CHECK(saw_infinite);
  CHECK(saw_zero);
}

TEST_CASE("rejects radii beyond n") {
  CHECK_THROWS_AS(build_table(Problem{4, 2, 1, AttackMode::TriggerLess}, NoiseModel(make_rational(1, 2), 1), kF1, 5,
                              std::nullopt),
                  std::invalid_argument);
}
