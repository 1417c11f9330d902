#include "bagflip/csv.hpp"
#include "bagflip/estimator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace bagflip;

TEST_CASE("closed-form lower bound for all successes") {
  const Rational p = clopper_pearson_lower(1000, 1000, make_rational(1, 1000), 2);
  const double expected = std::pow(1e-3, 1e-3);
  CHECK(p.get_d() <= expected);
  CHECK(expected - p.get_d() < 1e-15);
  CHECK(p > make_rational(99311, 100000));
  CHECK(p < make_rational(99312, 100000));
  // Rounded down to a dyadic rational with 60 bits.
  CHECK(p.get_den() <= BigInt(1) << 60);
}

TEST_CASE("interval edge cases") {
  CHECK(clopper_pearson_lower(0, 50, make_rational(1, 100), 2) == 0);
  CHECK(clopper_pearson_upper(50, 50, make_rational(1, 100), 2) == 1);
  CHECK(clopper_pearson_upper(0, 1, make_rational(1, 2), 2) == make_rational(1, 2));
  CHECK_THROWS_AS(clopper_pearson_lower(1, 0, make_rational(1, 2), 2), std::invalid_argument);
  CHECK_THROWS_AS(clopper_pearson_lower(3, 2, make_rational(1, 2), 2), std::invalid_argument);
  CHECK_THROWS_AS(clopper_pearson_upper(1, 2, Rational(0), 2), std::invalid_argument);
  CHECK_THROWS_AS(clopper_pearson_upper(1, 2, Rational(1), 2), std::invalid_argument);
}

TEST_CASE("closed-form upper bound for zero successes") {
  // Beta(1, N) quantile at 1 - a is 1 - a^(1/N).
  const Rational u = clopper_pearson_upper(0, 20, make_rational(1, 100), 2);
  const double expected = 1 - std::pow(0.01, 1.0 / 20);
  CHECK(u.get_d() >= expected - 1e-15);
  CHECK(u.get_d() - expected < 1e-15);
}

TEST_CASE("bounds bracket the empirical proportion") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const unsigned long N = std::uniform_int_distribution<unsigned long>(1, 2000)(rng);
    const unsigned long x = std::uniform_int_distribution<unsigned long>(0, N)(rng);
    const Rational level = make_rational(std::uniform_int_distribution<long>(1, 499)(rng), 1000);
    const Rational empirical = make_rational(x, N);
    CHECK(clopper_pearson_lower(x, N, level, 2) <= empirical);
    CHECK(clopper_pearson_upper(x, N, level, 2) >= empirical);
  }
}

TEST_CASE("smaller levels never raise p*") {
  Rational previous = 1;
  for (const Rational level : {make_rational(1, 10), make_rational(1, 100), make_rational(1, 1000), make_rational(1, 1000000)}) {
    const Rational p = clopper_pearson_lower(180, 200, level, 2);
    CHECK(p <= previous);
    previous = p;
  }
  // The per-label division applies for more than two classes only.
  CHECK(clopper_pearson_lower(180, 200, make_rational(1, 100), 4) == clopper_pearson_lower(180, 200, make_rational(1, 400), 2));
  CHECK(label_divisor(2) == 1);
  CHECK(label_divisor(5) == 5);
}

TEST_CASE("coarser precision still rounds conservatively") {
  const Rational fine = clopper_pearson_lower(70, 100, make_rational(1, 20), 2, 100);
  const Rational coarse = clopper_pearson_lower(70, 100, make_rational(1, 20), 2, 12);
  CHECK(coarse <= fine);
  CHECK(fine - coarse < make_rational(1, 4096));
  const Rational up_fine = clopper_pearson_upper(70, 100, make_rational(1, 20), 2, 100);
  const Rational up_coarse = clopper_pearson_upper(70, 100, make_rational(1, 20), 2, 12);
  CHECK(up_coarse >= up_fine);
}

TEST_CASE("bonferroni level") {
  CHECK(bonferroni_level(make_rational(1, 1000), 1) == make_rational(1, 1000));
  CHECK(bonferroni_level(make_rational(1, 1000), 2115) == make_rational(1, 2115000));
  CHECK(bonferroni_level(make_rational(1, 2), 4) == make_rational(1, 8));
  CHECK_THROWS_AS(bonferroni_level(make_rational(1, 2), 0), std::invalid_argument);
}

TEST_CASE("estimate") {
  const PredictionCounts all{"0", 0, 1000, {1000, 0}};
  const EstimatedProbs e = estimate(all, make_rational(1, 1000), 1);
  CHECK(e.y_star == 0);
  CHECK(e.y_prime == 1);
  CHECK(e.p_star == clopper_pearson_lower(1000, 1000, make_rational(1, 1000), 2));
  CHECK(e.p_prime == 1 - e.p_star);
  CHECK(clopper_pearson_upper(0, 1000, make_rational(1, 1000), 2) >= e.p_prime);

  const EstimatedProbs tie = estimate(PredictionCounts{"1", 1, 10, {5, 5}}, make_rational(1, 1000), 1);
  CHECK(tie.y_star == 0);
  CHECK(tie.y_prime == 1);

  const EstimatedProbs three = estimate(PredictionCounts{"2", 2, 30, {3, 20, 7}}, make_rational(1, 100), 3);
  CHECK(three.y_star == 1);
  CHECK(three.y_prime == 2);
  CHECK(three.p_prime <= clopper_pearson_upper(7, 30, make_rational(1, 300), 3));
  CHECK(three.p_star + three.p_prime <= 1);

  CHECK(estimate(all, make_rational(1, 1000), 1).p_star == e.p_star);
  CHECK_THROWS_AS(estimate(PredictionCounts{"3", 0, 5, {4, 3}}, make_rational(1, 10), 1), std::invalid_argument);
  CHECK_THROWS_AS(estimate(PredictionCounts{"4", 0, 5, {4}}, make_rational(1, 10), 1), std::invalid_argument);
}

TEST_CASE("counts CSV round trip and errors") {
  const std::vector<PredictionCounts> rows{{"a", 0, 10, {7, 2, 1}}, {"b", 2, 10, {0, 0, 9}}};
  std::stringstream buffer;
  write_counts_csv(buffer, rows);
  CHECK(buffer.str() == "test_id,true_label,N,count_0,count_1,count_2\na,0,10,7,2,1\nb,2,10,0,0,9\n");
  const auto parsed = read_counts_csv(buffer);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].counts == std::vector<unsigned long>{0, 0, 9});

  std::stringstream bad("test_id,true_label,N,count_0,count_1\nx,0,5,3,1\ny,1,5,3,x\n");
  try {
    read_counts_csv(bad);
    FAIL("expected a CSV error");
  } catch (const CsvError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream short_row("test_id,true_label,N,count_0,count_1\nx,0,5,3\n");
  CHECK_THROWS_AS(read_counts_csv(short_row), CsvError);
  std::stringstream over("test_id,true_label,N,count_0,count_1\nx,0,5,3,3\n");
  CHECK_THROWS_AS(read_counts_csv(over), CsvError);
}
