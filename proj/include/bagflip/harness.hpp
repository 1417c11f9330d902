#pragma once

#include "bagflip/certifier.hpp"
#include "bagflip/estimator.hpp"
#include "bagflip/noise_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bagflip {

/// Integer feature matrix (row-major) with one label per row.
struct Dataset {
  unsigned d = 0;
  std::vector<unsigned> values;
  std::vector<unsigned> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const unsigned> row(std::size_t i) const { return {values.data() + i * d, d}; }
  std::span<unsigned> row(std::size_t i) { return {values.data() + i * d, d}; }
  void push_back(std::span<const unsigned> features, unsigned label);
};

/// Header `label,f0,...,f{d-1}`.
Dataset read_dataset_csv(std::istream& in);
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Feature values must lie in [0, K] and labels in [0, classes).
void validate(const Dataset& data, unsigned categories, unsigned classes);

using Rng = std::mt19937_64;

/// Independent stream `(a, b)` under a master seed, via SplitMix64 mixing.
Rng stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// k row indices drawn uniformly with replacement.
std::vector<std::size_t> sample_bag(std::size_t n, unsigned long k, Rng& rng);
std::vector<std::size_t> sample_bag(const Dataset& data, unsigned long k, std::uint64_t seed);

/// Keeps the value with probability rho, otherwise picks one of the other K
/// values of {0..K} uniformly. rho's denominator must fit in 64 bits.
unsigned flip_value(unsigned value, const NoiseModel& noise, Rng& rng);
void apply_flip_noise(std::span<unsigned> values, const NoiseModel& noise, Rng& rng);

class Model {
 public:
  virtual ~Model() = default;
  /// Empty when the model declines to predict.
  virtual std::optional<unsigned> predict(std::span<const unsigned> x) const = 0;
};

class BaseLearner {
 public:
  virtual ~BaseLearner() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Model> train(const Dataset& bag) const = 0;
};

/// Predicts the modal label of the bag (ties to the lowest label).
class MajorityLabel : public BaseLearner {
 public:
  std::string name() const override { return "majority"; }
  std::unique_ptr<Model> train(const Dataset& bag) const override;
};

/// Label of the Hamming-nearest bag row (ties to the lowest label).
class OneNearestNeighbor : public BaseLearner {
 public:
  std::string name() const override { return "1nn"; }
  std::unique_ptr<Model> train(const Dataset& bag) const override;
};

/// "majority" or "1nn".
std::unique_ptr<BaseLearner> make_learner(const std::string& name);

struct MonteCarloOptions {
  unsigned long trials = 1;  // N
  unsigned long k = 1;
  NoiseModel noise{Rational(1), 1};
  PerturbationSpec spec{PerturbationKind::FeatureFlip, 1u};
  AttackMode mode = AttackMode::TriggerLess;
  unsigned classes = 2;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Trains N models on noised bags (stream (seed, model)) and counts their
/// predictions on every test row. In backdoor mode with a feature-touching
/// kind the test row is noised afresh per (model, test) pair.
std::vector<PredictionCounts> run_monte_carlo(const Dataset& train, const Dataset& test, const BaseLearner& learner,
                                              const MonteCarloOptions& options);

struct CertifiedPrediction {
  std::string test_id;
  long true_label = 0;
  std::optional<unsigned> prediction;   // empty when no model voted
  std::optional<unsigned long> radius;  // empty = abstain
};

/// Joins counts to radius-table rows by (N_y*, N_y').
std::vector<CertifiedPrediction> certify_counts(const std::vector<PredictionCounts>& counts, const RadiusTable& table);

struct CurvePoint {
  unsigned long r = 0;
  Rational r_percent;
  Rational certified_accuracy;
  Rational normal_accuracy;
};

/// Points r = 0 .. min(n, largest radius + 1).
std::vector<CurvePoint> accuracy_curve(const std::vector<CertifiedPrediction>& predictions, unsigned long n);

/// `R_percent,certified_accuracy,normal_accuracy`.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace bagflip
