#include "bagflip/harness.hpp"

#include "bagflip/csv.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace bagflip {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t to_u64(const BigInt& v) {
  if (v < 0 || mpz_sizeinbase(v.get_mpz_t(), 2) > 64) throw std::invalid_argument("rho denominator exceeds 64 bits");
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, -1, sizeof out, 0, 0, v.get_mpz_t());
  return out;
}

unsigned modal_label(const std::vector<unsigned>& labels) {
  std::vector<std::size_t> freq;
  for (unsigned y : labels) {
    if (y >= freq.size()) freq.resize(y + 1);
    ++freq[y];
  }
  return static_cast<unsigned>(std::max_element(freq.begin(), freq.end()) - freq.begin());
}

class ConstantModel : public Model {
 public:
  explicit ConstantModel(unsigned label) : label_(label) {}
  std::optional<unsigned> predict(std::span<const unsigned>) const override { return label_; }

 private:
  unsigned label_;
};

class NearestNeighborModel : public Model {
 public:
  explicit NearestNeighborModel(Dataset bag) : bag_(std::move(bag)) {}

  std::optional<unsigned> predict(std::span<const unsigned> x) const override {
    if (x.size() != bag_.d) throw std::invalid_argument("test row has the wrong dimension");
    std::size_t best_distance = std::numeric_limits<std::size_t>::max();
    unsigned best_label = 0;
    for (std::size_t i = 0; i < bag_.size(); ++i) {
      const auto row = bag_.row(i);
      std::size_t distance = 0;
      for (unsigned j = 0; j < bag_.d; ++j) distance += row[j] != x[j];
      if (distance < best_distance || (distance == best_distance && bag_.labels[i] < best_label)) {
        best_distance = distance;
        best_label = bag_.labels[i];
      }
    }
    return best_label;
  }

 private:
  Dataset bag_;
};

bool noises_features(PerturbationKind kind) { return kind != PerturbationKind::LabelFlip; }
bool noises_labels(PerturbationKind kind) { return kind != PerturbationKind::FeatureFlip; }

}  // namespace

void Dataset::push_back(std::span<const unsigned> features, unsigned label) {
  if (features.size() != d) throw std::invalid_argument("row has the wrong dimension");
  values.insert(values.end(), features.begin(), features.end());
  labels.push_back(label);
}

Dataset read_dataset_csv(std::istream& in) {
  const CsvTable csv = read_csv(in);
  if (csv.header.size() < 2 || csv.header[0] != "label") throw CsvError(1, "expected header label,f0,...");
  for (std::size_t j = 1; j < csv.header.size(); ++j) {
    if (csv.header[j] != "f" + std::to_string(j - 1)) {
      throw CsvError(1, "expected column f" + std::to_string(j - 1) + ", found '" + csv.header[j] + "'");
    }
  }
  Dataset data;
  data.d = static_cast<unsigned>(csv.header.size() - 1);
  std::vector<unsigned> features(data.d);
  for (const auto& row : csv.rows) {
    for (unsigned j = 0; j < data.d; ++j) {
      const unsigned long v = parse_count(row, j + 1);
      if (v > std::numeric_limits<unsigned>::max()) throw CsvError(row.line, "feature value too large");
      features[j] = static_cast<unsigned>(v);
    }
    const unsigned long label = parse_count(row, 0);
    if (label > std::numeric_limits<unsigned>::max()) throw CsvError(row.line, "label too large");
    data.push_back(features, static_cast<unsigned>(label));
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (unsigned j = 0; j < data.d; ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (unsigned v : data.row(i)) out << ',' << v;
    out << '\n';
  }
}

void validate(const Dataset& data, unsigned categories, unsigned classes) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= classes) {
      throw std::invalid_argument("row " + std::to_string(i) + ": label " + std::to_string(data.labels[i]) +
                                  " is not below the class count " + std::to_string(classes));
    }
    for (unsigned v : data.row(i)) {
      if (v > categories) {
        throw std::invalid_argument("row " + std::to_string(i) + ": feature value " + std::to_string(v) +
                                    " exceeds K = " + std::to_string(categories));
      }
    }
  }
}

Rng stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

std::vector<std::size_t> sample_bag(std::size_t n, unsigned long k, Rng& rng) {
  if (n == 0) throw std::invalid_argument("cannot sample a bag from an empty dataset");
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> bag(k);
  for (auto& i : bag) i = pick(rng);
  return bag;
}

std::vector<std::size_t> sample_bag(const Dataset& data, unsigned long k, std::uint64_t seed) {
  Rng rng = stream_rng(seed, 0);
  return sample_bag(data.size(), k, rng);
}

unsigned flip_value(unsigned value, const NoiseModel& noise, Rng& rng) {
  if (value > noise.categories()) throw std::invalid_argument("value outside {0..K}");
  if (noise.rho() == 1) return value;
  const std::uint64_t den = to_u64(noise.rho().get_den());
  const std::uint64_t num = to_u64(noise.rho().get_num());
  if (std::uniform_int_distribution<std::uint64_t>(0, den - 1)(rng) < num) return value;
  const unsigned other = std::uniform_int_distribution<unsigned>(0, noise.categories() - 1)(rng);
  return other < value ? other : other + 1;
}

void apply_flip_noise(std::span<unsigned> values, const NoiseModel& noise, Rng& rng) {
  for (auto& v : values) v = flip_value(v, noise, rng);
}

std::unique_ptr<Model> MajorityLabel::train(const Dataset& bag) const {
  if (bag.size() == 0) throw std::invalid_argument("empty bag");
  return std::make_unique<ConstantModel>(modal_label(bag.labels));
}

std::unique_ptr<Model> OneNearestNeighbor::train(const Dataset& bag) const {
  if (bag.size() == 0) throw std::invalid_argument("empty bag");
  return std::make_unique<NearestNeighborModel>(bag);
}

std::unique_ptr<BaseLearner> make_learner(const std::string& name) {
  if (name == "majority") return std::make_unique<MajorityLabel>();
  if (name == "1nn") return std::make_unique<OneNearestNeighbor>();
  throw std::invalid_argument("unknown learner '" + name + "' (expected majority or 1nn)");
}

std::vector<PredictionCounts> run_monte_carlo(const Dataset& train, const Dataset& test, const BaseLearner& learner,
                                              const MonteCarloOptions& options) {
  if (options.trials == 0) throw std::invalid_argument("N must be at least 1");
  if (train.d != test.d) throw std::invalid_argument("training and test data have different dimensions");
  const PerturbationKind kind = options.spec.kind();
  const unsigned K = options.noise.categories();
  if (noises_labels(kind) && options.classes != K + 1) {
    throw std::invalid_argument("label flipping draws labels from {0..K}; the class count must be K + 1");
  }
  if (kind == PerturbationKind::LabelFlip && options.mode == AttackMode::Backdoor) {
    throw std::invalid_argument("label flipping cannot modify the test input; backdoor mode is not allowed");
  }
  validate(train, K, options.classes);
  validate(test, K, options.classes);
  const bool noise_test = options.mode == AttackMode::Backdoor && noises_features(kind);

  std::vector<std::vector<unsigned long>> totals(test.size(), std::vector<unsigned long>(options.classes));
  std::mutex merge;
  std::atomic<unsigned long> next{0};
  auto work = [&] {
    std::vector<std::vector<unsigned long>> local(test.size(), std::vector<unsigned long>(options.classes));
    std::vector<unsigned> input(test.d);
    for (unsigned long model = next++; model < options.trials; model = next++) {
      Rng rng = stream_rng(options.seed, model);
      Dataset bag;
      bag.d = train.d;
      for (std::size_t i : sample_bag(train.size(), options.k, rng)) bag.push_back(train.row(i), train.labels[i]);
      for (std::size_t i = 0; i < bag.size(); ++i) {
        if (noises_features(kind)) apply_flip_noise(bag.row(i), options.noise, rng);
        if (noises_labels(kind)) bag.labels[i] = flip_value(bag.labels[i], options.noise, rng);
      }
      std::unique_ptr<Model> trained;
      try {
        trained = learner.train(bag);
      } catch (const std::exception&) {
        continue;  // a failed model votes for no label
      }
      for (std::size_t j = 0; j < test.size(); ++j) {
        const auto x = test.row(j);
        std::copy(x.begin(), x.end(), input.begin());
        if (noise_test) {
          Rng test_rng = stream_rng(options.seed, model, j + 1);
          apply_flip_noise(input, options.noise, test_rng);
        }
        std::optional<unsigned> label;
        try {
          label = trained->predict(input);
        } catch (const std::exception&) {
          label.reset();
        }
        if (label && *label < options.classes) ++local[j][*label];
      }
    }
    std::lock_guard lock(merge);
    for (std::size_t j = 0; j < test.size(); ++j) {
      for (unsigned c = 0; c < options.classes; ++c) totals[j][c] += local[j][c];
    }
  };
  const unsigned threads = std::max(1u, options.threads);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<PredictionCounts> out(test.size());
  for (std::size_t j = 0; j < test.size(); ++j) {
    out[j].test_id = std::to_string(j);
    out[j].true_label = test.labels[j];
    out[j].trials = options.trials;
    out[j].counts = std::move(totals[j]);
  }
  return out;
}

std::vector<CertifiedPrediction> certify_counts(const std::vector<PredictionCounts>& counts,
                                                const RadiusTable& table) {
  std::vector<CertifiedPrediction> out;
  out.reserve(counts.size());
  for (const auto& row : counts) {
    validate(row);
    if (row.trials != table.trials) {
      throw std::invalid_argument("test " + row.test_id + " has N = " + std::to_string(row.trials) +
                                  " but the radius table was built for N = " + std::to_string(table.trials));
    }
    const bool multi_class = row.counts.size() > 2;
    if (multi_class != (table.mode == CertMode::MultiClass)) {
      throw std::invalid_argument("counts and radius table disagree on binary versus multi-class mode");
    }
    CertifiedPrediction p;
    p.test_id = row.test_id;
    p.true_label = row.true_label;
    const auto [y_star, y_prime] = top_two(row.counts);
    if (row.counts[y_star] > 0) {
      p.prediction = y_star;
      const RadiusRow* hit = table.find(row.counts[y_star], row.counts[y_prime]);
      if (!hit) throw std::invalid_argument("no radius-table row for test " + row.test_id);
      p.radius = hit->radius;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CurvePoint> accuracy_curve(const std::vector<CertifiedPrediction>& predictions, unsigned long n) {
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (predictions.empty()) throw std::invalid_argument("no test inputs");
  unsigned long largest = 0;
  unsigned long correct = 0;
  for (const auto& p : predictions) {
    if (p.radius) largest = std::max(largest, *p.radius);
    if (p.prediction && static_cast<long>(*p.prediction) == p.true_label) ++correct;
  }
  const Rational m(predictions.size());
  const Rational normal = correct / m;

  std::vector<CurvePoint> curve;
  for (unsigned long r = 0; r <= std::min(n, largest + 1); ++r) {
    unsigned long certified = 0;
    for (const auto& p : predictions) {
      if (p.prediction && static_cast<long>(*p.prediction) == p.true_label && p.radius && *p.radius >= r) ++certified;
    }
    curve.push_back({r, Rational(100 * make_rational(r, n)), Rational(certified / m), normal});
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "R_percent,certified_accuracy,normal_accuracy\n";
  for (const auto& p : curve) {
    out << to_fixed(p.r_percent, 4) << ',' << to_fixed(p.certified_accuracy, 6) << ','
        << to_fixed(p.normal_accuracy, 6) << '\n';
  }
}

}  // namespace bagflip
