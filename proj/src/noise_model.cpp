#include "bagflip/noise_model.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace bagflip {

NoiseModel::NoiseModel(Rational rho, unsigned categories) : rho_(std::move(rho)), categories_(categories) {
  if (categories_ == 0) throw std::invalid_argument("K must be at least 1");
  if (!is_probability(rho_)) throw std::invalid_argument("rho must lie in [0, 1]");
  gamma_ = (1 - rho_) / categories_;
}

PerturbationSpec::PerturbationSpec(PerturbationKind kind, std::optional<unsigned> budget)
    : kind_(kind), budget_(budget) {
  if (budget_ && *budget_ == 0) throw std::invalid_argument("flip budget s must be at least 1");
}

unsigned PerturbationSpec::example_dims(unsigned d) const {
  switch (kind_) {
    case PerturbationKind::FeatureFlip: return d;
    case PerturbationKind::FeatureLabelFlip: return d + 1;
    case PerturbationKind::LabelFlip: return 1;
  }
  return d;
}

unsigned PerturbationSpec::resolved_budget(unsigned d) const {
  return budget_ ? *budget_ : example_dims(d);
}

void validate(const Problem& problem, const PerturbationSpec& spec) {
  if (problem.n == 0) throw std::invalid_argument("n must be at least 1");
  if (problem.k == 0) throw std::invalid_argument("k must be at least 1");
  if (problem.d == 0) throw std::invalid_argument("d must be at least 1");
  if (spec.kind() == PerturbationKind::LabelFlip && problem.mode == AttackMode::Backdoor) {
    throw std::invalid_argument("label flipping cannot modify the test input; backdoor mode is not allowed");
  }
  if (spec.resolved_budget(problem.d) > spec.example_dims(problem.d)) {
    throw std::invalid_argument("flip budget s exceeds the effective dimension " +
                                std::to_string(spec.example_dims(problem.d)));
  }
}

unsigned test_budget(const Problem& problem, const PerturbationSpec& spec) {
  if (problem.mode != AttackMode::Backdoor || spec.kind() == PerturbationKind::LabelFlip) return 0;
  return std::min(spec.resolved_budget(problem.d), problem.d);
}

unsigned test_dims(const Problem& problem, const PerturbationSpec& spec) {
  if (problem.mode != AttackMode::Backdoor || spec.kind() == PerturbationKind::LabelFlip) return 0;
  return problem.d;
}

unsigned long outcome_dims(const Problem& problem, const PerturbationSpec& spec) {
  return problem.k * spec.example_dims(problem.d) + test_dims(problem, spec);
}

Rational outcome_probability(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                             unsigned long total_flips) {
  validate(problem, spec);
  const unsigned long dims = outcome_dims(problem, spec);
  if (total_flips > dims) {
    throw std::invalid_argument("total flips " + std::to_string(total_flips) + " exceed the " +
                                std::to_string(dims) + " noised dimensions");
  }
  return pow(noise.rho(), dims - total_flips) * pow(noise.gamma(), total_flips) /
         pow(Rational(problem.n), problem.k);
}

PerturbationKind parse_kind(std::string_view text) {
  if (text == "f") return PerturbationKind::FeatureFlip;
  if (text == "fl") return PerturbationKind::FeatureLabelFlip;
  if (text == "l") return PerturbationKind::LabelFlip;
  throw std::invalid_argument("unknown perturbation '" + std::string(text) + "' (expected f, fl or l)");
}

AttackMode parse_mode(std::string_view text) {
  if (text == "triggerless") return AttackMode::TriggerLess;
  if (text == "backdoor") return AttackMode::Backdoor;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (expected triggerless or backdoor)");
}

std::optional<unsigned> parse_budget(std::string_view text) {
  if (text == "inf" || text == "infinity") return std::nullopt;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("flip budget must be a positive integer or 'inf', got '" + std::string(text) + "'");
  }
  if (value == 0) throw std::invalid_argument("flip budget s must be at least 1");
  return value;
}

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::FeatureFlip: return "f";
    case PerturbationKind::FeatureLabelFlip: return "fl";
    case PerturbationKind::LabelFlip: return "l";
  }
  return "?";
}

std::string to_string(AttackMode mode) {
  return mode == AttackMode::Backdoor ? "backdoor" : "triggerless";
}

}  // namespace bagflip
