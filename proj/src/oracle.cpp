#include "bagflip/oracle.hpp"

#include "bagflip/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace bagflip {

namespace {

using Key = std::tuple<unsigned long, unsigned long, unsigned long>;  // c, clean distance, attacked distance

struct Placement {
  std::vector<std::vector<unsigned>> clean_rows, poisoned_rows;
  std::vector<bool> perturbed;
  std::vector<unsigned> clean_test, poisoned_test;
};

unsigned hamming(const std::vector<unsigned>& a, const std::vector<unsigned>& b) {
  unsigned d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

/// Advances `digits` (each in [0, base)) like an odometer; false after the last value.
bool next_digits(std::vector<unsigned>& digits, unsigned base) {
  for (auto& x : digits) {
    if (++x < base) return true;
    x = 0;
  }
  return false;
}

void perturb(std::vector<unsigned>& row, unsigned budget, unsigned K, std::mt19937_64* rng) {
  std::vector<unsigned> dims(row.size());
  std::iota(dims.begin(), dims.end(), 0u);
  if (rng) std::shuffle(dims.begin(), dims.end(), *rng);
  for (unsigned i = 0; i < budget; ++i) {
    unsigned step = 1;
    if (rng) step += std::uniform_int_distribution<unsigned>(0, K - 1)(*rng);
    row[dims[i]] = (row[dims[i]] + step) % (K + 1);
  }
}

Placement place(const TinyConfig& config) {
  const Problem& p = config.problem;
  const unsigned K = config.categories;
  const unsigned d_eff = config.spec.example_dims(p.d);
  const unsigned budget = config.spec.resolved_budget(p.d);
  std::mt19937_64 rng(config.placement_seed.value_or(0));
  std::mt19937_64* random = config.placement_seed ? &rng : nullptr;
  auto draw = [&] { return random ? std::uniform_int_distribution<unsigned>(0, K)(rng) : 0u; };

  Placement out;
  out.clean_rows.assign(p.n, std::vector<unsigned>(d_eff));
  for (auto& row : out.clean_rows) std::generate(row.begin(), row.end(), draw);
  std::vector<std::size_t> order(p.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (random) std::shuffle(order.begin(), order.end(), rng);
  out.perturbed.assign(p.n, false);
  out.poisoned_rows = out.clean_rows;
  for (unsigned long i = 0; i < config.r; ++i) {
    out.perturbed[order[i]] = true;
    perturb(out.poisoned_rows[order[i]], budget, K, random);
  }
  out.clean_test.assign(test_dims(p, config.spec), 0);
  std::generate(out.clean_test.begin(), out.clean_test.end(), draw);
  out.poisoned_test = out.clean_test;
  perturb(out.poisoned_test, test_budget(p, config.spec), K, random);
  return out;
}

struct RatioItem {
  ExtendedRational eta;
  Rational clean, poisoned;
};

std::vector<RatioItem> ratio_items(const EnumeratedMasses& masses) {
  std::vector<RatioItem> items;
  for (const auto& g : masses.groups) {
    RatioItem item{ExtendedRational(), g.count * g.p_clean, g.count * g.p_poisoned};
    if (item.clean == 0 && item.poisoned == 0) continue;
    item.eta = g.p_poisoned == 0 ? ExtendedRational::infinity() : ExtendedRational(Rational(g.p_clean / g.p_poisoned));
    items.push_back(std::move(item));
  }
  return items;
}

std::optional<Rational> vertex_search(const std::vector<std::pair<Rational, Rational>>& items, const Rational& p,
                                      bool maximize) {
  const std::size_t n = items.size();
  if (n > 16) throw std::invalid_argument("vertex enumeration is limited to 16 items");
  std::optional<Rational> best;
  auto consider = [&](const Rational& value) {
    if (!best || (maximize ? value > *best : value < *best)) best = value;
  };
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    Rational clean = 0, poisoned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        clean += items[i].first;
        poisoned += items[i].second;
      }
    }
    if (clean == p) consider(poisoned);
    // One coordinate outside the mask takes a fractional value.
    for (std::size_t j = 0; j < n; ++j) {
      if ((mask >> j & 1) || items[j].first == 0) continue;
      const Rational x = (p - clean) / items[j].first;
      if (x > 0 && x < 1) consider(poisoned + x * items[j].second);
    }
  }
  return best;
}

}  // namespace

std::string TinyConfig::describe() const {
  std::ostringstream out;
  out << "n=" << problem.n << " k=" << problem.k << " d=" << problem.d << " K=" << categories
      << " rho=" << to_exact(rho) << " kind=" << to_string(spec.kind())
      << " s=" << (spec.unbounded() ? std::string("inf") : std::to_string(*spec.budget()))
      << " mode=" << to_string(problem.mode) << " r=" << r;
  if (placement_seed) out << " placement=" << *placement_seed;
  return out.str();
}

double sample_space_size(const TinyConfig& config) {
  const double base = config.categories + 1.0;
  const double per_example = config.problem.n * std::pow(base, config.spec.example_dims(config.problem.d));
  return std::pow(per_example, static_cast<double>(config.problem.k)) *
         std::pow(base, test_dims(config.problem, config.spec));
}

EnumeratedMasses enumerate_masses(const TinyConfig& config) {
  const Problem& p = config.problem;
  validate(p, config.spec);
  if (config.r > p.n) throw std::invalid_argument("radius exceeds the training-set size");
  if (sample_space_size(config) > kOracleSizeLimit) {
    throw std::invalid_argument("sample space too large for enumeration: " + config.describe());
  }
  const NoiseModel noise(config.rho, config.categories);
  const unsigned K = config.categories;
  const Placement placed = place(config);

  // Per-example outcomes: (row index, noised value vector).
  struct Atom {
    bool perturbed;
    unsigned clean_distance, poisoned_distance;
  };
  std::vector<Atom> atoms;
  const unsigned d_eff = config.spec.example_dims(p.d);
  for (unsigned long i = 0; i < p.n; ++i) {
    std::vector<unsigned> w(d_eff, 0);
    do {
      atoms.push_back({placed.perturbed[i], hamming(w, placed.clean_rows[i]), hamming(w, placed.poisoned_rows[i])});
    } while (next_digits(w, K + 1));
  }
  std::vector<Atom> test_atoms;
  {
    std::vector<unsigned> w(placed.clean_test.size(), 0);
    do {
      test_atoms.push_back({false, hamming(w, placed.clean_test), hamming(w, placed.poisoned_test)});
    } while (next_digits(w, K + 1));
  }

  std::map<Key, unsigned long> tally;
  std::vector<unsigned> slots(p.k, 0);
  do {
    unsigned long c = 0, clean = 0, poisoned = 0;
    for (unsigned slot : slots) {
      c += atoms[slot].perturbed;
      clean += atoms[slot].clean_distance;
      poisoned += atoms[slot].poisoned_distance;
    }
    for (const auto& t : test_atoms) ++tally[{c, clean + t.clean_distance, poisoned + t.poisoned_distance}];
  } while (next_digits(slots, static_cast<unsigned>(atoms.size())));

  const unsigned long dims = p.k * d_eff + placed.clean_test.size();
  const Rational bag_weight = 1 / pow(Rational(p.n), p.k);
  auto outcome_mass = [&](unsigned long flips) {
    return Rational(pow(noise.rho(), dims - flips) * pow(noise.gamma(), flips) * bag_weight);
  };
  EnumeratedMasses out;
  for (const auto& [key, count] : tally) {
    const auto& [c, clean, poisoned] = key;
    out.groups.push_back({c, clean, poisoned, BigInt(count), outcome_mass(clean), outcome_mass(poisoned)});
    out.outcomes += count;
  }
  return out;
}

std::map<std::pair<unsigned long, long>, std::pair<Rational, Rational>> group_by_subspace(
    const EnumeratedMasses& masses) {
  std::map<std::pair<unsigned long, long>, std::pair<Rational, Rational>> out;
  for (const auto& g : masses.groups) {
    auto& slot = out[{g.c, g.t()}];
    slot.first += g.count * g.p_clean;
    slot.second += g.count * g.p_poisoned;
  }
  return out;
}

Rational brute_force_lb(const EnumeratedMasses& masses, const Rational& p_star) {
  auto items = ratio_items(masses);
  std::stable_sort(items.begin(), items.end(), [](const RatioItem& a, const RatioItem& b) { return a.eta > b.eta; });
  Rational need = p_star, total = 0;
  for (const auto& item : items) {
    if (need == 0) break;
    if (item.clean == 0) continue;
    if (item.clean <= need) {
      need -= item.clean;
      total += item.poisoned;
    } else {
      total += need / item.clean * item.poisoned;
      need = 0;
    }
  }
  if (need > 0) throw std::invalid_argument("p* exceeds the total clean mass");
  return total;
}

Rational brute_force_ub(const EnumeratedMasses& masses, const Rational& p_prime) {
  auto items = ratio_items(masses);
  std::stable_sort(items.begin(), items.end(), [](const RatioItem& a, const RatioItem& b) { return a.eta < b.eta; });
  Rational need = p_prime, total = 0;
  for (const auto& item : items) {
    if (item.poisoned == 0) continue;
    if (item.clean == 0) {
      total += item.poisoned;
    } else if (item.clean <= need) {
      need -= item.clean;
      total += item.poisoned;
    } else if (need > 0) {
      total += need / item.clean * item.poisoned;
      need = 0;
    }
  }
  return total;
}

std::optional<Rational> exhaustive_fractional_lb(const std::vector<std::pair<Rational, Rational>>& items,
                                                 const Rational& p) {
  return vertex_search(items, p, false);
}

std::optional<Rational> exhaustive_fractional_ub(const std::vector<std::pair<Rational, Rational>>& items,
                                                 const Rational& p) {
  return vertex_search(items, p, true);
}

std::vector<std::vector<BigInt>> enumerate_flip_counts(unsigned s, unsigned dim, unsigned categories) {
  if (s > dim) throw std::invalid_argument("flip budget exceeds dimension");
  std::vector<unsigned> x(dim, 0), x_tilde(dim, 0);
  for (unsigned i = 0; i < s; ++i) x_tilde[i] = 1;
  std::vector<std::vector<BigInt>> out(dim + 1, std::vector<BigInt>(dim + 1, 0));
  std::vector<unsigned> w(dim, 0);
  do {
    ++out[hamming(w, x_tilde)][hamming(w, x)];
  } while (next_digits(w, categories + 1));
  return out;
}

CheckReport check_config(const TinyConfig& config) {
  CheckReport report;
  report.config = config;
  std::ostringstream detail;
  const EnumeratedMasses masses = enumerate_masses(config);
  const NoiseModel noise(config.rho, config.categories);

  Rational clean_total = 0, poisoned_total = 0;
  for (const auto& g : masses.groups) {
    clean_total += g.count * g.p_clean;
    poisoned_total += g.count * g.p_poisoned;
  }
  report.normalized = clean_total == 1 && poisoned_total == 1;
  if (!report.normalized) detail << "enumeration not normalized; ";

  const SubspaceTable table = build_table(config.problem, noise, config.spec, config.r, std::nullopt);
  const auto grouped = group_by_subspace(masses);
  std::map<std::pair<unsigned long, long>, const Subspace*> by_key;
  for (const auto& e : table.entries) by_key[{e.c, e.t}] = &e;

  report.masses_match = true;
  for (const auto& [key, pair] : grouped) {
    if (pair.first == 0 && pair.second == 0) continue;
    auto it = by_key.find(key);
    if (it == by_key.end() || it->second->mass_clean != pair.first || it->second->mass_poisoned != pair.second) {
      report.masses_match = false;
      detail << "mass mismatch at c=" << key.first << " t=" << key.second << "; ";
    }
  }
  for (const auto& [key, entry] : by_key) {
    if (!grouped.count(key)) {
      report.masses_match = false;
      detail << "extra subspace c=" << key.first << " t=" << key.second << "; ";
    }
  }

  report.ratios_match = true;
  for (const auto& g : masses.groups) {
    if (g.p_clean == 0 || g.p_poisoned == 0) continue;
    const Rational ratio = g.p_clean / g.p_poisoned;
    auto it = by_key.find({g.c, g.t()});
    const bool closed_form_ok =
        noise.degenerate() ||
        ratio == (g.t() >= 0 ? pow(Rational(noise.gamma() / noise.rho()), static_cast<unsigned long>(g.t()))
                             : pow(Rational(noise.rho() / noise.gamma()), static_cast<unsigned long>(-g.t())));
    if (!closed_form_ok || it == by_key.end() || it->second->eta.is_infinite() || it->second->eta.value() != ratio) {
      report.ratios_match = false;
      detail << "ratio mismatch at c=" << g.c << " t=" << g.t() << "; ";
    }
  }

  report.bounds_match = true;
  const Rational probes[] = {0, Rational(1, 5), Rational(1, 2), Rational(2, 3), Rational(9, 10), 1};
  const BoundProfile profile(table);
  for (const auto& p : probes) {
    const Rational lb = profile.lower(p), ub = profile.upper(p);
    const Rational lb_ref = brute_force_lb(masses, p), ub_ref = brute_force_ub(masses, p);
    if (lb != lb_ref || ub != ub_ref) {
      report.bounds_match = false;
      detail << "bound mismatch at p=" << to_exact(p) << " (lb " << to_exact(lb) << " vs " << to_exact(lb_ref)
             << ", ub " << to_exact(ub) << " vs " << to_exact(ub_ref) << "); ";
    }
  }
  report.detail = detail.str();
  return report;
}

std::vector<TinyConfig> default_grid() {
  std::vector<TinyConfig> grid;
  const Rational rhos[] = {Rational(1, 2), Rational(4, 5)};
  const PerturbationKind kinds[] = {PerturbationKind::FeatureFlip, PerturbationKind::FeatureLabelFlip,
                                    PerturbationKind::LabelFlip};
  const AttackMode modes[] = {AttackMode::TriggerLess, AttackMode::Backdoor};
  std::uint64_t seed = 1;
  for (unsigned long n = 1; n <= 3; ++n)
    for (unsigned long k = 1; k <= 2; ++k)
      for (unsigned d = 1; d <= 2; ++d)
        for (unsigned K = 1; K <= 2; ++K)
          for (const auto& rho : rhos)
            for (auto kind : kinds)
              for (auto mode : modes) {
                if (kind == PerturbationKind::LabelFlip && mode == AttackMode::Backdoor) continue;
                std::vector<std::optional<unsigned>> budgets;
                if (kind == PerturbationKind::LabelFlip) {
                  budgets = {1u};
                } else {
                  for (unsigned s = 1; s <= d; ++s) budgets.emplace_back(s);
                  if (kind == PerturbationKind::FeatureLabelFlip) budgets.emplace_back(std::nullopt);
                }
                for (const auto& s : budgets)
                  for (unsigned long r = 0; r <= n; ++r) {
                    TinyConfig config{Problem{n, k, d, mode}, K, rho, PerturbationSpec(kind, s), r, std::nullopt};
                    if (sample_space_size(config) > kOracleSizeLimit) continue;
                    grid.push_back(config);
                    if (n == 3 && r > 0) {
                      config.placement_seed = seed++;
                      grid.push_back(config);
                    }
                  }
              }
  return grid;
}

}  // namespace bagflip
