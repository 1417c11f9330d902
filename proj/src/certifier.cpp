#include "bagflip/certifier.hpp"

#include "bagflip/csv.hpp"
#include "bagflip/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace bagflip {

namespace {

struct RatioClass {
  ExtendedRational eta;
  Rational clean;
  Rational poisoned;
};

std::vector<RatioClass> merged_classes(const SubspaceTable& table) {
  std::vector<RatioClass> classes;
  classes.reserve(table.entries.size());
  for (const auto& e : table.entries) classes.push_back({e.eta, e.mass_clean, e.mass_poisoned});
  std::sort(classes.begin(), classes.end(), [](const RatioClass& a, const RatioClass& b) { return a.eta > b.eta; });
  std::vector<RatioClass> merged;
  for (auto& c : classes) {
    if (!merged.empty() && merged.back().eta == c.eta) {
      merged.back().clean += c.clean;
      merged.back().poisoned += c.poisoned;
    } else {
      merged.push_back(std::move(c));
    }
  }
  return merged;
}

}  // namespace

BoundProfile::BoundProfile(const SubspaceTable& table)
    : delta_(table.delta), truncated_clean_(table.truncated_clean_mass) {
  const std::vector<RatioClass> classes = merged_classes(table);
  Rational clean_sum = 0, poisoned_sum = 0;
  for (const auto& c : classes) {
    if (c.clean == 0) continue;
    descending_.push_back({c.clean, c.poisoned, clean_sum, poisoned_sum});
    clean_sum += c.clean;
    poisoned_sum += c.poisoned;
  }
  kept_clean_ = clean_sum;

  clean_sum = 0;
  poisoned_sum = 0;
  for (auto it = classes.rbegin(); it != classes.rend(); ++it) {
    kept_poisoned_ += it->poisoned;
    if (it->poisoned == 0) continue;
    if (it->clean == 0) {
      free_poisoned_ += it->poisoned;
      continue;
    }
    ascending_.push_back({it->clean, it->poisoned, clean_sum, poisoned_sum});
    clean_sum += it->clean;
    poisoned_sum += it->poisoned;
  }
}

Rational BoundProfile::lower(const Rational& p_star, std::optional<std::size_t>* pivot) const {
  if (p_star < 0) throw std::invalid_argument("p* must be nonnegative");
  if (p_star > kept_clean_) throw std::invalid_argument("p* exceeds the clean mass of the table");
  if (pivot) pivot->reset();
  if (p_star == 0) return 0;
  // First class whose running clean mass reaches p*.
  auto it = std::lower_bound(descending_.begin(), descending_.end(), p_star,
                             [](const Step& s, const Rational& p) { return s.clean_before + s.clean < p; });
  if (pivot) *pivot = static_cast<std::size_t>(it - descending_.begin());
  return it->poisoned_before + (p_star - it->clean_before) * it->poisoned / it->clean;
}

Rational BoundProfile::upper(const Rational& p_prime, std::optional<std::size_t>* pivot) const {
  if (p_prime < 0) throw std::invalid_argument("p' must be nonnegative");
  if (pivot) pivot->reset();
  if (p_prime == 0) return free_poisoned_;
  auto it = std::lower_bound(ascending_.begin(), ascending_.end(), p_prime,
                             [](const Step& s, const Rational& p) { return s.clean_before + s.clean < p; });
  if (it == ascending_.end()) return kept_poisoned_;
  if (pivot) *pivot = static_cast<std::size_t>(it - ascending_.begin());
  return free_poisoned_ + it->poisoned_before + (p_prime - it->clean_before) * it->poisoned / it->clean;
}

Rational lower_bound(const SubspaceTable& table, const Rational& p_star) { return BoundProfile(table).lower(p_star); }

Rational upper_bound(const SubspaceTable& table, const Rational& p_prime) {
  return BoundProfile(table).upper(p_prime);
}

NPResult relaxed_bounds(const SubspaceTable& table, const Rational& p_star, const Rational& p_prime,
                        CertMode mode) {
  return relaxed_bounds(BoundProfile(table), p_star, p_prime, mode);
}

NPResult relaxed_bounds(const BoundProfile& profile, const Rational& p_star, const Rational& p_prime,
                        CertMode mode) {
  if (!is_probability(p_star) || !is_probability(p_prime)) throw std::invalid_argument("p*, p' must lie in [0, 1]");
  NPResult out;
  Rational shrunk = p_star - profile.truncated_clean_mass();
  if (shrunk < 0) shrunk = 0;
  out.lb = profile.lower(shrunk, &out.i_lb);
  out.ub = profile.upper(p_prime, &out.i_ub) + profile.delta();
  out.certified = mode == CertMode::Binary ? out.lb > Rational(1, 2) : out.lb > out.ub;
  return out;
}

RadiusCertifier::RadiusCertifier(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                                 std::optional<unsigned long> kappa)
    : kappa_(kappa), grids_(problem, noise, spec, kept_selections(problem, kappa)) {}

std::shared_ptr<const BoundProfile> RadiusCertifier::profile(unsigned long r) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = profiles_.find(r); it != profiles_.end()) return it->second;
  }
  auto built = std::make_shared<const BoundProfile>(build_table(grids_, r, kappa_));
  std::lock_guard lock(mutex_);
  return profiles_.emplace(r, std::move(built)).first->second;
}

NPResult RadiusCertifier::bounds(unsigned long r, const Rational& p_star, const Rational& p_prime,
                                 CertMode mode) const {
  return relaxed_bounds(*profile(r), p_star, p_prime, mode);
}

bool RadiusCertifier::certifies(unsigned long r, const Rational& p_star, const Rational& p_prime,
                                CertMode mode) const {
  return bounds(r, p_star, p_prime, mode).certified;
}

std::optional<unsigned long> RadiusCertifier::binary_search_radius(const Rational& p_star, const Rational& p_prime,
                                                                   CertMode mode) const {
  if (!certifies(0, p_star, p_prime, mode)) return std::nullopt;
  unsigned long lo = 0, hi = problem().n + 1;  // lo certifies, hi does not (n + 1 is a sentinel)
  while (hi - lo > 1) {
    const unsigned long mid = lo + (hi - lo) / 2;
    if (certifies(mid, p_star, p_prime, mode)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::optional<unsigned long> RadiusCertifier::linear_scan_radius(const Rational& p_star, const Rational& p_prime,
                                                                 CertMode mode) const {
  if (!certifies(0, p_star, p_prime, mode)) return std::nullopt;
  unsigned long r = 0;
  while (r < problem().n && certifies(r + 1, p_star, p_prime, mode)) ++r;
  return r;
}

std::optional<unsigned long> RadiusCertifier::certified_radius(const Rational& p_star, const Rational& p_prime,
                                                               CertMode mode) const {
  const auto found = binary_search_radius(p_star, p_prime, mode);
  if (problem().n <= kLinearScanLimit) return linear_scan_radius(p_star, p_prime, mode);
  if (found && (!certifies(*found, p_star, p_prime, mode) ||
                (*found < problem().n && certifies(*found + 1, p_star, p_prime, mode)))) {
    throw std::logic_error("radius search guard failed");
  }
  return found;
}

std::optional<unsigned long> certified_radius(const Problem& problem, const NoiseModel& noise,
                                              const PerturbationSpec& spec, const Rational& p_star,
                                              const Rational& p_prime, std::optional<unsigned long> kappa,
                                              CertMode mode) {
  return RadiusCertifier(problem, noise, spec, kappa).certified_radius(p_star, p_prime, mode);
}

const RadiusRow* RadiusTable::find(unsigned long n_star, unsigned long n_prime) const {
  for (const auto& row : rows) {
    if (row.n_star == n_star && (mode == CertMode::Binary || row.n_prime == n_prime)) return &row;
  }
  return nullptr;
}

RadiusTable build_radius_table(const Problem& problem, const NoiseModel& noise, const PerturbationSpec& spec,
                               const RadiusTableOptions& options) {
  if (options.trials == 0) throw std::invalid_argument("N must be at least 1");
  if (options.classes < 2) throw std::invalid_argument("at least two labels are required");
  const unsigned long N = options.trials;
  const Rational level = bonferroni_level(options.alpha, options.m);

  RadiusTable table;
  table.mode = options.classes == 2 ? CertMode::Binary : CertMode::MultiClass;
  table.trials = N;
  for (unsigned long n_star = 0; n_star <= N; ++n_star) {
    if (table.mode == CertMode::Binary) {
      table.rows.push_back({n_star, N - n_star, 0, 0, std::nullopt});
    } else {
      for (unsigned long n_prime = 0; n_prime <= std::min(n_star, N - n_star); ++n_prime) {
        table.rows.push_back({n_star, n_prime, 0, 0, std::nullopt});
      }
    }
  }

  const RadiusCertifier certifier(problem, noise, spec, options.kappa);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < table.rows.size(); i = next++) {
      RadiusRow& row = table.rows[i];
      row.p_star = clopper_pearson_lower(row.n_star, N, level, options.classes, options.precision_bits);
      row.p_prime = clopper_pearson_upper(row.n_prime, N, level, options.classes, options.precision_bits);
      if (1 - row.p_star < row.p_prime) row.p_prime = 1 - row.p_star;
      row.radius = certifier.certified_radius(row.p_star, row.p_prime, table.mode);
    }
  };
  const unsigned threads = std::max(1u, options.threads);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return table;
}

void write_radius_table(std::ostream& out, const RadiusTable& table, bool exact, int digits) {
  auto render = [&](const Rational& q) { return exact ? to_exact(q) : to_decimal(q, digits); };
  out << "n_star,n_prime,p_star,p_prime,radius\n";
  for (const auto& row : table.rows) {
    out << row.n_star << ',' << row.n_prime << ',' << render(row.p_star) << ',' << render(row.p_prime) << ','
        << (row.radius ? static_cast<long>(*row.radius) : -1L) << '\n';
  }
}

RadiusTable read_radius_table(std::istream& in) {
  const CsvTable csv = read_csv(in);
  const std::size_t c_star = csv.column("n_star"), c_prime = csv.column("n_prime"), c_ps = csv.column("p_star"),
                    c_pp = csv.column("p_prime"), c_radius = csv.column("radius");
  RadiusTable table;
  for (const auto& row : csv.rows) {
    RadiusRow out;
    out.n_star = parse_count(row, c_star);
    out.n_prime = parse_count(row, c_prime);
    try {
      out.p_star = parse_rational(row.cells[c_ps]);
      out.p_prime = parse_rational(row.cells[c_pp]);
    } catch (const std::invalid_argument& e) {
      throw CsvError(row.line, e.what());
    }
    const long radius = parse_integer(row, c_radius);
    if (radius < -1) throw CsvError(row.line, "radius must be -1 (abstain) or nonnegative");
    if (radius >= 0) out.radius = static_cast<unsigned long>(radius);
    table.trials = std::max(table.trials, out.n_star + out.n_prime);
    table.rows.push_back(std::move(out));
  }
  table.mode = CertMode::Binary;
  for (const auto& row : table.rows) {
    if (row.n_star + row.n_prime != table.trials) table.mode = CertMode::MultiClass;
  }
  return table;
}

}  // namespace bagflip
