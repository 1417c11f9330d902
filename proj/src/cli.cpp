#include "bagflip/cli.hpp"

#include "bagflip/certifier.hpp"
#include "bagflip/csv.hpp"
#include "bagflip/estimator.hpp"
#include "bagflip/harness.hpp"
#include "bagflip/kl_bound.hpp"
#include "bagflip/oracle.hpp"
#include "bagflip/partition.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

namespace bagflip {

namespace {

struct ProblemFlags {
  unsigned long n = 0, k = 0;
  unsigned d = 0, K = 1;
  std::string rho, perturbation = "f", s = "1", mode = "triggerless";
  std::optional<unsigned long> kappa;

  void attach(CLI::App* cmd, bool with_kappa = true) {
    cmd->add_option("--n", n, "training-set size")->required();
    cmd->add_option("--k", k, "bag size")->required();
    cmd->add_option("--d", d, "feature dimension")->required();
    cmd->add_option("--K", K, "alternative categories per feature (domain {0..K})")->capture_default_str();
    cmd->add_option("--rho", rho, "keep probability, e.g. 4/5 or 0.8")->required();
    cmd->add_option("--perturbation", perturbation, "f, fl or l")->capture_default_str();
    cmd->add_option("--s", s, "per-example flip budget (integer or inf)")->capture_default_str();
    cmd->add_option("--mode", mode, "triggerless or backdoor")->capture_default_str();
    if (with_kappa) cmd->add_option("--kappa", kappa, "truncate subspaces with more than kappa perturbed selections");
  }

  Problem problem() const { return Problem{n, k, d, parse_mode(mode)}; }
  NoiseModel noise() const { return NoiseModel(parse_rational(rho), K); }
  PerturbationSpec spec() const { return PerturbationSpec(parse_kind(perturbation), parse_budget(s)); }
};

struct Output {
  std::string path;
  std::ofstream file;

  std::ostream& open(std::ostream& fallback) {
    if (path.empty() || path == "-") return fallback;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    return file;
  }
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return in;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact certified poisoning radii for bagging with flip noise"};
  app.name("bagflip");
  app.require_subcommand(1);

  // table
  auto* table_cmd = app.add_subcommand("table", "memoized radius table for every prediction-count pair");
  ProblemFlags table_flags;
  table_flags.attach(table_cmd);
  RadiusTableOptions table_opts;
  std::string table_alpha = "0.001", table_out;
  bool table_exact = false, table_dump = false;
  int table_digits = 12;
  unsigned long dump_r = 0;
  table_opts.threads = default_threads();
  table_cmd->add_option("--N", table_opts.trials, "number of trained models");
  table_cmd->add_option("--alpha", table_alpha, "family-wise error rate")->capture_default_str();
  table_cmd->add_option("--m", table_opts.m, "test-set size for the Bonferroni correction")->capture_default_str();
  table_cmd->add_option("--classes", table_opts.classes, "label count |C| (2 = binary)")->capture_default_str();
  table_cmd->add_option("--threads", table_opts.threads, "worker threads");
  table_cmd->add_option("--precision", table_opts.precision_bits, "Clopper-Pearson bisection bits")
      ->capture_default_str();
  table_cmd->add_flag("--exact", table_exact, "write probabilities as num/den");
  table_cmd->add_option("--digits", table_digits, "significant digits for decimals")->capture_default_str();
  table_cmd->add_flag("--dump", table_dump, "write the subspace partition for --r instead");
  table_cmd->add_option("--r", dump_r, "radius for --dump");
  table_cmd->add_option("--out", table_out, "output CSV (default stdout)");

  // certify
  auto* certify_cmd = app.add_subcommand("certify", "join prediction counts to radius-table rows");
  std::string certify_counts_path, certify_table_path, certify_out;
  certify_cmd->add_option("--counts", certify_counts_path, "counts CSV")->required();
  certify_cmd->add_option("--table", certify_table_path, "radius-table CSV")->required();
  certify_cmd->add_option("--out", certify_out, "output CSV (default stdout)");

  // estimate
  auto* estimate_cmd = app.add_subcommand("estimate", "Clopper-Pearson estimates of p* and p'");
  std::string estimate_counts_path, estimate_alpha = "0.001", estimate_m = "auto", estimate_out;
  unsigned estimate_precision = kDefaultPrecisionBits;
  bool estimate_exact = false;
  int estimate_digits = 12;
  estimate_cmd->add_option("--counts", estimate_counts_path, "counts CSV")->required();
  estimate_cmd->add_option("--alpha", estimate_alpha, "family-wise error rate")->capture_default_str();
  estimate_cmd->add_option("--m", estimate_m, "test-set size, or auto for the row count")->capture_default_str();
  estimate_cmd->add_option("--precision", estimate_precision, "bisection bits")->capture_default_str();
  estimate_cmd->add_flag("--exact", estimate_exact, "write probabilities as num/den");
  estimate_cmd->add_option("--digits", estimate_digits, "significant digits for decimals")->capture_default_str();
  estimate_cmd->add_option("--out", estimate_out, "output CSV (default stdout)");

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "train N noised-bag models and count predictions");
  std::string sim_data, sim_test, sim_learner = "1nn", sim_rho, sim_perturbation = "f", sim_s = "1",
                                  sim_mode = "triggerless", sim_out;
  MonteCarloOptions sim_opts;
  unsigned sim_K = 1;
  std::optional<unsigned> sim_classes;
  std::optional<std::uint64_t> sim_seed;
  sim_opts.threads = default_threads();
  simulate_cmd->add_option("--data", sim_data, "training CSV")->required();
  simulate_cmd->add_option("--test", sim_test, "test CSV")->required();
  simulate_cmd->add_option("--learner", sim_learner, "majority or 1nn")->capture_default_str();
  simulate_cmd->add_option("--N", sim_opts.trials, "number of models")->required();
  simulate_cmd->add_option("--k", sim_opts.k, "bag size")->required();
  simulate_cmd->add_option("--rho", sim_rho, "keep probability")->required();
  simulate_cmd->add_option("--K", sim_K, "alternative categories")->capture_default_str();
  simulate_cmd->add_option("--perturbation", sim_perturbation, "f, fl or l")->capture_default_str();
  simulate_cmd->add_option("--s", sim_s, "flip budget (integer or inf)")->capture_default_str();
  simulate_cmd->add_option("--mode", sim_mode, "triggerless or backdoor")->capture_default_str();
  simulate_cmd->add_option("--classes", sim_classes, "label count (default: largest label + 1, at least 2)");
  simulate_cmd->add_option("--seed", sim_seed, "master seed (default: drawn from entropy and reported)");
  simulate_cmd->add_option("--threads", sim_opts.threads, "worker threads");
  simulate_cmd->add_option("--out", sim_out, "counts CSV (default stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "certified and normal accuracy against R");
  std::string eval_counts, eval_table, eval_out;
  unsigned long eval_n = 0;
  eval_cmd->add_option("--counts", eval_counts, "counts CSV")->required();
  eval_cmd->add_option("--table", eval_table, "radius-table CSV")->required();
  eval_cmd->add_option("--n", eval_n, "training-set size")->required();
  eval_cmd->add_option("--out", eval_out, "curve CSV (default stdout)");

  // kl
  auto* kl_cmd = app.add_subcommand("kl", "closed-form KL radius (trigger-less feature flips)");
  std::string kl_p, kl_rho;
  KlBoundInput kl_input;
  unsigned kl_K = 1;
  kl_cmd->add_option("--p-star", kl_p, "lower bound on the top-label probability")->required();
  kl_cmd->add_option("--n", kl_input.n, "training-set size")->required();
  kl_cmd->add_option("--k", kl_input.k, "bag size")->required();
  kl_cmd->add_option("--rho", kl_rho, "keep probability")->required();
  kl_cmd->add_option("--K", kl_K, "alternative categories")->capture_default_str();
  kl_cmd->add_option("--s", kl_input.s, "flip budget")->capture_default_str();

  // oracle-check
  auto* oracle_cmd = app.add_subcommand("oracle-check", "compare the partition against brute-force enumeration");
  std::string oracle_grid = "default";
  bool oracle_verbose = false;
  std::optional<std::vector<unsigned>> flip_table;
  oracle_cmd->add_option("--grid", oracle_grid, "grid name")->check(CLI::IsMember({"default"}))->capture_default_str();
  oracle_cmd->add_flag("--verbose", oracle_verbose, "print every configuration");
  oracle_cmd->add_option("--flip-table", flip_table, "dump L(u,v) for S DIM K as u,v,count")
      ->expected(3)
      ->delimiter(',');

  std::vector<std::string> argv_storage{"bagflip"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto selected = app.get_subcommands();
    err << (selected.empty() ? app.help() : selected.front()->help());
    return kExitUsage;
  }

  try {
    if (table_cmd->parsed()) {
      const Problem problem = table_flags.problem();
      const NoiseModel noise = table_flags.noise();
      const PerturbationSpec spec = table_flags.spec();
      Output sink{table_out, {}};
      std::ostream& os = sink.open(out);
      if (table_dump) {
        const SubspaceTable t = build_table(problem, noise, spec, dump_r, table_flags.kappa);
        auto render = [&](const Rational& q) { return table_exact ? to_exact(q) : to_decimal(q, table_digits); };
        os << "c,t,mass_clean,mass_poisoned,eta\n";
        for (const auto& e : t.entries) {
          os << e.c << ',' << e.t << ',' << render(e.mass_clean) << ',' << render(e.mass_poisoned) << ','
             << (e.eta.is_infinite() ? std::string("inf") : render(e.eta.value())) << '\n';
        }
        return kExitOk;
      }
      if (table_cmd->count("--N") == 0) throw CLI::RequiredError("--N");
      table_opts.alpha = parse_rational(table_alpha);
      table_opts.kappa = table_flags.kappa;
      write_radius_table(os, build_radius_table(problem, noise, spec, table_opts), table_exact, table_digits);
      return kExitOk;
    }

    if (certify_cmd->parsed()) {
      auto counts_in = open_input(certify_counts_path);
      auto table_in = open_input(certify_table_path);
      const auto counts = read_counts_csv(counts_in);
      const RadiusTable table = read_radius_table(table_in);
      const auto results = certify_counts(counts, table);
      Output sink{certify_out, {}};
      std::ostream& os = sink.open(out);
      os << "test_id,true_label,prediction,radius\n";
      for (const auto& r : results) {
        os << r.test_id << ',' << r.true_label << ',' << (r.prediction ? static_cast<long>(*r.prediction) : -1L)
           << ',' << (r.radius ? static_cast<long>(*r.radius) : -1L) << '\n';
      }
      return kExitOk;
    }

    if (estimate_cmd->parsed()) {
      auto in = open_input(estimate_counts_path);
      const auto counts = read_counts_csv(in);
      const Rational alpha = parse_rational(estimate_alpha);
      unsigned long m = counts.size();
      if (estimate_m != "auto") {
        const Rational given = parse_rational(estimate_m);
        if (given.get_den() != 1 || given < 1) throw std::invalid_argument("--m must be a positive integer or auto");
        m = given.get_num().get_ui();
      }
      Output sink{estimate_out, {}};
      std::ostream& os = sink.open(out);
      auto render = [&](const Rational& q) { return estimate_exact ? to_exact(q) : to_decimal(q, estimate_digits); };
      os << "test_id,true_label,y_star,y_prime,p_star,p_prime\n";
      for (const auto& row : counts) {
        const EstimatedProbs e = estimate(row, alpha, m, estimate_precision);
        os << row.test_id << ',' << row.true_label << ',' << e.y_star << ',' << e.y_prime << ',' << render(e.p_star)
           << ',' << render(e.p_prime) << '\n';
      }
      return kExitOk;
    }

    if (simulate_cmd->parsed()) {
      auto data_in = open_input(sim_data);
      auto test_in = open_input(sim_test);
      const Dataset train = read_dataset_csv(data_in);
      const Dataset test = read_dataset_csv(test_in);
      sim_opts.noise = NoiseModel(parse_rational(sim_rho), sim_K);
      sim_opts.spec = PerturbationSpec(parse_kind(sim_perturbation), parse_budget(sim_s));
      sim_opts.mode = parse_mode(sim_mode);
      validate(Problem{train.size(), sim_opts.k, train.d, sim_opts.mode}, sim_opts.spec);
      if (sim_classes) {
        sim_opts.classes = *sim_classes;
      } else if (sim_opts.spec.kind() != PerturbationKind::FeatureFlip) {
        sim_opts.classes = sim_K + 1;
      } else {
        unsigned largest = 1;
        for (unsigned y : train.labels) largest = std::max(largest, y);
        for (unsigned y : test.labels) largest = std::max(largest, y);
        sim_opts.classes = largest + 1;
      }
      if (!sim_seed) {
        sim_seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
        err << "seed: " << *sim_seed << "\n";
      }
      sim_opts.seed = *sim_seed;
      const auto learner = make_learner(sim_learner);
      const auto counts = run_monte_carlo(train, test, *learner, sim_opts);
      Output sink{sim_out, {}};
      write_counts_csv(sink.open(out), counts);
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      auto counts_in = open_input(eval_counts);
      auto table_in = open_input(eval_table);
      const auto counts = read_counts_csv(counts_in);
      const RadiusTable table = read_radius_table(table_in);
      const auto curve = accuracy_curve(certify_counts(counts, table), eval_n);
      Output sink{eval_out, {}};
      write_curve_csv(sink.open(out), curve);
      return kExitOk;
    }

    if (kl_cmd->parsed()) {
      kl_input.p_star = parse_rational(kl_p);
      kl_input.noise = NoiseModel(parse_rational(kl_rho), kl_K);
      out << kl_radius(kl_input) << "\n";
      return kExitOk;
    }

    if (oracle_cmd->parsed()) {
      if (flip_table) {
        const auto& v = *flip_table;
        const auto table = flip_count_table(v[0], v[1], v[2]);
        out << "u,v,count\n";
        for (unsigned u = 0; u <= v[1]; ++u) {
          for (unsigned w = 0; w <= v[1]; ++w) out << u << ',' << w << ',' << table->at(u, w).get_str() << '\n';
        }
        return kExitOk;
      }
      std::size_t failures = 0;
      const auto grid = default_grid();
      for (const auto& config : grid) {
        const CheckReport report = check_config(config);
        if (!report.ok()) ++failures;
        if (oracle_verbose || !report.ok()) {
          out << (report.ok() ? "PASS " : "FAIL ") << config.describe();
          if (!report.ok()) out << " : " << report.detail;
          out << "\n";
        }
      }
      out << grid.size() - failures << "/" << grid.size() << " configurations match\n";
      return failures == 0 ? kExitOk : kExitMismatch;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CsvError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace bagflip
