#include "bagflip/cli.hpp"
#include "bagflip/harness.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace bagflip;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("bagflip_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_datasets(const TempDir& dir) {
  Dataset train, test;
  train.d = test.d = 4;
  Rng rng = stream_rng(5, 0);
  for (int i = 0; i < 30; ++i) {
    std::vector<unsigned> x(4);
    for (auto& v : x) v = static_cast<unsigned>(rng() % 2);
    const unsigned y = x[0] + x[1] >= 1 ? 1 : 0;
    (i < 24 ? train : test).push_back(x, y);
  }
  std::ofstream a(dir / "train.csv"), b(dir / "test.csv");
  write_dataset_csv(a, train);
  write_dataset_csv(b, test);
}

}  // namespace

TEST_CASE("kl subcommand") {
  const Run r = run({"kl", "--p-star", "0.9", "--n", "1000", "--k", "50", "--rho", "4/5"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "12\n");
  CHECK(run({"kl", "--p-star", "0.4", "--n", "1000", "--k", "50", "--rho", "4/5"}).code == kExitValidation);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  const Run missing = run({"eval", "--counts", "a.csv", "--table", "b.csv"});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("--n") != std::string::npos);
  CHECK(run({"table", "--n", "10", "--k", "2", "--d", "1", "--rho", "1/2"}).code == kExitUsage);
  CHECK(run({"kl", "--help"}).code == kExitOk);
}

TEST_CASE("validation errors") {
  CHECK(run({"table", "--n", "10", "--k", "2", "--d", "1", "--rho", "3/2", "--N", "5"}).code == kExitValidation);
  CHECK(run({"table", "--n", "10", "--k", "2", "--d", "1", "--rho", "1/2", "--N", "5", "--s", "2"}).code ==
        kExitValidation);
  CHECK(run({"table", "--n", "10", "--k", "2", "--d", "1", "--rho", "1/2", "--perturbation", "l", "--mode",
             "backdoor", "--N", "5"})
            .code == kExitValidation);
  CHECK(run({"certify", "--counts", "/nonexistent/c.csv", "--table", "/nonexistent/t.csv"}).code == kExitValidation);
}

TEST_CASE("table dump and flip table") {
  const Run dump = run({"table", "--n", "2", "--k", "1", "--d", "1", "--rho", "4/5", "--mode", "backdoor", "--dump",
                        "--r", "1", "--exact"});
  CHECK(dump.code == kExitOk);
  CHECK(dump.out.rfind("c,t,mass_clean,mass_poisoned,eta\n", 0) == 0);
  CHECK(dump.out.find(",inf\n") == std::string::npos);

  const Run flips = run({"oracle-check", "--flip-table", "1,1,1"});
  CHECK(flips.code == kExitOk);
  CHECK(flips.out == "u,v,count\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n");
}

TEST_CASE("pipeline from datasets to the accuracy curve") {
  TempDir dir;
  write_datasets(dir);
  const std::vector<std::string> simulate{"simulate", "--data",    dir / "train.csv", "--test", dir / "test.csv",
                                          "--N",      "40",        "--k",             "5",      "--rho",
                                          "9/10",     "--seed",    "123",             "--threads", "2",
                                          "--out",    dir / "counts.csv"};
  REQUIRE(run(simulate).code == kExitOk);
  const std::string first = slurp(dir / "counts.csv");
  REQUIRE(run(simulate).code == kExitOk);
  CHECK(slurp(dir / "counts.csv") == first);

  REQUIRE(run({"table", "--n", "24", "--k", "5", "--d", "4", "--rho", "9/10", "--N", "40", "--m", "6", "--out",
               dir / "table.csv"})
              .code == kExitOk);
  const Run estimate = run({"estimate", "--counts", dir / "counts.csv", "--alpha", "0.001"});
  CHECK(estimate.code == kExitOk);
  CHECK(estimate.out.rfind("test_id,true_label,y_star,y_prime,p_star,p_prime\n", 0) == 0);

  const Run certify = run({"certify", "--counts", dir / "counts.csv", "--table", dir / "table.csv"});
  CHECK(certify.code == kExitOk);
  CHECK(certify.out.rfind("test_id,true_label,prediction,radius\n", 0) == 0);

  const Run eval = run({"eval", "--counts", dir / "counts.csv", "--table", dir / "table.csv", "--n", "24"});
  REQUIRE(eval.code == kExitOk);
  std::istringstream lines(eval.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "R_percent,certified_accuracy,normal_accuracy");
  double previous = 2;
  int points = 0;
  while (std::getline(lines, line)) {
    double r, certified, normal;
    char c1, c2;
    std::istringstream(line) >> r >> c1 >> certified >> c2 >> normal;
    CHECK(certified <= previous);
    CHECK(certified <= normal);
    previous = certified;
    ++points;
  }
  CHECK(points >= 1);

  const Run wrong_n = run({"eval", "--counts", dir / "counts.csv", "--table", dir / "table.csv", "--n", "0"});
  CHECK(wrong_n.code == kExitValidation);
}

TEST_CASE("installed binary exit codes") {
  const std::string cli = BAGFLIP_CLI_PATH;
  auto status = [](const std::string& command) {
    const int raw = std::system((command + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(cli + " kl --p-star 9/10 --n 1000 --k 50 --rho 4/5 --s 2") == kExitOk);
  CHECK(status(cli + " oracle-check") == kExitOk);
  CHECK(status(cli + " eval --counts x --table y") == kExitUsage);
  CHECK(status(cli + " kl --p-star 1/2 --n 10 --k 2 --rho 4/5") == kExitValidation);
}
