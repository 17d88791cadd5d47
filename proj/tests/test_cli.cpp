#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "mdpagg/io.hpp"

extern std::string g_cli_path;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::filesystem::path& p) {
  return std::filesystem::exists(p) ? mdpagg::read_file(p.string()) : std::string();
}

// Runs the installed binary through the shell so stdout/stderr and the exit
// code can be inspected; `env_prefix` lets tests set MDPAGG_SEED and friends.
CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("mdpagg_cli_io_" + std::to_string(counter++));
  const std::string out_file = base.string() + ".out";
  const std::string err_file = base.string() + ".err";
  const std::string cmd = env_prefix + "'" + g_cli_path + "' " + args + " >" +
                          out_file + " 2>" + err_file;
  const int raw = std::system(cmd.c_str());
  CliResult result;
  if (WIFEXITED(raw)) result.code = WEXITSTATUS(raw);
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  std::filesystem::remove(out_file);
  std::filesystem::remove(err_file);
  return result;
}

bool cli_available() {
  if (!g_cli_path.empty()) return true;
  MESSAGE("no --cli-path given; skipping");
  return false;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve prints the chain policy and start value") {
  if (!cli_available()) return;
  const CliResult r = run_cli("solve --design 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("threshold policy, T = 23") != std::string::npos);
  CHECK(r.out.find("65.34018562967265") != std::string::npos);
}

TEST_CASE("solve honors the lower-reward preset") {
  if (!cli_available()) return;
  const CliResult r = run_cli("solve --design appendix-c");
  CHECK(r.code == 0);
  CHECK(r.out.find("threshold policy, T = 21") != std::string::npos);
}

TEST_CASE("solve on an aggregate with the constrained search") {
  if (!cli_available()) return;
  const CliResult r = run_cli("solve --design 1 --K 25 --threshold-assumption");
  CHECK(r.code == 0);
  CHECK(r.out.find("threshold policy, T = 6") != std::string::npos);
  CHECK(r.out.find("interior 1..25") != std::string::npos);
}

TEST_CASE("out-of-range aggregation level is a usage error") {
  if (!cli_available()) return;
  const CliResult r = run_cli("solve --K 200");
  CHECK(r.code == 2);
  CHECK(r.err.find("K") != std::string::npos);
}

TEST_CASE("version and missing subcommand") {
  if (!cli_available()) return;
  const CliResult version = run_cli("--version");
  CHECK(version.code == 0);
  CHECK(version.out.find("1.0.0") != std::string::npos);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
}

TEST_CASE("experiment writes its tables and is rerun-stable") {
  if (!cli_available()) return;
  const TempDir dir("mdpagg_cli_experiment");
  const std::string a = dir.file("a");
  const std::string b = dir.file("b");
  const std::string flags = "experiment --M 10 --K 5 --R 2 --seed 99 --no-threshold-assumption";
  const CliResult first = run_cli(flags + " --jobs 2 --out " + a);
  CHECK(first.code == 0);
  CHECK(first.out.find("replication rows: 2") != std::string::npos);
  for (const char* name : {"results.csv", "summary.csv", "meta.json"})
    CHECK(std::filesystem::exists(std::filesystem::path(a) / name));

  const CliResult second = run_cli(flags + " --jobs 1 --out " + b);
  CHECK(second.code == 0);
  CHECK(slurp(a + "/results.csv") == slurp(b + "/results.csv"));
  CHECK(slurp(a + "/summary.csv") == slurp(b + "/summary.csv"));

  SUBCASE("report reads the output directory") {
    const CliResult report = run_cli("report " + a);
    CHECK(report.code == 0);
    CHECK(report.out.find("M,K,arm,mean,q25,q50,q75") != std::string::npos);
    CHECK(report.out.find("10,5,free,") != std::string::npos);
  }

  SUBCASE("plot renders a known figure and rejects unknown ones") {
    const CliResult plot = run_cli("plot " + a + " --figure regret");
    CHECK(plot.code == 0);
    CHECK(std::filesystem::exists(std::filesystem::path(a) / "regret_M10.svg"));
    CHECK(std::filesystem::exists(std::filesystem::path(a) / "regret_M10.csv"));

    const CliResult bogus = run_cli("plot " + a + " --figure histogram");
    CHECK(bogus.code == 2);
    CHECK(bogus.err.find("regret") != std::string::npos);
  }
}

TEST_CASE("simulate then estimate round trips through csv") {
  if (!cli_available()) return;
  const TempDir dir("mdpagg_cli_pipeline");
  const CliResult sim = run_cli("simulate --M 20 --seed 5 --out " + dir.path.string());
  CHECK(sim.code == 0);
  REQUIRE(std::filesystem::exists(dir.path / "counts.csv"));

  const CliResult est = run_cli("estimate " + dir.file("counts.csv") + " --K 10 --out " +
                                dir.path.string());
  CHECK(est.code == 0);
  CHECK(est.out.find("12x12") != std::string::npos);
  const std::string p_hat = slurp(dir.path / "p_hat.csv");
  CHECK(std::count(p_hat.begin(), p_hat.end(), '\n') == 12);
}

TEST_CASE("seed precedence between flag and environment") {
  if (!cli_available()) return;
  const TempDir dir("mdpagg_cli_seeds");
  const std::string flag_dir = dir.file("flag");
  const std::string env_dir = dir.file("env");
  const std::string both_dir = dir.file("both");
  const std::string other_dir = dir.file("other");

  CHECK(run_cli("simulate --M 10 --seed 7 --out " + flag_dir).code == 0);
  CHECK(run_cli("simulate --M 10 --out " + env_dir, "MDPAGG_SEED=7 ").code == 0);
  CHECK(run_cli("simulate --M 10 --seed 7 --out " + both_dir, "MDPAGG_SEED=3 ").code == 0);
  CHECK(run_cli("simulate --M 10 --seed 3 --out " + other_dir).code == 0);

  const std::string from_flag = slurp(flag_dir + "/counts.csv");
  CHECK(from_flag == slurp(env_dir + "/counts.csv"));
  CHECK(from_flag == slurp(both_dir + "/counts.csv"));
  CHECK(from_flag != slurp(other_dir + "/counts.csv"));

  const CliResult garbage = run_cli("solve", "MDPAGG_SEED=eleven ");
  CHECK(garbage.code == 2);
  CHECK(garbage.err.find("MDPAGG_SEED") != std::string::npos);
}

TEST_CASE("filesystem failures map to the i/o exit code") {
  if (!cli_available()) return;
  CHECK(run_cli("simulate --M 5 --out /dev/null/sub").code == 4);
  CHECK(run_cli("report /definitely/not/here").code == 4);
}

TEST_CASE("missing config file is a configuration error") {
  if (!cli_available()) return;
  const CliResult r = run_cli("solve --config /definitely/not/here.json");
  CHECK(r.code == 2);
}

}  // TEST_SUITE
