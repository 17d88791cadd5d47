#include <doctest.h>

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "generators.hpp"
#include "mdpagg/aggregation.hpp"
#include "mdpagg/chain.hpp"
#include "mdpagg/experiment.hpp"
#include "mdpagg/io.hpp"
#include "mdpagg/plot.hpp"
#include "mdpagg/solve.hpp"
#include "mdpagg/structure.hpp"

using namespace mdpagg;

namespace {

ExperimentConfig smoke_config() {
  ExperimentConfig cfg;
  cfg.M_list = {10, 25};
  cfg.K_list = {5, 100};
  cfg.R = 2;
  cfg.master_seed = 4242;
  return cfg;
}

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

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("policy structure handles one-action policies") {
  SUBCASE("all wait") {
    const PolicyStructure ps = analyze_policy(Policy{0, 0, 0, 0, 0});
    CHECK(ps.threshold == 0);
    CHECK(ps.lambda1 == 0);
    CHECK(ps.lambda0 == 1);
    CHECK(ps.gray_size == 0);
  }
  SUBCASE("all intervene") {
    const PolicyStructure ps = analyze_policy(Policy{0, 1, 1, 1, 0});
    CHECK(ps.threshold == 3);
    CHECK(ps.lambda1 == 3);
    CHECK(ps.lambda0 == 4);
  }
  SUBCASE("mixed defers to the gray-area decomposition") {
    const PolicyStructure ps = analyze_policy(Policy{0, 1, 0, 1, 0, 0});
    CHECK_FALSE(ps.threshold.has_value());
    CHECK(ps.lambda1 == 1);
    CHECK(ps.lambda0 == 4);
    CHECK(ps.gray_size == 2);
  }
}

TEST_CASE("regret of the optimal policy is exactly zero") {
  const MdpModel truth = build_ground_truth(ChainParams{});
  const Solution opt = solve_optimal(truth);
  CHECK(expected_regret(opt.policy, truth) == 0.0);
}

TEST_CASE("regret of never intervening exceeds 25 life-months") {
  const MdpModel truth = build_ground_truth(ChainParams{});
  const Policy never(102, kWait);
  CHECK(expected_regret(never, truth) > 25.0);
}

TEST_CASE("regret equals a hand-composed value difference") {
  const MdpModel truth = build_ground_truth(ChainParams{});
  Policy t20(102, kWait);
  for (int h = 1; h <= 20; ++h) t20[h] = kIntervene;
  const Vector v_opt = evaluate_policy(truth, solve_optimal(truth).policy);
  const Vector v_t20 = evaluate_policy(truth, t20);
  CHECK(expected_regret(t20, truth) ==
        doctest::Approx(v_opt(100) - v_t20(100)).epsilon(1e-12));
}

TEST_CASE("threshold search picks the better single-state action") {
  MdpModel model;
  model.discount = 0.9;
  model.wait_tpm = Matrix::Zero(3, 3);
  model.wait_tpm(0, 0) = 1.0;
  model.wait_tpm(2, 2) = 1.0;
  model.wait_tpm(1, 0) = 0.5;
  model.wait_tpm(1, 1) = 0.5;
  model.intervene_tpm = build_intervention_tpm(1);
  model.rewards = Matrix::Zero(3, 2);
  model.rewards(1, kWait) = 1.0;
  model.rewards(1, kIntervene) = 5.0;  // beats 1/(1-0.45)
  const Policy policy = best_threshold_policy(model);
  CHECK(policy[1] == kIntervene);
  model.rewards(1, kIntervene) = 1.0;
  CHECK(best_threshold_policy(model)[1] == kWait);
}

TEST_CASE("threshold search matches independent enumeration on an aggregate") {
  const MdpModel full = build_ground_truth(ChainParams{});
  const Vector beta = modified_stationary(full.wait_tpm);
  const MdpModel agg =
      aggregate_model(full, beta, build_partition(100, 5));
  const Policy policy = best_threshold_policy(agg);
  const auto [oracle_t, oracle_v] = testgen::enumerate_thresholds(agg, -1);
  CHECK(is_threshold(policy) == oracle_t);
  const Vector v = evaluate_policy(agg, policy);
  CHECK(v(6) == doctest::Approx(oracle_v(6)).epsilon(1e-12));
}

TEST_CASE("threshold search agrees with the unconstrained chain optimum") {
  const MdpModel truth = build_ground_truth(ChainParams{});
  const Policy constrained = best_threshold_policy(truth);
  const Solution unconstrained = solve_optimal(truth);
  CHECK(constrained == unconstrained.policy);
  CHECK(is_threshold(constrained) == 23);
}

TEST_CASE("smoke grid has full cardinality and nonnegative regret") {
  const ExperimentConfig cfg = smoke_config();
  const ExperimentResults results = run_experiment(cfg, 2);
  // 2 M x 2 K x 2 replications x 2 arms.
  CHECK(results.rows.size() == 16);
  for (const auto& row : results.rows) {
    CAPTURE(row.M);
    CAPTURE(row.K);
    CAPTURE(row.r);
    CHECK(row.regret_months >= -1e-8);
    CHECK(row.policy_J.size() == 102);
    CHECK(row.policy_K.size() == static_cast<std::size_t>(row.K + 2));
    CHECK(row.values_estimated.size() == row.K + 2);
    CHECK(row.values_never.size() == row.K + 2);
  }
  // Sorted by (M, K, r, arm).
  for (std::size_t i = 1; i < results.rows.size(); ++i) {
    const auto& a = results.rows[i - 1];
    const auto& b = results.rows[i];
    CHECK(std::tie(a.M, a.K, a.r, a.threshold_assumed) <
          std::tie(b.M, b.K, b.r, b.threshold_assumed));
  }
}

TEST_CASE("stored gray areas reconstruct from the stored policies") {
  const ExperimentResults results = run_experiment(smoke_config(), 1);
  for (const auto& row : results.rows) {
    const PolicyStructure ps = analyze_policy(row.policy_J);
    CHECK(ps.lambda1 == row.lambda1);
    CHECK(ps.lambda0 == row.lambda0);
    CHECK(ps.gray_size == row.gray_size);
    CHECK(ps.threshold == row.threshold);
    const Partition part = build_partition(results.config.chain.J, row.K);
    CHECK(unaggregate_policy(row.policy_K, part) == row.policy_J);
  }
}

TEST_CASE("reruns and thread counts do not change the output bytes") {
  const ExperimentConfig cfg = smoke_config();
  const std::string once = results_csv_string(run_experiment(cfg, 1));
  const std::string twice = results_csv_string(run_experiment(cfg, 1));
  const std::string threaded = results_csv_string(run_experiment(cfg, 3));
  CHECK(once == twice);
  CHECK(once == threaded);
  CHECK(once.rfind("M,K,r,threshold_assumed,lambda1,lambda0,gray_size,"
                   "threshold_or_empty,regret_months,regret_per_thousand\n",
                   0) == 0);
}

TEST_CASE("replication data is shared across aggregation levels") {
  ExperimentConfig solo = smoke_config();
  solo.K_list = {5};
  solo.threshold_assumption = false;
  ExperimentConfig both = solo;
  both.K_list = {100, 5};
  const ExperimentResults a = run_experiment(solo, 1);
  const ExperimentResults b = run_experiment(both, 1);
  REQUIRE(a.rows.size() * 2 == b.rows.size());
  std::size_t bi = 0;
  for (const auto& row_a : a.rows) {
    while (bi < b.rows.size() && b.rows[bi].K != 5) ++bi;
    REQUIRE(bi < b.rows.size());
    const auto& row_b = b.rows[bi++];
    CHECK(row_a.M == row_b.M);
    CHECK(row_a.r == row_b.r);
    CHECK(row_a.policy_J == row_b.policy_J);
    CHECK(row_a.regret_months == row_b.regret_months);
  }

  ExperimentConfig unshared = both;
  unshared.share_data_across_k = false;
  const ExperimentResults c = run_experiment(unshared, 1);
  bool any_difference = false;
  for (std::size_t i = 0; i < b.rows.size(); ++i)
    if (b.rows[i].policy_J != c.rows[i].policy_J ||
        b.rows[i].regret_months != c.rows[i].regret_months)
      any_difference = true;
  CHECK(any_difference);
}

TEST_CASE("single-arm configs emit only unconstrained rows") {
  ExperimentConfig cfg = smoke_config();
  cfg.threshold_assumption = false;
  const ExperimentResults results = run_experiment(cfg, 1);
  CHECK(results.rows.size() == 8);
  for (const auto& row : results.rows) CHECK_FALSE(row.threshold_assumed);
}

TEST_CASE("summary statistics from fabricated rows") {
  ExperimentConfig cfg;
  cfg.chain.J = 6;
  cfg.K_list = {3};
  cfg.M_list = {10};
  cfg.R = 4;
  ExperimentResults results;
  results.config = cfg;
  const Partition part = build_partition(6, 3);
  for (int r = 0; r < 4; ++r) {
    ReplicationResult row;
    row.M = 10;
    row.K = 3;
    row.r = r;
    row.threshold_assumed = false;
    row.policy_K = Policy{0, 1, r % 2, 0, 0};
    row.policy_J = unaggregate_policy(row.policy_K, part);
    const PolicyStructure ps = analyze_policy(row.policy_J);
    row.lambda1 = ps.lambda1;
    row.lambda0 = ps.lambda0;
    row.gray_size = ps.gray_size;
    row.threshold = ps.threshold;
    row.regret_months = 0.001 * (r + 1);  // 1,2,3,4 per thousand
    row.values_estimated = Vector::Constant(5, 10.0 + r);
    row.values_never = Vector::Constant(5, 2.0);
    results.rows.push_back(std::move(row));
  }

  const SummaryTables summary = summarize(results);
  std::map<std::string, std::map<std::string, double>> tables;
  for (const auto& row : summary.rows) {
    CHECK(row.M == 10);
    CHECK(row.K == 3);
    tables[row.table][row.key] = row.value;
  }

  CHECK(tables["regret"]["mean"] == doctest::Approx(2.5));
  CHECK(tables["regret"]["q00"] == doctest::Approx(1.0));
  CHECK(tables["regret"]["q25"] == doctest::Approx(1.75));
  CHECK(tables["regret"]["q50"] == doctest::Approx(2.5));
  CHECK(tables["regret"]["q75"] == doctest::Approx(3.25));
  CHECK(tables["regret"]["q100"] == doctest::Approx(4.0));

  // Interior states only, fraction of replications intervening.
  CHECK(tables["intervene_freq"].size() == 6);
  CHECK(tables["intervene_freq"].count("0") == 0);
  CHECK(tables["intervene_freq"].count("7") == 0);
  CHECK(tables["intervene_freq"]["1"] == doctest::Approx(1.0));
  CHECK(tables["intervene_freq"]["3"] == doctest::Approx(0.5));
  CHECK(tables["intervene_freq"]["6"] == doctest::Approx(0.0));

  // Values expand through the fiber map: states 1..2 read superstate 1.
  CHECK(tables["lifetime_pihat_mean"]["1"] == doctest::Approx(11.5));
  CHECK(tables["lifetime_never_mean"]["5"] == doctest::Approx(2.0));
  const double half_width = 1.96 * std::sqrt(5.0 / 3.0) / 2.0;
  CHECK(tables["lifetime_pihat_lo"]["4"] == doctest::Approx(11.5 - half_width));
  CHECK(tables["lifetime_pihat_hi"]["4"] == doctest::Approx(11.5 + half_width));
}

TEST_CASE("config json round trip and rejection") {
  SUBCASE("empty object keeps the defaults") {
    const ExperimentConfig cfg = parse_experiment_config_json("{}");
    CHECK(cfg.chain.J == 100);
    CHECK(cfg.M_list == std::vector<int>{10, 25, 50, 100, 500, 1000});
    CHECK(cfg.K_list == std::vector<int>{5, 10, 20, 25, 50, 100});
    CHECK(cfg.R == 100);
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.threshold_assumption);
    CHECK(cfg.share_data_across_k);
    CHECK(cfg.compare_state == -1);
  }
  SUBCASE("round trip") {
    ExperimentConfig cfg;
    cfg.chain.terminal_intervention_reward = 30.0;
    cfg.M_list = {7};
    cfg.K_list = {2, 3};
    cfg.R = 9;
    cfg.master_seed = 123456789;
    cfg.threshold_assumption = false;
    cfg.zero_row_policy = ZeroRowPolicy::death;
    cfg.share_data_across_k = false;
    cfg.compare_state = 4;
    const ExperimentConfig back = parse_experiment_config_json(experiment_config_json(cfg));
    CHECK(back.chain.terminal_intervention_reward == 30.0);
    CHECK(back.M_list == cfg.M_list);
    CHECK(back.K_list == cfg.K_list);
    CHECK(back.R == 9);
    CHECK(back.master_seed == 123456789);
    CHECK_FALSE(back.threshold_assumption);
    CHECK(back.zero_row_policy == ZeroRowPolicy::death);
    CHECK_FALSE(back.share_data_across_k);
    CHECK(back.compare_state == 4);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(parse_experiment_config_json("{\"frobnicate\": 1}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config_json("{\"R\": \"ten\"}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config_json("{\"M_list\": []}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config_json("{\"zero_row_policy\": \"nearest\"}"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_config_json("{\"compare_state\": \"middle\"}"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_config_json("not json"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config_json("[1,2]"), ConfigError);
  }
  SUBCASE("validation") {
    ExperimentConfig cfg;
    cfg.K_list = {101};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.R = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("table writers are atomic and round trip") {
  const TempDir dir("mdpagg_test_writers");
  ExperimentConfig cfg = smoke_config();
  cfg.M_list = {10};
  cfg.K_list = {5};
  const ExperimentResults results = run_experiment(cfg, 1);
  const SummaryTables summary = summarize(results);

  write_results_csv(results, dir.file("results.csv"));
  write_summary_csv(summary, dir.file("summary.csv"));
  write_meta_json(cfg, dir.file("meta.json"));

  CHECK(std::filesystem::exists(dir.file("results.csv")));
  CHECK_FALSE(std::filesystem::exists(dir.file("results.csv.tmp")));
  CHECK_FALSE(std::filesystem::exists(dir.file("summary.csv.tmp")));

  const SummaryTables back = read_summary_csv(dir.file("summary.csv"));
  REQUIRE(back.rows.size() == summary.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].table == summary.rows[i].table);
    CHECK(back.rows[i].key == summary.rows[i].key);
    CHECK(back.rows[i].value == summary.rows[i].value);
  }

  const auto meta = nlohmann::json::parse(read_file(dir.file("meta.json")));
  CHECK(meta.at("code_version").get<std::string>() == kCodeVersion);
  CHECK(meta.at("config").at("seed").get<std::uint64_t>() == cfg.master_seed);
  CHECK(meta.at("config").at("zero_row_policy").get<std::string>() == "uniform");
}

TEST_CASE("figures render from summary tables") {
  const TempDir dir("mdpagg_test_plots");
  ExperimentConfig cfg = smoke_config();
  cfg.M_list = {10};
  cfg.K_list = {5, 10};
  const SummaryTables summary = summarize(run_experiment(cfg, 1));

  for (const std::string& figure : available_figures()) {
    const auto written = render_figure(summary, figure, dir.path.string());
    REQUIRE_FALSE(written.empty());
    bool saw_svg = false, saw_csv = false;
    for (const auto& path : written) {
      CHECK(std::filesystem::exists(path));
      if (path.ends_with(".svg")) {
        saw_svg = true;
        const std::string content = read_file(path);
        CHECK(content.rfind("<svg", 0) == 0);
        CHECK(content.find("</svg>") != std::string::npos);
      }
      if (path.ends_with(".csv")) saw_csv = true;
    }
    CHECK(saw_svg);
    CHECK(saw_csv);
  }

  try {
    render_figure(summary, "histogram", dir.path.string());
    FAIL("expected an unknown-figure error");
  } catch (const std::invalid_argument& e) {
    const std::string message = e.what();
    CHECK(message.find("frequency") != std::string::npos);
    CHECK(message.find("lifetime") != std::string::npos);
  }
}

TEST_CASE("more data never hurts and the threshold arm wins at full resolution") {
  ExperimentConfig cfg;
  cfg.M_list = {10, 1000};
  cfg.R = 100;
  const ExperimentResults results = run_experiment(cfg, 2);

  std::map<std::pair<int, int>, double> free_mean;   // (M, K) -> mean regret
  std::map<std::pair<int, int>, double> constrained_mean;
  std::map<std::pair<int, int>, int> counts;
  for (const auto& row : results.rows) {
    auto& mean = row.threshold_assumed ? constrained_mean : free_mean;
    mean[{row.M, row.K}] += row.regret_months;
    if (!row.threshold_assumed) ++counts[{row.M, row.K}];
  }
  for (auto& [key, total] : free_mean) total /= counts.at(key);
  for (auto& [key, total] : constrained_mean) total /= counts.at(key);

  for (int K : cfg.K_list) {
    CAPTURE(K);
    CHECK(free_mean.at({1000, K}) <= free_mean.at({10, K}));
  }
  for (int M : cfg.M_list) {
    CAPTURE(M);
    CHECK(constrained_mean.at({M, 100}) <= free_mean.at({M, 100}));
  }
}

}  // TEST_SUITE
