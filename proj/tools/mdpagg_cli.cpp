#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>

#include <CLI11.hpp>

#include "mdpagg/aggregation.hpp"
#include "mdpagg/chain.hpp"
#include "mdpagg/estimation.hpp"
#include "mdpagg/experiment.hpp"
#include "mdpagg/io.hpp"
#include "mdpagg/plot.hpp"
#include "mdpagg/solve.hpp"
#include "mdpagg/structure.hpp"

namespace {

using namespace mdpagg;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::optional<bool> threshold_assumption;
  std::optional<std::string> zero_row;
  std::optional<std::string> design;
  std::optional<double> terminal_reward;
  std::optional<int> K;
  std::optional<int> M;
  std::optional<int> R;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed (overrides MDPAGG_SEED and config)");
  cmd->add_option("--jobs", opts.jobs, "worker threads (0 = hardware)");
  auto* thr = cmd->add_flag("--threshold-assumption,!--no-threshold-assumption",
                            "restrict policy search to threshold policies");
  cmd->parse_complete_callback([thr, &opts]() {
    if (thr->count() > 0) opts.threshold_assumption = thr->as<bool>();
  });
  cmd->add_option("--zero-row", opts.zero_row, "unobserved-row fill: uniform|self|death")
      ->check(CLI::IsMember({"uniform", "self", "death"}));
  cmd->add_option("--design", opts.design, "preset chain parameters")
      ->check(CLI::IsMember({"1", "appendix-c"}));
  cmd->add_option("--terminal-reward", opts.terminal_reward,
                  "intervention reward at the best state");
  cmd->add_option("--K", opts.K, "aggregation level (number of superstates)");
  cmd->add_option("--M", opts.M, "trajectories per replication");
  cmd->add_option("--R", opts.R, "replication count");
}

std::optional<std::uint64_t> seed_from_env() {
  const char* env = std::getenv("MDPAGG_SEED");
  if (env == nullptr) return std::nullopt;
  const std::string s(env);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("MDPAGG_SEED must be an unsigned integer, got '" + s + "'");
  return v;
}

// Defaults, then config file, then flags; seed precedence is
// --seed > MDPAGG_SEED > config file > built-in default.
ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = load_experiment_config(opts.config_path);
  if (opts.design) {
    ChainParams preset;
    if (*opts.design == "appendix-c") preset.terminal_intervention_reward = 30.0;
    cfg.chain = preset;
  }
  if (opts.terminal_reward) cfg.chain.terminal_intervention_reward = *opts.terminal_reward;
  if (opts.M) cfg.M_list = {*opts.M};
  if (opts.K) cfg.K_list = {*opts.K};
  if (opts.R) cfg.R = *opts.R;
  if (opts.threshold_assumption) cfg.threshold_assumption = *opts.threshold_assumption;
  if (opts.zero_row) cfg.zero_row_policy = zero_row_policy_from_string(*opts.zero_row);
  if (opts.seed) {
    cfg.master_seed = *opts.seed;
  } else if (auto env = seed_from_env()) {
    cfg.master_seed = *env;
  }
  return cfg;
}

int effective_jobs(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string policy_string(const Policy& policy) {
  std::string s;
  for (std::size_t h = 1; h + 1 < policy.size(); ++h)
    s += (policy[h] == kIntervene ? '1' : '0');
  return s;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

void cmd_solve(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  cfg.chain.validate();
  MdpModel model = build_ground_truth(cfg.chain);
  if (opts.K && *opts.K != cfg.chain.J) {
    const Partition part = build_partition(cfg.chain.J, *opts.K);
    const Vector beta = modified_stationary(model.wait_tpm);
    model = aggregate_model(model, beta, part);
  }

  // For single solves the config's experiment-arm switch is ignored; the
  // search is constrained only when the flag is given explicitly.
  Policy policy;
  Vector values;
  if (opts.threshold_assumption.value_or(false)) {
    policy = best_threshold_policy(model, cfg.compare_state);
    values = evaluate_policy(model, policy);
  } else {
    Solution sol = solve_optimal(model);
    policy = std::move(sol.policy);
    values = std::move(sol.values);
  }

  const PolicyStructure ps = analyze_policy(policy);
  std::cout << "states: " << model.n_states() << " (interior 1.." << model.n_interior()
            << ")\n";
  std::cout << "policy (low to high): " << policy_string(policy) << "\n";
  if (ps.threshold) {
    std::cout << "classification: threshold policy, T = " << *ps.threshold << "\n";
  } else {
    std::cout << "classification: gray area, lambda1 = " << ps.lambda1
              << ", lambda0 = " << ps.lambda0 << ", size = " << ps.gray_size << "\n";
  }
  std::cout << "value at start state: " << fmt_double(values[model.n_states() - 2])
            << "\n";
}

void cmd_simulate(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  cfg.chain.validate();
  const MdpModel model = build_ground_truth(cfg.chain);
  const int M = opts.M.value_or(100);
  const SimResult sim = simulate_trajectories(model.wait_tpm, M, cfg.master_seed);
  ensure_out_dir(opts.out_dir);
  const std::string path = opts.out_dir + "/counts.csv";
  write_counts_csv(path, sim.counts);
  std::cout << "simulated " << M << " trajectories, " << sim.counts.sum()
            << " transitions\nwrote " << path << "\n";
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += fmt_double(m(i, j));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

void cmd_estimate(const CommonOpts& opts, const std::string& counts_path) {
  const ExperimentConfig cfg = resolve_config(opts);
  const CountMatrix counts = read_counts_csv(counts_path);
  const int J = static_cast<int>(counts.rows()) - 2;
  const int K = opts.K.value_or(J);
  const Partition part = build_partition(J, K);
  const Matrix p_hat = mle_aggregated(counts, part, cfg.zero_row_policy);
  ensure_out_dir(opts.out_dir);
  const std::string path = opts.out_dir + "/p_hat.csv";
  write_matrix_csv(path, p_hat);
  std::cout << "estimated " << p_hat.rows() << "x" << p_hat.cols()
            << " transition matrix (K = " << K << ", zero-row "
            << to_string(cfg.zero_row_policy) << ")\nwrote " << path << "\n";
}

void cmd_experiment(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const ExperimentResults results = run_experiment(cfg, effective_jobs(opts.jobs));
  const SummaryTables summary = summarize(results);
  ensure_out_dir(opts.out_dir);
  write_results_csv(results, opts.out_dir + "/results.csv");
  write_summary_csv(summary, opts.out_dir + "/summary.csv");
  write_meta_json(cfg, opts.out_dir + "/meta.json");
  std::cout << "replication rows: " << results.rows.size() << "\nwrote "
            << opts.out_dir << "/results.csv, summary.csv, meta.json\n";
}

std::string resolve_summary_path(const std::string& input) {
  if (std::filesystem::is_directory(input)) return input + "/summary.csv";
  return input;
}

void cmd_report(const std::string& input) {
  const SummaryTables summary = read_summary_csv(resolve_summary_path(input));
  std::cout << "regret per thousand trajectories\n";
  std::cout << "M,K,arm,mean,q25,q50,q75\n";
  std::map<std::tuple<int, int, bool>, std::map<std::string, double>> regret;
  for (const auto& row : summary.rows)
    if (row.table == "regret")
      regret[{row.M, row.K, row.threshold_assumed}][row.key] = row.value;
  for (const auto& [key, stats] : regret) {
    const auto& [M, K, assumed] = key;
    std::cout << M << ',' << K << ',' << (assumed ? "constrained" : "free") << ','
              << fmt_double(stats.at("mean")) << ',' << fmt_double(stats.at("q25"))
              << ',' << fmt_double(stats.at("q50")) << ','
              << fmt_double(stats.at("q75")) << "\n";
  }
}

void cmd_plot(const CommonOpts& opts, const std::string& input,
              const std::string& figure) {
  const std::string summary_path = resolve_summary_path(input);
  const SummaryTables summary = read_summary_csv(summary_path);
  std::string out_dir = opts.out_dir;
  if (out_dir == ".") {
    const auto parent = std::filesystem::path(summary_path).parent_path();
    if (!parent.empty()) out_dir = parent.string();
  }
  ensure_out_dir(out_dir);
  const auto written = render_figure(summary, figure, out_dir);
  for (const auto& path : written) std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aggregated-MDP solver and replication-study toolkit"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);

  CommonOpts opts;
  std::string counts_path;
  std::string input_path = ".";
  std::string figure;

  CLI::App* solve = app.add_subcommand("solve", "solve a model and print its policy");
  add_common_flags(solve, opts);

  CLI::App* simulate =
      app.add_subcommand("simulate", "generate trajectories and write counts");
  add_common_flags(simulate, opts);

  CLI::App* estimate =
      app.add_subcommand("estimate", "estimate a transition matrix from counts");
  add_common_flags(estimate, opts);
  estimate->add_option("counts", counts_path, "counts CSV from simulate")->required();

  CLI::App* experiment =
      app.add_subcommand("experiment", "run the replication grid and write tables");
  add_common_flags(experiment, opts);

  CLI::App* report = app.add_subcommand("report", "print summary tables");
  report->add_option("results", input_path, "experiment output dir or summary.csv");

  CLI::App* plot = app.add_subcommand("plot", "render figures from summary tables");
  add_common_flags(plot, opts);
  plot->add_option("results", input_path, "experiment output dir or summary.csv");
  plot->add_option("--figure", figure, "frequency|thresholds|regret|lifetime")
      ->required();

  try {
    app.parse(argc, argv);
    if (solve->parsed()) cmd_solve(opts);
    if (simulate->parsed()) cmd_simulate(opts);
    if (estimate->parsed()) cmd_estimate(opts, counts_path);
    if (experiment->parsed()) cmd_experiment(opts);
    if (report->parsed()) cmd_report(input_path);
    if (plot->parsed()) cmd_plot(opts, input_path, figure);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
