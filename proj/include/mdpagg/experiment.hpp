#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdpagg/chain.hpp"
#include "mdpagg/estimation.hpp"
#include "mdpagg/model.hpp"

namespace mdpagg {

inline constexpr const char* kCodeVersion = "1.0.0";

struct ExperimentConfig {
  ChainParams chain;
  std::vector<int> M_list{10, 25, 50, 100, 500, 1000};
  std::vector<int> K_list{5, 10, 20, 25, 50, 100};
  int R = 100;
  std::uint64_t master_seed = 42;
  // true: every replication is solved twice, once unconstrained and once
  // restricted to threshold policies, and both arms land in the results.
  // false: unconstrained arm only.
  bool threshold_assumption = true;
  ZeroRowPolicy zero_row_policy = ZeroRowPolicy::uniform;
  // One count matrix per (M, r), pooled at every K. When false each K
  // simulates its own data from a K-specific seed.
  bool share_data_across_k = true;
  // State whose value ranks threshold policies; -1 means the start state.
  int compare_state = -1;

  void validate() const;
};

struct ReplicationResult {
  int M = 0;
  int K = 0;
  int r = 0;
  bool threshold_assumed = false;
  Policy policy_K;
  Policy policy_J;
  int lambda1 = 0;
  int lambda0 = 0;
  int gray_size = 0;
  std::optional<int> threshold;
  double regret_months = 0.0;
  Vector values_estimated;  // v(policy_K, estimated model), per superstate
  Vector values_never;      // v(all-wait, estimated model), per superstate
};

struct ExperimentResults {
  ExperimentConfig config;
  std::vector<ReplicationResult> rows;  // sorted by (M, K, r, arm)
};

// Gray-area decomposition extended to single-action policies, which
// Definition-style gray areas exclude: all-wait reports threshold 0 and
// all-intervene reports threshold J, both with an empty gray area.
struct PolicyStructure {
  int lambda1 = 0;
  int lambda0 = 0;
  int gray_size = 0;
  std::optional<int> threshold;
};
PolicyStructure analyze_policy(const Policy& policy);

// v(pi*, truth)(start) - v(policy, truth)(start), in life-months per
// trajectory; reports scale by 1000. The overload taking the optimal
// start value skips re-solving the truth.
double expected_regret(const Policy& policy, const MdpModel& truth);
double expected_regret(const Policy& policy, const MdpModel& truth,
                       double optimal_start_value);

// Best policy among the K+1 threshold policies, ranked by value at
// compare_state (-1 = start state); ties go to the smaller threshold.
Policy best_threshold_policy(const MdpModel& model, int compare_state = -1);

ExperimentResults run_experiment(const ExperimentConfig& config, int jobs = 1);

// Long-format summary: one table per statistic family.
//   intervene_freq          key = state, value = fraction of replications
//   lambda1_hist / lambda0_hist  key = state, value = count
//   regret                  key in {mean,q00,q25,q50,q75,q100}, per thousand
//   lifetime_pihat_{mean,lo,hi}  key = state, 95% CI of v(pi_hat, est)
//   lifetime_never_{mean,lo,hi}  key = state, 95% CI of v(wait, est)
struct SummaryRow {
  int M = 0;
  int K = 0;
  bool threshold_assumed = false;
  std::string table;
  std::string key;
  double value = 0.0;
};
struct SummaryTables {
  std::vector<SummaryRow> rows;
};
SummaryTables summarize(const ExperimentResults& results);

std::string results_csv_string(const ExperimentResults& results);
std::string summary_csv_string(const SummaryTables& summary);

// Atomic (temp + rename) writers.
void write_results_csv(const ExperimentResults& results, const std::string& path);
void write_summary_csv(const SummaryTables& summary, const std::string& path);
void write_meta_json(const ExperimentConfig& config, const std::string& path);

}  // namespace mdpagg
