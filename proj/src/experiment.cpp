#include "mdpagg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "mdpagg/aggregation.hpp"
#include "mdpagg/io.hpp"
#include "mdpagg/rng.hpp"
#include "mdpagg/solve.hpp"
#include "mdpagg/structure.hpp"

namespace mdpagg {

void ExperimentConfig::validate() const {
  chain.validate();
  if (M_list.empty()) throw std::invalid_argument("M_list must not be empty");
  for (int m : M_list)
    if (m < 1) throw std::invalid_argument("every M must be >= 1");
  if (K_list.empty()) throw std::invalid_argument("K_list must not be empty");
  for (int k : K_list)
    if (k < 1 || k > chain.J)
      throw std::invalid_argument("every K must lie in [1, J]");
  if (R < 1) throw std::invalid_argument("R must be >= 1");
  if (compare_state < -1)
    throw std::invalid_argument("compare_state must be -1 (start) or a state index");
}

PolicyStructure analyze_policy(const Policy& policy) {
  const int n = static_cast<int>(policy.size());
  if (n < 3) throw std::invalid_argument("policy too short");
  bool any_intervene = false;
  bool any_wait = false;
  for (int h = 1; h <= n - 2; ++h) {
    (policy[h] == kIntervene ? any_intervene : any_wait) = true;
  }
  PolicyStructure out;
  if (!any_intervene || !any_wait) {
    const int T = any_intervene ? n - 2 : 0;
    out.lambda1 = T;
    out.lambda0 = T + 1;
    out.gray_size = 0;
    out.threshold = T;
    return out;
  }
  const GrayAreaReport g = gray_area(policy);
  out.lambda1 = g.lambda1;
  out.lambda0 = g.lambda0;
  out.gray_size = static_cast<int>(g.gray_states.size());
  out.threshold = g.threshold;
  return out;
}

double expected_regret(const Policy& policy, const MdpModel& truth,
                       double optimal_start_value) {
  const Vector v = evaluate_policy(truth, policy);
  return optimal_start_value - v[truth.n_states() - 2];
}

double expected_regret(const Policy& policy, const MdpModel& truth) {
  const Solution opt = solve_optimal(truth);
  return expected_regret(policy, truth, opt.values[truth.n_states() - 2]);
}

Policy best_threshold_policy(const MdpModel& model, int compare_state) {
  const int n = model.n_states();
  const int top = n - 2;
  const int cs = compare_state < 0 ? top : compare_state;
  if (cs >= n) throw std::invalid_argument("compare_state out of range");
  Policy best;
  double best_value = 0.0;
  for (int T = 0; T <= top; ++T) {
    Policy pol(static_cast<std::size_t>(n), kWait);
    for (int h = 1; h <= T; ++h) pol[h] = kIntervene;
    const Vector v = evaluate_policy(model, pol);
    // Strict margin keeps ties on the smaller threshold.
    if (T == 0 || v[cs] > best_value + 1e-12) {
      best = std::move(pol);
      best_value = v[cs];
    }
  }
  return best;
}

namespace {

struct KContext {
  Partition partition;
  Matrix intervene_tpm;
  Matrix rewards;
};

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();

  const MdpModel truth = build_ground_truth(config.chain);
  const Solution truth_sol = solve_optimal(truth);
  const double optimal_start_value = truth_sol.values[truth.n_states() - 2];

  std::vector<KContext> kctx;
  kctx.reserve(config.K_list.size());
  for (int K : config.K_list) {
    Partition part = build_partition(config.chain.J, K);
    Matrix rewards = aggregate_rewards(truth.rewards, part);
    kctx.push_back({std::move(part), build_intervention_tpm(K), std::move(rewards)});
  }

  const int arms = config.threshold_assumption ? 2 : 1;
  const std::size_t n_items =
      config.M_list.size() * static_cast<std::size_t>(config.R);
  const std::size_t rows_per_item = config.K_list.size() * static_cast<std::size_t>(arms);
  std::vector<ReplicationResult> rows(n_items * rows_per_item);

  std::atomic<std::size_t> next_item{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t item = next_item.fetch_add(1);
      if (item >= n_items || failed.load()) return;
      try {
        const std::size_t mi = item / static_cast<std::size_t>(config.R);
        const int r = static_cast<int>(item % static_cast<std::size_t>(config.R));
        const int M = config.M_list[mi];
        const std::uint64_t seed_mr = derive_seed(
            derive_seed(config.master_seed, static_cast<std::uint64_t>(M)),
            static_cast<std::uint64_t>(r));

        CountMatrix shared_counts;
        if (config.share_data_across_k) {
          shared_counts = simulate_trajectories(truth.wait_tpm, M, seed_mr).counts;
        }

        for (std::size_t ki = 0; ki < config.K_list.size(); ++ki) {
          const int K = config.K_list[ki];
          const KContext& ctx = kctx[ki];
          CountMatrix own_counts;
          if (!config.share_data_across_k) {
            own_counts = simulate_trajectories(
                             truth.wait_tpm, M,
                             derive_seed(seed_mr, static_cast<std::uint64_t>(K)))
                             .counts;
          }
          const CountMatrix& counts =
              config.share_data_across_k ? shared_counts : own_counts;

          MdpModel est;
          est.wait_tpm = mle_aggregated(counts, ctx.partition, config.zero_row_policy);
          est.intervene_tpm = ctx.intervene_tpm;
          est.rewards = ctx.rewards;
          est.discount = config.chain.alpha;
          est.validate();

          const Policy all_wait(static_cast<std::size_t>(K + 2), kWait);
          const Vector values_never = evaluate_policy(est, all_wait);

          for (int arm = 0; arm < arms; ++arm) {
            const bool assumed = (arm == 1);
            Policy policy_K;
            Vector values_estimated;
            if (assumed) {
              policy_K = best_threshold_policy(est, config.compare_state);
              values_estimated = evaluate_policy(est, policy_K);
            } else {
              Solution sol = solve_optimal(est);
              policy_K = std::move(sol.policy);
              values_estimated = std::move(sol.values);
            }
            Policy policy_J = unaggregate_policy(policy_K, ctx.partition);
            const PolicyStructure ps = analyze_policy(policy_J);

            ReplicationResult& row =
                rows[item * rows_per_item + ki * static_cast<std::size_t>(arms) +
                     static_cast<std::size_t>(arm)];
            row.M = M;
            row.K = K;
            row.r = r;
            row.threshold_assumed = assumed;
            row.lambda1 = ps.lambda1;
            row.lambda0 = ps.lambda0;
            row.gray_size = ps.gray_size;
            row.threshold = ps.threshold;
            row.regret_months = expected_regret(policy_J, truth, optimal_start_value);
            row.policy_K = std::move(policy_K);
            row.policy_J = std::move(policy_J);
            row.values_estimated = std::move(values_estimated);
            row.values_never = values_never;
          }
        }
      } catch (...) {
        failed.store(true);
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_threads = std::max(
      1, std::min(jobs, static_cast<int>(std::min<std::size_t>(
             n_items, static_cast<std::size_t>(std::numeric_limits<int>::max())))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReplicationResult& a, const ReplicationResult& b) {
                     return std::tie(a.M, a.K, a.r, a.threshold_assumed) <
                            std::tie(b.M, b.K, b.r, b.threshold_assumed);
                   });
  return ExperimentResults{config, std::move(rows)};
}

namespace {

double quantile_type7(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct MeanCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

MeanCi mean_ci(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  return {mean, mean - 1.96 * se, mean + 1.96 * se};
}

}  // namespace

SummaryTables summarize(const ExperimentResults& results) {
  const int J = results.config.chain.J;
  SummaryTables out;

  // Group indices by (M, K, arm), preserving row order (already sorted).
  std::vector<std::tuple<int, int, bool>> group_keys;
  std::map<std::tuple<int, int, bool>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < results.rows.size(); ++i) {
    const auto& row = results.rows[i];
    const auto key = std::make_tuple(row.M, row.K, row.threshold_assumed);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) group_keys.push_back(key);
    it->second.push_back(i);
  }
  std::sort(group_keys.begin(), group_keys.end());

  std::map<int, Partition> partitions;
  for (int K : results.config.K_list) partitions.try_emplace(K, build_partition(J, K));

  for (const auto& key : group_keys) {
    const auto& [M, K, assumed] = key;
    const auto& idx = groups[key];
    const double n = static_cast<double>(idx.size());
    const Partition& part = partitions.at(K);

    auto emit = [&](const std::string& table, const std::string& k, double v) {
      out.rows.push_back({M, K, assumed, table, k, v});
    };

    for (int h = 1; h <= J; ++h) {
      int count = 0;
      for (std::size_t i : idx)
        if (results.rows[i].policy_J[static_cast<std::size_t>(h)] == kIntervene) ++count;
      emit("intervene_freq", std::to_string(h), static_cast<double>(count) / n);
    }

    std::map<int, int> hist1;
    std::map<int, int> hist0;
    for (std::size_t i : idx) {
      ++hist1[results.rows[i].lambda1];
      ++hist0[results.rows[i].lambda0];
    }
    for (const auto& [state, count] : hist1)
      emit("lambda1_hist", std::to_string(state), static_cast<double>(count));
    for (const auto& [state, count] : hist0)
      emit("lambda0_hist", std::to_string(state), static_cast<double>(count));

    std::vector<double> regret;
    regret.reserve(idx.size());
    for (std::size_t i : idx) regret.push_back(results.rows[i].regret_months * 1000.0);
    std::sort(regret.begin(), regret.end());
    double sum = 0.0;
    for (double x : regret) sum += x;
    emit("regret", "mean", sum / n);
    emit("regret", "q00", regret.front());
    emit("regret", "q25", quantile_type7(regret, 0.25));
    emit("regret", "q50", quantile_type7(regret, 0.50));
    emit("regret", "q75", quantile_type7(regret, 0.75));
    emit("regret", "q100", regret.back());

    // Lifetime curves live on the original states: each original state
    // reads the value of its superstate.
    std::vector<std::vector<double>> pihat(static_cast<std::size_t>(J) + 1);
    std::vector<std::vector<double>> never(static_cast<std::size_t>(J) + 1);
    for (std::size_t i : idx) {
      const auto& row = results.rows[i];
      for (int h = 1; h <= J; ++h) {
        const int k = part.superstate_of(h);
        pihat[static_cast<std::size_t>(h)].push_back(row.values_estimated[k]);
        never[static_cast<std::size_t>(h)].push_back(row.values_never[k]);
      }
    }
    for (int h = 1; h <= J; ++h) {
      const MeanCi ci = mean_ci(pihat[static_cast<std::size_t>(h)]);
      emit("lifetime_pihat_mean", std::to_string(h), ci.mean);
      emit("lifetime_pihat_lo", std::to_string(h), ci.lo);
      emit("lifetime_pihat_hi", std::to_string(h), ci.hi);
    }
    for (int h = 1; h <= J; ++h) {
      const MeanCi ci = mean_ci(never[static_cast<std::size_t>(h)]);
      emit("lifetime_never_mean", std::to_string(h), ci.mean);
      emit("lifetime_never_lo", std::to_string(h), ci.lo);
      emit("lifetime_never_hi", std::to_string(h), ci.hi);
    }
  }
  return out;
}

std::string results_csv_string(const ExperimentResults& results) {
  std::string out =
      "M,K,r,threshold_assumed,lambda1,lambda0,gray_size,threshold_or_empty,"
      "regret_months,regret_per_thousand\n";
  for (const auto& row : results.rows) {
    out += std::to_string(row.M);
    out += ',';
    out += std::to_string(row.K);
    out += ',';
    out += std::to_string(row.r);
    out += ',';
    out += row.threshold_assumed ? '1' : '0';
    out += ',';
    out += std::to_string(row.lambda1);
    out += ',';
    out += std::to_string(row.lambda0);
    out += ',';
    out += std::to_string(row.gray_size);
    out += ',';
    if (row.threshold) out += std::to_string(*row.threshold);
    out += ',';
    out += fmt_double(row.regret_months);
    out += ',';
    out += fmt_double(row.regret_months * 1000.0);
    out += '\n';
  }
  return out;
}

std::string summary_csv_string(const SummaryTables& summary) {
  std::string out = "M,K,threshold_assumed,table,key,value\n";
  for (const auto& row : summary.rows) {
    out += std::to_string(row.M);
    out += ',';
    out += std::to_string(row.K);
    out += ',';
    out += row.threshold_assumed ? '1' : '0';
    out += ',';
    out += row.table;
    out += ',';
    out += row.key;
    out += ',';
    out += fmt_double(row.value);
    out += '\n';
  }
  return out;
}

void write_results_csv(const ExperimentResults& results, const std::string& path) {
  atomic_write_file(path, results_csv_string(results));
}

void write_summary_csv(const SummaryTables& summary, const std::string& path) {
  atomic_write_file(path, summary_csv_string(summary));
}

void write_meta_json(const ExperimentConfig& config, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["code_version"] = kCodeVersion;
  doc["config"] = nlohmann::ordered_json::parse(experiment_config_json(config));
  doc["results_columns"] = {"M",
                            "K",
                            "r",
                            "threshold_assumed",
                            "lambda1",
                            "lambda0",
                            "gray_size",
                            "threshold_or_empty",
                            "regret_months",
                            "regret_per_thousand"};
  doc["summary_columns"] = {"M", "K", "threshold_assumed", "table", "key", "value"};
  atomic_write_file(path, doc.dump(2) + "\n");
}

}  // namespace mdpagg
