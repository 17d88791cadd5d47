#include "mdpagg/estimation.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mdpagg/io.hpp"
#include "mdpagg/rng.hpp"

namespace mdpagg {

namespace {
constexpr long kStepCap = 1000000;
}

SimResult simulate_trajectories(const Matrix& natural_tpm, int M, std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("M must be at least 1");
  const int n = static_cast<int>(natural_tpm.rows());
  const int start = n - 2;

  // Row CDFs once, row-major so each row is contiguous for sampling.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cdf = natural_tpm;
  for (int j = 1; j < n; ++j) cdf.col(j) += cdf.col(j - 1);

  SimResult result;
  result.batch.M = M;
  result.batch.seed = seed;
  result.batch.paths.reserve(M);
  result.counts = CountMatrix::Zero(n, n);

  for (int m = 0; m < M; ++m) {
    Xoshiro256pp stream(derive_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<int> path{start};
    int state = start;
    long steps = 0;
    while (state != 0) {
      if (++steps > kStepCap)
        throw std::runtime_error("trajectory " + std::to_string(m) +
                                 " exceeded the 1e6 step cap before absorbing");
      const double u = stream.uniform();
      const double* row = cdf.data() + static_cast<std::ptrdiff_t>(state) * n;
      // Inverse CDF: first column whose cumulative sum exceeds u.
      int lo = 0, hi = n - 1;
      while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (row[mid] > u) hi = mid; else lo = mid + 1;
      }
      const int next = lo;
      result.counts(state, next) += 1;
      state = next;
      path.push_back(state);
    }
    result.batch.paths.push_back(std::move(path));
  }
  return result;
}

ZeroRowPolicy zero_row_policy_from_string(const std::string& name) {
  if (name == "uniform") return ZeroRowPolicy::uniform;
  if (name == "self") return ZeroRowPolicy::self;
  if (name == "death") return ZeroRowPolicy::death;
  throw std::invalid_argument("unknown zero-row policy '" + name +
                              "' (expected uniform, self or death)");
}

std::string to_string(ZeroRowPolicy policy) {
  switch (policy) {
    case ZeroRowPolicy::uniform: return "uniform";
    case ZeroRowPolicy::self: return "self";
    case ZeroRowPolicy::death: return "death";
  }
  return "uniform";
}

namespace {

// Shared by both resolutions: n x n counts to row-stochastic estimate.
Matrix normalize_counts(const CountMatrix& counts, ZeroRowPolicy policy) {
  const int n = static_cast<int>(counts.rows());
  Matrix estimate = Matrix::Zero(n, n);
  estimate(0, 0) = 1.0;
  estimate(n - 1, n - 1) = 1.0;
  for (int i = 1; i <= n - 2; ++i) {
    std::int64_t total = 0;
    for (int j = 0; j < n; ++j) total += counts(i, j);
    if (total == 0) {
      switch (policy) {
        case ZeroRowPolicy::uniform:
          // Over 0..J only: the post-intervention state is never a wait
          // destination.
          estimate.row(i).head(n - 1).setConstant(1.0 / (n - 1));
          break;
        case ZeroRowPolicy::self: estimate(i, i) = 1.0; break;
        case ZeroRowPolicy::death: estimate(i, 0) = 1.0; break;
      }
    } else {
      for (int j = 0; j < n; ++j)
        estimate(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(total);
    }
  }
  return estimate;
}

}  // namespace

Matrix mle_full(const CountMatrix& counts, ZeroRowPolicy policy) {
  return normalize_counts(counts, policy);
}

Matrix mle_aggregated(const CountMatrix& counts, const Partition& partition,
                      ZeroRowPolicy policy) {
  if (counts.rows() != partition.J + 2)
    throw std::invalid_argument("mle_aggregated: counts do not match partition");
  const int m = partition.K + 2;
  CountMatrix pooled = CountMatrix::Zero(m, m);
  for (int i = 0; i < counts.rows(); ++i) {
    const int k = partition.superstate_of(i);
    for (int j = 0; j < counts.cols(); ++j)
      if (counts(i, j) != 0) pooled(k, partition.superstate_of(j)) += counts(i, j);
  }
  return normalize_counts(pooled, policy);
}

void write_counts_csv(const std::string& path, const CountMatrix& counts) {
  std::string out = "# states=" + std::to_string(counts.rows()) + "\n";
  out += "i,j,count\n";
  for (int i = 0; i < counts.rows(); ++i)
    for (int j = 0; j < counts.cols(); ++j)
      if (counts(i, j) != 0)
        out += std::to_string(i) + "," + std::to_string(j) + "," +
               std::to_string(counts(i, j)) + "\n";
  atomic_write_file(path, out);
}

CountMatrix read_counts_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# states=", 0) != 0)
    throw IoError("counts file missing '# states=' header");
  const int n = std::stoi(line.substr(9));
  if (n < 3) throw IoError("counts file declares fewer than 3 states");
  CountMatrix counts = CountMatrix::Zero(n, n);
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int i, j;
    long long c;
    std::getline(row, cell, ','); i = std::stoi(cell);
    std::getline(row, cell, ','); j = std::stoi(cell);
    std::getline(row, cell, ','); c = std::stoll(cell);
    if (i < 0 || i >= n || j < 0 || j >= n || c < 0)
      throw IoError("counts file has an out-of-range triple");
    counts(i, j) = c;
  }
  return counts;
}

}  // namespace mdpagg
