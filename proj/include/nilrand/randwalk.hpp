#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "nilrand/integer.hpp"

// Experiments on simple random walks in Z^m: the full-rank probability of
// exponent-sum matrices of random relators, coordinate CLT statistics,
// escape probabilities, exact return probabilities and the Schwartz-Zippel
// zero count of the maximal-minor polynomial.
//
// Reproducibility: trial t of an experiment keyed by k (the relator length,
// or the walk length) draws from std::mt19937_64 seeded with
// stream_seed(seed, k, t). Trials are split across jobs in contiguous
// blocks and only integer tallies are merged, so every table is independent
// of the job count.
namespace nilrand::randwalk {

// splitmix64 finalizer chain: mix(mix(mix(seed) ^ key) ^ trial).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t key, std::uint64_t trial);

enum class RankPath { Bareiss, MinorPolynomial };

struct ExperimentConfig {
  std::size_t m = 2;
  std::size_t r = 2;
  std::vector<std::size_t> lengths;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  RankPath rank_path = RankPath::Bareiss;

  void validate() const;
  std::string to_json() const;
};

// Reads {"m":..,"r":..,"lengths":[..],"trials":..,"seed":..[,"jobs":..]}.
// A missing seed is an error unless `seed_override` supplies one.
ExperimentConfig parse_config(std::string_view json_text, std::optional<std::uint64_t> seed_override = {});

struct RankExperimentRow {
  std::size_t length = 0;
  std::size_t trials = 0;
  std::size_t full_rank_count = 0;
  double p_hat = 0;
  double std_error = 0;  // binomial sqrt(p(1-p)/trials)
};

std::vector<RankExperimentRow> rank_experiment(const ExperimentConfig& cfg);

// p_hat nondecreasing along the rows up to `k` combined standard errors.
bool nondecreasing_within(const std::vector<RankExperimentRow>& rows, double k = 2.0);

std::string rank_rows_csv(const std::vector<RankExperimentRow>& rows, const ExperimentConfig& cfg);

struct CoordinateStats {
  std::size_t coordinate = 0;  // 1-based
  double mean = 0;             // of s_{n,i} / sqrt(n)
  double mean_std_error = 0;
  double variance = 0;
  double variance_std_error = 0;
  double target_variance = 0;  // 1/m
  double sup_cdf_distance = 0;
};

struct CltSummary {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<CoordinateStats> coordinates;

  std::string to_csv() const;
};

// The sup-distance is taken over the grid z = -4, -3.95, ..., 4 between the
// empirical CDF of s_{n,i}/sqrt(n) and the N(0, 1/m) CDF.
CltSummary coordinate_clt_stats(std::size_t m, std::size_t n, std::size_t trials, std::uint64_t seed,
                                unsigned jobs = 1);

struct EscapeEstimate {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t coordinate = 1;
  double epsilon = 0;
  std::size_t escape_count = 0;
  double p_hat = 0;
  double std_error = 0;
  // epsilon * sqrt(n) > n: no walk can reach the threshold, so p is exactly 0
  // and nothing was simulated.
  bool out_of_range = false;
};

// Estimates P(|s_{n,i}/sqrt(n)| >= epsilon) with epsilon = ln n unless given.
EscapeEstimate escape_probability(std::size_t m, std::size_t n, std::size_t trials, std::uint64_t seed,
                                  std::optional<double> epsilon = {}, std::size_t coordinate = 1,
                                  unsigned jobs = 1);

std::string escape_csv(const std::vector<EscapeEstimate>& rows, std::uint64_t seed);

struct ReturnRow {
  std::size_t n = 0;
  double value = 0;                  // p_n(0) + p_{n+1}(0)
  std::optional<mpq_class> exact;    // present when computed in exact arithmetic
  bool mass_conserved = false;       // sum_T p_n(T) == 1 (exactly, or within float_tolerance)
};

// Exact arithmetic up to this n_max; above it the DP runs in long double
// and each row's mass is checked to within 1e-12 * (n + 1).
inline constexpr std::size_t kExactReturnLimit = 200;

// Dynamic programming over the reachable box of Z^m for n = 0..n_max.
// Throws ResourceLimitError when the box exceeds the memory budget.
std::vector<ReturnRow> return_probability_exact(std::size_t m, std::size_t n_max);

std::string return_rows_csv(const std::vector<ReturnRow>& rows, std::size_t m);

// Least-squares slope of log y against log x. Throws std::invalid_argument
// on fewer than two points, a constant x sequence, or nonpositive values.
double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Slope of log(p_n(0) + p_{n+1}(0)) against log n over even n in [n_lo, n_hi].
double decay_slope(std::size_t m, std::size_t n_lo, std::size_t n_hi);

struct SchwartzZippelResult {
  std::size_t r = 0;
  std::size_t m = 0;
  std::size_t b = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t zero_count = 0;
  std::uint64_t degree = 0;
  std::uint64_t bound = 0;  // degree * |I|^{rm - 1}
  bool holds = false;

  std::string to_csv() const;
};

// Enumerates every r x m matrix over I = {-b..b} and counts zeros of the
// maximal-minor polynomial.
SchwartzZippelResult schwartz_zippel_check(std::size_t r, std::size_t m, std::size_t b,
                                           std::uint64_t limit = 20'000'000);

}  // namespace nilrand::randwalk
