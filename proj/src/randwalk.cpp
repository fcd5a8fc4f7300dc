#include "nilrand/randwalk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "nilrand/errors.hpp"
#include "nilrand/words.hpp"
#include "nilrand/zmatrix.hpp"

namespace nilrand::randwalk {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Locale-independent shortest round-trip rendering of a double.
std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Runs body(t, acc) for t in [0, trials) over `jobs` contiguous blocks and
// folds the per-block accumulators with merge(into, from) in block order.
template <class Acc, class Body, class Merge>
Acc parallel_trials(std::size_t trials, unsigned jobs, const Acc& zero, Body body, Merge merge) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
  std::vector<Acc> partial(jobs, zero);
  auto run_block = [&](unsigned b) {
    const std::size_t lo = trials * b / jobs;
    const std::size_t hi = trials * (b + 1) / jobs;
    for (std::size_t t = lo; t < hi; ++t) body(t, partial[b]);
  };
  if (jobs == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned b = 0; b < jobs; ++b) pool.emplace_back(run_block, b);
    for (auto& th : pool) th.join();
  }
  Acc total = zero;
  for (auto& p : partial) merge(total, p);
  return total;
}

// Endpoint of an n-step simple random walk in Z^m.
std::vector<std::int64_t> walk_endpoint(std::size_t m, std::size_t n, Rng& rng) {
  std::vector<std::int64_t> s(m, 0);
  for (std::size_t step = 0; step < n; ++step) {
    const std::uint64_t k = uniform_below(rng, 2 * m);
    s[k / 2] += (k % 2 == 0) ? 1 : -1;
  }
  return s;
}

double binomial_stderr(std::size_t hits, std::size_t trials) {
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return std::sqrt(p * (1 - p) / static_cast<double>(trials));
}

double normal_cdf(double z, double variance) { return 0.5 * std::erfc(-z / std::sqrt(2 * variance)); }

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t key, std::uint64_t trial) {
  return splitmix(splitmix(splitmix(seed) ^ key) ^ trial);
}

void ExperimentConfig::validate() const {
  if (m < 1) throw std::invalid_argument("config: m must be at least 1");
  if (trials < 1) throw std::invalid_argument("config: trials must be at least 1");
  if (lengths.empty()) throw std::invalid_argument("config: lengths must be nonempty");
}

std::string ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["m"] = m;
  j["r"] = r;
  j["lengths"] = lengths;
  j["trials"] = trials;
  j["seed"] = seed;
  j["rank_path"] = rank_path == RankPath::Bareiss ? "bareiss" : "minor_polynomial";
  return j.dump();
}

ExperimentConfig parse_config(std::string_view json_text, std::optional<std::uint64_t> seed_override) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte);
  }
  ExperimentConfig cfg;
  try {
    cfg.m = j.at("m").get<std::size_t>();
    cfg.r = j.at("r").get<std::size_t>();
    cfg.lengths = j.at("lengths").get<std::vector<std::size_t>>();
    cfg.trials = j.at("trials").get<std::size_t>();
    if (seed_override) {
      cfg.seed = *seed_override;
    } else if (j.contains("seed")) {
      cfg.seed = j.at("seed").get<std::uint64_t>();
    } else {
      throw ParseError("config: seed is mandatory");
    }
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("rank_path")) {
      const auto path = j.at("rank_path").get<std::string>();
      if (path == "bareiss")
        cfg.rank_path = RankPath::Bareiss;
      else if (path == "minor_polynomial")
        cfg.rank_path = RankPath::MinorPolynomial;
      else
        throw ParseError("config: unknown rank_path '" + path + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<RankExperimentRow> rank_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t full = std::min(cfg.r, cfg.m);
  std::vector<RankExperimentRow> rows;
  for (const std::size_t len : cfg.lengths) {
    const std::size_t hits = parallel_trials<std::size_t>(
        cfg.trials, cfg.jobs, 0,
        [&](std::size_t t, std::size_t& acc) {
          Rng rng(stream_seed(cfg.seed, len, t));
          RelatorSet rs{cfg.m, {}};
          for (std::size_t i = 0; i < cfg.r; ++i) rs.relators.push_back(random_word(len, cfg.m, rng));
          if (cfg.r == 0) {
            ++acc;
            return;
          }
          const IntMatrix M = exponent_sum_matrix(rs);
          const bool ok = cfg.rank_path == RankPath::Bareiss ? rank(M) == full : minor_polynomial(M) != 0;
          if (ok) ++acc;
        },
        [](std::size_t& into, const std::size_t& from) { into += from; });
    RankExperimentRow row;
    row.length = len;
    row.trials = cfg.trials;
    row.full_rank_count = hits;
    row.p_hat = static_cast<double>(hits) / static_cast<double>(cfg.trials);
    row.std_error = binomial_stderr(hits, cfg.trials);
    rows.push_back(row);
  }
  return rows;
}

bool nondecreasing_within(const std::vector<RankExperimentRow>& rows, double k) {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double slack = k * std::hypot(rows[i].std_error, rows[i + 1].std_error);
    if (rows[i + 1].p_hat < rows[i].p_hat - slack) return false;
  }
  return true;
}

std::string rank_rows_csv(const std::vector<RankExperimentRow>& rows, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# config: " << cfg.to_json() << '\n';
  os << "length,trials,full_rank_count,p_hat,stderr\n";
  for (const auto& r : rows)
    os << r.length << ',' << r.trials << ',' << r.full_rank_count << ',' << fmt(r.p_hat) << ','
       << fmt(r.std_error) << '\n';
  return os.str();
}

CltSummary coordinate_clt_stats(std::size_t m, std::size_t n, std::size_t trials, std::uint64_t seed,
                                unsigned jobs) {
  if (m < 1 || n < 1 || trials < 1) throw std::invalid_argument("clt: m, n and trials must be at least 1");
  // hist[i][v + n] counts trials with s_{n,i} = v.
  using Hist = std::vector<std::vector<std::uint64_t>>;
  const Hist zero(m, std::vector<std::uint64_t>(2 * n + 1, 0));
  const Hist hist = parallel_trials<Hist>(
      trials, jobs, zero,
      [&](std::size_t t, Hist& acc) {
        Rng rng(stream_seed(seed, n, t));
        const auto s = walk_endpoint(m, n, rng);
        for (std::size_t i = 0; i < m; ++i) ++acc[i][static_cast<std::size_t>(s[i] + static_cast<std::int64_t>(n))];
      },
      [](Hist& into, const Hist& from) {
        for (std::size_t i = 0; i < into.size(); ++i)
          for (std::size_t v = 0; v < into[i].size(); ++v) into[i][v] += from[i][v];
      });

  CltSummary out{m, n, trials, seed, {}};
  const double T = static_cast<double>(trials);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < m; ++i) {
    // Exact integer sums of s and s^2.
    Integer sum1 = 0, sum2 = 0;
    for (std::size_t v = 0; v <= 2 * n; ++v) {
      if (hist[i][v] == 0) continue;
      const Integer val = Integer(static_cast<long>(v)) - static_cast<long>(n);
      const Integer c = Integer(static_cast<unsigned long>(hist[i][v]));
      sum1 += c * val;
      sum2 += c * val * val;
    }
    const long double mean_s = static_cast<long double>(sum1.get_d()) / T;
    const long double var_s =
        trials > 1 ? (static_cast<long double>(sum2.get_d()) - T * mean_s * mean_s) / (T - 1) : 0.0L;
    long double m4 = 0;
    for (std::size_t v = 0; v <= 2 * n; ++v) {
      if (hist[i][v] == 0) continue;
      const long double d = static_cast<long double>(static_cast<std::int64_t>(v) - static_cast<std::int64_t>(n)) - mean_s;
      m4 += static_cast<long double>(hist[i][v]) * d * d * d * d;
    }
    m4 /= T;

    CoordinateStats st;
    st.coordinate = i + 1;
    st.mean = static_cast<double>(mean_s / root_n);
    st.variance = static_cast<double>(var_s / n);
    st.mean_std_error = std::sqrt(st.variance / T);
    const long double v4 = m4 - var_s * var_s;
    st.variance_std_error = static_cast<double>(std::sqrt(std::max(0.0L, v4) / T) / n);
    st.target_variance = 1.0 / static_cast<double>(m);

    // Empirical CDF against N(0, 1/m) on the fixed grid.
    double sup = 0;
    std::uint64_t below = 0;
    std::size_t v = 0;
    for (int k = 0; k <= 160; ++k) {
      const double z = -4.0 + 0.05 * k;
      // s / sqrt(n) <= z  <=>  s <= floor(z sqrt(n))
      const std::int64_t cut = static_cast<std::int64_t>(std::floor(z * root_n + 1e-12));
      while (v <= 2 * n && static_cast<std::int64_t>(v) - static_cast<std::int64_t>(n) <= cut) below += hist[i][v++];
      const double emp = static_cast<double>(below) / T;
      sup = std::max(sup, std::abs(emp - normal_cdf(z, st.target_variance)));
    }
    st.sup_cdf_distance = sup;
    out.coordinates.push_back(st);
  }
  return out;
}

std::string CltSummary::to_csv() const {
  std::ostringstream os;
  nlohmann::ordered_json cfg{{"m", m}, {"n", n}, {"trials", trials}, {"seed", seed}};
  os << "# config: " << cfg.dump() << '\n';
  os << "coordinate,mean,mean_stderr,variance,variance_stderr,target_variance,sup_cdf_distance\n";
  for (const auto& c : coordinates)
    os << c.coordinate << ',' << fmt(c.mean) << ',' << fmt(c.mean_std_error) << ',' << fmt(c.variance) << ','
       << fmt(c.variance_std_error) << ',' << fmt(c.target_variance) << ',' << fmt(c.sup_cdf_distance) << '\n';
  return os.str();
}

EscapeEstimate escape_probability(std::size_t m, std::size_t n, std::size_t trials, std::uint64_t seed,
                                  std::optional<double> epsilon, std::size_t coordinate, unsigned jobs) {
  if (m < 1 || n < 1 || trials < 1) throw std::invalid_argument("escape: m, n and trials must be at least 1");
  if (coordinate < 1 || coordinate > m) throw DimensionMismatch("escape: coordinate out of range");
  EscapeEstimate e;
  e.m = m;
  e.n = n;
  e.trials = trials;
  e.coordinate = coordinate;
  e.epsilon = epsilon.value_or(std::log(static_cast<double>(n)));
  const double threshold = e.epsilon * std::sqrt(static_cast<double>(n));
  if (threshold > static_cast<double>(n)) {
    e.out_of_range = true;
    return e;
  }
  const std::size_t idx = coordinate - 1;
  e.escape_count = parallel_trials<std::size_t>(
      trials, jobs, 0,
      [&](std::size_t t, std::size_t& acc) {
        Rng rng(stream_seed(seed, n, t));
        const auto s = walk_endpoint(m, n, rng);
        if (static_cast<double>(std::llabs(s[idx])) >= threshold) ++acc;
      },
      [](std::size_t& into, const std::size_t& from) { into += from; });
  e.p_hat = static_cast<double>(e.escape_count) / static_cast<double>(trials);
  e.std_error = binomial_stderr(e.escape_count, trials);
  return e;
}

std::string escape_csv(const std::vector<EscapeEstimate>& rows, std::uint64_t seed) {
  std::ostringstream os;
  nlohmann::ordered_json cfg{{"seed", seed}};
  if (!rows.empty()) {
    cfg["m"] = rows.front().m;
    cfg["trials"] = rows.front().trials;
    cfg["coordinate"] = rows.front().coordinate;
  }
  os << "# config: " << cfg.dump() << '\n';
  os << "n,epsilon,escape_count,p_hat,stderr,out_of_range\n";
  for (const auto& e : rows)
    os << e.n << ',' << fmt(e.epsilon) << ',' << e.escape_count << ',' << fmt(e.p_hat) << ',' << fmt(e.std_error)
       << ',' << (e.out_of_range ? "true" : "false") << '\n';
  return os.str();
}

namespace {

constexpr std::size_t kExactStateBudget = 4'000'000;
constexpr std::size_t kFloatStateBudget = 16'000'000;

// Path counts (or probabilities) on the box [-R, R]^m, R = n_max + 1.
// step(k) advances from k to k + 1 steps, touching only |coords| <= k + 1.
template <class Value>
class WalkDp {
 public:
  WalkDp(std::size_t m, std::size_t radius, Value unit, Value weight)
      : m_(m), radius_(radius), side_(2 * radius + 1), weight_(weight) {
    std::size_t states = 1;
    strides_.assign(m, 0);
    for (std::size_t d = 0; d < m; ++d) {
      strides_[d] = states;
      states *= side_;
    }
    cur_.assign(states, Value(0));
    next_.assign(states, Value(0));
    origin_ = 0;
    for (std::size_t d = 0; d < m; ++d) origin_ += radius_ * strides_[d];
    cur_[origin_] = unit;
  }

  const Value& at_origin() const { return cur_[origin_]; }

  Value total() const {
    Value s(0);
    for (const auto& v : cur_) s += v;
    return s;
  }

  void step(std::size_t k) {
    const std::size_t lo = radius_ - std::min(radius_, k + 1);
    const std::size_t hi = radius_ + std::min(radius_, k + 1);
    std::vector<std::size_t> pos(m_, lo);
    for (;;) {
      std::size_t idx = 0;
      for (std::size_t d = 0; d < m_; ++d) idx += pos[d] * strides_[d];
      Value acc(0);
      for (std::size_t d = 0; d < m_; ++d) {
        if (pos[d] > 0) acc += cur_[idx - strides_[d]];
        if (pos[d] + 1 < side_) acc += cur_[idx + strides_[d]];
      }
      next_[idx] = acc * weight_;
      std::size_t d = 0;
      while (d < m_ && pos[d] == hi) pos[d++] = lo;
      if (d == m_) break;
      ++pos[d];
    }
    std::swap(cur_, next_);
  }

 private:
  std::size_t m_, radius_, side_;
  Value weight_;
  std::vector<std::size_t> strides_;
  std::size_t origin_ = 0;
  std::vector<Value> cur_, next_;
};

std::size_t box_states(std::size_t m, std::size_t radius, std::size_t budget) {
  std::size_t states = 1;
  for (std::size_t d = 0; d < m; ++d) {
    if (states > budget / (2 * radius + 1)) throw ResourceLimitError("return-prob: state space exceeds budget");
    states *= 2 * radius + 1;
  }
  return states;
}

}  // namespace

std::vector<ReturnRow> return_probability_exact(std::size_t m, std::size_t n_max) {
  if (m < 1 || m > 3) throw std::invalid_argument("return-prob: m must be 1, 2 or 3");
  const std::size_t radius = n_max + 1;
  std::vector<ReturnRow> rows;
  if (n_max <= kExactReturnLimit) {
    box_states(m, radius, kExactStateBudget);
    // Path counts; p_n(T) = count / (2m)^n.
    WalkDp<Integer> dp(m, radius, Integer(1), Integer(1));
    const Integer base = static_cast<unsigned long>(2 * m);
    std::vector<Integer> origin;
    std::vector<bool> conserved;
    Integer paths = 1;
    for (std::size_t n = 0; n <= n_max + 1; ++n) {
      origin.push_back(dp.at_origin());
      conserved.push_back(dp.total() == paths);
      if (n == n_max + 1) break;
      dp.step(n);
      paths *= base;
    }
    Integer denom = 1;
    for (std::size_t n = 0; n <= n_max; ++n) {
      denom *= base;  // (2m)^{n+1}
      mpq_class v(origin[n] * base + origin[n + 1], denom);
      v.canonicalize();
      ReturnRow row;
      row.n = n;
      row.value = v.get_d();
      row.exact = v;
      row.mass_conserved = conserved[n] && conserved[n + 1];
      rows.push_back(std::move(row));
    }
    return rows;
  }
  box_states(m, radius, kFloatStateBudget);
  const long double w = 1.0L / static_cast<long double>(2 * m);
  WalkDp<long double> dp(m, radius, 1.0L, w);
  std::vector<long double> origin;
  std::vector<bool> conserved;
  for (std::size_t n = 0; n <= n_max + 1; ++n) {
    origin.push_back(dp.at_origin());
    conserved.push_back(std::abs(dp.total() - 1.0L) <= 1e-12L * static_cast<long double>(n + 1));
    if (n == n_max + 1) break;
    dp.step(n);
  }
  for (std::size_t n = 0; n <= n_max; ++n) {
    ReturnRow row;
    row.n = n;
    row.value = static_cast<double>(origin[n] + origin[n + 1]);
    row.mass_conserved = conserved[n] && conserved[n + 1];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string return_rows_csv(const std::vector<ReturnRow>& rows, std::size_t m) {
  std::ostringstream os;
  nlohmann::ordered_json cfg{{"m", m}, {"n_max", rows.empty() ? 0 : rows.back().n}};
  os << "# config: " << cfg.dump() << '\n';
  os << "n,value,exact,mass_conserved\n";
  for (const auto& r : rows)
    os << r.n << ',' << fmt(r.value) << ',' << (r.exact ? r.exact->get_str() : std::string("float")) << ','
       << (r.mass_conserved ? "true" : "false") << '\n';
  return os.str();
}

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DimensionMismatch("slope: xs and ys differ in length");
  if (xs.size() < 2) throw std::invalid_argument("slope: need at least two points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) throw std::invalid_argument("slope: values must be positive");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("slope: constant x sequence");
  return sxy / sxx;
}

double decay_slope(std::size_t m, std::size_t n_lo, std::size_t n_hi) {
  if (n_lo > n_hi) throw std::invalid_argument("slope: empty range");
  const auto table = return_probability_exact(m, n_hi);
  std::vector<double> xs, ys;
  for (std::size_t n = std::max<std::size_t>(n_lo, 1); n <= n_hi; ++n) {
    if (n % 2 != 0) continue;
    xs.push_back(static_cast<double>(n));
    ys.push_back(table[n].value);
  }
  return fit_loglog_slope(xs, ys);
}

SchwartzZippelResult schwartz_zippel_check(std::size_t r, std::size_t m, std::size_t b, std::uint64_t limit) {
  if (r < 1 || m < 1) throw std::invalid_argument("sz-check: r and m must be at least 1");
  const std::uint64_t side = 2 * b + 1;
  const std::size_t vars = r * m;
  std::uint64_t total = 1;
  for (std::size_t v = 0; v < vars; ++v) {
    if (total > limit / side) throw ResourceLimitError("sz-check: enumeration exceeds limit");
    total *= side;
  }
  SchwartzZippelResult res;
  res.r = r;
  res.m = m;
  res.b = b;
  res.degree = 2 * std::min(r, m);
  res.bound = res.degree * (total / side);
  IntMatrix M(r, m);
  std::vector<std::uint64_t> digit(vars, 0);
  const long lo = -static_cast<long>(b);
  for (std::size_t v = 0; v < vars; ++v) M(v / m, v % m) = lo;
  for (std::uint64_t k = 0; k < total; ++k) {
    if (minor_polynomial(M) == 0) ++res.zero_count;
    ++res.evaluated;
    std::size_t v = 0;
    while (v < vars && digit[v] + 1 == side) {
      digit[v] = 0;
      M(v / m, v % m) = lo;
      ++v;
    }
    if (v == vars) break;
    ++digit[v];
    M(v / m, v % m) = lo + static_cast<long>(digit[v]);
  }
  res.holds = res.zero_count <= res.bound;
  return res;
}

std::string SchwartzZippelResult::to_csv() const {
  std::ostringstream os;
  os << "r,m,b,evaluated,zero_count,degree,bound,holds\n";
  os << r << ',' << m << ',' << b << ',' << evaluated << ',' << zero_count << ',' << degree << ',' << bound << ','
     << (holds ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace nilrand::randwalk
