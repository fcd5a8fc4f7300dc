// Runs the twelve acceptance criteria and prints one PASS/FAIL line each.
// Exit status is 0 iff every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "../oracles.hpp"
#include "../support.hpp"
#include "nilrand/diophantine.hpp"
#include "nilrand/presentation.hpp"
#include "nilrand/randwalk.hpp"
#include "nilrand/zmatrix.hpp"

using namespace nilrand;
using namespace support;

namespace {

constexpr std::uint64_t kSeed = 1729;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure message; later ones only count.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ == 0) first_ = what;
  }
  Outcome done(std::string detail) const {
    if (failures_ == 0) return {true, std::move(detail)};
    return {false, std::to_string(failures_) + " failure(s), first: " + first_};
  }

 private:
  std::size_t failures_ = 0;
  std::string first_;
};

std::vector<std::pair<std::size_t, int>> letters_of(const Word& w) {
  std::vector<std::pair<std::size_t, int>> out;
  for (const auto& l : w.letters) out.emplace_back(l.generator, l.sign);
  return out;
}

unsigned workers() { return std::max(2u, std::thread::hardware_concurrency()); }

// ------------------------------------------------------------------ 1

Outcome snf_suite() {
  std::mt19937_64 rng(kSeed);
  Check c;
  std::size_t nontrivial = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t rows = 1 + rng() % 6, cols = 1 + rng() % 6;
    const auto a = oracle::random_mat(rng, rows, cols, -20, 20);
    IntMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = a[i][j];
    const auto s = smith_normal_form(m);
    c.expect(s.U * m * s.V == s.D, "U M V != D");
    c.expect(is_unimodular(s.U) && is_unimodular(s.V), "U or V not unimodular");
    const std::size_t k = std::min(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        if (i != j) c.expect(s.D(i, j) == 0, "D not diagonal");
    for (std::size_t i = 0; i < k; ++i) {
      c.expect(s.D(i, i) >= 0, "negative invariant factor");
      if (i + 1 < k) {
        const Integer& d = s.D(i, i);
        const Integer& e = s.D(i + 1, i + 1);
        c.expect(d == 0 ? e == 0 : mpz_divisible_p(e.get_mpz_t(), d.get_mpz_t()) != 0, "divisibility chain broken");
      }
    }
    const auto expect = oracle::invariant_factors(a, cols);
    c.expect(s.invariant_factors == IntVector(expect.begin(), expect.end()),
             "invariant factors differ from determinantal divisors");
    for (const auto& d : s.invariant_factors) nontrivial += d > 1;
  }
  return c.done("500 matrices, " + std::to_string(nontrivial) + " factors > 1, agree with determinantal divisors");
}

// ------------------------------------------------------------------ 2

Outcome malcev_equivalence() {
  Check c;
  std::size_t words = 0;
  auto check_word = [&](const Word& w) {
    ++words;
    const auto x = from_word(w);
    c.expect(x == collection_oracle(w), "from_word != collection_oracle on " + format_word(w));
    const auto h = oracle::coords_via_heisenberg(letters_of(w), w.alphabet_size);
    c.expect(x.alpha() == IntVector(h.alpha.begin(), h.alpha.end()) &&
                 x.gamma() == IntVector(h.gamma.begin(), h.gamma.end()),
             "Heisenberg coordinates differ on " + format_word(w));
  };
  for (std::size_t m : {2, 3}) {
    Word w{m, {}};
    std::function<void(std::size_t)> rec = [&](std::size_t depth) {
      check_word(w);
      if (depth == 6) return;
      for (std::uint32_t g = 1; g <= m; ++g)
        for (std::int8_t s : {1, -1}) {
          w.letters.push_back({g, s});
          rec(depth + 1);
          w.letters.pop_back();
        }
    };
    rec(0);
  }
  Rng rng(kSeed);
  for (int t = 0; t < 1000; ++t) check_word(random_word(50, 2 + t % 2, rng));
  return c.done(std::to_string(words) + " words (exhaustive to length 6 for m = 2, 3, plus 1000 of length 50)");
}

// ------------------------------------------------------------------ 3

Outcome group_laws() {
  std::mt19937_64 rng(kSeed);
  Check c;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = 2 + t % 3;
    const auto x = random_element(rng, m, 50), y = random_element(rng, m, 50), z = random_element(rng, m, 50);
    const auto e = MalcevElement::identity(m);
    const long k = static_cast<long>(rng() % 41) - 20;
    c.expect(multiply(multiply(x, y), z) == multiply(x, multiply(y, z)), "associativity");
    c.expect(multiply(x, inverse(x)) == e && multiply(inverse(x), x) == e, "inverse");
    c.expect(commutator(commutator(x, y), z) == e, "[[x,y],z] != 1");
    c.expect(commutator(power(x, k), y) == power(commutator(x, y), k), "[x^k,y] != [x,y]^k");
  }
  return c.done("1000 instances in N_{2,2..4}, coordinates in [-50,50]");
}

// ------------------------------------------------------------------ 4

Outcome word_problem() {
  std::mt19937_64 rng(kSeed);
  Check c;
  std::size_t products = 0, closure = 0, probes = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + t % 2, r = 1 + rng() % m;
    const auto p = random_full_rank(rng, m, r);
    const auto np = normalize(p);
    for (int k = 0; k < 50; ++k, ++products) {
      const Word w = random_conjugate_product(rng, p, 1 + rng() % 4, 4);
      c.expect(is_trivial_in_G(np.to_normalized(from_word(w)), np), "product of conjugates rejected");
    }
    const auto reach = products_up_to(closure_generators(np), m, 3);
    std::set<std::string> seen;
    for (const auto& y : reach) {
      c.expect(is_trivial_in_G(y, np), "closure element rejected: " + y.to_string());
      seen.insert(y.to_string());
    }
    closure += reach.size();
    // Neighbours of closure elements that are decided nontrivial must not be reachable.
    for (std::size_t i = 0; i < reach.size(); i += 7) {
      MalcevElement q = reach[i];
      if (rng() % 2)
        q.alpha()[rng() % m] += 1;
      else
        q.gamma()[rng() % q.gamma().size()] += 1;
      if (!is_trivial_in_G(q, np)) {
        ++probes;
        c.expect(seen.count(q.to_string()) == 0, "nontrivial element found in closure");
      }
    }
  }
  return c.done("20 presentations, " + std::to_string(products) + " conjugate products, " + std::to_string(closure) +
                " closure elements, " + std::to_string(probes) + " nontrivial probes");
}

// ------------------------------------------------------------------ 5

Outcome free_coordinate_properties() {
  std::mt19937_64 rng(kSeed);
  Check c;
  std::size_t trivial_hits = 0, commuting_hits = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 2 + t % 3, r = 1 + rng() % (m - 1);
    const auto np = normalize(random_full_rank(rng, m, r));
    // h = (central closure element) * a^v with v supported past r.
    MalcevElement h = MalcevElement::identity(m);
    for (const auto& g : closure_generators(np))
      if (g.in_derived_subgroup() && rng() % 2) h = multiply(h, g);
    if (rng() % 2)
      for (std::size_t i = r; i < m; ++i) h.alpha()[i] = static_cast<long>(rng() % 3) - 1;
    if (is_trivial_in_G(h, np)) {
      ++trivial_hits;
      for (const auto& a : h.alpha()) c.expect(a == 0, "trivial element with alpha past r");
    }
    // [a_l, g] torsion forces g.alpha to vanish on the other free indices.
    const std::size_t l = r + 1 + rng() % (m - r);
    MalcevElement g = random_element(rng, m, 2);
    if (rng() % 2)
      for (std::size_t i = r; i < m; ++i)
        if (i + 1 != l) g.alpha()[i] = 0;
    if (is_trivial_mod_torsion(commutator(MalcevElement::generator(m, l), g), np)) {
      ++commuting_hits;
      for (std::size_t i = r; i < m; ++i)
        if (i + 1 != l) c.expect(g.alpha()[i] == 0, "torsion commutator leaves another free coordinate");
    }
  }
  c.expect(trivial_hits > 0 && commuting_hits > 0, "vacuous sample");
  return c.done("200 pairs, " + std::to_string(trivial_hits) + " trivial and " + std::to_string(commuting_hits) +
                " torsion-commuting instances");
}

// ------------------------------------------------------------------ 6, 7, 8

struct Tables {
  std::vector<std::string> csv;
};

Outcome full_rank(Tables& out, unsigned jobs) {
  Check c;
  std::ostringstream detail;
  for (const auto& [m, r] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 1}, {3, 2}, {2, 2}}) {
    randwalk::ExperimentConfig cfg;
    cfg.m = m;
    cfg.r = r;
    cfg.lengths = {10, 100, 1000};
    cfg.trials = 2000;
    cfg.seed = kSeed;
    cfg.jobs = jobs;
    const auto rows = randwalk::rank_experiment(cfg);
    out.csv.push_back(randwalk::rank_rows_csv(rows, cfg));
    const std::string tag = "(" + std::to_string(m) + "," + std::to_string(r) + ")";
    c.expect(randwalk::nondecreasing_within(rows, 2.0), tag + " not nondecreasing within 2 stderr");
    c.expect(rows.back().p_hat >= 0.9, tag + " p_hat(1000) < 0.9");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s p(1000)=%.4f ", tag.c_str(), rows.back().p_hat);
    detail << buf;
  }
  return c.done(detail.str() + "threshold 0.9");
}

Outcome clt(Tables& out, unsigned jobs) {
  Check c;
  std::ostringstream detail;
  for (std::size_t m : {2, 3}) {
    const auto s = randwalk::coordinate_clt_stats(m, 10000, 10000, kSeed, jobs);
    out.csv.push_back(s.to_csv());
    for (const auto& k : s.coordinates) {
      const double rel = std::abs(k.variance - k.target_variance) / k.target_variance;
      c.expect(rel <= 0.05, "m=" + std::to_string(m) + " variance off by more than 5%");
      char buf[64];
      std::snprintf(buf, sizeof buf, "m=%zu,i=%zu: %.2f%% ", m, k.coordinate, 100 * rel);
      detail << buf;
    }
  }
  return c.done("relative variance error " + detail.str());
}

Outcome local_clt(Tables& out) {
  Check c;
  std::ostringstream detail;
  for (std::size_t m : {1, 2}) {
    const auto rows = randwalk::return_probability_exact(m, 200);
    out.csv.push_back(randwalk::return_rows_csv(rows, m));
    for (const auto& row : rows)
      c.expect(row.exact.has_value() && row.mass_conserved, "mass not conserved exactly at n=" + std::to_string(row.n));
    const double slope = randwalk::decay_slope(m, 50, 200);
    const double target = -static_cast<double>(m) / 2;
    c.expect(std::abs(slope - target) <= 0.15, "slope for m=" + std::to_string(m) + " outside tolerance");
    char buf[96];
    std::snprintf(buf, sizeof buf, "m=%zu slope %.4f (target %.1f) ", m, slope, target);
    detail << buf;
    out.csv.push_back(buf);
  }
  return c.done(detail.str() + "; mass exactly 1 at every n <= 200");
}

// ------------------------------------------------------------------ 9

Outcome schwartz_zippel() {
  Check c;
  std::ostringstream detail;
  for (const auto& [r, m] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {1, 2}, {2, 2}})
    for (std::size_t b : {1, 2}) {
      const auto res = randwalk::schwartz_zippel_check(r, m, b);
      c.expect(res.holds && res.zero_count <= res.bound, "bound violated");
      detail << "(" << r << "," << m << ",b=" << b << ") " << res.zero_count << "<=" << res.bound << ' ';
    }
  return c.done(detail.str());
}

// ------------------------------------------------------------------ 10

Outcome classifier() {
  Check c;
  struct Row {
    std::size_t r, m;
    Regime regime;
    std::optional<std::size_t> corank;
    Decidability d;
  };
  const std::vector<Row> table{
      {1, 3, Regime::UndecidableRegular, 2, Decidability::Undecidable},
      {2, 4, Regime::UndecidableRegular, 2, Decidability::Undecidable},
      {0, 3, Regime::UndecidableRegular, 3, Decidability::Undecidable},
      {2, 3, Regime::VirtuallyAbelian, std::nullopt, Decidability::Decidable},
      {3, 3, Regime::Finite, std::nullopt, Decidability::Decidable},
      {5, 2, Regime::FiniteAbelian, std::nullopt, Decidability::Decidable},
  };
  std::mt19937_64 rng(kSeed);
  for (const auto& row : table) {
    const auto rep = classify(row.r, row.m, true);
    c.expect(rep.regime == row.regime && rep.free_nilpotent_corank == row.corank && rep.diophantine == row.d,
             "table row r=" + std::to_string(row.r) + " m=" + std::to_string(row.m));
    const auto bad = classify(row.r, row.m, false);
    c.expect(bad.regime == Regime::Inconclusive && bad.diophantine == Decidability::Unknown, "rank-deficient row");
    // The same verdict from an actual random presentation.
    const auto np = normalize(random_full_rank(rng, row.m, row.r));
    c.expect(classify(np).regime == row.regime, "presentation verdict differs from table");
  }
  NilPresentation deficient{2, 2, {2, {parse_word("a1 a2", 2), parse_word("a2 a1", 2)}}};
  c.expect(classify(normalize(deficient)).regime == Regime::Inconclusive, "rank-deficient presentation");
  return c.done("6 table rows, their rank-deficient twins, and random presentations per row");
}

// ------------------------------------------------------------------ 11

Outcome correspondence() {
  using dioph::RingTerm;
  Check c;
  const auto ed = dioph::z_in_g_templates(2);
  const auto amb = dioph::Ambient::free(2);
  const auto x = RingTerm::var("x"), y = RingTerm::var("y");
  const auto x1 = RingTerm::var("x1"), x2 = RingTerm::var("x2"), x3 = RingTerm::var("x3");
  struct Case {
    std::string name;
    dioph::RingSystem s;
    std::int64_t group_bound;  // must contain every subterm value of an in-box ring solution
  };
  const std::vector<Case> corpus{
      {"x=0", {{"x"}, {{x, RingTerm::constant(0)}}}, 5},
      {"x1+x2=x3", {{"x1", "x2", "x3"}, {{RingTerm::add(x1, x2), x3}}}, 5},
      {"x*x=4", {{"x"}, {{RingTerm::mul(x, x), RingTerm::constant(4)}}}, 5},
      {"x*x=2", {{"x"}, {{RingTerm::mul(x, x), RingTerm::constant(2)}}}, 5},
      {"x*y=6,x+y=5",
       {{"x", "y"}, {{RingTerm::mul(x, y), RingTerm::constant(6)}, {RingTerm::add(x, y), RingTerm::constant(5)}}},
       6},
  };
  std::ostringstream detail;
  for (const auto& k : corpus) {
    const auto rep = dioph::verify_correspondence(k.s, ed, amb, 5, k.group_bound);
    c.expect(rep.ok(), k.name + ": " + (rep.counterexamples.empty() ? "" : rep.counterexamples.front()));
    c.expect(rep.extended == rep.ring_solutions && rep.projected_ok == rep.group_solutions,
             k.name + ": incomplete correspondence");
    detail << k.name << " " << rep.ring_solutions << "/" << rep.group_solutions << "; ";
  }

  dioph::GroupSystem gadget;
  gadget.constants = ed.constants;
  gadget.variables = ed.multiply.slots;
  gadget.variables.insert(gadget.variables.end(), ed.multiply.aux.begin(), ed.multiply.aux.end());
  gadget.equations = ed.multiply.equations;
  const auto& s1 = ed.multiply.slots[0];
  const auto& s2 = ed.multiply.slots[1];
  const auto& s3 = ed.multiply.slots[2];
  std::size_t laws = 0;
  for (int t1 = -4; t1 <= 4; ++t1)
    for (int t2 = -4; t2 <= 4; ++t2) {
      dioph::GroupSolveOptions opt;
      opt.fixed = {{s1, dioph::power_of_c(2, t1)}, {s2, dioph::power_of_c(2, t2)}};
      opt.projection = std::vector<std::string>{ed.multiply.aux[0], ed.multiply.aux[1], s3};
      opt.bound_determined = false;
      const auto res = dioph::bounded_solve_group(gadget, amb, 4, opt);
      c.expect(!res.solutions.empty(), "no gadget witness");
      for (const auto& sol : res.solutions)
        c.expect(sol.at(s3) == dioph::power_of_c(2, t1 * t2), "gadget law violated");
      ++laws;
    }
  return c.done("ring/group solutions " + detail.str() + "gadget law on " + std::to_string(laws) + " pairs");
}

// ------------------------------------------------------------------ 12

Tables first_tables;

Outcome determinism() {
  Tables again;
  full_rank(again, 1);
  clt(again, 1);
  local_clt(again);
  Check c;
  c.expect(again.csv.size() == first_tables.csv.size(), "table count differs");
  for (std::size_t i = 0; i < std::min(again.csv.size(), first_tables.csv.size()); ++i)
    c.expect(again.csv[i] == first_tables.csv[i], "table " + std::to_string(i) + " differs");
  return c.done(std::to_string(again.csv.size()) + " tables byte-identical across a rerun with jobs " +
                std::to_string(workers()) + " -> 1");
}

}  // namespace

int main() {
  const unsigned jobs = workers();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact algebra: SNF identities", snf_suite},
      {"Malcev oracle equivalence", malcev_equivalence},
      {"group laws", group_laws},
      {"word problem soundness and completeness", word_problem},
      {"free coordinates of trivial and commuting elements", free_coordinate_properties},
      {"full-rank probability trend", [&] { return full_rank(first_tables, jobs); }},
      {"coordinate CLT variance", [&] { return clt(first_tables, jobs); }},
      {"local CLT decay and exact mass", [&] { return local_clt(first_tables); }},
      {"Schwartz-Zippel bound", schwartz_zippel},
      {"classifier table", classifier},
      {"compiler correspondence and gadget law", correspondence},
      {"determinism of experiment tables", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu  %s  [%s] (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
