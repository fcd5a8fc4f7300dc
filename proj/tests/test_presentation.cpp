#include <doctest.h>

#include <random>
#include <set>

#include <json.hpp>

#include "nilrand/errors.hpp"
#include "nilrand/presentation.hpp"
#include "support.hpp"

using namespace nilrand;
using namespace support;

namespace {

NilPresentation P(std::size_t m, std::vector<std::string> rels, std::size_t s = 2) {
  NilPresentation p;
  p.m = m;
  p.s = s;
  p.relators.alphabet_size = m;
  for (const auto& r : rels) p.relators.relators.push_back(parse_word(r, m));
  return p;
}

MalcevElement E(const std::string& w, std::size_t m) { return from_word(parse_word(w, m)); }

}  // namespace

TEST_CASE("presentation parsing") {
  const auto p = parse_presentation("# header follows\n3 2\na1^2 a2   # first\n\n[a1,a3]\n");
  CHECK(p.m == 3);
  CHECK(p.s == 2);
  CHECK(p.r() == 2);
  CHECK(p.relators.relators[1] == parse_word("[a1,a3]", 3));
  CHECK(parse_presentation("2 4\n").r() == 0);
  CHECK_THROWS_AS(parse_presentation(""), ParseError);
  CHECK_THROWS_AS(parse_presentation("2\n"), ParseError);
  CHECK_THROWS_AS(parse_presentation("2 1\n"), ParseError);
  CHECK_THROWS_AS(parse_presentation("0 2\n"), ParseError);
  CHECK_THROWS_AS(parse_presentation("2 2 7\n"), ParseError);
  try {
    parse_presentation("2 2\na1 a3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 8);  // the out-of-range index
  }
}

TEST_CASE("normalize examples") {
  SUBCASE("single square") {
    const auto np = normalize(P(2, {"a1^2"}));
    REQUIRE(np.relators.size() == 1);
    CHECK(np.alphas() == IntVector{2});
    CHECK(np.relators[0].c_part == MalcevElement::identity(2));
    REQUIRE(np.closure_lattice.size() == 1);
    CHECK(np.closure_lattice[0] == IntVector{2});
    CHECK(np.rank_full);
  }
  SUBCASE("no relators") {
    const auto np = normalize(P(2, {}));
    CHECK(np.relators.empty());
    CHECK(np.closure_lattice.empty());
    CHECK(np.rank_full);
  }
  SUBCASE("unimodular pair") {
    const auto np = normalize(P(3, {"a1 a2", "a2"}));
    CHECK(np.alphas() == IntVector{1, 1});
    CHECK(np.snf.D == IntMatrix{{1, 0, 0}, {0, 1, 0}});
  }
  SUBCASE("rank deficient") {
    const auto np = normalize(P(2, {"a1 a2", "a2^-1 a1^-1 [a1,a2]"}));
    CHECK_FALSE(np.rank_full);
    CHECK(np.relators.size() == 1);
    CHECK(np.extra_commutator_relators.size() == 1);
    CHECK_THROWS_AS(is_trivial_in_G(MalcevElement::identity(2), np), InconclusiveError);
    CHECK_THROWS_AS(is_central_mod_torsion(MalcevElement::identity(2), np), InconclusiveError);
  }
}

TEST_CASE("normalized relators have the form a_i^alpha c_i") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 80; ++t) {
    const std::size_t m = 1 + rng() % 4, r = rng() % 5;
    NilPresentation p{m, 2, {m, {}}};
    for (std::size_t i = 0; i < r; ++i) p.relators.relators.push_back(random_raw(rng, m, 1 + rng() % 10));
    const auto np = normalize(p);
    CHECK(np.relators.size() + np.extra_commutator_relators.size() == r);
    for (const auto& rel : np.relators) {
      CHECK(rel.alpha != 0);
      CHECK(rel.c_part.in_derived_subgroup());
      CHECK(rel.image == multiply(MalcevElement::generator(m, rel.index + 1, rel.alpha), rel.c_part));
      CHECK(rel.image == from_word(np.nielsen_relators.relators[rel.index]));
    }
    for (const auto& x : np.extra_commutator_relators) CHECK(x.in_derived_subgroup());
    CHECK(np.rank_full == (np.snf.rank == std::min(r, m)));
    // Generator images agree with rewriting words into the new generators.
    const Word w = random_raw(rng, m, 12);
    CHECK(np.to_normalized(from_word(w)) == from_word(rewrite_to_new(w, np.nielsen_log)));
    if (!np.rank_full) continue;
    for (const auto& g : p.relators.relators) CHECK(is_trivial_in_G(np.to_normalized(from_word(g)), np));
  }
}

TEST_CASE("word problem examples") {
  const auto np = normalize(P(2, {"a1^2"}));
  CHECK(is_trivial_in_G(MalcevElement::basic_commutator(2, 1, 2, 2), np));
  CHECK_FALSE(is_trivial_in_G(MalcevElement::basic_commutator(2, 1, 2), np));
  CHECK(is_trivial_in_G(MalcevElement::identity(2), np));
  CHECK(is_trivial_in_G(E("a1^4 [a1,a2]^-6", 2), np));
  CHECK_FALSE(is_trivial_in_G(E("a1", 2), np));
  CHECK_FALSE(is_trivial_in_G(E("a2^2", 2), np));
  CHECK_THROWS_AS(is_trivial_in_G(MalcevElement::identity(3), np), DimensionMismatch);

  CHECK(is_trivial_mod_torsion(MalcevElement::basic_commutator(2, 1, 2), np));
  CHECK(is_trivial_mod_torsion(E("a1", 2), np));
  CHECK_FALSE(is_trivial_mod_torsion(E("a2", 2), np));
  const auto free2 = normalize(P(2, {}));
  CHECK_FALSE(is_trivial_mod_torsion(MalcevElement::basic_commutator(2, 1, 2), free2));
  CHECK(is_trivial_mod_torsion(MalcevElement::identity(2), free2));
}

TEST_CASE("brute-force closure agrees with the word problem") {
  std::mt19937_64 rng(23);
  const std::vector<std::pair<std::size_t, std::size_t>> shapes{{2, 1}, {3, 1}, {3, 2}, {2, 2}, {3, 3}, {2, 3}};
  for (const auto& [m, r] : shapes) {
    const auto np = normalize(random_full_rank(rng, m, r));
    const auto gens = closure_generators(np);
    const auto reach = products_up_to(gens, m, gens.size() > 20 ? 2 : 3);
    std::set<std::string> seen;
    for (const auto& y : reach) {
      CHECK(is_trivial_in_G(y, np));
      seen.insert(y.to_string());
    }
    // Elements decided nontrivial never show up among the products.
    for (int t = 0; t < 300; ++t) {
      const auto h = random_element(rng, m, 3);
      if (!is_trivial_in_G(h, np)) CHECK(seen.count(h.to_string()) == 0);
    }
    for (const auto& y : reach)
      if (y.alpha() == IntVector(m)) CHECK(is_trivial_mod_torsion(y, np));
  }
}

TEST_CASE("products of conjugates of relators are trivial") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 60; ++t) {
    const std::size_t m = 2 + rng() % 3, r = 1 + rng() % 4;
    const auto p = random_full_rank(rng, m, r);
    const auto np = normalize(p);
    const Word w = random_conjugate_product(rng, p, 1 + rng() % 4, 4);
    CHECK(is_trivial_in_G(np.to_normalized(from_word(w)), np));
  }
}

TEST_CASE("trivial elements have no alpha past the relator indices") {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 40; ++t) {
    const std::size_t m = 3 + rng() % 2, r = 1 + rng() % (m - 2);
    const auto np = normalize(random_full_rank(rng, m, r));
    for (int k = 0; k < 40; ++k) {
      auto h = random_element(rng, m, 2);
      for (std::size_t i = 0; i < r; ++i) h.alpha()[i] = 0;
      if (k % 4 == 0)
        for (auto& a : h.alpha()) a = 0;
      if (is_trivial_in_G(h, np))
        for (const auto& a : h.alpha()) CHECK(a == 0);
      // [a_l, h] trivial modulo torsion forces h.alpha to vanish on the other free indices.
      for (std::size_t l = r + 1; l <= m; ++l) {
        auto h2 = random_element(rng, m, 2);
        if (k % 3 == 0)
          for (std::size_t i = r; i < m; ++i)
            if (i + 1 != l) h2.alpha()[i] = 0;
        if (is_trivial_mod_torsion(commutator(MalcevElement::generator(m, l), h2), np))
          for (std::size_t i = r; i < m; ++i)
            if (i + 1 != l) CHECK(h2.alpha()[i] == 0);
      }
    }
  }
}

TEST_CASE("centrality and c-smallness") {
  const auto g0 = normalize(P(3, {"a1^2"}));
  CHECK(is_central_mod_torsion(E("a1", 3), g0));
  CHECK_FALSE(is_central_mod_torsion(E("a2", 3), g0));
  CHECK(is_central_mod_torsion(MalcevElement::basic_commutator(3, 2, 3), g0));
  CHECK(is_c_small(E("a3", 3), g0));
  CHECK(is_c_small(E("a2", 3), g0));
  CHECK(is_c_small(E("a1 a3", 3), g0));
  CHECK_FALSE(is_c_small(E("a3^2", 3), g0));
  CHECK_FALSE(is_c_small(MalcevElement::identity(3), g0));
  CHECK_FALSE(is_c_small(E("a1", 3), g0));

  const auto free2 = normalize(P(2, {}));
  CHECK(is_c_small(E("a1", 2), free2));
  CHECK(is_c_small(E("a2", 2), free2));
  CHECK_FALSE(is_central_mod_torsion(E("a1", 2), free2));
  CHECK(is_central_mod_torsion(MalcevElement::basic_commutator(2, 1, 2), free2));

  const auto free3 = normalize(P(3, {}));
  CHECK(is_c_small(E("a1 a2^2", 3), free3));
  CHECK_FALSE(is_c_small(E("a1^2 a2^2", 3), free3));

  CHECK_THROWS_AS(is_c_small(E("a1", 3), normalize(P(3, {"a1^2", "a2"}))), InconclusiveError);

  // Commutators are central in class 2.
  std::mt19937_64 rng(41);
  for (int t = 0; t < 30; ++t) {
    const std::size_t m = 2 + rng() % 3;
    const auto np = normalize(random_full_rank(rng, m, rng() % m));
    const auto x = random_element(rng, m, 4), y = random_element(rng, m, 4);
    CHECK(is_central_mod_torsion(commutator(x, y), np));
  }
}

TEST_CASE("classification table") {
  struct Row {
    std::size_t r, m;
    Regime regime;
    std::optional<std::size_t> corank;
    Decidability d;
  };
  const std::vector<Row> table{
      {2, 4, Regime::UndecidableRegular, 2, Decidability::Undecidable},
      {0, 2, Regime::UndecidableRegular, 2, Decidability::Undecidable},
      {2, 3, Regime::VirtuallyAbelian, std::nullopt, Decidability::Decidable},
      {3, 3, Regime::Finite, std::nullopt, Decidability::Decidable},
      {5, 2, Regime::FiniteAbelian, std::nullopt, Decidability::Decidable},
  };
  for (const auto& row : table) {
    const auto rep = classify(row.r, row.m, true);
    CHECK(rep.regime == row.regime);
    CHECK(rep.free_nilpotent_corank == row.corank);
    CHECK(rep.diophantine == row.d);
    CHECK_FALSE(rep.notes.empty());
    const auto bad = classify(row.r, row.m, false);
    CHECK(bad.regime == Regime::Inconclusive);
    CHECK(bad.diophantine == Decidability::Unknown);
  }

  const auto two = classify(normalize(P(2, {"a1^2", "a2^3"})));
  CHECK(two.regime == Regime::Finite);
  CHECK(two.rank == 2);
  CHECK(two.invariant_factors == IntVector{1, 6});
  // Relator order does not matter.
  const auto swapped = classify(normalize(P(2, {"a2^3", "a1^2"})));
  CHECK(swapped.to_json() == two.to_json());

  const auto deep = classify(normalize(P(4, {"a1^2"}, 3)));
  CHECK(deep.regime == Regime::UndecidableRegular);
  bool mentions_class = false;
  for (const auto& n : deep.notes) mentions_class |= n.find("class-3") != std::string::npos;
  CHECK(mentions_class);

  const auto j = nlohmann::json::parse(two.to_json());
  CHECK(j["regime"] == "FINITE");
  CHECK(j["corank"].is_null());
  CHECK(j["diophantine"] == "DECIDABLE");
  CHECK(j["rank"] == 2);
  CHECK(j["invariant_factors"] == nlohmann::json::array({1, 6}));
  CHECK(j["notes"].is_array());
  CHECK(nlohmann::json::parse(deep.to_json())["corank"] == 3);
}
