#pragma once

// Random instances and closure enumeration shared by the unit tests and the
// acceptance binary.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "nilrand/presentation.hpp"

namespace support {

using namespace nilrand;

// Uniform word of the given length, not freely reduced.
inline Word random_raw(std::mt19937_64& rng, std::size_t m, std::size_t len) {
  Word w{m, {}};
  for (std::size_t i = 0; i < len; ++i)
    w.letters.push_back({static_cast<std::uint32_t>(1 + rng() % m), static_cast<std::int8_t>(rng() % 2 ? 1 : -1)});
  return w;
}

inline MalcevElement random_element(std::mt19937_64& rng, std::size_t m, long range) {
  std::uniform_int_distribution<long> d(-range, range);
  MalcevElement x(m);
  for (auto& a : x.alpha()) a = d(rng);
  for (auto& g : x.gamma()) g = d(rng);
  return x;
}

// Rejection-samples relators of length 2..9 until the exponent-sum matrix has full rank.
inline NilPresentation random_full_rank(std::mt19937_64& rng, std::size_t m, std::size_t r) {
  for (;;) {
    NilPresentation p{m, 2, {m, {}}};
    for (std::size_t i = 0; i < r; ++i) p.relators.relators.push_back(random_raw(rng, m, 2 + rng() % 8));
    if (normalize(p).rank_full) return p;
  }
}

// Normal generators of <<R>> in normalized coordinates: the relator images,
// their commutators with every generator, and the extra commutator
// relators, each with its inverse.
inline std::vector<MalcevElement> closure_generators(const NormalizedPresentation& np) {
  std::vector<MalcevElement> gens;
  auto add = [&](const MalcevElement& x) {
    gens.push_back(x);
    gens.push_back(inverse(x));
  };
  for (const auto& rel : np.relators) {
    add(rel.image);
    for (std::size_t k = 1; k <= np.m; ++k) add(commutator(rel.image, MalcevElement::generator(np.m, k)));
  }
  for (const auto& x : np.extra_commutator_relators) add(x);
  return gens;
}

// Every product of at most `depth` generators, deduplicated.
inline std::vector<MalcevElement> products_up_to(const std::vector<MalcevElement>& gens, std::size_t m, int depth) {
  std::vector<MalcevElement> all{MalcevElement::identity(m)}, frontier = all;
  std::set<std::string> seen{all[0].to_string()};
  for (int d = 0; d < depth; ++d) {
    std::vector<MalcevElement> next;
    for (const auto& x : frontier)
      for (const auto& g : gens) {
        auto y = multiply(x, g);
        if (seen.insert(y.to_string()).second) next.push_back(std::move(y));
      }
    all.insert(all.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return all;
}

// Product of `factors` conjugates u^-1 g^{+-1} u of random relators, with
// random conjugators of length at most `conj_len`.
inline Word random_conjugate_product(std::mt19937_64& rng, const NilPresentation& p, std::size_t factors,
                                     std::size_t conj_len) {
  Word w{p.m, {}};
  for (std::size_t f = 0; f < factors; ++f) {
    Word g = p.relators.relators[rng() % p.r()];
    if (rng() % 2) g = inverse(g);
    const Word u = random_raw(rng, p.m, rng() % (conj_len + 1));
    w = concat(w, concat(concat(inverse(u), g), u));
  }
  return w;
}

}  // namespace support
