#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "nilrand/integer.hpp"
#include "nilrand/words.hpp"

namespace nilrand {

// Element of the free 2-step nilpotent group N_{2,m} in Malcev coordinates:
//
//   a_1^alpha_1 ... a_m^alpha_m  prod_{i<j} [a_i, a_j]^gamma_{ij}
//
// with [g, h] = g^-1 h^-1 g h. Pairs (i, j), i < j, are indexed row-major.
// Coordinates are unique, so equality of elements is equality of vectors.
class MalcevElement {
 public:
  MalcevElement() = default;
  explicit MalcevElement(std::size_t m);
  MalcevElement(IntVector alpha, IntVector gamma);

  static MalcevElement identity(std::size_t m) { return MalcevElement(m); }
  // a_k^exponent, k 1-based.
  static MalcevElement generator(std::size_t m, std::size_t k, const Integer& exponent = 1);
  // [a_i, a_j]^exponent, 1 <= i < j <= m.
  static MalcevElement basic_commutator(std::size_t m, std::size_t i, std::size_t j,
                                        const Integer& exponent = 1);

  std::size_t rank() const { return m_; }
  const IntVector& alpha() const { return alpha_; }
  const IntVector& gamma() const { return gamma_; }
  IntVector& alpha() { return alpha_; }
  IntVector& gamma() { return gamma_; }

  // Value of gamma_{ij} for 1-based i < j.
  const Integer& gamma_at(std::size_t i, std::size_t j) const { return gamma_[pair_index(m_, i, j)]; }

  bool is_identity() const;
  bool in_derived_subgroup() const;  // alpha == 0

  // "a1^2 a2 [a1,a2]^-1"; the identity renders as "1".
  std::string to_string() const;

  friend bool operator==(const MalcevElement&, const MalcevElement&) = default;

  static std::size_t pair_count(std::size_t m) { return m * (m - 1) / 2; }
  // Row-major index of the 1-based pair (i, j), i < j.
  static std::size_t pair_index(std::size_t m, std::size_t i, std::size_t j);
  // Inverse of pair_index, returning the 1-based pair.
  static std::pair<std::size_t, std::size_t> pair_at(std::size_t m, std::size_t index);

 private:
  std::size_t m_ = 0;
  IntVector alpha_;
  IntVector gamma_;
};

MalcevElement multiply(const MalcevElement& x, const MalcevElement& y);
MalcevElement inverse(const MalcevElement& x);
MalcevElement commutator(const MalcevElement& x, const MalcevElement& y);
MalcevElement power(const MalcevElement& x, const Integer& k);

// Homomorphic evaluation of a word in N_{2, w.alphabet_size}.
MalcevElement from_word(const Word& w);

// Reference evaluation by literal collection: adjacent out-of-order letters
// a_t^e a_s^d (s < t) are swapped and the central factor [a_s,a_t]^{-e d}
// is recorded, until the word is sorted. Quadratic; exists to pin down
// multiply() and from_word().
MalcevElement collection_oracle(const Word& w);

// Image of x under the endomorphism sending a_k to images[k-1].
MalcevElement apply_homomorphism(const MalcevElement& x, const std::vector<MalcevElement>& images);

}  // namespace nilrand
