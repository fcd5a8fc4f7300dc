#include "nilrand/nilpotent2.hpp"

#include <sstream>
#include <stdexcept>

#include "nilrand/errors.hpp"

namespace nilrand {

namespace {

void require_same_rank(const MalcevElement& x, const MalcevElement& y) {
  if (x.rank() != y.rank())
    throw DimensionMismatch("elements of N_{2," + std::to_string(x.rank()) + "} and N_{2," +
                            std::to_string(y.rank()) + "}");
}

}  // namespace

MalcevElement::MalcevElement(std::size_t m) : m_(m), alpha_(m), gamma_(pair_count(m)) {}

MalcevElement::MalcevElement(IntVector alpha, IntVector gamma)
    : m_(alpha.size()), alpha_(std::move(alpha)), gamma_(std::move(gamma)) {
  if (gamma_.size() != pair_count(m_)) throw DimensionMismatch("gamma length must be m(m-1)/2");
}

MalcevElement MalcevElement::generator(std::size_t m, std::size_t k, const Integer& exponent) {
  if (k < 1 || k > m) throw DimensionMismatch("generator index out of range");
  MalcevElement x(m);
  x.alpha_[k - 1] = exponent;
  return x;
}

MalcevElement MalcevElement::basic_commutator(std::size_t m, std::size_t i, std::size_t j,
                                              const Integer& exponent) {
  MalcevElement x(m);
  x.gamma_[pair_index(m, i, j)] = exponent;
  return x;
}

std::size_t MalcevElement::pair_index(std::size_t m, std::size_t i, std::size_t j) {
  if (!(1 <= i && i < j && j <= m)) throw DimensionMismatch("commutator pair out of range");
  const std::size_t r = i - 1, c = j - 1;
  return r * m - r * (r + 1) / 2 + (c - r - 1);
}

std::pair<std::size_t, std::size_t> MalcevElement::pair_at(std::size_t m, std::size_t index) {
  for (std::size_t i = 1; i < m; ++i) {
    const std::size_t row = m - i;
    if (index < row) return {i, i + 1 + index};
    index -= row;
  }
  throw DimensionMismatch("pair index out of range");
}

bool MalcevElement::is_identity() const {
  for (const auto& a : alpha_)
    if (a != 0) return false;
  for (const auto& g : gamma_)
    if (g != 0) return false;
  return true;
}

bool MalcevElement::in_derived_subgroup() const {
  for (const auto& a : alpha_)
    if (a != 0) return false;
  return true;
}

std::string MalcevElement::to_string() const {
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const std::string& base, const Integer& e) {
    if (e == 0) return;
    if (!first) os << ' ';
    os << base;
    if (e != 1) os << '^' << e.get_str();
    first = false;
  };
  for (std::size_t k = 0; k < m_; ++k) emit("a" + std::to_string(k + 1), alpha_[k]);
  for (std::size_t p = 0; p < gamma_.size(); ++p) {
    const auto [i, j] = pair_at(m_, p);
    emit("[a" + std::to_string(i) + ",a" + std::to_string(j) + "]", gamma_[p]);
  }
  return first ? "1" : os.str();
}

// Collecting (prod a^xa)(prod a^ya) moves each a_i^{ya_i} left past the
// a_j^{xa_j}, j > i, picking up [a_i, a_j]^{-xa_j ya_i}.
MalcevElement multiply(const MalcevElement& x, const MalcevElement& y) {
  require_same_rank(x, y);
  const std::size_t m = x.rank();
  MalcevElement z(m);
  for (std::size_t k = 0; k < m; ++k) z.alpha()[k] = x.alpha()[k] + y.alpha()[k];
  std::size_t p = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j, ++p)
      z.gamma()[p] = x.gamma()[p] + y.gamma()[p] - x.alpha()[j] * y.alpha()[i];
  return z;
}

MalcevElement inverse(const MalcevElement& x) {
  const std::size_t m = x.rank();
  MalcevElement z(m);
  for (std::size_t k = 0; k < m; ++k) z.alpha()[k] = -x.alpha()[k];
  std::size_t p = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j, ++p)
      z.gamma()[p] = -x.gamma()[p] - x.alpha()[i] * x.alpha()[j];
  return z;
}

MalcevElement commutator(const MalcevElement& x, const MalcevElement& y) {
  require_same_rank(x, y);
  const std::size_t m = x.rank();
  MalcevElement z(m);
  std::size_t p = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j, ++p)
      z.gamma()[p] = x.alpha()[i] * y.alpha()[j] - x.alpha()[j] * y.alpha()[i];
  return z;
}

MalcevElement power(const MalcevElement& x, const Integer& k) {
  MalcevElement base = k < 0 ? inverse(x) : x;
  Integer n = abs_value(k);
  MalcevElement acc = MalcevElement::identity(x.rank());
  while (n > 0) {
    if (mpz_odd_p(n.get_mpz_t())) acc = multiply(acc, base);
    n >>= 1;
    if (n > 0) base = multiply(base, base);
  }
  return acc;
}

MalcevElement from_word(const Word& w) {
  const std::size_t m = w.alphabet_size;
  MalcevElement acc(m);
  // Right-multiplying by a_g^s moves it left past every a_j, j > g.
  for (const Letter& l : w.letters) {
    const std::size_t g = l.generator - 1;
    if (g >= m) throw DimensionMismatch("letter outside the word's alphabet");
    for (std::size_t j = g + 1; j < m; ++j) {
      if (acc.alpha()[j] == 0) continue;
      const std::size_t p = MalcevElement::pair_index(m, g + 1, j + 1);
      if (l.sign > 0)
        acc.gamma()[p] -= acc.alpha()[j];
      else
        acc.gamma()[p] += acc.alpha()[j];
    }
    acc.alpha()[g] += l.sign;
  }
  return acc;
}

MalcevElement collection_oracle(const Word& w) {
  const std::size_t m = w.alphabet_size;
  std::vector<Letter> letters = w.letters;
  IntVector central(MalcevElement::pair_count(m));
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (std::size_t k = 0; k + 1 < letters.size(); ++k) {
      const Letter left = letters[k];
      const Letter right = letters[k + 1];
      if (left.generator <= right.generator) continue;
      // a_t^e a_s^d = a_s^d a_t^e [a_t^e, a_s^d] = a_s^d a_t^e [a_s, a_t]^{-e d}
      const std::size_t p = MalcevElement::pair_index(m, right.generator, left.generator);
      central[p] -= left.sign * right.sign;
      letters[k] = right;
      letters[k + 1] = left;
      swapped = true;
    }
  }
  IntVector alpha(m);
  for (const Letter& l : letters) alpha[l.generator - 1] += l.sign;
  return MalcevElement(std::move(alpha), std::move(central));
}

MalcevElement apply_homomorphism(const MalcevElement& x, const std::vector<MalcevElement>& images) {
  if (images.size() != x.rank()) throw DimensionMismatch("one image per generator required");
  const std::size_t target_rank = images.empty() ? 0 : images.front().rank();
  MalcevElement acc(target_rank);
  for (std::size_t k = 0; k < x.rank(); ++k)
    if (x.alpha()[k] != 0) acc = multiply(acc, power(images[k], x.alpha()[k]));
  for (std::size_t p = 0; p < x.gamma().size(); ++p) {
    if (x.gamma()[p] == 0) continue;
    const auto [i, j] = MalcevElement::pair_at(x.rank(), p);
    acc = multiply(acc, power(commutator(images[i - 1], images[j - 1]), x.gamma()[p]));
  }
  return acc;
}

}  // namespace nilrand
