#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nilrand/zmatrix.hpp"

namespace nilrand {

// Random engine used everywhere a seed must reproduce results bit for bit.
using Rng = std::mt19937_64;

// Signed generator a_k^{+-1}; generator is 1-based.
struct Letter {
  std::uint32_t generator = 1;
  std::int8_t sign = 1;

  Letter inverse() const { return {generator, static_cast<std::int8_t>(-sign)}; }
  friend bool operator==(const Letter&, const Letter&) = default;
};

// A (not necessarily reduced) word over a_1^{+-1}, ..., a_m^{+-1}.
struct Word {
  std::size_t alphabet_size = 0;
  std::vector<Letter> letters;

  std::size_t length() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  friend bool operator==(const Word&, const Word&) = default;
};

struct RelatorSet {
  std::size_t alphabet_size = 0;
  std::vector<Word> relators;

  std::size_t size() const { return relators.size(); }
};

/// Parses the textual word grammar:
///   word  := item*
///   item  := atom ('^' int)?
///   atom  := 'a' digits | '[' word ',' word ']'
/// Whitespace between items is optional; `[u,v]` is u^-1 v^-1 u v and the
/// empty string is the identity. Throws ParseError (with position) on bad
/// syntax or a generator index outside [1, m].
Word parse_word(std::string_view text, std::size_t m);

// Run-length rendering, e.g. "a1^2 a2 a1^-1"; parse_word inverts it exactly.
std::string format_word(const Word& w);

Word free_reduce(const Word& w);
Word inverse(const Word& w);
Word concat(const Word& u, const Word& v);
Word power(const Word& w, std::int64_t k);
Word commutator(const Word& u, const Word& v);
Word generator_word(std::uint32_t generator, std::size_t m, std::int64_t exponent = 1);

// r x m matrix of exponent sums: entry (i, j) counts a_j minus a_j^-1 in w_i.
IntMatrix exponent_sum_matrix(const RelatorSet& r);
IntVector exponent_sums(const Word& w);

// Uniform raw string: each letter drawn independently from the 2m signed
// generators. Not freely reduced.
Word random_word(std::size_t length, std::size_t m, Rng& rng);

// Uniform integer in [0, n) by rejection on the 64-bit engine output, so the
// value stream is identical on every platform.
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

// Elementary Nielsen transformation on relators or generators.
//   MultiplyRelator   g_target <- g_source^exponent g_target
//   MultiplyGenerator new a_target = a_target a_source^exponent; old letters
//                     a_target are rewritten as a_target a_source^-exponent
//   SwapRelators / SwapGenerators exchange target and source
//   InvertRelator     g_target <- g_target^-1
//   InvertGenerator   new a_target = a_target^-1
struct NielsenMove {
  enum class Kind {
    MultiplyRelator,
    MultiplyGenerator,
    SwapRelators,
    SwapGenerators,
    InvertRelator,
    InvertGenerator
  };
  Kind kind;
  std::size_t target = 0;  // 0-based
  std::size_t source = 0;  // 0-based
  std::int64_t exponent = 1;

  bool acts_on_generators() const {
    return kind == Kind::MultiplyGenerator || kind == Kind::SwapGenerators ||
           kind == Kind::InvertGenerator;
  }
  std::string describe() const;
};

struct NielsenLog {
  std::vector<NielsenMove> moves;
};

// Translates one Smith elementary operation into the matching Nielsen move.
NielsenMove nielsen_move_for(const ElementaryOp& op);

// Applies a move to a relator list (generator moves rewrite every relator
// eagerly and reduce freely).
void apply_move(const NielsenMove& move, std::vector<Word>& relators);

// Rewrites a word in the original generators into the generators produced
// by the log, and back. Results are freely reduced.
Word rewrite_to_new(const Word& w, const NielsenLog& log);
Word rewrite_to_old(const Word& w, const NielsenLog& log);

struct NielsenNormalization {
  RelatorSet relators;
  NielsenLog log;
  SmithDecomposition snf;
};

// Mirrors every Smith reduction step of M(R) as a Nielsen move, so that the
// exponent matrix of the returned relators is exactly the Smith form D.
NielsenNormalization nielsen_normalize(const RelatorSet& r);

}  // namespace nilrand
