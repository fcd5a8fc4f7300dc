#include "nilrand/words.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nilrand/errors.hpp"

namespace nilrand {

namespace {

class WordParser {
 public:
  WordParser(std::string_view text, std::size_t m) : text_(text), m_(m) {}

  Word parse() {
    Word w = parse_sequence();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return w;
  }

 private:
  Word parse_sequence() {
    Word w{m_, {}};
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) break;
      const char c = text_[pos_];
      if (c != 'a' && c != '[') break;
      Word atom = parse_atom();
      skip_space();
      if (peek('^')) {
        ++pos_;
        skip_space();
        const std::int64_t e = parse_int();
        atom = power(atom, e);
      }
      w.letters.insert(w.letters.end(), atom.letters.begin(), atom.letters.end());
    }
    return w;
  }

  Word parse_atom() {
    if (peek('[')) {
      ++pos_;
      Word u = parse_sequence();
      skip_space();
      expect(',');
      Word v = parse_sequence();
      skip_space();
      expect(']');
      return commutator(u, v);
    }
    expect('a');
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail("expected generator index");
    std::uint64_t k = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      k = k * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
      if (k > std::numeric_limits<std::uint32_t>::max()) fail("generator index too large");
      ++pos_;
    }
    if (k < 1 || k > m_) {
      throw ParseError("generator a" + std::to_string(k) + " outside alphabet of size " +
                           std::to_string(m_),
                       start);
    }
    return Word{m_, {Letter{static_cast<std::uint32_t>(k), 1}}};
  }

  std::int64_t parse_int() {
    bool neg = false;
    if (peek('-') || peek('+')) {
      neg = text_[pos_] == '-';
      ++pos_;
    }
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail("expected integer exponent");
    std::int64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      if (v > (std::numeric_limits<std::int64_t>::max() - 9) / 10) fail("exponent too large");
      v = v * 10 + (text_[pos_] - '0');
      ++pos_;
    }
    return neg ? -v : v;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  std::string_view text_;
  std::size_t m_;
  std::size_t pos_ = 0;
};

}  // namespace

Word parse_word(std::string_view text, std::size_t m) { return WordParser(text, m).parse(); }

std::string format_word(const Word& w) {
  std::ostringstream os;
  std::size_t i = 0;
  bool first = true;
  while (i < w.letters.size()) {
    std::size_t j = i;
    while (j < w.letters.size() && w.letters[j] == w.letters[i]) ++j;
    const auto run = static_cast<std::int64_t>(j - i) * w.letters[i].sign;
    if (!first) os << ' ';
    os << 'a' << w.letters[i].generator;
    if (run != 1) os << '^' << run;
    first = false;
    i = j;
  }
  return os.str();
}

Word free_reduce(const Word& w) {
  Word out{w.alphabet_size, {}};
  out.letters.reserve(w.letters.size());
  for (const Letter& l : w.letters) {
    if (!out.letters.empty() && out.letters.back() == l.inverse())
      out.letters.pop_back();
    else
      out.letters.push_back(l);
  }
  return out;
}

Word inverse(const Word& w) {
  Word out{w.alphabet_size, {}};
  out.letters.reserve(w.letters.size());
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) out.letters.push_back(it->inverse());
  return out;
}

Word concat(const Word& u, const Word& v) {
  Word out{std::max(u.alphabet_size, v.alphabet_size), u.letters};
  out.letters.insert(out.letters.end(), v.letters.begin(), v.letters.end());
  return out;
}

Word power(const Word& w, std::int64_t k) {
  const Word base = k < 0 ? inverse(w) : w;
  const std::uint64_t n = k < 0 ? static_cast<std::uint64_t>(-(k + 1)) + 1 : static_cast<std::uint64_t>(k);
  Word out{w.alphabet_size, {}};
  out.letters.reserve(base.letters.size() * n);
  for (std::uint64_t i = 0; i < n; ++i)
    out.letters.insert(out.letters.end(), base.letters.begin(), base.letters.end());
  return out;
}

Word commutator(const Word& u, const Word& v) {
  return concat(concat(inverse(u), inverse(v)), concat(u, v));
}

Word generator_word(std::uint32_t generator, std::size_t m, std::int64_t exponent) {
  return power(Word{m, {Letter{generator, 1}}}, exponent);
}

IntVector exponent_sums(const Word& w) {
  std::vector<std::int64_t> sums(w.alphabet_size, 0);
  for (const Letter& l : w.letters) sums.at(l.generator - 1) += l.sign;
  IntVector out(w.alphabet_size);
  for (std::size_t j = 0; j < sums.size(); ++j) out[j] = static_cast<long>(sums[j]);
  return out;
}

IntMatrix exponent_sum_matrix(const RelatorSet& r) {
  IntMatrix m(r.relators.size(), r.alphabet_size);
  for (std::size_t i = 0; i < r.relators.size(); ++i) {
    if (r.relators[i].alphabet_size != r.alphabet_size)
      throw DimensionMismatch("relator alphabet differs from the relator set");
    const auto row = exponent_sums(r.relators[i]);
    for (std::size_t j = 0; j < row.size(); ++j) m(i, j) = row[j];
  }
  return m;
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: empty range");
  // Largest multiple of n representable in 64 bits bounds the accepted draws.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

Word random_word(std::size_t length, std::size_t m, Rng& rng) {
  if (m == 0) throw std::invalid_argument("random_word: alphabet must be nonempty");
  Word w{m, {}};
  w.letters.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const std::uint64_t k = uniform_below(rng, 2 * m);
    w.letters.push_back(Letter{static_cast<std::uint32_t>(k / 2 + 1),
                               static_cast<std::int8_t>(k % 2 == 0 ? 1 : -1)});
  }
  return w;
}

std::string NielsenMove::describe() const {
  std::ostringstream os;
  const auto g = [](std::size_t i) { return "a" + std::to_string(i + 1); };
  const auto r = [](std::size_t i) { return "g" + std::to_string(i + 1); };
  switch (kind) {
    case Kind::MultiplyRelator:
      os << r(target) << " <- " << r(source) << "^" << exponent << " " << r(target);
      break;
    case Kind::MultiplyGenerator:
      os << g(target) << "' = " << g(target) << " " << g(source) << "^" << exponent;
      break;
    case Kind::SwapRelators:
      os << "swap " << r(target) << " " << r(source);
      break;
    case Kind::SwapGenerators:
      os << "swap " << g(target) << " " << g(source);
      break;
    case Kind::InvertRelator:
      os << r(target) << " <- " << r(target) << "^-1";
      break;
    case Kind::InvertGenerator:
      os << g(target) << "' = " << g(target) << "^-1";
      break;
  }
  return os.str();
}

NielsenMove nielsen_move_for(const ElementaryOp& op) {
  using K = ElementaryOp::Kind;
  using N = NielsenMove::Kind;
  switch (op.kind) {
    case K::AddRow:
      return {N::MultiplyRelator, op.target, op.source, to_int64(op.multiplier)};
    case K::AddCol:
      // col[t] += k col[s] is the substitution a_s -> a_s a_t^k, i.e. the new
      // generator a_s' = a_s a_t^-k.
      return {N::MultiplyGenerator, op.source, op.target, -to_int64(op.multiplier)};
    case K::SwapRows:
      return {N::SwapRelators, op.target, op.source, 1};
    case K::SwapCols:
      return {N::SwapGenerators, op.target, op.source, 1};
    case K::NegateRow:
      return {N::InvertRelator, op.target, op.target, 1};
    case K::NegateCol:
      return {N::InvertGenerator, op.target, op.target, 1};
  }
  throw std::logic_error("unknown elementary operation");
}

namespace {

// Substitutes each letter of w by the image word of its generator.
Word substitute(const Word& w, const std::vector<Word>& images) {
  Word out{w.alphabet_size, {}};
  for (const Letter& l : w.letters) {
    const Word& img = images.at(l.generator - 1);
    if (l.sign > 0) {
      out.letters.insert(out.letters.end(), img.letters.begin(), img.letters.end());
    } else {
      for (auto it = img.letters.rbegin(); it != img.letters.rend(); ++it)
        out.letters.push_back(it->inverse());
    }
  }
  return free_reduce(out);
}

std::vector<Word> identity_images(std::size_t m) {
  std::vector<Word> images;
  for (std::size_t i = 0; i < m; ++i) images.push_back(generator_word(static_cast<std::uint32_t>(i + 1), m));
  return images;
}

// Images of old generators in the new generators (forward = true), or of the
// new generators in the old ones.
std::vector<Word> generator_images(const NielsenMove& move, std::size_t m, bool forward) {
  auto images = identity_images(m);
  const auto t = static_cast<std::uint32_t>(move.target + 1);
  const auto s = static_cast<std::uint32_t>(move.source + 1);
  switch (move.kind) {
    case NielsenMove::Kind::MultiplyGenerator:
      images[move.target] = concat(generator_word(t, m),
                                   generator_word(s, m, forward ? -move.exponent : move.exponent));
      break;
    case NielsenMove::Kind::SwapGenerators:
      std::swap(images[move.target], images[move.source]);
      break;
    case NielsenMove::Kind::InvertGenerator:
      images[move.target] = generator_word(t, m, -1);
      break;
    default:
      break;
  }
  return images;
}

}  // namespace

void apply_move(const NielsenMove& move, std::vector<Word>& relators) {
  switch (move.kind) {
    case NielsenMove::Kind::MultiplyRelator:
      relators.at(move.target) =
          free_reduce(concat(power(relators.at(move.source), move.exponent), relators.at(move.target)));
      return;
    case NielsenMove::Kind::SwapRelators:
      std::swap(relators.at(move.target), relators.at(move.source));
      return;
    case NielsenMove::Kind::InvertRelator:
      relators.at(move.target) = inverse(relators.at(move.target));
      return;
    default:
      break;
  }
  if (relators.empty()) return;
  const auto images = generator_images(move, relators.front().alphabet_size, true);
  for (auto& w : relators) w = substitute(w, images);
}

Word rewrite_to_new(const Word& w, const NielsenLog& log) {
  Word out = free_reduce(w);
  for (const auto& move : log.moves)
    if (move.acts_on_generators()) out = substitute(out, generator_images(move, w.alphabet_size, true));
  return out;
}

Word rewrite_to_old(const Word& w, const NielsenLog& log) {
  Word out = free_reduce(w);
  for (auto it = log.moves.rbegin(); it != log.moves.rend(); ++it)
    if (it->acts_on_generators()) out = substitute(out, generator_images(*it, w.alphabet_size, false));
  return out;
}

NielsenNormalization nielsen_normalize(const RelatorSet& r) {
  NielsenNormalization out;
  out.snf = smith_normal_form(exponent_sum_matrix(r));
  std::vector<Word> relators;
  relators.reserve(r.relators.size());
  for (const auto& w : r.relators) relators.push_back(free_reduce(w));
  for (const auto& op : out.snf.log) {
    NielsenMove move = nielsen_move_for(op);
    apply_move(move, relators);
    out.log.moves.push_back(move);
  }
  out.relators = RelatorSet{r.alphabet_size, std::move(relators)};
  return out;
}

}  // namespace nilrand
