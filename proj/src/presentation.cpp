#include "nilrand/presentation.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nilrand/errors.hpp"

namespace nilrand {

NilPresentation parse_presentation(std::string_view text) {
  NilPresentation p;
  bool have_header = false;
  std::size_t offset = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!have_header) {
      std::istringstream hs(line);
      long long m = -1, s = -1;
      std::string extra;
      if (!(hs >> m >> s) || (hs >> extra)) throw ParseError("header must read 'm s'", line_start);
      if (m < 1) throw ParseError("rank m must be positive", line_start);
      if (s < 2) throw ParseError("nilpotency class s must be at least 2", line_start);
      p.m = static_cast<std::size_t>(m);
      p.s = static_cast<std::size_t>(s);
      p.relators.alphabet_size = p.m;
      have_header = true;
      continue;
    }
    try {
      p.relators.relators.push_back(parse_word(line, p.m));
    } catch (const ParseError& e) {
      throw ParseError(std::string("relator: ") + e.what(), line_start + e.position());
    }
  }
  if (!have_header) throw ParseError("missing 'm s' header line", 0);
  return p;
}

NilPresentation load_presentation(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open presentation file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_presentation(buf.str());
}

IntVector NormalizedPresentation::alphas() const {
  IntVector out;
  for (const auto& rel : relators) out.push_back(rel.alpha);
  return out;
}

MalcevElement NormalizedPresentation::to_normalized(const MalcevElement& original) const {
  if (original.rank() != m) throw DimensionMismatch("element rank differs from presentation rank");
  return apply_homomorphism(original, generator_images);
}

NormalizedPresentation normalize(const NilPresentation& p) {
  if (p.relators.alphabet_size != p.m) throw DimensionMismatch("relator alphabet differs from m");
  NormalizedPresentation np;
  np.m = p.m;
  np.r = p.r();
  np.s = p.s;

  auto nielsen = nielsen_normalize(p.relators);
  np.snf = std::move(nielsen.snf);
  np.nielsen_log = std::move(nielsen.log);
  np.nielsen_relators = std::move(nielsen.relators);

  for (std::size_t k = 1; k <= p.m; ++k)
    np.generator_images.push_back(
        from_word(rewrite_to_new(generator_word(static_cast<std::uint32_t>(k), p.m), np.nielsen_log)));

  const std::size_t diag = std::min(np.r, np.m);
  for (std::size_t i = 0; i < np.r; ++i) {
    MalcevElement image = from_word(np.nielsen_relators.relators[i]);
    if (i < diag && np.snf.D(i, i) != 0) {
      const Integer alpha = np.snf.D(i, i);
      MalcevElement c = multiply(MalcevElement::generator(np.m, i + 1, -alpha), image);
      if (!c.in_derived_subgroup()) throw std::logic_error("normalized relator is not a_i^alpha c");
      np.relators.push_back({i, alpha, std::move(c), std::move(image)});
    } else {
      if (!image.in_derived_subgroup()) throw std::logic_error("zero Smith row with nonzero exponents");
      np.extra_commutator_relators.push_back(std::move(image));
    }
  }

  // w^-1 g w = g [g, w] in class 2, so <<R>> is generated by the relators and
  // the central elements [g_i, a_k] = [a_i, a_k]^alpha_i.
  for (const auto& rel : np.relators)
    for (std::size_t k = 1; k <= np.m; ++k) {
      if (k == rel.index + 1) continue;
      np.closure_lattice.push_back(
          commutator(MalcevElement::generator(np.m, rel.index + 1, rel.alpha), MalcevElement::generator(np.m, k))
              .gamma());
    }
  for (const auto& extra : np.extra_commutator_relators) np.closure_lattice.push_back(extra.gamma());

  np.rank_full = np.snf.rank == diag;
  return np;
}

namespace {

void require_full_rank(const NormalizedPresentation& np, const MalcevElement& h) {
  if (!np.rank_full)
    throw InconclusiveError("exponent-sum matrix is rank deficient (rank " + std::to_string(np.snf.rank) +
                            " < " + std::to_string(std::min(np.r, np.m)) + "); word problem undecided");
  if (h.rank() != np.m) throw DimensionMismatch("element rank differs from presentation rank");
}

// h * prod g_i^{-lambda_i}; nullopt when the alpha part cannot be cancelled.
std::optional<MalcevElement> strip_relators(const MalcevElement& h, const NormalizedPresentation& np) {
  MalcevElement acc = h;
  for (const auto& rel : np.relators) {
    const Integer& a = h.alpha()[rel.index];
    if (!mpz_divisible_p(a.get_mpz_t(), rel.alpha.get_mpz_t())) return std::nullopt;
    const Integer lambda = a / rel.alpha;
    if (lambda != 0) acc = multiply(acc, power(rel.image, -lambda));
  }
  if (!acc.in_derived_subgroup()) return std::nullopt;
  return acc;
}

}  // namespace

bool is_trivial_in_G(const MalcevElement& h, const NormalizedPresentation& np) {
  require_full_rank(np, h);
  const auto residual = strip_relators(h, np);
  if (!residual) return false;
  return lattice_membership(np.closure_lattice, residual->gamma()).has_value();
}

bool is_trivial_mod_torsion(const MalcevElement& h, const NormalizedPresentation& np) {
  require_full_rank(np, h);
  // Raise h to a power that makes every lambda_i integral; beyond that the
  // residual scales linearly with the exponent.
  Integer scale = 1;
  for (const auto& rel : np.relators) {
    Integer g = gcd(h.alpha()[rel.index], rel.alpha);
    scale = lcm(scale, Integer(abs_value(rel.alpha) / g));
  }
  const auto residual = strip_relators(power(h, scale), np);
  if (!residual) return false;
  return rational_membership(np.closure_lattice, residual->gamma());
}

bool is_central_mod_torsion(const MalcevElement& h, const NormalizedPresentation& np) {
  require_full_rank(np, h);
  for (std::size_t k = 1; k <= np.m; ++k)
    if (!is_trivial_mod_torsion(commutator(h, MalcevElement::generator(np.m, k)), np)) return false;
  return true;
}

namespace {

// Matrix of v -> gamma([v, w]) restricted to the rows of `annihilator`
// (integer vectors orthogonal to the closure lattice).
IntMatrix reduced_commutator_map(const IntVector& w, const std::vector<IntVector>& annihilator, std::size_t m) {
  const std::size_t pairs = MalcevElement::pair_count(m);
  IntMatrix b(pairs, m);
  for (std::size_t p = 0; p < pairs; ++p) {
    const auto [i, j] = MalcevElement::pair_at(m, p);
    b(p, i - 1) += w[j - 1];
    b(p, j - 1) -= w[i - 1];
  }
  IntMatrix q(annihilator.size(), pairs);
  for (std::size_t r = 0; r < annihilator.size(); ++r)
    for (std::size_t p = 0; p < pairs; ++p) q(r, p) = annihilator[r][p];
  return q * b;
}

}  // namespace

bool is_c_small(const MalcevElement& g, const NormalizedPresentation& np) {
  require_full_rank(np, g);
  if (np.r + 2 > np.m) throw InconclusiveError("c-smallness is only decided for r <= m - 2");
  const std::size_t m = np.m;
  const std::size_t pairs = MalcevElement::pair_count(m);

  // Integer vectors orthogonal to the Q-span of the closure lattice; modulo
  // torsion, a commutator is trivial iff it pairs to zero with all of them.
  std::vector<IntVector> annihilator;
  if (np.closure_lattice.empty()) {
    annihilator = integer_kernel(IntMatrix(0, pairs));
  } else {
    annihilator = integer_kernel(IntMatrix::from_rows(np.closure_lattice, pairs));
  }

  // Alpha profiles of the centralizer of g and of the center, as saturated lattices.
  const auto centralizer = integer_kernel(reduced_commutator_map(g.alpha(), annihilator, m));
  IntMatrix center_conditions(0, m);
  {
    std::vector<IntVector> rows;
    for (std::size_t k = 0; k < m; ++k) {
      IntVector e(m);
      e[k] = 1;
      const IntMatrix part = reduced_commutator_map(e, annihilator, m);
      for (std::size_t r = 0; r < part.rows(); ++r) rows.push_back(part.row_vector(r));
    }
    center_conditions = IntMatrix::from_rows(rows, m);
  }
  auto allowed = integer_kernel(center_conditions);
  allowed.push_back(g.alpha());
  for (const auto& v : centralizer)
    if (!lattice_membership(allowed, v)) return false;
  return true;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::UndecidableRegular: return "UNDECIDABLE_REGULAR";
    case Regime::VirtuallyAbelian: return "VIRTUALLY_ABELIAN";
    case Regime::Finite: return "FINITE";
    case Regime::FiniteAbelian: return "FINITE_ABELIAN";
    case Regime::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string to_string(Decidability d) {
  switch (d) {
    case Decidability::Undecidable: return "UNDECIDABLE";
    case Decidability::Decidable: return "DECIDABLE";
    case Decidability::Unknown: return "UNKNOWN";
  }
  return "?";
}

RegimeReport classify(std::size_t r, std::size_t m, bool rank_full) {
  RegimeReport rep;
  if (!rank_full) {
    rep.regime = Regime::Inconclusive;
    rep.diophantine = Decidability::Unknown;
    rep.notes.push_back("exponent-sum matrix is rank deficient; no structural conclusion is drawn");
    return rep;
  }
  if (r + 2 <= m) {
    rep.regime = Regime::UndecidableRegular;
    rep.free_nilpotent_corank = m - r;
    rep.diophantine = Decidability::Undecidable;
    rep.notes.push_back("G is regular: Z(G) lies in the isolator of G'");
    rep.notes.push_back("G/G_3 is virtually free nilpotent of rank " + std::to_string(m - r));
    rep.notes.push_back("G/G_3 is not a direct product of two non-virtually-abelian groups");
    rep.notes.push_back("the integers are e-definable in G/Is(G_3) through two non-commuting c-small elements");
  } else if (r + 1 == m) {
    rep.regime = Regime::VirtuallyAbelian;
    rep.diophantine = Decidability::Decidable;
    rep.notes.push_back("G' is finite and G is virtually abelian");
  } else if (r == m) {
    rep.regime = Regime::Finite;
    rep.diophantine = Decidability::Decidable;
    rep.notes.push_back("every generator has finite order modulo G', so G is finite");
  } else {
    rep.regime = Regime::FiniteAbelian;
    rep.diophantine = Decidability::Decidable;
    rep.notes.push_back("G is finite and abelian (asymptotically almost surely for random relators)");
  }
  return rep;
}

RegimeReport classify(const NormalizedPresentation& np) {
  RegimeReport rep = classify(np.r, np.m, np.rank_full);
  rep.rank = np.snf.rank;
  rep.invariant_factors = np.snf.invariant_factors;
  if (np.s > 2)
    rep.notes.push_back("class-" + std::to_string(np.s) +
                        " input: computations were carried out in the class-2 image G/G_3");
  return rep;
}

std::string RegimeReport::to_json() const {
  nlohmann::ordered_json j;
  j["regime"] = to_string(regime);
  j["corank"] = free_nilpotent_corank ? nlohmann::ordered_json(*free_nilpotent_corank) : nlohmann::ordered_json();
  j["diophantine"] = to_string(diophantine);
  j["notes"] = notes;
  j["rank"] = rank;
  auto factors = nlohmann::ordered_json::array();
  for (const auto& f : invariant_factors) {
    if (f.fits_slong_p())
      factors.push_back(f.get_si());
    else
      factors.push_back(f.get_str());
  }
  j["invariant_factors"] = factors;
  return j.dump(2);
}

}  // namespace nilrand
