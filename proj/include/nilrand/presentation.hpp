#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nilrand/nilpotent2.hpp"
#include "nilrand/words.hpp"
#include "nilrand/zmatrix.hpp"

namespace nilrand {

// G = N_{s,m} / <<R>>. The class s is carried along but every computation
// happens in the class-2 image G/G_3.
struct NilPresentation {
  std::size_t m = 0;
  std::size_t s = 2;
  RelatorSet relators;

  std::size_t r() const { return relators.size(); }
};

// Presentation file: first line "m s", then one relator word per nonempty
// line; '#' starts a comment.
NilPresentation parse_presentation(std::string_view text);
NilPresentation load_presentation(const std::string& path);

// Relator i (i < number of nonzero invariant factors) reads a_i^alpha_i c_i
// in the normalized generators, with c_i in N'.
struct NormalizedRelator {
  std::size_t index = 0;  // 0-based generator index i
  Integer alpha;
  MalcevElement c_part;
  MalcevElement image;  // a_i^alpha_i c_i
};

class NormalizedPresentation {
 public:
  std::size_t m = 0;
  std::size_t r = 0;
  std::size_t s = 2;
  std::vector<NormalizedRelator> relators;
  // Relators whose Smith row vanishes: pure commutators, hence central.
  std::vector<MalcevElement> extra_commutator_relators;
  RelatorSet nielsen_relators;
  NielsenLog nielsen_log;
  SmithDecomposition snf;
  // Gamma vectors of alpha_i [a_i, a_k] (k != i) and of the extra relators;
  // together with the normalized relators they generate <<R>>.
  std::vector<IntVector> closure_lattice;
  // Images of the original generators in normalized coordinates.
  std::vector<MalcevElement> generator_images;
  bool rank_full = false;

  IntVector alphas() const;
  // Maps an element given in the original generators to normalized ones.
  MalcevElement to_normalized(const MalcevElement& original) const;
};

NormalizedPresentation normalize(const NilPresentation& p);

// All queries below take h in normalized coordinates and throw
// InconclusiveError unless np.rank_full.

// Word problem: h in <<R>>?
bool is_trivial_in_G(const MalcevElement& h, const NormalizedPresentation& np);
// h^n in <<R>> for some n != 0 (h is torsion in G).
bool is_trivial_mod_torsion(const MalcevElement& h, const NormalizedPresentation& np);
// h central in G modulo torsion.
bool is_central_mod_torsion(const MalcevElement& h, const NormalizedPresentation& np);
// Centralizer of g in G/torsion equals <g> Z. Requires r <= m - 2.
bool is_c_small(const MalcevElement& g, const NormalizedPresentation& np);

enum class Regime { UndecidableRegular, VirtuallyAbelian, Finite, FiniteAbelian, Inconclusive };
enum class Decidability { Undecidable, Decidable, Unknown };

std::string to_string(Regime r);
std::string to_string(Decidability d);

struct RegimeReport {
  Regime regime = Regime::Inconclusive;
  std::optional<std::size_t> free_nilpotent_corank;
  Decidability diophantine = Decidability::Unknown;
  std::vector<std::string> notes;
  std::size_t rank = 0;
  IntVector invariant_factors;

  std::string to_json() const;
};

// Depends only on (r, m, rank_full); the notes also record a class-2
// projection when s > 2.
RegimeReport classify(const NormalizedPresentation& np);
RegimeReport classify(std::size_t r, std::size_t m, bool rank_full);

}  // namespace nilrand
