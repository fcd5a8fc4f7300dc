#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nilrand/integer.hpp"
#include "nilrand/nilpotent2.hpp"
#include "nilrand/presentation.hpp"

// Equation systems over the ring Z and over class-2 nilpotent groups, the
// interpretation of Z inside N_{2,m} by t -> c^t with c = [a, b], the
// compiler from ring systems to group systems, and bounded brute-force
// solvers used as correspondence oracles. Bounded solvers only ever report
// "no solution within the box"; they never claim unsolvability.
namespace nilrand::dioph {

// ---------------------------------------------------------------- ring side

struct RingTerm {
  enum class Kind { Var, Const, Add, Sub, Neg, Mul };
  Kind kind = Kind::Const;
  std::string name;             // Var
  Integer value;                // Const
  std::vector<RingTerm> args;   // Add, Sub, Mul: 2; Neg: 1

  static RingTerm var(std::string name);
  static RingTerm constant(const Integer& n);
  static RingTerm add(RingTerm a, RingTerm b);
  static RingTerm sub(RingTerm a, RingTerm b);
  static RingTerm neg(RingTerm a);
  static RingTerm mul(RingTerm a, RingTerm b);

  // Canonical prefix rendering, e.g. "(+ x (* y 2))"; equal keys iff
  // structurally identical terms.
  std::string key() const;
};

struct RingEquation {
  RingTerm lhs;
  RingTerm rhs;
};

struct RingSystem {
  std::vector<std::string> variables;
  std::vector<RingEquation> equations;

  // Throws ParseError naming the first undeclared variable.
  void validate() const;
};

using RingAssignment = std::map<std::string, Integer>;

Integer evaluate(const RingTerm& t, const RingAssignment& values);
bool satisfies(const RingSystem& s, const RingAssignment& values);

// JSON schema in docs/formats.md.
RingSystem parse_ring_system(std::string_view json_text);
std::string ring_system_to_json(const RingSystem& s);

// Every assignment in [-B, B]^n satisfying all equations, in lexicographic
// order of the declared variables. Throws ResourceLimitError when
// (2B+1)^n exceeds `limit`.
std::vector<RingAssignment> bounded_solve_ring(const RingSystem& s, std::int64_t bound,
                                               std::uint64_t limit = 50'000'000);

// --------------------------------------------------------------- group side

// One factor of a group word: a named letter raised to an exponent, or a
// commutator [left, right] of two words.
struct GroupItem {
  bool is_commutator = false;
  std::string name;
  Integer exponent = 1;
  std::vector<GroupItem> left;
  std::vector<GroupItem> right;

  static GroupItem letter(std::string name, const Integer& exponent = 1);
  static GroupItem comm(std::vector<GroupItem> u, std::vector<GroupItem> v);
};

using GroupWord = std::vector<GroupItem>;

struct GroupEquation {
  GroupWord lhs;
  GroupWord rhs;  // empty word is the identity
};

// "x1 x2^-1 [a,y]"; the empty word renders as "1".
std::string format_group_word(const GroupWord& w);
std::string format_group_equation(const GroupEquation& e);

struct GroupSystem {
  std::size_t ambient_rank = 2;
  // Distinguished constants: name -> word over a1..am (e.g. "a" -> "a1").
  std::map<std::string, std::string> constants;
  std::vector<std::string> variables;
  std::vector<GroupEquation> equations;
  // Compiler metadata: term tuple variable -> canonical ring term key, and
  // ring variable -> its tuple variable. Empty for hand-written systems.
  std::map<std::string, std::string> term_variables;
  std::map<std::string, std::string> ring_variables;

  // Throws ParseError on undeclared names, names declared twice, or a
  // constant that does not parse over a1..a_{ambient_rank}.
  void validate() const;
};

GroupSystem parse_group_system(std::string_view json_text);
std::string group_system_to_json(const GroupSystem& s);

// --------------------------------------------------------- e-definitions

// A system fragment whose slot names are substituted on instantiation and
// whose auxiliary names are replaced by fresh ones.
struct Template {
  std::vector<std::string> slots;
  std::vector<std::string> aux;
  std::vector<GroupEquation> equations;
  // Every slot must also satisfy the domain template.
  bool domain_on_slots = false;
};

struct EDefinition {
  std::size_t arity = 1;
  std::size_t ambient_rank = 2;
  std::map<std::string, std::string> constants;  // a, b
  std::string a = "a";
  std::string b = "b";
  Template domain;    // slot x
  Template add;       // slots x1 x2 x3: x3 = x1 + x2
  Template negate;    // slots x1 x2:    x2 = -x1
  Template multiply;  // slots x1 x2 x3: x3 = x1 * x2
  Template equality;  // slots x1 x2

  // The word c^n = [a,b]^n, written as |n| commutator factors ([b,a] when
  // n < 0); the empty word for n = 0.
  GroupWord constant_word(const Integer& n) const;
};

// The k = 1 encoding t -> c^t of Z in N_{2,m} (m >= 2) with a = a1, b = a2:
//   domain    x = [a, y], [y, b] = 1
//   add       x1 x2 = x3, all slots in the domain
//   negate    x1 x2 = 1, all slots in the domain
//   multiply  x1 = [x1', b], [x1', a] = 1, x2 = [a, x2'], [x2', b] = 1,
//             x3 = [x1', x2']
//   equality  x1 = x2
EDefinition z_in_g_templates(std::size_t ambient_rank = 2);

// Term-by-term compilation: one tuple variable per distinct subterm (shared
// by structural identity), one domain gadget per tuple that needs one, the
// operation template joining each compound term to its arguments, c^n for
// literals, and the equality template at each equation root. Fresh names
// come from counters ("tau1", "aux1", ...), so output is deterministic.
GroupSystem compile_system(const EDefinition& edef, const RingSystem& s);

// ------------------------------------------------------------ solving

// Where group equations are evaluated: the free group N_{2,m}, or a
// quotient given by a normalized presentation (equality decided by
// is_trivial_in_G).
class Ambient {
 public:
  static Ambient free(std::size_t m);
  // Throws InconclusiveError unless np.rank_full. `np` must outlive this.
  static Ambient quotient(const NormalizedPresentation& np);

  std::size_t rank() const { return m_; }
  bool is_free() const { return np_ == nullptr; }
  bool is_identity(const MalcevElement& x) const;
  bool equal(const MalcevElement& x, const MalcevElement& y) const;

 private:
  std::size_t m_ = 0;
  const NormalizedPresentation* np_ = nullptr;
};

using GroupAssignment = std::map<std::string, MalcevElement>;

struct GroupSolveOptions {
  // Variables reported in each solution; the rest are existential and are
  // searched only for one witness. Unset means every variable.
  std::optional<std::vector<std::string>> projection;
  // Pre-assigned variables (exempt from the box).
  GroupAssignment fixed;
  // Include one witness for every existential variable in each solution.
  bool report_witnesses = false;
  // Values forced by an equation (x = u with u known) must lie in the box.
  bool bound_determined = true;
  std::size_t max_solutions = 0;  // 0 = unlimited
  std::uint64_t node_limit = 200'000'000;
};

struct GroupSolveResult {
  std::vector<GroupAssignment> solutions;
  std::uint64_t nodes = 0;
  bool truncated = false;  // stopped at max_solutions
};

// Backtracking search over Malcev coordinates in [-B, B]. Equations are
// checked as soon as their variables are assigned; in a free ambient a
// variable occurring once, outside commutators, with exponent +-1 is solved
// for instead of enumerated. Existential variables are grouped into
// connected components and checked once their boundary is assigned, with a
// memo shared between components of identical shape; an existential
// variable occurring only inside commutators is enumerated with gamma = 0,
// since commutators see only the abelianization in class 2.
GroupSolveResult bounded_solve_group(const GroupSystem& s, const Ambient& ambient, std::int64_t bound,
                                     const GroupSolveOptions& options = {});

// Evaluates every equation of s at a full assignment.
bool check_assignment(const GroupSystem& s, const Ambient& ambient, const GroupAssignment& values);

// t with x = c^t, or nullopt when x is not a power of c = [a1, a2].
std::optional<Integer> decode_power_of_c(const MalcevElement& x);
MalcevElement power_of_c(std::size_t m, const Integer& t);

struct CorrespondenceReport {
  std::size_t ring_solutions = 0;
  std::size_t extended = 0;         // ring solutions with a group witness
  std::size_t group_solutions = 0;  // projected onto the tuple variables
  std::size_t projected_ok = 0;
  std::vector<std::string> counterexamples;
  std::uint64_t nodes = 0;

  bool ok() const { return counterexamples.empty(); }
  std::string to_json() const;
};

// (i) every ring solution in [-B_ring, B_ring] maps under t -> c^t to the
// tuple variables and extends to a full group solution with witnesses in
// the box, confirmed by check_assignment; (ii) every group solution in the
// box, projected to the tuple variables, decodes to a ring solution whose
// subterm values match the tuples. Requires a free ambient.
CorrespondenceReport verify_correspondence(const RingSystem& s, const EDefinition& edef, const Ambient& ambient,
                                           std::int64_t ring_bound, std::int64_t group_bound,
                                           std::uint64_t node_limit = 200'000'000);

}  // namespace nilrand::dioph
