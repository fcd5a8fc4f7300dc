#include "nilrand/diophantine.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "nilrand/errors.hpp"
#include "nilrand/words.hpp"

namespace nilrand::dioph {

using nlohmann::json;

namespace {

bool valid_name(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '\'';
  });
}

Integer json_integer(const json& j, const std::string& what) {
  if (j.is_number_integer()) return Integer(j.get<long>());
  if (j.is_string()) {
    Integer v;
    if (v.set_str(j.get<std::string>(), 10) != 0) throw ParseError(what + ": bad integer literal");
    return v;
  }
  throw ParseError(what + ": expected an integer");
}

json integer_json(const Integer& v) {
  if (v.fits_slong_p()) return json(v.get_si());
  return json(v.get_str());
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what(), e.byte);
  }
}

}  // namespace

// ---------------------------------------------------------------- ring side

RingTerm RingTerm::var(std::string name) {
  RingTerm t;
  t.kind = Kind::Var;
  t.name = std::move(name);
  return t;
}

RingTerm RingTerm::constant(const Integer& n) {
  RingTerm t;
  t.kind = Kind::Const;
  t.value = n;
  return t;
}

namespace {
RingTerm node(RingTerm::Kind k, std::vector<RingTerm> args) {
  RingTerm t;
  t.kind = k;
  t.args = std::move(args);
  return t;
}
}  // namespace

RingTerm RingTerm::add(RingTerm a, RingTerm b) { return node(Kind::Add, {std::move(a), std::move(b)}); }
RingTerm RingTerm::sub(RingTerm a, RingTerm b) { return node(Kind::Sub, {std::move(a), std::move(b)}); }
RingTerm RingTerm::neg(RingTerm a) { return node(Kind::Neg, {std::move(a)}); }
RingTerm RingTerm::mul(RingTerm a, RingTerm b) { return node(Kind::Mul, {std::move(a), std::move(b)}); }

std::string RingTerm::key() const {
  switch (kind) {
    case Kind::Var:
      return name;
    case Kind::Const:
      return value.get_str();
    case Kind::Add:
      return "(+ " + args[0].key() + " " + args[1].key() + ")";
    case Kind::Sub:
      return "(- " + args[0].key() + " " + args[1].key() + ")";
    case Kind::Neg:
      return "(- " + args[0].key() + ")";
    case Kind::Mul:
      return "(* " + args[0].key() + " " + args[1].key() + ")";
  }
  return {};
}

namespace {

void collect_vars(const RingTerm& t, std::set<std::string>& out) {
  if (t.kind == RingTerm::Kind::Var) out.insert(t.name);
  for (const auto& a : t.args) collect_vars(a, out);
}

// a - b is compiled as a + (-b).
RingTerm lower(const RingTerm& t) {
  if (t.kind == RingTerm::Kind::Sub) return RingTerm::add(lower(t.args[0]), RingTerm::neg(lower(t.args[1])));
  RingTerm out = t;
  for (auto& a : out.args) a = lower(a);
  return out;
}

}  // namespace

void RingSystem::validate() const {
  std::set<std::string> declared;
  for (const auto& v : variables) {
    if (!valid_name(v)) throw ParseError("ring system: invalid variable name '" + v + "'");
    if (!declared.insert(v).second) throw ParseError("ring system: variable '" + v + "' declared twice");
  }
  for (const auto& eq : equations) {
    std::set<std::string> used;
    collect_vars(eq.lhs, used);
    collect_vars(eq.rhs, used);
    for (const auto& u : used)
      if (!declared.count(u)) throw ParseError("ring system: undeclared variable '" + u + "'");
  }
}

Integer evaluate(const RingTerm& t, const RingAssignment& values) {
  switch (t.kind) {
    case RingTerm::Kind::Var: {
      auto it = values.find(t.name);
      if (it == values.end()) throw std::invalid_argument("unassigned variable '" + t.name + "'");
      return it->second;
    }
    case RingTerm::Kind::Const:
      return t.value;
    case RingTerm::Kind::Add:
      return evaluate(t.args[0], values) + evaluate(t.args[1], values);
    case RingTerm::Kind::Sub:
      return evaluate(t.args[0], values) - evaluate(t.args[1], values);
    case RingTerm::Kind::Neg:
      return -evaluate(t.args[0], values);
    case RingTerm::Kind::Mul:
      return evaluate(t.args[0], values) * evaluate(t.args[1], values);
  }
  return 0;
}

bool satisfies(const RingSystem& s, const RingAssignment& values) {
  for (const auto& eq : s.equations)
    if (evaluate(eq.lhs, values) != evaluate(eq.rhs, values)) return false;
  return true;
}

namespace {

RingTerm term_from_json(const json& j) {
  if (j.is_number_integer() || (j.is_string() && !j.get<std::string>().empty() &&
                                (std::isdigit(static_cast<unsigned char>(j.get<std::string>()[0])) ||
                                 j.get<std::string>()[0] == '-')))
    return RingTerm::constant(json_integer(j, "term"));
  if (j.is_string()) return RingTerm::var(j.get<std::string>());
  if (!j.is_array() || j.empty() || !j[0].is_string()) throw ParseError("term: expected [op, ...]");
  const std::string op = j[0].get<std::string>();
  const std::size_t n = j.size() - 1;
  if (op == "var") {
    if (n != 1 || !j[1].is_string()) throw ParseError("term: [\"var\", name]");
    return RingTerm::var(j[1].get<std::string>());
  }
  if (op == "const") {
    if (n != 1) throw ParseError("term: [\"const\", n]");
    return RingTerm::constant(json_integer(j[1], "term"));
  }
  if (op == "-" && n == 1) return RingTerm::neg(term_from_json(j[1]));
  if (op == "-" && n == 2) return RingTerm::sub(term_from_json(j[1]), term_from_json(j[2]));
  if (op == "+" || op == "*") {
    if (n < 2) throw ParseError("term: '" + op + "' needs at least two arguments");
    RingTerm acc = term_from_json(j[1]);
    for (std::size_t i = 2; i <= n; ++i)
      acc = op == "+" ? RingTerm::add(std::move(acc), term_from_json(j[i]))
                      : RingTerm::mul(std::move(acc), term_from_json(j[i]));
    return acc;
  }
  throw ParseError("term: unknown operator '" + op + "'");
}

json term_to_json(const RingTerm& t) {
  switch (t.kind) {
    case RingTerm::Kind::Var:
      return json::array({"var", t.name});
    case RingTerm::Kind::Const:
      return json::array({"const", integer_json(t.value)});
    case RingTerm::Kind::Add:
      return json::array({"+", term_to_json(t.args[0]), term_to_json(t.args[1])});
    case RingTerm::Kind::Sub:
      return json::array({"-", term_to_json(t.args[0]), term_to_json(t.args[1])});
    case RingTerm::Kind::Neg:
      return json::array({"-", term_to_json(t.args[0])});
    case RingTerm::Kind::Mul:
      return json::array({"*", term_to_json(t.args[0]), term_to_json(t.args[1])});
  }
  return {};
}

}  // namespace

RingSystem parse_ring_system(std::string_view json_text) {
  const json j = parse_json(json_text, "ring system");
  RingSystem s;
  try {
    s.variables = j.at("variables").get<std::vector<std::string>>();
    for (const auto& e : j.at("equations"))
      s.equations.push_back({term_from_json(e.at("lhs")), term_from_json(e.at("rhs"))});
  } catch (const json::exception& e) {
    throw ParseError(std::string("ring system: ") + e.what());
  }
  s.validate();
  return s;
}

std::string ring_system_to_json(const RingSystem& s) {
  nlohmann::ordered_json j;
  j["variables"] = s.variables;
  j["equations"] = json::array();
  for (const auto& eq : s.equations) {
    nlohmann::ordered_json e;
    e["lhs"] = term_to_json(eq.lhs);
    e["rhs"] = term_to_json(eq.rhs);
    j["equations"].push_back(e);
  }
  return j.dump(2);
}

std::vector<RingAssignment> bounded_solve_ring(const RingSystem& s, std::int64_t bound, std::uint64_t limit) {
  if (bound < 0) throw std::invalid_argument("ring solver: negative bound");
  s.validate();
  const std::size_t n = s.variables.size();
  const std::uint64_t side = static_cast<std::uint64_t>(2 * bound + 1);
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > limit / side) throw ResourceLimitError("ring solver: search space exceeds limit");
    total *= side;
  }
  std::vector<RingAssignment> out;
  std::vector<std::int64_t> x(n, -bound);
  RingAssignment a;
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) a[s.variables[i]] = static_cast<long>(x[i]);
    if (satisfies(s, a)) out.push_back(a);
    // Last variable varies fastest: lexicographic order.
    std::size_t i = n;
    while (i > 0 && x[i - 1] == bound) x[--i] = -bound;
    if (i == 0) break;
    ++x[i - 1];
  }
  return out;
}

// --------------------------------------------------------------- group side

GroupItem GroupItem::letter(std::string name, const Integer& exponent) {
  GroupItem g;
  g.name = std::move(name);
  g.exponent = exponent;
  return g;
}

GroupItem GroupItem::comm(std::vector<GroupItem> u, std::vector<GroupItem> v) {
  GroupItem g;
  g.is_commutator = true;
  g.left = std::move(u);
  g.right = std::move(v);
  return g;
}

std::string format_group_word(const GroupWord& w) {
  if (w.empty()) return "1";
  std::string out;
  for (const auto& it : w) {
    if (!out.empty()) out += ' ';
    if (it.is_commutator) {
      out += "[" + format_group_word(it.left) + "," + format_group_word(it.right) + "]";
    } else {
      out += it.name;
      if (it.exponent != 1) out += "^" + it.exponent.get_str();
    }
  }
  return out;
}

std::string format_group_equation(const GroupEquation& e) {
  return format_group_word(e.lhs) + " = " + format_group_word(e.rhs);
}

namespace {

void collect_names(const GroupWord& w, std::vector<std::string>& out) {
  for (const auto& it : w) {
    if (it.is_commutator) {
      collect_names(it.left, out);
      collect_names(it.right, out);
    } else {
      out.push_back(it.name);
    }
  }
}

GroupWord word_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("group word: expected an array of items");
  GroupWord w;
  for (const auto& it : j) {
    if (it.is_string()) {
      w.push_back(GroupItem::letter(it.get<std::string>()));
    } else if (it.is_array() && it.size() == 3 && it[0] == "comm") {
      w.push_back(GroupItem::comm(word_from_json(it[1]), word_from_json(it[2])));
    } else if (it.is_array() && it.size() == 2 && it[0].is_string()) {
      w.push_back(GroupItem::letter(it[0].get<std::string>(), json_integer(it[1], "group word")));
    } else {
      throw ParseError("group word: bad item " + it.dump());
    }
  }
  return w;
}

json word_to_json(const GroupWord& w) {
  json out = json::array();
  for (const auto& it : w) {
    if (it.is_commutator)
      out.push_back(json::array({"comm", word_to_json(it.left), word_to_json(it.right)}));
    else if (it.exponent == 1)
      out.push_back(it.name);
    else
      out.push_back(json::array({it.name, integer_json(it.exponent)}));
  }
  return out;
}

}  // namespace

void GroupSystem::validate() const {
  if (ambient_rank < 1) throw ParseError("group system: ambient_rank must be positive");
  std::set<std::string> declared;
  for (const auto& [name, text] : constants) {
    if (!valid_name(name) || name == "comm") throw ParseError("group system: invalid constant name '" + name + "'");
    declared.insert(name);
    parse_word(text, ambient_rank);
  }
  for (const auto& v : variables) {
    if (!valid_name(v) || v == "comm") throw ParseError("group system: invalid variable name '" + v + "'");
    if (!declared.insert(v).second) throw ParseError("group system: name '" + v + "' declared twice");
  }
  for (const auto& eq : equations) {
    std::vector<std::string> used;
    collect_names(eq.lhs, used);
    collect_names(eq.rhs, used);
    for (const auto& u : used)
      if (!declared.count(u)) throw ParseError("group system: undeclared name '" + u + "'");
  }
}

GroupSystem parse_group_system(std::string_view json_text) {
  const json j = parse_json(json_text, "group system");
  GroupSystem s;
  try {
    s.ambient_rank = j.value("ambient_rank", std::size_t{2});
    if (j.contains("constants"))
      s.constants = j.at("constants").get<std::map<std::string, std::string>>();
    else
      s.constants = {{"a", "a1"}, {"b", "a2"}};
    s.variables = j.at("variables").get<std::vector<std::string>>();
    for (const auto& e : j.at("equations")) s.equations.push_back({word_from_json(e.at("lhs")), word_from_json(e.at("rhs"))});
    if (j.contains("term_variables"))
      s.term_variables = j.at("term_variables").get<std::map<std::string, std::string>>();
    if (j.contains("ring_variables"))
      s.ring_variables = j.at("ring_variables").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("group system: ") + e.what());
  }
  s.validate();
  return s;
}

std::string group_system_to_json(const GroupSystem& s) {
  nlohmann::ordered_json j;
  j["ambient_rank"] = s.ambient_rank;
  j["constants"] = s.constants;
  j["variables"] = s.variables;
  j["equations"] = json::array();
  for (const auto& eq : s.equations) {
    nlohmann::ordered_json e;
    e["lhs"] = word_to_json(eq.lhs);
    e["rhs"] = word_to_json(eq.rhs);
    e["text"] = format_group_equation(eq);
    j["equations"].push_back(e);
  }
  if (!s.term_variables.empty()) j["term_variables"] = s.term_variables;
  if (!s.ring_variables.empty()) j["ring_variables"] = s.ring_variables;
  return j.dump(2);
}

// --------------------------------------------------------- e-definitions

namespace {

GroupWord L(const std::string& name, long e = 1) { return {GroupItem::letter(name, e)}; }
GroupWord C(const std::string& u, const std::string& v) { return {GroupItem::comm(L(u), L(v))}; }
GroupWord cat(GroupWord u, const GroupWord& v) {
  u.insert(u.end(), v.begin(), v.end());
  return u;
}

GroupWord rename(const GroupWord& w, const std::map<std::string, std::string>& sub) {
  GroupWord out;
  for (const auto& it : w) {
    if (it.is_commutator) {
      out.push_back(GroupItem::comm(rename(it.left, sub), rename(it.right, sub)));
    } else {
      auto f = sub.find(it.name);
      out.push_back(GroupItem::letter(f == sub.end() ? it.name : f->second, it.exponent));
    }
  }
  return out;
}

}  // namespace

GroupWord EDefinition::constant_word(const Integer& n) const {
  GroupWord w;
  const GroupItem unit = n > 0 ? GroupItem::comm(L(a), L(b)) : GroupItem::comm(L(b), L(a));
  for (Integer k = abs_value(n); k > 0; --k) w.push_back(unit);
  return w;
}

EDefinition z_in_g_templates(std::size_t ambient_rank) {
  if (ambient_rank < 2) throw DimensionMismatch("the encoding of Z needs an ambient of rank at least 2");
  EDefinition e;
  e.ambient_rank = ambient_rank;
  e.constants = {{"a", "a1"}, {"b", "a2"}};
  e.domain = {{"x"}, {"y"}, {{L("x"), C("a", "y")}, {C("y", "b"), {}}}, false};
  e.add = {{"x1", "x2", "x3"}, {}, {{cat(L("x1"), L("x2")), L("x3")}}, true};
  e.negate = {{"x1", "x2"}, {}, {{cat(L("x1"), L("x2")), {}}}, true};
  e.multiply = {{"x1", "x2", "x3"},
                {"x1'", "x2'"},
                {{L("x1"), C("x1'", "b")},
                 {C("x1'", "a"), {}},
                 {L("x2"), C("a", "x2'")},
                 {C("x2'", "b"), {}},
                 {L("x3"), C("x1'", "x2'")}},
                false};
  e.equality = {{"x1", "x2"}, {}, {{L("x1"), L("x2")}}, false};
  return e;
}

namespace {

class Compiler {
 public:
  Compiler(const EDefinition& edef, GroupSystem& out) : edef_(edef), out_(out) {}

  std::string visit(const RingTerm& t) {
    const std::string key = t.key();
    if (auto it = tuple_.find(key); it != tuple_.end()) return it->second;
    std::vector<std::string> kids;
    for (const auto& a : t.args) kids.push_back(visit(a));
    const std::string name = "tau" + std::to_string(++tau_);
    out_.variables.push_back(name);
    out_.term_variables[name] = key;
    tuple_[key] = name;
    switch (t.kind) {
      case RingTerm::Kind::Var:
        out_.ring_variables[t.name] = name;
        ensure_domain(name);
        break;
      case RingTerm::Kind::Const:
        out_.equations.push_back({L(name), edef_.constant_word(t.value)});
        break;
      case RingTerm::Kind::Add:
        emit(edef_.add, {kids[0], kids[1], name});
        break;
      case RingTerm::Kind::Neg:
        emit(edef_.negate, {kids[0], name});
        break;
      case RingTerm::Kind::Mul:
        emit(edef_.multiply, {kids[0], kids[1], name});
        break;
      case RingTerm::Kind::Sub:
        throw std::logic_error("subtraction must be lowered before compilation");
    }
    return name;
  }

  void emit(const Template& t, const std::vector<std::string>& slots) {
    if (slots.size() != t.slots.size()) throw DimensionMismatch("template slot count mismatch");
    std::map<std::string, std::string> sub;
    for (std::size_t i = 0; i < slots.size(); ++i) sub[t.slots[i]] = slots[i];
    for (const auto& a : t.aux) {
      const std::string fresh = "aux" + std::to_string(++aux_);
      sub[a] = fresh;
      out_.variables.push_back(fresh);
    }
    if (t.domain_on_slots)
      for (const auto& s : slots) ensure_domain(s);
    for (const auto& eq : t.equations) out_.equations.push_back({rename(eq.lhs, sub), rename(eq.rhs, sub)});
  }

  void ensure_domain(const std::string& tuple) {
    if (!domain_done_.insert(tuple).second) return;
    emit(edef_.domain, {tuple});
  }

 private:
  const EDefinition& edef_;
  GroupSystem& out_;
  std::map<std::string, std::string> tuple_;
  std::set<std::string> domain_done_;
  std::size_t tau_ = 0;
  std::size_t aux_ = 0;
};

}  // namespace

GroupSystem compile_system(const EDefinition& edef, const RingSystem& s) {
  s.validate();
  if (edef.arity != 1) throw std::invalid_argument("compile: only arity-1 encodings are supported");
  GroupSystem g;
  g.ambient_rank = edef.ambient_rank;
  g.constants = edef.constants;
  Compiler c(edef, g);
  for (const auto& v : s.variables) c.visit(RingTerm::var(v));
  for (const auto& eq : s.equations) {
    const std::string l = c.visit(lower(eq.lhs));
    const std::string r = c.visit(lower(eq.rhs));
    c.emit(edef.equality, {l, r});
  }
  g.validate();
  return g;
}

// ------------------------------------------------------------ solving

Ambient Ambient::free(std::size_t m) {
  Ambient a;
  a.m_ = m;
  return a;
}

Ambient Ambient::quotient(const NormalizedPresentation& np) {
  if (!np.rank_full) throw InconclusiveError("quotient ambient needs a full-rank exponent matrix");
  Ambient a;
  a.m_ = np.m;
  a.np_ = &np;
  return a;
}

bool Ambient::is_identity(const MalcevElement& x) const {
  if (np_ == nullptr) return x.is_identity();
  return is_trivial_in_G(np_->to_normalized(x), *np_);
}

bool Ambient::equal(const MalcevElement& x, const MalcevElement& y) const {
  if (np_ == nullptr) return x == y;
  return is_identity(multiply(x, inverse(y)));
}

std::optional<Integer> decode_power_of_c(const MalcevElement& x) {
  if (x.rank() < 2 || !x.in_derived_subgroup()) return std::nullopt;
  for (std::size_t p = 1; p < x.gamma().size(); ++p)
    if (x.gamma()[p] != 0) return std::nullopt;
  return x.gamma()[0];
}

MalcevElement power_of_c(std::size_t m, const Integer& t) { return MalcevElement::basic_commutator(m, 1, 2, t); }

namespace {

// Group word with names resolved to variable indices or constant values.
struct CItem {
  enum class Kind { Var, Const, Comm } kind = Kind::Const;
  int var = -1;
  MalcevElement value;  // Const: the constant raised to the exponent
  Integer exponent = 1;
  std::vector<CItem> left, right;
};

struct CEquation {
  std::vector<CItem> lhs, rhs;
  std::vector<int> vars;  // sorted, unique
  // Variables solvable from this equation: occurring exactly once, outside
  // commutators, with exponent +-1. (var, side, position, exponent)
  struct Isolation {
    int var;
    int side;
    std::size_t pos;
    int sign;
  };
  std::vector<Isolation> isolations;
  std::set<int> in_commutator;
  std::set<int> top_level;
};

class Search {
 public:
  Search(const GroupSystem& s, const Ambient& amb, std::int64_t bound, const GroupSolveOptions& opt)
      : sys_(s), amb_(amb), bound_(bound), opt_(opt) {
    s.validate();
    if (s.ambient_rank != amb.rank()) throw DimensionMismatch("group system and ambient differ in rank");
    if (bound < 0) throw std::invalid_argument("group solver: negative bound");
    m_ = amb.rank();
    for (std::size_t i = 0; i < s.variables.size(); ++i) index_[s.variables[i]] = static_cast<int>(i);
    for (const auto& [name, text] : s.constants) constants_[name] = from_word(parse_word(text, m_));
    for (const auto& eq : s.equations) eqs_.push_back(compile(eq));
    nvars_ = s.variables.size();
    values_.assign(nvars_, std::nullopt);
    eqs_of_var_.assign(nvars_, {});
    for (std::size_t e = 0; e < eqs_.size(); ++e)
      for (int v : eqs_[e].vars) eqs_of_var_[v].push_back(static_cast<int>(e));

    primary_.assign(nvars_, 0);
    if (opt.projection) {
      for (const auto& n : *opt.projection) primary_[lookup(n)] = 1;
    } else {
      std::fill(primary_.begin(), primary_.end(), 1);
    }
    for (const auto& [n, v] : opt.fixed) {
      const int i = lookup(n);
      if (v.rank() != m_) throw DimensionMismatch("fixed value of '" + n + "' has the wrong rank");
      primary_[i] = 1;
      values_[i] = v;
      fixed_.insert(i);
    }
    for (std::size_t v = 0; v < nvars_; ++v)
      if (primary_[v] && !fixed_.count(static_cast<int>(v))) scope_.push_back(static_cast<int>(v));
    build_components();
  }

  GroupSolveResult run() {
    // Equations and components that are decided before any choice.
    for (std::size_t e = 0; e < eqs_.size(); ++e)
      if (owner_[e] < 0 && all_assigned(eqs_[e]) && !holds(eqs_[e])) return std::move(result_);
    for (std::size_t c = 0; c < comps_.size(); ++c)
      if (boundary_ready(comps_[c]) && !component_exists(static_cast<int>(c))) return std::move(result_);
    backtrack_level1();
    return std::move(result_);
  }

 private:
  struct Component {
    std::vector<int> aux;
    std::vector<int> eqs;
    std::vector<int> boundary;
    std::string shape;
  };

  int lookup(const std::string& n) const {
    auto it = index_.find(n);
    if (it == index_.end()) throw std::invalid_argument("unknown variable '" + n + "'");
    return it->second;
  }

  std::vector<CItem> resolve(const GroupWord& w, CEquation& eq, int side, bool inside) {
    std::vector<CItem> out;
    for (const auto& it : w) {
      CItem c;
      if (it.is_commutator) {
        c.kind = CItem::Kind::Comm;
        c.left = resolve(it.left, eq, side, true);
        c.right = resolve(it.right, eq, side, true);
      } else if (auto f = index_.find(it.name); f != index_.end()) {
        c.kind = CItem::Kind::Var;
        c.var = f->second;
        c.exponent = it.exponent;
        (inside ? eq.in_commutator : eq.top_level).insert(c.var);
      } else {
        c.kind = CItem::Kind::Const;
        c.value = power(constants_.at(it.name), it.exponent);
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  static void count_vars(const std::vector<CItem>& w, std::map<int, int>& count) {
    for (const auto& c : w) {
      if (c.kind == CItem::Kind::Var) ++count[c.var];
      count_vars(c.left, count);
      count_vars(c.right, count);
    }
  }

  CEquation compile(const GroupEquation& g) {
    CEquation eq;
    eq.lhs = resolve(g.lhs, eq, 0, false);
    eq.rhs = resolve(g.rhs, eq, 1, false);
    std::map<int, int> count;
    count_vars(eq.lhs, count);
    count_vars(eq.rhs, count);
    for (const auto& [v, k] : count) eq.vars.push_back(v);
    for (int side = 0; side < 2; ++side) {
      const auto& w = side == 0 ? eq.lhs : eq.rhs;
      for (std::size_t p = 0; p < w.size(); ++p) {
        const auto& c = w[p];
        if (c.kind != CItem::Kind::Var || count[c.var] != 1) continue;
        if (c.exponent == 1 || c.exponent == -1)
          eq.isolations.push_back({c.var, side, p, c.exponent == 1 ? 1 : -1});
      }
    }
    return eq;
  }

  void build_components() {
    std::vector<int> parent(nvars_);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& eq : eqs_) {
      int first = -1;
      for (int v : eq.vars) {
        if (primary_[v]) continue;
        if (first < 0)
          first = v;
        else
          parent[find(v)] = find(first);
      }
    }
    std::map<int, int> comp_of_root;
    owner_.assign(eqs_.size(), -1);
    for (std::size_t e = 0; e < eqs_.size(); ++e) {
      int aux = -1;
      for (int v : eqs_[e].vars)
        if (!primary_[v]) aux = v;
      if (aux < 0) continue;
      const int root = find(aux);
      auto [it, fresh] = comp_of_root.emplace(root, static_cast<int>(comps_.size()));
      if (fresh) comps_.emplace_back();
      owner_[e] = it->second;
      comps_[it->second].eqs.push_back(static_cast<int>(e));
    }
    // Existential variables in no equation need no witness search.
    for (std::size_t v = 0; v < nvars_; ++v)
      if (!primary_[v] && eqs_of_var_[v].empty()) unconstrained_.push_back(static_cast<int>(v));

    gamma_free_.assign(nvars_, 0);
    for (std::size_t v = 0; v < nvars_; ++v) {
      bool top = false, any = false;
      for (int e : eqs_of_var_[v]) {
        any = true;
        if (eqs_[e].top_level.count(static_cast<int>(v))) top = true;
      }
      gamma_free_[v] = any && !top && !primary_[v];
    }

    solvable_.assign(nvars_, 0);
    if (amb_.is_free())
      for (const auto& eq : eqs_)
        for (const auto& iso : eq.isolations) solvable_[iso.var] = 1;

    boundary_comps_.assign(nvars_, {});
    for (std::size_t c = 0; c < comps_.size(); ++c) {
      auto& comp = comps_[c];
      std::map<int, std::string> local;
      std::ostringstream shape;
      auto tag = [&](int v) -> std::string {
        if (auto it = local.find(v); it != local.end()) return it->second;
        std::string t;
        if (primary_[v]) {
          t = "B" + std::to_string(comp.boundary.size());
          comp.boundary.push_back(v);
          boundary_comps_[v].push_back(static_cast<int>(c));
        } else {
          t = "A" + std::to_string(comp.aux.size());
          comp.aux.push_back(v);
        }
        local[v] = t;
        return t;
      };
      std::function<void(const std::vector<CItem>&)> ser = [&](const std::vector<CItem>& w) {
        shape << '(';
        for (const auto& it : w) {
          switch (it.kind) {
            case CItem::Kind::Var:
              shape << tag(it.var) << '^' << it.exponent.get_str() << ' ';
              break;
            case CItem::Kind::Const:
              shape << '{' << it.value.to_string() << "} ";
              break;
            case CItem::Kind::Comm:
              shape << '[';
              ser(it.left);
              ser(it.right);
              shape << "] ";
              break;
          }
        }
        shape << ')';
      };
      for (int e : comp.eqs) {
        ser(eqs_[e].lhs);
        shape << '=';
        ser(eqs_[e].rhs);
        shape << ';';
      }
      comp.shape = shape.str();
    }
  }

  MalcevElement eval(const std::vector<CItem>& w, std::size_t from = 0,
                     std::size_t to = std::numeric_limits<std::size_t>::max()) const {
    MalcevElement acc(m_);
    to = std::min(to, w.size());
    for (std::size_t i = from; i < to; ++i) {
      const auto& it = w[i];
      switch (it.kind) {
        case CItem::Kind::Var: {
          const MalcevElement& x = *values_[it.var];
          acc = it.exponent == 1 ? multiply(acc, x) : multiply(acc, power(x, it.exponent));
          break;
        }
        case CItem::Kind::Const:
          acc = multiply(acc, it.value);
          break;
        case CItem::Kind::Comm:
          acc = multiply(acc, commutator(eval(it.left), eval(it.right)));
          break;
      }
    }
    return acc;
  }

  bool all_assigned(const CEquation& eq) const {
    return std::all_of(eq.vars.begin(), eq.vars.end(), [&](int v) { return values_[v].has_value(); });
  }

  bool holds(const CEquation& eq) const { return amb_.equal(eval(eq.lhs), eval(eq.rhs)); }

  bool in_box(const MalcevElement& x) const {
    auto ok = [&](const Integer& c) { return c >= -bound_ && c <= bound_; };
    return std::all_of(x.alpha().begin(), x.alpha().end(), ok) && std::all_of(x.gamma().begin(), x.gamma().end(), ok);
  }

  // Every equation owned by `owner` touching v with all variables assigned.
  bool consistent(int v, int owner) const {
    for (int e : eqs_of_var_[v])
      if (owner_[e] == owner && all_assigned(eqs_[e]) && !holds(eqs_[e])) return false;
    return true;
  }

  bool boundary_ready(const Component& c) const {
    return std::all_of(c.boundary.begin(), c.boundary.end(), [&](int v) { return values_[v].has_value(); });
  }

  bool components_after(int v) {
    for (int c : boundary_comps_[v])
      if (boundary_ready(comps_[c]) && !component_exists(c)) return false;
    return true;
  }

  std::string memo_key(int c) const {
    std::string key = comps_[c].shape;
    for (int v : comps_[c].boundary) key += '|' + values_[v]->to_string();
    return key;
  }

  bool component_exists(int c) {
    const std::string key = memo_key(c);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second.has_value();
    std::optional<std::vector<MalcevElement>> witness;
    const auto& comp = comps_[c];
    backtrack(comp.aux, c, [&] {
      std::vector<MalcevElement> w;
      for (int v : comp.aux) w.push_back(*values_[v]);
      witness = std::move(w);
      return true;
    });
    const bool found = witness.has_value();
    memo_.emplace(key, std::move(witness));
    return found;
  }

  void tick() {
    if (++result_.nodes > opt_.node_limit) throw ResourceLimitError("group solver: node limit exceeded");
  }

  const std::vector<MalcevElement>& box(bool alpha_only) {
    auto& cache = alpha_only ? alpha_box_ : full_box_;
    if (!cache.empty()) return cache;
    const std::size_t pairs = MalcevElement::pair_count(m_);
    const std::size_t dim = alpha_only ? m_ : m_ + pairs;
    const std::uint64_t side = static_cast<std::uint64_t>(2 * bound_ + 1);
    std::uint64_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) {
      if (total > 20'000'000 / side) throw ResourceLimitError("group solver: box too large to enumerate");
      total *= side;
    }
    // Coordinates run 0, 1, -1, 2, -2, ... so small witnesses come first.
    std::vector<long> order{0};
    for (long k = 1; k <= bound_; ++k) {
      order.push_back(k);
      order.push_back(-k);
    }
    std::vector<std::size_t> digit(dim, 0);
    cache.reserve(total);
    for (std::uint64_t n = 0; n < total; ++n) {
      MalcevElement x(m_);
      for (std::size_t d = 0; d < dim; ++d) {
        if (d < m_)
          x.alpha()[d] = order[digit[d]];
        else
          x.gamma()[d - m_] = order[digit[d]];
      }
      cache.push_back(std::move(x));
      for (std::size_t d = 0; d < dim; ++d) {
        if (++digit[d] < order.size()) break;
        digit[d] = 0;
      }
    }
    return cache;
  }

  // A variable in `scope` that some owned equation determines, with its value.
  std::optional<std::pair<int, MalcevElement>> find_isolated(const std::vector<int>& scope, int owner) const {
    if (!amb_.is_free()) return std::nullopt;
    for (int v : scope) {
      if (values_[v]) continue;
      for (int e : eqs_of_var_[v]) {
        if (owner_[e] != owner) continue;
        const auto& eq = eqs_[e];
        const bool others = std::all_of(eq.vars.begin(), eq.vars.end(),
                                        [&](int u) { return u == v || values_[u].has_value(); });
        if (!others) continue;
        for (const auto& iso : eq.isolations) {
          if (iso.var != v) continue;
          // P v^s Q = O  =>  v^s = P^-1 O Q^-1
          const auto& side = iso.side == 0 ? eq.lhs : eq.rhs;
          const auto& other = iso.side == 0 ? eq.rhs : eq.lhs;
          const MalcevElement P = eval(side, 0, iso.pos);
          const MalcevElement Q = eval(side, iso.pos + 1);
          MalcevElement x = multiply(multiply(inverse(P), eval(other)), inverse(Q));
          if (iso.sign < 0) x = inverse(x);
          return std::make_pair(v, std::move(x));
        }
      }
    }
    return std::nullopt;
  }

  // Assigns every unassigned variable of `scope`, checking equations owned
  // by `owner` (-1: the projected level, which also triggers component
  // checks). Returns true when `done` asked to stop.
  bool backtrack(const std::vector<int>& scope, int owner, const std::function<bool()>& done) {
    if (auto iso = find_isolated(scope, owner)) {
      auto& [v, x] = *iso;
      tick();
      if (opt_.bound_determined && !in_box(x)) return false;
      values_[v] = std::move(x);
      bool stop = false;
      if (consistent(v, owner) && (owner >= 0 || components_after(v))) stop = backtrack(scope, owner, done);
      values_[v].reset();
      return stop;
    }
    // Variables some equation can solve for are enumerated last.
    int v = -1;
    for (int u : scope)
      if (!values_[u] && (v < 0 || (solvable_[v] && !solvable_[u]))) v = u;
    if (v < 0) return done();
    const auto& candidates = box(owner >= 0 && gamma_free_[v]);
    for (const auto& x : candidates) {
      tick();
      values_[v] = x;
      bool stop = false;
      if (consistent(v, owner) && (owner >= 0 || components_after(v))) stop = backtrack(scope, owner, done);
      values_[v].reset();
      if (stop) return true;
    }
    return false;
  }

  void backtrack_level1() {
    backtrack(scope_, -1, [&] {
      GroupAssignment sol;
      for (std::size_t v = 0; v < nvars_; ++v)
        if (primary_[v] && (!fixed_.count(static_cast<int>(v)) || !opt_.projection))
          sol[sys_.variables[v]] = *values_[v];
      if (opt_.report_witnesses) {
        for (std::size_t c = 0; c < comps_.size(); ++c) {
          const auto& w = memo_.at(memo_key(static_cast<int>(c)));
          for (std::size_t i = 0; i < comps_[c].aux.size(); ++i) sol[sys_.variables[comps_[c].aux[i]]] = (*w)[i];
        }
        for (int v : unconstrained_) sol[sys_.variables[v]] = MalcevElement(m_);
      }
      result_.solutions.push_back(std::move(sol));
      if (opt_.max_solutions != 0 && result_.solutions.size() >= opt_.max_solutions) {
        result_.truncated = true;
        return true;
      }
      return false;
    });
  }

  const GroupSystem& sys_;
  const Ambient& amb_;
  std::int64_t bound_;
  const GroupSolveOptions& opt_;
  std::size_t m_ = 0;
  std::size_t nvars_ = 0;
  std::map<std::string, int> index_;
  std::map<std::string, MalcevElement> constants_;
  std::vector<CEquation> eqs_;
  std::vector<std::vector<int>> eqs_of_var_;
  std::vector<std::optional<MalcevElement>> values_;
  std::vector<char> primary_;
  std::set<int> fixed_;
  std::vector<int> scope_;
  std::vector<int> owner_;
  std::vector<Component> comps_;
  std::vector<std::vector<int>> boundary_comps_;
  std::vector<int> unconstrained_;
  std::vector<char> gamma_free_;
  std::vector<char> solvable_;
  std::unordered_map<std::string, std::optional<std::vector<MalcevElement>>> memo_;
  std::vector<MalcevElement> full_box_, alpha_box_;
  GroupSolveResult result_;
};

}  // namespace

GroupSolveResult bounded_solve_group(const GroupSystem& s, const Ambient& ambient, std::int64_t bound,
                                     const GroupSolveOptions& options) {
  Search search(s, ambient, bound, options);
  return search.run();
}

bool check_assignment(const GroupSystem& s, const Ambient& ambient, const GroupAssignment& values) {
  s.validate();
  std::map<std::string, MalcevElement> env = values;
  for (const auto& [name, text] : s.constants) env[name] = from_word(parse_word(text, s.ambient_rank));
  std::function<MalcevElement(const GroupWord&)> ev = [&](const GroupWord& w) {
    MalcevElement acc(s.ambient_rank);
    for (const auto& it : w) {
      if (it.is_commutator) {
        acc = multiply(acc, commutator(ev(it.left), ev(it.right)));
      } else {
        auto f = env.find(it.name);
        if (f == env.end()) throw std::invalid_argument("assignment misses '" + it.name + "'");
        acc = multiply(acc, power(f->second, it.exponent));
      }
    }
    return acc;
  };
  for (const auto& eq : s.equations)
    if (!ambient.equal(ev(eq.lhs), ev(eq.rhs))) return false;
  return true;
}

std::string CorrespondenceReport::to_json() const {
  nlohmann::ordered_json j;
  j["ring_solutions"] = ring_solutions;
  j["extended"] = extended;
  j["group_solutions"] = group_solutions;
  j["projected_ok"] = projected_ok;
  j["counterexamples"] = counterexamples;
  j["nodes"] = nodes;
  j["ok"] = ok();
  return j.dump(2);
}

namespace {

void collect_subterms(const RingTerm& t, std::map<std::string, RingTerm>& out) {
  out.emplace(t.key(), t);
  for (const auto& a : t.args) collect_subterms(a, out);
}

std::string describe(const RingAssignment& a) {
  std::string s = "{";
  for (const auto& [k, v] : a) s += (s.size() > 1 ? ", " : "") + k + "=" + v.get_str();
  return s + "}";
}

}  // namespace

CorrespondenceReport verify_correspondence(const RingSystem& s, const EDefinition& edef, const Ambient& ambient,
                                           std::int64_t ring_bound, std::int64_t group_bound,
                                           std::uint64_t node_limit) {
  if (!ambient.is_free()) throw InconclusiveError("correspondence decoding needs a free ambient");
  if (ambient.rank() != edef.ambient_rank) throw DimensionMismatch("ambient and encoding differ in rank");
  const GroupSystem g = compile_system(edef, s);
  std::map<std::string, RingTerm> subterms;
  for (const auto& v : s.variables) subterms.emplace(v, RingTerm::var(v));
  for (const auto& eq : s.equations) {
    collect_subterms(lower(eq.lhs), subterms);
    collect_subterms(lower(eq.rhs), subterms);
  }
  const std::size_t m = ambient.rank();
  CorrespondenceReport rep;

  // (i) ring -> group
  const auto ring = bounded_solve_ring(s, ring_bound);
  rep.ring_solutions = ring.size();
  for (const auto& sol : ring) {
    GroupSolveOptions opt;
    opt.projection = std::vector<std::string>{};
    opt.report_witnesses = true;
    opt.max_solutions = 1;
    opt.node_limit = node_limit;
    for (const auto& [tuple, key] : g.term_variables) opt.fixed[tuple] = power_of_c(m, evaluate(subterms.at(key), sol));
    const auto res = bounded_solve_group(g, ambient, group_bound, opt);
    rep.nodes += res.nodes;
    if (res.solutions.empty()) {
      rep.counterexamples.push_back("ring solution " + describe(sol) + " has no group witness in the box");
      continue;
    }
    GroupAssignment full = opt.fixed;
    for (const auto& [k, v] : res.solutions.front()) full[k] = v;
    if (!check_assignment(g, ambient, full)) {
      rep.counterexamples.push_back("witness for " + describe(sol) + " fails substitution");
      continue;
    }
    ++rep.extended;
  }

  // (ii) group -> ring
  GroupSolveOptions opt;
  std::vector<std::string> tuples;
  for (const auto& [tuple, key] : g.term_variables) tuples.push_back(tuple);
  opt.projection = tuples;
  opt.node_limit = node_limit;
  const auto res = bounded_solve_group(g, ambient, group_bound, opt);
  rep.nodes += res.nodes;
  rep.group_solutions = res.solutions.size();
  for (const auto& sol : res.solutions) {
    std::map<std::string, Integer> decoded;
    bool ok = true;
    for (const auto& [tuple, x] : sol) {
      auto t = decode_power_of_c(x);
      if (!t) {
        rep.counterexamples.push_back("tuple " + tuple + " = " + x.to_string() + " is not a power of c");
        ok = false;
        break;
      }
      decoded[tuple] = *t;
    }
    if (!ok) continue;
    RingAssignment ra;
    for (const auto& [rv, tuple] : g.ring_variables) ra[rv] = decoded.at(tuple);
    for (const auto& [tuple, key] : g.term_variables) {
      if (evaluate(subterms.at(key), ra) != decoded.at(tuple)) {
        rep.counterexamples.push_back("group solution " + describe(ra) + " decodes " + key + " inconsistently");
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (!satisfies(s, ra)) {
      rep.counterexamples.push_back("group solution projects to non-solution " + describe(ra));
      continue;
    }
    ++rep.projected_ok;
  }
  return rep;
}

}  // namespace nilrand::dioph
