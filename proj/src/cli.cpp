#include "nilrand/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nilrand/diophantine.hpp"
#include "nilrand/errors.hpp"
#include "nilrand/nilpotent2.hpp"
#include "nilrand/presentation.hpp"
#include "nilrand/randwalk.hpp"
#include "nilrand/words.hpp"

namespace nilrand::cli {

namespace {

using ojson = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

ojson int_vector_json(const IntVector& v) {
  ojson a = ojson::array();
  for (const auto& x : v) a.push_back(x.fits_slong_p() ? ojson(x.get_si()) : ojson(x.get_str()));
  return a;
}

ojson element_json(const MalcevElement& x) {
  return ojson{{"alpha", int_vector_json(x.alpha())}, {"gamma", int_vector_json(x.gamma())}, {"text", x.to_string()}};
}

// Alphabet size for a word given without --rank: its largest generator index.
Word parse_word_infer(const std::string& text, std::size_t rank) {
  if (rank > 0) return parse_word(text, rank);
  Word w = parse_word(text, std::numeric_limits<std::uint32_t>::max());
  std::size_t m = 1;
  for (const auto& l : w.letters) m = std::max<std::size_t>(m, l.generator);
  w.alphabet_size = m;
  return w;
}

struct Options {
  std::string file, file2, word;
  std::size_t rank = 0;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string format = "csv";
  std::size_t m = 2, r = 1, n = 100, trials = 1000, n_max = 200, n_lo = 50, n_hi = 200, b = 1;
  std::vector<std::size_t> ns;
  std::optional<double> epsilon;
  std::size_t coordinate = 1;
  std::int64_t box = 2, box_ring = 5, box_group = 5;
  std::vector<std::string> project;
  std::size_t max_solutions = 0;
  std::string presentation;
  bool normalized = false;
};

std::uint64_t require_seed(const Options& o) {
  if (!o.seed) throw CLI::RequiredError("--seed");
  return *o.seed;
}

int cmd_classify(const Options& o, std::ostream& out, std::ostream& err) {
  const auto np = normalize(load_presentation(o.file));
  const auto rep = classify(np);
  out << rep.to_json() << '\n';
  err << "regime " << to_string(rep.regime) << ", diophantine " << to_string(rep.diophantine) << '\n';
  return kOk;
}

int cmd_normalize(const Options& o, std::ostream& out, std::ostream&) {
  const auto np = normalize(load_presentation(o.file));
  ojson j;
  j["m"] = np.m;
  j["r"] = np.r;
  j["s"] = np.s;
  j["rank_full"] = np.rank_full;
  j["invariant_factors"] = int_vector_json(np.snf.invariant_factors);
  j["relators"] = ojson::array();
  for (const auto& rel : np.relators)
    j["relators"].push_back({{"generator", rel.index + 1},
                             {"alpha", rel.alpha.fits_slong_p() ? ojson(rel.alpha.get_si()) : ojson(rel.alpha.get_str())},
                             {"c_part", rel.c_part.to_string()},
                             {"element", rel.image.to_string()}});
  j["extra_commutator_relators"] = ojson::array();
  for (const auto& x : np.extra_commutator_relators) j["extra_commutator_relators"].push_back(x.to_string());
  j["nielsen_relators"] = ojson::array();
  for (const auto& w : np.nielsen_relators.relators) j["nielsen_relators"].push_back(format_word(w));
  j["nielsen_log"] = ojson::array();
  for (const auto& mv : np.nielsen_log.moves) j["nielsen_log"].push_back(mv.describe());
  j["generator_images"] = ojson::array();
  for (const auto& x : np.generator_images) j["generator_images"].push_back(x.to_string());
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_is_trivial(const Options& o, std::ostream& out, std::ostream& err) {
  const auto np = normalize(load_presentation(o.file));
  const MalcevElement x = from_word(parse_word(o.word, np.m));
  const MalcevElement h = o.normalized ? x : np.to_normalized(x);
  ojson j;
  j["word"] = o.word;
  j["normalized_element"] = h.to_string();
  j["trivial"] = is_trivial_in_G(h, np);
  j["trivial_mod_torsion"] = is_trivial_mod_torsion(h, np);
  out << j.dump(2) << '\n';
  err << (j["trivial"].get<bool>() ? "trivial" : "nontrivial") << " in G\n";
  return kOk;
}

int cmd_word_eval(const Options& o, std::ostream& out, std::ostream&) {
  const Word w = parse_word_infer(o.word, o.rank);
  ojson j = element_json(from_word(w));
  j["rank"] = w.alphabet_size;
  out << j.dump() << '\n';
  return kOk;
}

int cmd_rank_exp(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = randwalk::parse_config(read_file(o.file), o.seed);
  cfg.jobs = std::max(1u, o.jobs);
  const auto rows = randwalk::rank_experiment(cfg);
  if (o.format == "json") {
    ojson j;
    j["config"] = ojson::parse(cfg.to_json());
    j["rows"] = ojson::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"length", r.length},
                           {"trials", r.trials},
                           {"full_rank_count", r.full_rank_count},
                           {"p_hat", r.p_hat},
                           {"stderr", r.std_error}});
    out << j.dump(2) << '\n';
  } else {
    out << randwalk::rank_rows_csv(rows, cfg);
  }
  err << "nondecreasing within 2 stderr: " << (randwalk::nondecreasing_within(rows) ? "yes" : "no") << '\n';
  return kOk;
}

int cmd_clt(const Options& o, std::ostream& out, std::ostream&) {
  out << randwalk::coordinate_clt_stats(o.m, o.n, o.trials, require_seed(o), std::max(1u, o.jobs)).to_csv();
  return kOk;
}

int cmd_escape(const Options& o, std::ostream& out, std::ostream&) {
  const std::uint64_t seed = require_seed(o);
  std::vector<randwalk::EscapeEstimate> rows;
  const auto ns = o.ns.empty() ? std::vector<std::size_t>{o.n} : o.ns;
  for (std::size_t n : ns)
    rows.push_back(randwalk::escape_probability(o.m, n, o.trials, seed, o.epsilon, o.coordinate, std::max(1u, o.jobs)));
  out << randwalk::escape_csv(rows, seed);
  return kOk;
}

int cmd_return_prob(const Options& o, std::ostream& out, std::ostream&) {
  out << randwalk::return_rows_csv(randwalk::return_probability_exact(o.m, o.n_max), o.m);
  return kOk;
}

int cmd_slope(const Options& o, std::ostream& out, std::ostream&) {
  const double s = randwalk::decay_slope(o.m, o.n_lo, o.n_hi);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s);
  out << "m,n_lo,n_hi,slope,target\n" << o.m << ',' << o.n_lo << ',' << o.n_hi << ',' << buf << ','
      << -static_cast<double>(o.m) / 2 << '\n';
  return kOk;
}

int cmd_sz(const Options& o, std::ostream& out, std::ostream&) {
  const auto res = randwalk::schwartz_zippel_check(o.r, o.m, o.b);
  out << res.to_csv();
  return res.holds ? kOk : kDomainError;
}

int cmd_compile(const Options& o, std::ostream& out, std::ostream& err) {
  const auto ring = dioph::parse_ring_system(read_file(o.file));
  const auto g = dioph::compile_system(dioph::z_in_g_templates(o.rank == 0 ? 2 : o.rank), ring);
  out << dioph::group_system_to_json(g) << '\n';
  err << g.variables.size() << " group variables, " << g.equations.size() << " equations\n";
  return kOk;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const auto g = dioph::parse_group_system(read_file(o.file));
  std::optional<NormalizedPresentation> np;
  if (!o.presentation.empty()) np = normalize(load_presentation(o.presentation));
  const auto amb = np ? dioph::Ambient::quotient(*np) : dioph::Ambient::free(g.ambient_rank);
  dioph::GroupSolveOptions opt;
  if (!o.project.empty()) opt.projection = o.project;
  opt.max_solutions = o.max_solutions;
  const auto res = dioph::bounded_solve_group(g, amb, o.box, opt);
  ojson j;
  j["box"] = o.box;
  j["solutions"] = ojson::array();
  for (const auto& sol : res.solutions) {
    ojson s;
    for (const auto& [k, v] : sol) s[k] = v.to_string();
    j["solutions"].push_back(s);
  }
  j["count"] = res.solutions.size();
  j["truncated"] = res.truncated;
  j["nodes"] = res.nodes;
  j["note"] = "solutions within the box only; absence is not unsolvability";
  out << j.dump(2) << '\n';
  err << res.solutions.size() << " solutions within box " << o.box << '\n';
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const auto ring = dioph::parse_ring_system(read_file(o.file));
  const std::size_t m = o.rank == 0 ? 2 : o.rank;
  const auto rep = dioph::verify_correspondence(ring, dioph::z_in_g_templates(m), dioph::Ambient::free(m), o.box_ring,
                                                o.box_group);
  out << rep.to_json() << '\n';
  err << (rep.ok() ? "no counterexamples" : "COUNTEREXAMPLES FOUND") << '\n';
  return rep.ok() ? kOk : kDomainError;
}

std::string error_json(const std::string& kind, const std::string& message) {
  return ojson{{"error", kind}, {"message", message}}.dump();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random nilpotent groups: exact algebra, normalization, experiments, equation compilation"};
  app.require_subcommand(1, 1);
  Options o;
  using Handler = int (*)(const Options&, std::ostream&, std::ostream&);
  std::vector<std::pair<CLI::App*, Handler>> handlers;
  auto sub = [&](const std::string& name, const std::string& desc, Handler h) {
    CLI::App* s = app.add_subcommand(name, desc);
    handlers.emplace_back(s, h);
    return s;
  };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "64-bit RNG seed (mandatory)"); };
  auto add_jobs = [&](CLI::App* s) { s->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber); };

  auto* s = sub("classify", "regime report for a presentation file (JSON)", cmd_classify);
  s->add_option("file", o.file)->required()->check(CLI::ExistingFile);

  s = sub("normalize", "normalized relators and Nielsen log (JSON)", cmd_normalize);
  s->add_option("file", o.file)->required()->check(CLI::ExistingFile);

  s = sub("is-trivial", "word problem in the presented group (JSON)", cmd_is_trivial);
  s->add_option("file", o.file)->required()->check(CLI::ExistingFile);
  s->add_option("word", o.word)->required();
  s->add_flag("--normalized", o.normalized, "word is already in normalized generators");

  s = sub("word-eval", "Malcev coordinates of a word (JSON)", cmd_word_eval);
  s->add_option("word", o.word)->required();
  s->add_option("--rank", o.rank, "ambient rank m (default: largest generator index)");

  s = sub("rank-exp", "full-rank experiment from a JSON config (CSV)", cmd_rank_exp);
  s->add_option("config", o.file)->required()->check(CLI::ExistingFile);
  add_seed(s);
  add_jobs(s);
  s->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));

  s = sub("clt", "coordinate CLT statistics (CSV)", cmd_clt);
  s->add_option("--m", o.m)->required();
  s->add_option("--n", o.n)->required();
  s->add_option("--trials", o.trials)->required();
  add_seed(s);
  add_jobs(s);

  s = sub("escape", "escape probability P(|s_{n,i}/sqrt n| >= eps) (CSV)", cmd_escape);
  s->add_option("--m", o.m)->required();
  s->add_option("--n", o.ns, "walk lengths (repeatable)")->required();
  s->add_option("--trials", o.trials)->required();
  s->add_option("--epsilon", o.epsilon, "threshold (default ln n)");
  s->add_option("--coordinate", o.coordinate);
  add_seed(s);
  add_jobs(s);

  s = sub("return-prob", "exact return probabilities p_n(0)+p_{n+1}(0) (CSV)", cmd_return_prob);
  s->add_option("--m", o.m)->required();
  s->add_option("--n-max", o.n_max)->required();

  s = sub("slope", "log-log decay slope of return probabilities (CSV)", cmd_slope);
  s->add_option("--m", o.m)->required();
  s->add_option("--n-lo", o.n_lo);
  s->add_option("--n-hi", o.n_hi);

  s = sub("sz-check", "exhaustive Schwartz-Zippel zero count (CSV)", cmd_sz);
  s->add_option("--r", o.r)->required();
  s->add_option("--m", o.m)->required();
  s->add_option("--b", o.b)->required();

  s = sub("compile", "compile a ring system to a group system (JSON)", cmd_compile);
  s->add_option("ring", o.file)->required()->check(CLI::ExistingFile);
  s->add_option("--rank", o.rank, "ambient rank (default 2)");

  s = sub("solve-bounded", "bounded search for group solutions (JSON)", cmd_solve);
  s->add_option("system", o.file)->required()->check(CLI::ExistingFile);
  s->add_option("--box", o.box)->required();
  s->add_option("--presentation", o.presentation, "solve in this quotient instead of the free group")
      ->check(CLI::ExistingFile);
  s->add_option("--project", o.project, "report only these variables")->delimiter(',');
  s->add_option("--max", o.max_solutions, "stop after this many solutions");

  s = sub("verify", "ring/group solution correspondence (JSON)", cmd_verify);
  s->add_option("ring", o.file)->required()->check(CLI::ExistingFile);
  s->add_option("--box-ring", o.box_ring)->required();
  s->add_option("--box-group", o.box_group)->required();
  s->add_option("--rank", o.rank, "ambient rank (default 2)");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsageError;
  }

  for (const auto& [cmd, handler] : handlers) {
    if (!cmd->parsed()) continue;
    try {
      return handler(o, out, err);
    } catch (const CLI::RequiredError& e) {
      err << e.what() << '\n';
      return kUsageError;
    } catch (const ParseError& e) {
      err << "parse error: " << e.what() << '\n';
      return kUsageError;
    } catch (const InconclusiveError& e) {
      out << error_json("INCONCLUSIVE", e.what()) << '\n';
      return kDomainError;
    } catch (const ResourceLimitError& e) {
      out << error_json("RESOURCE_LIMIT", e.what()) << '\n';
      return kDomainError;
    } catch (const DimensionMismatch& e) {
      out << error_json("DIMENSION_MISMATCH", e.what()) << '\n';
      return kDomainError;
    } catch (const std::invalid_argument& e) {
      out << error_json("INVALID_ARGUMENT", e.what()) << '\n';
      return kDomainError;
    } catch (const std::runtime_error& e) {
      out << error_json("ERROR", e.what()) << '\n';
      return kDomainError;
    }
  }
  return kUsageError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace nilrand::cli
