#pragma once

// TOML-driven runs: load a problem block, perform one action, write files.

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <toml.hpp>

#include "qdiff/error.hpp"
#include "qdiff/io.hpp"
#include "qdiff/krein.hpp"
#include "qdiff/operator.hpp"
#include "qdiff/problems.hpp"
#include "qdiff/sampler.hpp"
#include "qdiff/solver.hpp"
#include "qdiff/spectral.hpp"

namespace qdiff::cli {

/// A configuration problem at a known source position.
class ConfigError : public ParseError {
 public:
  ConfigError(const std::string& what, const toml::source_region& where)
      : ParseError(what, where.begin.line, where.begin.column) {}
  ConfigError(const std::string& what, std::size_t line, std::size_t column) : ParseError(what, line, column) {}
};

enum class Action { assemble, solve, spectrum, verify };

inline std::string action_name(Action a) {
  switch (a) {
    case Action::assemble: return "assemble";
    case Action::solve: return "solve";
    case Action::spectrum: return "spectrum";
    case Action::verify: return "verify";
  }
  return "?";
}

inline std::optional<Action> parse_action(const std::string& s) {
  if (s == "assemble") return Action::assemble;
  if (s == "solve") return Action::solve;
  if (s == "spectrum") return Action::spectrum;
  if (s == "verify") return Action::verify;
  return std::nullopt;
}

/// Problem block after parsing: either an OperatorSpec or a string problem.
struct Problem {
  std::string family;
  std::optional<OperatorSpec> spec;
  std::optional<KreinFeller> krein;
  /// Right-hand side from a scalar f and optional mu.
  std::function<FunctionalData(const CoefficientFunction&, const cvec&)> rhs;
};

struct RunConfig {
  Problem problem;
  Action action = Action::solve;
  std::filesystem::path out = "out";
  toml::table table;  // action blocks are read from here
};

namespace detail {

inline const toml::source_region& where(const toml::node& n) { return n.source(); }

inline std::string kind(const toml::node& n) {
  std::ostringstream s;
  s << n.type();
  return s.str();
}

/// Number, [re, im], or a constant expression such as "2 - 0.5*i".
inline complex complex_value(const toml::node& n, const std::string& key) {
  if (n.is_number()) return *n.value<double>();
  if (const auto* a = n.as_array()) {
    if (a->size() == 2 && (*a)[0].is_number() && (*a)[1].is_number())
      return {*(*a)[0].value<double>(), *(*a)[1].value<double>()};
    throw ConfigError(key + ": complex numbers as arrays need exactly [re, im]", where(n));
  }
  if (const auto* s = n.as_string()) {
    try {
      const Expr e = Expr::parse(s->get());
      const complex v0 = e(0.0), v1 = e(1.0);
      if (v0 != v1) throw ConfigError(key + ": expected a constant, got a function of x", where(n));
      return v0;
    } catch (const ConfigError&) {
      throw;
    } catch (const ParseError& e) {
      throw ConfigError(key + ": " + e.what(), n.source().begin.line, n.source().begin.column + e.column());
    }
  }
  throw ConfigError(key + ": expected a number, [re, im] or a string, got " + kind(n), where(n));
}

inline CoefficientFunction expression(const toml::node& n, const std::string& text, const std::string& key) {
  try {
    return CoefficientFunction::parse(text);
  } catch (const ParseError& e) {
    // The string starts one column after its opening quote.
    throw ConfigError(key + ": " + std::string(e.what()), n.source().begin.line, n.source().begin.column + e.column());
  }
}

inline double number(const toml::node& n, const std::string& key) {
  if (!n.is_number()) throw ConfigError(key + ": expected a number, got " + kind(n), where(n));
  return *n.value<double>();
}

/// Number, expression string, or an array of pieces {a, b, expr, left_alpha, right_alpha}.
inline CoefficientFunction coefficient(const toml::node& n, const std::string& key) {
  if (n.is_number()) return CoefficientFunction(*n.value<double>());
  if (const auto* s = n.as_string()) return expression(n, s->get(), key);
  if (const auto* arr = n.as_array()) {
    std::vector<Piece> pieces;
    for (const toml::node& item : *arr) {
      const auto* t = item.as_table();
      if (!t) throw ConfigError(key + ": pieces must be tables {a, b, expr}", where(item));
      Piece p;
      for (const auto& [k, v] : *t) {
        const std::string name(k.str());
        if (name == "a") p.a = number(v, key + ".a");
        else if (name == "b") p.b = number(v, key + ".b");
        else if (name == "left_alpha") p.left_alpha = number(v, key + ".left_alpha");
        else if (name == "right_alpha") p.right_alpha = number(v, key + ".right_alpha");
        else if (name == "expr") {
          const auto* s = v.as_string();
          if (!s) throw ConfigError(key + ".expr must be a string", where(v));
          try {
            p.expr = Expr::parse(s->get());
          } catch (const ParseError& e) {
            throw ConfigError(key + ".expr: " + std::string(e.what()), v.source().begin.line,
                              v.source().begin.column + e.column());
          }
        } else {
          throw ConfigError(key + ": unknown piece field '" + name + "'", where(v));
        }
      }
      pieces.push_back(std::move(p));
    }
    try {
      return CoefficientFunction::piecewise(std::move(pieces));
    } catch (const SpecError& e) {
      throw ConfigError(key + ": " + e.what(), where(n));
    }
  }
  throw ConfigError(key + ": expected a number, an expression string or an array of pieces", where(n));
}

inline cmat matrix(const toml::node& n, const std::string& key, Eigen::Index cols) {
  const auto* rows = n.as_array();
  if (!rows) throw ConfigError(key + ": expected an array of rows", where(n));
  cmat m(static_cast<Eigen::Index>(rows->size()), cols);
  Eigen::Index r = 0;
  for (const toml::node& row : *rows) {
    const auto* a = row.as_array();
    if (!a || static_cast<Eigen::Index>(a->size()) != cols)
      throw ConfigError(key + ": every row needs " + std::to_string(cols) + " entries", where(row));
    Eigen::Index c = 0;
    for (const toml::node& v : *a) m(r, c++) = complex_value(v, key);
    ++r;
  }
  return m;
}

inline std::size_t index(const toml::table& t, const char* name, const std::string& key) {
  const toml::node* n = t.get(name);
  if (!n) throw ConfigError(key + ": missing '" + name + "'", t.source());
  const auto v = n->value<std::int64_t>();
  if (!v || *v < 0) throw ConfigError(key + "." + name + ": expected a nonnegative integer", where(*n));
  return static_cast<std::size_t>(*v);
}

inline CoefficientSystem system_table(const toml::node& n, std::size_t order, const std::string& key) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError(key + ": expected an array of {i, j, f} tables", where(n));
  CoefficientSystem a(order);
  for (const toml::node& item : *arr) {
    const auto* t = item.as_table();
    if (!t) throw ConfigError(key + ": entries must be tables {i, j, f}", where(item));
    const toml::node* f = t->get("f");
    if (!f) throw ConfigError(key + ": entry without 'f'", where(item));
    a.set(index(*t, "i", key), index(*t, "j", key), coefficient(*f, key + ".f"));
  }
  return a;
}

/// Reads named fields of a table, rejecting unknown keys.
class Fields {
 public:
  Fields(const toml::table& t, std::string prefix, std::set<std::string> allowed)
      : t_(t), prefix_(std::move(prefix)), allowed_(std::move(allowed)) {
    for (const auto& [k, v] : t_)
      if (!allowed_.count(std::string(k.str())))
        throw ConfigError("unknown key '" + prefix_ + std::string(k.str()) + "'", where(v));
  }
  const toml::node* get(const std::string& name) const { return t_.get(name); }
  std::string key(const std::string& name) const { return prefix_ + name; }

  CoefficientFunction coefficient(const std::string& name, CoefficientFunction fallback) const {
    const toml::node* n = get(name);
    return n ? detail::coefficient(*n, key(name)) : fallback;
  }
  complex complex_value(const std::string& name, complex fallback) const {
    const toml::node* n = get(name);
    return n ? detail::complex_value(*n, key(name)) : fallback;
  }
  double number(const std::string& name, double fallback) const {
    const toml::node* n = get(name);
    return n ? detail::number(*n, key(name)) : fallback;
  }
  std::size_t count(const std::string& name, std::size_t fallback) const {
    const toml::node* n = get(name);
    if (!n) return fallback;
    const auto v = n->value<std::int64_t>();
    if (!n->is_integer() || !v || *v < 0) throw ConfigError(key(name) + ": expected a nonnegative integer", where(*n));
    return static_cast<std::size_t>(*v);
  }
  bool boolean(const std::string& name, bool fallback) const {
    const toml::node* n = get(name);
    if (!n) return fallback;
    if (!n->is_boolean()) throw ConfigError(key(name) + ": expected true or false", where(*n));
    return *n->value<bool>();
  }
  std::string string(const std::string& name, std::string fallback) const {
    const toml::node* n = get(name);
    if (!n) return fallback;
    if (!n->is_string()) throw ConfigError(key(name) + ": expected a string", where(*n));
    return *n->value<std::string>();
  }
  cvec vector(const std::string& name) const {
    const toml::node* n = get(name);
    if (!n) return {};
    const auto* a = n->as_array();
    if (!a) throw ConfigError(key(name) + ": expected an array", where(*n));
    cvec v(static_cast<Eigen::Index>(a->size()));
    Eigen::Index k = 0;
    for (const toml::node& x : *a) v(k++) = detail::complex_value(x, key(name));
    return v;
  }
  const toml::table& table() const { return t_; }

 private:
  const toml::table& t_;
  std::string prefix_;
  std::set<std::string> allowed_;
};

inline const toml::table& section(const toml::table& root, const char* name) {
  static const toml::table empty;
  const toml::node* n = root.get(name);
  if (!n) return empty;
  const auto* t = n->as_table();
  if (!t) throw ConfigError(std::string("'") + name + "' must be a table", where(*n));
  return *t;
}

inline std::function<FunctionalData(const CoefficientFunction&, const cvec&)> scalar_rhs(std::size_t m) {
  return [m](const CoefficientFunction& f, const cvec& mu) {
    FunctionalData F = FunctionalData::scalar(m, f);
    F.mu = mu;
    return F;
  };
}

inline std::vector<Atom> atoms(const toml::node* n, const std::string& key) {
  std::vector<Atom> out;
  if (!n) return out;
  const auto* arr = n->as_array();
  if (!arr) throw ConfigError(key + ": expected an array of [location, weight] pairs", where(*n));
  for (const toml::node& item : *arr) {
    const auto* pair = item.as_array();
    if (!pair || pair->size() != 2)
      throw ConfigError(key + ": each atom is [location, weight]", where(item));
    out.push_back(Atom{number((*pair)[0], key), number((*pair)[1], key)});
  }
  return out;
}

inline Problem build_problem(const toml::table& t) {
  const toml::node* fam = t.get("family");
  if (!fam || !fam->is_string()) throw ConfigError("[problem] needs a string 'family'", t.source());
  Problem pr;
  pr.family = *fam->value<std::string>();
  const std::string& f = pr.family;
  try {
    if (f == "beam4") {
      const Fields x(t, "problem.", {"family", "p", "q", "r"});
      pr.spec = fourth_order_dirichlet(x.coefficient("p", 1.0), x.coefficient("q", 0.0), x.coefficient("r", 0.0));
      pr.rhs = scalar_rhs(2);
    } else if (f == "beam4-measure") {
      const Fields x(t, "problem.", {"family", "H", "q", "r"});
      if (!x.get("H")) throw ConfigError("beam4-measure needs 'H'", t.source());
      const CoefficientFunction H = x.coefficient("H", 0.0);
      pr.spec = fourth_order_measure(H, x.coefficient("q", 0.0), x.coefficient("r", 0.0));
      pr.rhs = [H](const CoefficientFunction& g, const cvec& mu) {
        FunctionalData F = measure_rhs(H, g);
        F.mu = mu;
        return F;
      };
    } else if (f == "periodic3") {
      const Fields x(t, "problem.", {"family", "p", "q"});
      pr.spec = third_order_periodic(x.coefficient("p", 0.0), x.coefficient("q", 0.0));
      pr.rhs = scalar_rhs(1);
    } else if (f == "schrodinger2") {
      const Fields x(t, "problem.", {"family", "q"});
      pr.spec = second_order_dirichlet(x.coefficient("q", 0.0));
      pr.rhs = scalar_rhs(1);
    } else if (f == "krein") {
      const Fields x(t, "problem.", {"family", "H", "density", "atoms", "grid"});
      MeasureFunction N{x.coefficient("density", 0.0), atoms(x.get("atoms"), "problem.atoms")};
      KreinOptions ko;
      ko.grid = x.count("grid", ko.grid);
      pr.krein.emplace(x.coefficient("H", CoefficientFunction::parse("x")), std::move(N), ko);
    } else if (f == "raw") {
      const Fields x(t, "problem.", {"family", "n", "m", "s", "A", "B", "U", "V", "Q", "p", "non_injective",
                                      "lambda_convention"});
      OperatorSpec s;
      s.n = index(t, "n", "problem");
      s.m = index(t, "m", "problem");
      s.s = x.number("s", 2.0);
      const auto ni = static_cast<Eigen::Index>(s.n), mi = static_cast<Eigen::Index>(s.m);
      s.A = x.get("A") ? system_table(*x.get("A"), s.n, "problem.A") : CoefficientSystem::sobolev(s.n);
      s.B = x.get("B") ? system_table(*x.get("B"), s.m, "problem.B") : CoefficientSystem::sobolev(s.m);
      if (!x.get("U") || !x.get("V")) throw ConfigError("raw problems need U and V", t.source());
      s.U = matrix(*x.get("U"), "problem.U", 2 * ni);
      s.V = matrix(*x.get("V"), "problem.V", 2 * mi);
      s.Q = x.get("Q") ? matrix(*x.get("Q"), "problem.Q", 2 * ni) : cmat::Zero(2 * mi, 2 * ni);
      if (const toml::node* p = x.get("p")) {
        const auto* arr = p->as_array();
        if (!arr) throw ConfigError("problem.p: expected an array of {i, j, p0, p1} tables", where(*p));
        for (const toml::node& item : *arr) {
          const auto* e = item.as_table();
          if (!e) throw ConfigError("problem.p: entries must be tables", where(item));
          const Fields pe(*e, "problem.p.", {"i", "j", "p0", "p1"});
          s.set_p(index(*e, "i", "problem.p"), index(*e, "j", "problem.p"), pe.coefficient("p0", 0.0),
                  pe.coefficient("p1", 0.0));
        }
      }
      s.non_injective = x.boolean("non_injective", false);
      s.lambda_convention = x.string("lambda_convention", "as given by the p1 entries");
      const ValidationReport r = validate_spec(s);
      if (!r.ok()) throw ConfigError("problem does not validate:\n" + r.str(), t.source());
      pr.spec = std::move(s);
      pr.rhs = scalar_rhs(pr.spec->m);
    } else {
      throw ConfigError("unknown family '" + f + "' (beam4, beam4-measure, periodic3, schrodinger2, krein, raw)",
                        where(*fam));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const SpecError& e) {
    throw ConfigError(std::string("problem: ") + e.what(), t.source());
  }
  return pr;
}

}  // namespace detail

/// Parses TOML text. `source` names the file in error messages.
inline RunConfig parse_config(std::string_view text, const std::string& source = "config") {
  RunConfig cfg;
  try {
    cfg.table = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()), e.source().begin.line, e.source().begin.column);
  }
  const toml::table& root = cfg.table;
  for (const auto& [k, v] : root) {
    static const std::set<std::string> known = {"action", "out", "problem", "assemble", "solve", "spectrum", "verify"};
    if (!known.count(std::string(k.str()))) throw ConfigError("unknown key '" + std::string(k.str()) + "'", v.source());
  }
  if (const toml::node* a = root.get("action")) {
    const auto s = a->value<std::string>();
    const auto act = s ? parse_action(*s) : std::nullopt;
    if (!act) throw ConfigError("action must be one of assemble, solve, spectrum, verify", a->source());
    cfg.action = *act;
  }
  if (const toml::node* o = root.get("out")) {
    const auto s = o->value<std::string>();
    if (!s) throw ConfigError("out must be a string", o->source());
    cfg.out = *s;
  }
  const toml::node* p = root.get("problem");
  if (!p || !p->is_table()) throw ConfigError("missing [problem] table", 1, 1);
  cfg.problem = detail::build_problem(*p->as_table());
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

namespace detail {

inline std::string describe_complex(complex z) {
  if (z.imag() == 0.0) return csv_number(z.real());
  return csv_number(z.real()) + (z.imag() < 0 ? " - " : " + ") + csv_number(std::abs(z.imag())) + "i";
}

inline std::string matrix_text(const cmat& M) {
  std::string out;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    out += "  [";
    for (Eigen::Index c = 0; c < M.cols(); ++c) out += (c ? ", " : "") + describe_complex(M(r, c));
    out += "]\n";
  }
  return out;
}

inline FirstOrderSystem string_system(const MeasureFunction& N, complex lambda) {
  FirstOrderSystem sys(2);
  sys.labels = {"u", "u'"};
  sys.entry(0, 1) = 1.0;
  sys.entry(1, 0) = CoefficientFunction(-lambda) * N.coefficient();
  sys.lambda = lambda;
  return sys;
}

struct Check {
  bool pass;
  std::string line;
};

inline std::string verdict(const Check& c) { return std::string(c.pass ? "PASS " : "FAIL ") + c.line + "\n"; }

/// Random matrix with `rank` nonzero random rows.
inline cmat random_rank(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  cmat m = cmat::Zero(rows, cols);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(rows));
  for (Eigen::Index k = 0; k < rows; ++k) idx[static_cast<std::size_t>(k)] = k;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (Eigen::Index k = 0; k < rank; ++k)
    for (Eigen::Index c = 0; c < cols; ++c) m(idx[static_cast<std::size_t>(k)], c) = complex(g(rng), g(rng));
  return m;
}

inline Check index_check(const OperatorSpec& spec, complex lambda, const FunctionalData& F, std::size_t draws,
                         std::mt19937_64& rng) {
  std::size_t bad = 0;
  std::string first;
  auto one = [&](const OperatorSpec& s, const std::string& what) {
    const BvpSolution sol = solve_bvp(s, lambda, F);
    const long lhs = static_cast<long>(sol.kernel_dim) - static_cast<long>(sol.defect_dim);
    const long rhs = fredholm_index(s);
    if (lhs != rhs) {
      if (!bad++) first = what + ": " + std::to_string(lhs) + " vs " + std::to_string(rhs);
    }
  };
  one(spec, "given boundary data");
  const auto ni = static_cast<Eigen::Index>(spec.n), mi = static_cast<Eigen::Index>(spec.m);
  for (std::size_t d = 0; d < draws; ++d) {
    OperatorSpec s = spec;
    std::uniform_int_distribution<Eigen::Index> ru(0, 2 * ni), rv(0, 2 * mi);
    s.U = random_rank(2 * ni, 2 * ni, ru(rng), rng);
    s.V = random_rank(2 * mi, 2 * mi, rv(rng), rng);
    s.Q = random_rank(2 * mi, 2 * ni, std::min(2 * mi, 2 * ni), rng);
    one(s, "draw " + std::to_string(d));
  }
  const std::string cases = std::to_string(draws + 1) + " cases";
  if (bad) return {false, "index: kernel_dim - defect_dim differs from the Fredholm index in " + std::to_string(bad) +
                              " of " + cases + " (" + first + ")"};
  return {true, "index: kernel_dim - defect_dim = n - m - rank U + rank V in all " + cases};
}

inline Check weak_form_check(const OperatorSpec& spec, complex lambda, const FunctionalData& F, std::size_t trials,
                             double tol, std::mt19937_64& rng) {
  const BvpSolution sol = solve_bvp(spec, lambda, F);
  if (!sol.solvable)
    return {false, "weak_form: no solution at lambda = " + describe_complex(lambda) + " (residual " +
                       csv_number(sol.residual) + ")"};
  const AdmissibleSampler tests(spec.B, spec.V);
  const double bound = tol * (1.0 + functional_norm(F));
  double worst = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    const VectorTrajectory Z = tests.draw(rng);
    worst = std::max(worst, std::abs(apply_T(spec, lambda, sol.trial, Z) - functional_pairing(spec, F, Z)));
  }
  return {worst < bound, "weak_form: max |<TY,Z> - <F,Z>| = " + csv_number(worst) + " over " + std::to_string(trials) +
                             " test functions (bound " + csv_number(bound) + ")"};
}

inline Check symmetry_check(const OperatorSpec& spec, std::size_t trials, double tol, std::uint64_t seed) {
  try {
    const SymmetryReport r = check_symmetry(spec, trials, seed);
    return {r.sigma < tol, "symmetry: sigma = " + csv_number(r.sigma) + " (bound " + csv_number(tol) + ")"};
  } catch (const UnsupportedSpec& e) {
    return {false, std::string("symmetry: unsupported: ") + e.what()};
  }
}

inline Check positivity_check(const SectorEstimate& s, const std::string& name) {
  bool pos = !s.values.empty();
  for (const complex v : s.values) pos = pos && v.real() > 0.0;
  return {pos && s.half_angle < 1e-9,
          name + ": " + std::to_string(s.values.size()) + " samples, sector half-angle " + csv_number(s.half_angle)};
}

}  // namespace detail

/// Performs the configured action. Returns 0 iff the action succeeded and
/// every requested check passed.
inline int run(const RunConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  const Problem& pr = cfg.problem;
  const toml::table& root = cfg.table;
  fs::create_directories(cfg.out);

  switch (cfg.action) {
    case Action::assemble: {
      const detail::Fields x(detail::section(root, "assemble"), "assemble.", {"lambda", "f"});
      const complex lambda = x.complex_value("lambda", 0.0);
      std::string text = "family: " + pr.family + "\n";
      if (pr.krein) {
        text += "string problem -u'' = lambda u dN after t = H(x), Dirichlet ends\n";
        text += "first-order system at lambda = " + detail::describe_complex(lambda) + ":\n";
        text += detail::string_system(pr.krein->measure(), lambda).str();
      } else {
        const OperatorSpec& s = *pr.spec;
        const FunctionalData F = pr.rhs(x.coefficient("f", 0.0), cvec());
        text += "n = " + std::to_string(s.n) + ", m = " + std::to_string(s.m) + ", s = " + csv_number(s.s) + "\n";
        text += "lambda: " + s.lambda_convention + "\n";
        text += "validation: " + validate_spec(s).str();
        text += "fredholm index: " + std::to_string(fredholm_index(s)) + "\n";
        text += "U =\n" + detail::matrix_text(s.U) + "V =\n" + detail::matrix_text(s.V) + "Q =\n" +
                detail::matrix_text(s.Q);
        text += "first-order system at lambda = " + detail::describe_complex(lambda) + ":\n";
        text += assemble_system(s, lambda, F).str();
      }
      write_text(cfg.out / "system.txt", text);
      log << "wrote " << (cfg.out / "system.txt").string() << "\n";
      return 0;
    }

    case Action::solve: {
      const detail::Fields x(detail::section(root, "solve"), "solve.", {"lambda", "f", "mu", "samples", "tol"});
      if (!pr.spec) throw UnsupportedSpec("solve is not available for the '" + pr.family + "' family");
      const complex lambda = x.complex_value("lambda", 0.0);
      BvpOptions opts;
      opts.ivp.tol = x.number("tol", opts.ivp.tol);
      const BvpSolution s = solve_bvp(*pr.spec, lambda, pr.rhs(x.coefficient("f", 0.0), x.vector("mu")), opts);
      write_text(cfg.out / "trajectory.csv", trajectory_csv(s.trajectory, x.count("samples", 101)));
      const std::string summary = std::string(s.solvable ? "true" : "false") + "," + std::to_string(s.kernel_dim) +
                                  "," + std::to_string(s.defect_dim) + "," + csv_number(s.residual) + "\n";
      write_text(cfg.out / "summary.csv", "solvable,kernel_dim,defect_dim,residual\n" + summary);
      log << "solvable,kernel_dim,defect_dim,residual\n" << summary;
      if (s.rank_ambiguous) log << "warning: a singular value lies near the rank threshold\n";
      return s.solvable ? 0 : 1;
    }

    case Action::spectrum: {
      const detail::Fields x(detail::section(root, "spectrum"), "spectrum.",
                             {"window", "rectangle", "grid", "grid_re", "grid_im", "eigenfunctions", "samples",
                              "threads"});
      const toml::node* w = x.get("window");
      const toml::node* rect = x.get("rectangle");
      if (!w == !rect) throw ConfigError("[spectrum] needs exactly one of 'window' or 'rectangle'", x.table().source());
      SpectralOptions opts;
      opts.grid = x.count("grid", opts.grid);
      opts.grid_re = x.count("grid_re", opts.grid_re);
      opts.grid_im = x.count("grid_im", opts.grid_im);
      opts.threads = static_cast<unsigned>(x.count("threads", 1));
      opts.eigenfunctions = x.boolean("eigenfunctions", false);
      const std::size_t samples = x.count("samples", 101);
      auto pair = [](const toml::node& n, const std::string& key) {
        const auto* a = n.as_array();
        if (!a || a->size() != 2) throw ConfigError(key + ": expected two entries", n.source());
        return std::pair{detail::complex_value((*a)[0], key), detail::complex_value((*a)[1], key)};
      };
      std::vector<Eigenpair> ev;
      std::vector<VectorTrajectory> fns;
      if (pr.krein) {
        if (!w) throw UnsupportedSpec("string spectra are real: use 'window'");
        const auto [a, b] = pair(*w, "spectrum.window");
        for (const double l : pr.krein->eigenvalues(a.real(), b.real())) {
          ev.push_back(Eigenpair{l, 1, std::abs(pr.krein->boundary_value(l))});
          if (opts.eigenfunctions) fns.push_back(pr.krein->eigenfunction(l));
        }
      } else {
        SpectralResult r;
        if (w) {
          const auto [a, b] = pair(*w, "spectrum.window");
          r = find_eigenvalues(*pr.spec, a.real(), b.real(), opts);
        } else {
          const auto [lo, hi] = pair(*rect, "spectrum.rectangle");
          r = find_eigenvalues(*pr.spec, lo, hi, opts);
        }
        ev = r.eigenvalues;
        fns = r.eigenfunctions;
        for (const auto& msg : r.rejected) log << "note: " << msg << "\n";
      }
      write_text(cfg.out / "spectrum.csv", spectrum_csv(ev));
      for (std::size_t k = 0; k < fns.size(); ++k)
        write_text(cfg.out / ("eigenfunction_" + std::to_string(k) + ".csv"), trajectory_csv(fns[k], samples));
      log << ev.size() << " eigenvalue(s) written to " << (cfg.out / "spectrum.csv").string() << "\n";
      return 0;
    }

    case Action::verify: {
      const detail::Fields x(detail::section(root, "verify"), "verify.",
                             {"checks", "lambda", "f", "trials", "draws", "seed", "symmetry_tol", "weak_tol"});
      std::vector<std::string> checks;
      if (const toml::node* c = x.get("checks")) {
        const auto* a = c->as_array();
        if (!a) throw ConfigError("verify.checks: expected an array of names", c->source());
        for (const toml::node& n : *a) {
          const auto s = n.value<std::string>();
          static const std::set<std::string> known = {"index", "weak_form", "symmetry", "sector", "positivity"};
          if (!s || !known.count(*s))
            throw ConfigError("verify.checks: unknown check (index, weak_form, symmetry, sector, positivity)",
                                      n.source());
          checks.push_back(*s);
        }
      } else if (pr.krein) {
        checks = {"positivity"};
      } else {
        checks = {"index", "weak_form", "symmetry"};
      }
      const complex lambda = x.complex_value("lambda", 1.7);
      const std::size_t trials = x.count("trials", 20), draws = x.count("draws", 20);
      const auto seed = static_cast<std::uint64_t>(x.count("seed", 1));
      std::mt19937_64 rng(seed);
      std::string report = "family: " + pr.family + "\n";
      bool all = true;
      for (const std::string& name : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        detail::Check c{true, ""};
        if (pr.krein) {
          if (name != "positivity") throw UnsupportedSpec("check '" + name + "' is not defined for string problems");
          c = detail::positivity_check(pr.krein->positivity(trials, seed), "positivity");
        } else {
          const OperatorSpec& s = *pr.spec;
          const FunctionalData F = pr.rhs(x.coefficient("f", CoefficientFunction::parse("1 + x")), cvec());
          if (name == "index") c = detail::index_check(s, lambda, F, draws, rng);
          else if (name == "weak_form") c = detail::weak_form_check(s, lambda, F, trials, x.number("weak_tol", 1e-7), rng);
          else if (name == "symmetry") c = detail::symmetry_check(s, std::min<std::size_t>(trials, 5), x.number("symmetry_tol", 1e-8), seed);
          else if (name == "positivity") c = detail::positivity_check(numerical_range_sector(s, trials, seed), "positivity");
          else {
            const SectorEstimate e = numerical_range_sector(s, trials, seed);
            c = {true, "sector: half-angle " + csv_number(e.half_angle) + " about argument " + csv_number(e.center) +
                           " (report only)"};
          }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && c.pass;
        report += detail::verdict(c);
        std::string shown = detail::verdict(c);
        shown.insert(shown.size() - 1, " (" + std::to_string(static_cast<long>(secs * 1000)) + " ms)");
        log << shown;
      }
      write_text(cfg.out / "report.txt", report);
      return all ? 0 : 1;
    }
  }
  return 2;
}

}  // namespace qdiff::cli
