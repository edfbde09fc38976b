#pragma once

// Run configuration: a sectioned key = value text format.
//
//   [problem]
//   dim = 3
//   mu = [1, 1]
//   lambda = [[0, -1], [-1, 0]]
//
// '#' starts a comment. Scalars are numbers, true/false or bare words; arrays
// are bracketed comma lists and may nest. Unknown sections or keys are errors.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nehari/study.hpp"

namespace nehari {

struct OutputConfig {
  std::string directory = "out";
  bool dump_fields = false;
  bool emit_plots = false;
};

struct RadialConfig {
  std::vector<double> mu_list{1.0, 2.0};
  double R = 8.0;
  int n = 2048;
};

struct RunConfig {
  Params params;
  ProblemKind kind = ProblemKind::rescaled();
  GridConfig grid;
  SolverConfig solver;
  StudyConfig study;
  RadialConfig radial;
  OutputConfig output;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class ConfigReader {
 public:
  ConfigReader(std::string section, std::string key, std::string raw)
      : where_("[" + section + "] " + key), raw_(std::move(raw)) {}

  double number() const {
    const auto j = parse();
    if (!j.is_number()) fail("expected a number");
    return j.get<double>();
  }
  int integer() const {
    const auto j = parse();
    if (!j.is_number_integer()) fail("expected an integer");
    return j.get<int>();
  }
  std::uint64_t unsigned_integer() const {
    const auto j = parse();
    if (!j.is_number_unsigned()) fail("expected a non-negative integer");
    return j.get<std::uint64_t>();
  }
  bool boolean() const {
    const auto j = parse();
    if (!j.is_boolean()) fail("expected true or false");
    return j.get<bool>();
  }
  std::string word() const {
    if (raw_.empty()) fail("expected a value");
    return raw_;
  }
  std::vector<double> vector() const {
    const auto j = parse();
    if (!j.is_array()) fail("expected a bracketed list");
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) fail("expected a list of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  std::vector<std::vector<double>> matrix() const {
    const auto j = parse();
    if (!j.is_array()) fail("expected a list of lists");
    std::vector<std::vector<double>> out;
    for (const auto& row : j) {
      if (!row.is_array()) fail("expected a list of lists");
      out.emplace_back();
      for (const auto& v : row) {
        if (!v.is_number()) fail("expected numbers");
        out.back().push_back(v.get<double>());
      }
    }
    return out;
  }

 private:
  nlohmann::json parse() const {
    try {
      return nlohmann::json::parse(raw_);
    } catch (const nlohmann::json::parse_error&) {
      fail("cannot parse '" + raw_ + "'");
    }
  }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where_ + ": " + what); }

  std::string where_;
  std::string raw_;
};

inline ProblemKind parse_kind(const std::string& s, int component) {
  if (s == "original") return ProblemKind::original();
  if (s == "rescaled") return ProblemKind::rescaled();
  if (s == "limit_system") return ProblemKind::limit_system();
  if (s == "limit_equation") return ProblemKind::limit_equation(component);
  throw ConfigError("[problem] kind: expected original, rescaled, limit_system or limit_equation");
}

inline std::string kind_word(ProblemKind k) {
  return k.tag == Kind::LimitEquation ? "limit_equation" : to_string(k);
}

}  // namespace detail

/// Parses configuration text on top of the defaults; `origin` names the source in messages.
inline RunConfig parse_config(std::istream& in, const std::string& origin = "config") {
  RunConfig c;
  std::string section, line, kind_name = "rescaled";
  int component = 0;
  bool ell_given = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = detail::trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"problem", "grid", "solver", "study", "radial", "output"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside a section");
    const std::string key = detail::trim(line.substr(0, eq));
    const detail::ConfigReader v(section, key, detail::trim(line.substr(eq + 1)));
    auto unknown = [&] {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "' in [" + section + "]");
    };
    if (section == "problem") {
      if (key == "dim") c.params.dim = v.integer();
      else if (key == "p") c.params.p = v.number();
      else if (key == "ell") c.params.ell = v.integer(), ell_given = true;
      else if (key == "mu") c.params.mu = v.vector();
      else if (key == "lambda") c.params.lambda = v.matrix();
      else if (key == "centers") c.params.centers = v.matrix();
      else if (key == "eps") c.params.eps = v.number();
      else if (key == "kind") kind_name = v.word();
      else if (key == "component") component = v.integer();
      else unknown();
    } else if (section == "grid") {
      if (key == "L") c.grid.L = v.number();
      else if (key == "n") c.grid.n = v.integer();
      else unknown();
    } else if (section == "solver") {
      auto& s = c.solver;
      if (key == "max_iters") s.max_iters = v.integer();
      else if (key == "grad_tol") s.grad_tol = v.number();
      else if (key == "step0") s.step0 = v.number();
      else if (key == "armijo_c") s.armijo_c = v.number();
      else if (key == "armijo_shrink") s.armijo_shrink = v.number();
      else if (key == "seed") s.seed = v.unsigned_integer();
      else if (key == "restarts") s.restarts = v.integer();
      else if (key == "threads") s.threads = v.integer();
      else if (key == "preconditioner") {
        const auto w = v.word();
        if (w == "dst") s.preconditioner = Preconditioner::dst;
        else if (w == "cg") s.preconditioner = Preconditioner::cg;
        else throw ConfigError("[solver] preconditioner: expected dst or cg");
      } else if (key == "cg_tol") s.cg_tol = v.number();
      else if (key == "projection_tol") s.projection_tol = v.number();
      else if (key == "polish_iters") s.polish_iters = v.integer();
      else if (key == "nonneg_tol") s.nonneg_tol = v.number();
      else if (key == "noise") s.noise = v.number();
      else if (key == "coupling_preconditioner") s.coupling_preconditioner = v.boolean();
      else if (key == "coupling_pcg_iters") s.coupling_pcg_iters = v.integer();
      else if (key == "coupling_pcg_tol") s.coupling_pcg_tol = v.number();
      else unknown();
    } else if (section == "study") {
      auto& s = c.study;
      if (key == "mode") {
        const auto w = v.word();
        if (w == "distinct_centers") s.mode = SweepMode::distinct_centers;
        else if (w == "single_core") s.mode = SweepMode::single_core;
        else throw ConfigError("[study] mode: expected distinct_centers or single_core");
      } else if (key == "eps_list") s.eps_list = v.vector();
      else if (key == "lambda_list") s.lambda_list = v.vector();
      else if (key == "deltas") s.deltas = v.vector();
      else if (key == "theta") s.theta = v.number();
      else if (key == "cold_check") s.cold_check = v.boolean();
      else if (key == "radial_n") s.radial_n = v.integer();
      else if (key == "coverage_tol") s.coverage_tol = v.number();
      else unknown();
    } else if (section == "radial") {
      if (key == "mu_list") c.radial.mu_list = v.vector();
      else if (key == "R") c.radial.R = v.number();
      else if (key == "n") c.radial.n = v.integer();
      else unknown();
    } else if (section == "output") {
      if (key == "directory") c.output.directory = v.word();
      else if (key == "dump_fields") c.output.dump_fields = v.boolean();
      else if (key == "emit_plots") c.output.emit_plots = v.boolean();
      else unknown();
    }
  }
  if (!ell_given) c.params.ell = static_cast<int>(c.params.mu.size());
  c.kind = detail::parse_kind(kind_name, component);
  if (const char* dir = std::getenv("NEHARI_OUTPUT_DIR"); dir != nullptr && *dir != '\0') c.output.directory = dir;
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Problems with the configuration that are not parameter hypotheses.
inline std::vector<std::string> check_run_config(const RunConfig& c) {
  auto out = validate(c.solver);
  if (!(c.grid.L > 0.0)) out.emplace_back("grid L must be > 0");
  if (c.grid.n < 3) out.emplace_back("grid n must be >= 3");
  if (!(c.study.theta > 0.0 && c.study.theta < 1.0)) out.emplace_back("study theta must lie in (0, 1)");
  for (double d : c.study.deltas)
    if (!(d > 0.0)) out.emplace_back("study deltas must be positive");
  if (c.radial.n < 4) out.emplace_back("radial n must be >= 4");
  if (!(c.radial.R > 1.0)) out.emplace_back("radial R must be > 1");
  return out;
}

namespace detail {

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + num(v[k]);
  return s + "]";
}

inline std::string nested(const std::vector<std::vector<double>>& m) {
  std::string s = "[";
  for (std::size_t k = 0; k < m.size(); ++k) s += (k ? ", " : "") + list(m[k]);
  return s + "]";
}

}  // namespace detail

/// The resolved configuration in the input format. Execution-only settings
/// (thread count, output directory) are left out so that equal runs produce
/// equal text.
inline std::string to_config_text(const RunConfig& c) {
  using detail::num;
  std::ostringstream o;
  const auto& p = c.params;
  o << "[problem]\n"
    << "dim = " << p.dim << "\np = " << num(p.p) << "\nell = " << p.ell << "\nmu = " << detail::list(p.mu)
    << "\nlambda = " << detail::nested(p.lambda) << "\ncenters = " << detail::nested(p.centers)
    << "\neps = " << num(p.eps) << "\nkind = " << detail::kind_word(c.kind) << "\ncomponent = " << c.kind.component
    << "\n[grid]\nL = " << num(c.grid.L) << "\nn = " << c.grid.n << "\n";
  const auto& s = c.solver;
  o << "[solver]\nmax_iters = " << s.max_iters << "\ngrad_tol = " << num(s.grad_tol) << "\nstep0 = " << num(s.step0)
    << "\narmijo_c = " << num(s.armijo_c) << "\narmijo_shrink = " << num(s.armijo_shrink) << "\nseed = " << s.seed
    << "\nrestarts = " << s.restarts
    << "\npreconditioner = " << (s.preconditioner == Preconditioner::dst ? "dst" : "cg")
    << "\ncg_tol = " << num(s.cg_tol) << "\nprojection_tol = " << num(s.projection_tol)
    << "\npolish_iters = " << s.polish_iters << "\nnonneg_tol = " << num(s.nonneg_tol) << "\nnoise = " << num(s.noise)
    << "\ncoupling_preconditioner = " << (s.coupling_preconditioner ? "true" : "false")
    << "\ncoupling_pcg_iters = " << s.coupling_pcg_iters << "\ncoupling_pcg_tol = " << num(s.coupling_pcg_tol) << "\n";
  const auto& st = c.study;
  o << "[study]\nmode = " << to_string(st.mode) << "\neps_list = " << detail::list(st.eps_list)
    << "\nlambda_list = " << detail::list(st.lambda_list) << "\ndeltas = " << detail::list(st.deltas)
    << "\ntheta = " << num(st.theta) << "\ncold_check = " << (st.cold_check ? "true" : "false")
    << "\nradial_n = " << st.radial_n << "\ncoverage_tol = " << num(st.coverage_tol) << "\n";
  o << "[radial]\nmu_list = " << detail::list(c.radial.mu_list) << "\nR = " << num(c.radial.R)
    << "\nn = " << c.radial.n << "\n";
  o << "[output]\ndump_fields = " << (c.output.dump_fields ? "true" : "false")
    << "\nemit_plots = " << (c.output.emit_plots ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace nehari
