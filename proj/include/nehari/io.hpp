#pragma once

// Output artifacts: CSV tables with an embedded configuration header, field
// dumps and plot scripts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nehari/config.hpp"

namespace nehari {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline std::string fmt_delta(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return buf;
}

inline std::string pair_suffix(int i, int j) { return std::to_string(i + 1) + std::to_string(j + 1); }

inline void pairs(int ell, std::vector<std::pair<int, int>>& out) {
  for (int i = 0; i < ell; ++i)
    for (int j = i + 1; j < ell; ++j) out.emplace_back(i, j);
}

class CsvRow {
 public:
  CsvRow& operator<<(double v) { return add(num(v)); }
  CsvRow& operator<<(int v) { return add(std::to_string(v)); }
  CsvRow& operator<<(std::size_t v) { return add(std::to_string(v)); }
  CsvRow& operator<<(bool v) { return add(v ? "1" : "0"); }
  CsvRow& operator<<(const std::string& v) { return add(v); }
  const std::string& str() const { return s_; }

 private:
  CsvRow& add(const std::string& v) {
    if (!first_) s_ += ',';
    s_ += v;
    first_ = false;
    return *this;
  }
  std::string s_;
  bool first_ = true;
};

}  // namespace detail

/// '#'-prefixed header: tool name, schema version and the resolved configuration.
inline std::string csv_preamble(const std::string& what, const RunConfig& c) {
  std::ostringstream o;
  o << "# nehari " << what << "\n# schema_version = " << kSchemaVersion << "\n";
  std::istringstream cfg(to_config_text(c));
  std::string line;
  while (std::getline(cfg, line)) o << "# " << line << "\n";
  return o.str();
}

inline std::string sweep_eps_csv(const std::vector<StudyRecord>& rows, const RunConfig& c) {
  const int ell = c.params.ell;
  std::vector<std::pair<int, int>> pr;
  detail::pairs(ell, pr);
  std::ostringstream o;
  o << csv_preamble("sweep-eps", c);
  o << "eps,i,energy_total,energy_i";
  for (double d : c.study.deltas) o << ",ratio_grad_d" << detail::fmt_delta(d);
  for (double d : c.study.deltas) o << ",ratio_2p_d" << detail::fmt_delta(d);
  for (auto [i, j] : pr) o << ",overlap_" << detail::pair_suffix(i, j);
  o << ",mass_term_i,w_dist_i,d0,norm_v_sq_i,energy_limit,coupling_total,stationarity,iterations,status\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t nd = c.study.deltas.size();
  for (const auto& r : rows) {
    for (int i = 0; i < ell; ++i) {
      const bool have = static_cast<int>(r.comps.size()) == ell;
      const ComponentRecord empty;
      const auto& cr = have ? r.comps[i] : empty;
      detail::CsvRow row;
      row << r.value << (i + 1) << r.energy_total << (have ? cr.energy : nan);
      for (std::size_t k = 0; k < nd; ++k) row << (have ? cr.ratios[k].ratio_grad : nan);
      for (std::size_t k = 0; k < nd; ++k) row << (have ? cr.ratios[k].ratio_2p : nan);
      double coupling = have ? 0.0 : nan;
      for (auto [a, b] : pr) {
        row << (have ? r.overlap[a][b] : nan);
        if (have) coupling += std::abs(r.coupling[a][b]);
      }
      row << (have ? cr.mass_term : nan) << (have ? cr.w_dist : nan) << r.upper_bound << (have ? cr.norm_v_sq : nan)
          << r.energy_limit << coupling << r.stationarity << r.iterations << r.status;
      o << row.str() << "\n";
    }
  }
  return o.str();
}

inline std::string sweep_lambda_csv(const std::vector<StudyRecord>& rows, const RunConfig& c) {
  const int ell = c.params.ell;
  std::vector<std::pair<int, int>> pr;
  detail::pairs(ell, pr);
  std::ostringstream o;
  o << csv_preamble("sweep-lambda", c);
  o << "lambda,i,energy_total";
  for (auto [i, j] : pr) o << ",overlap_" << detail::pair_suffix(i, j);
  for (auto [i, j] : pr) o << ",lam_times_overlap_" << detail::pair_suffix(i, j);
  o << ",sup_i,sup_inside_i,support_overlap_theta,c_star,energy_cold,ball_2p_i,stationarity,iterations,status\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    const bool have = static_cast<int>(r.comps.size()) == ell;
    for (int i = 0; i < ell; ++i) {
      detail::CsvRow row;
      row << r.value << (i + 1) << r.energy_total;
      for (auto [a, b] : pr) row << (have ? r.overlap[a][b] : nan);
      for (auto [a, b] : pr) row << (have ? std::abs(r.value) * r.overlap[a][b] : nan);
      if (have)
        row << r.comps[i].sup.sup << r.comps[i].sup.inside_attraction;
      else
        row << nan << std::string("nan");
      row << (have ? r.support_overlap : nan) << r.upper_bound << r.energy_cold << (have ? r.comps[i].ball_2p : nan)
          << r.stationarity << r.iterations << r.status;
      o << row.str() << "\n";
    }
  }
  return o.str();
}

inline std::string solve_csv(const SolveReport& rep, const RunConfig& c) {
  std::ostringstream o;
  o << csv_preamble("solve", c);
  o << "kind,i,energy,energy_i,norm_i,t_i,sup_i,sup_inside_i,stationarity,iterations,status,nonnegative,"
       "projectable_throughout,abs_energy_shift,seed\n";
  const double p = rep.state.problem->p();
  const auto sups = sup_location_check(rep.state);
  for (int i = 0; i < rep.state.size(); ++i) {
    detail::CsvRow row;
    row << detail::kind_word(c.kind) << (i + 1) << rep.energy << (p - 1) / (2 * p) * rep.norms[i] * rep.norms[i]
        << rep.norms[i] << rep.t[i] << sups[i].sup << sups[i].inside_attraction << rep.stationarity << rep.iterations
        << to_string(rep.status) << rep.nonnegative << rep.projectable_throughout << rep.abs_energy_shift
        << static_cast<std::size_t>(rep.seed);
    o << row.str() << "\n";
  }
  return o.str();
}

inline std::string history_csv(const SolveReport& rep, const RunConfig& c) {
  std::ostringstream o;
  o << csv_preamble("solve-history", c) << "iter,energy,grad_norm\n";
  for (const auto& h : rep.history) {
    detail::CsvRow row;
    row << h.iter << h.energy << h.grad_norm;
    o << row.str() << "\n";
  }
  return o.str();
}

struct RadialRow {
  double mu = 0.0;
  RadialResult result;
};

inline std::string radial_csv(const std::vector<RadialRow>& rows, const RunConfig& c) {
  std::ostringstream o;
  o << csv_preamble("oracle-radial", c) << "mu,kappa,kappa_from_scaling,scaling_rel_error,w0,stationarity,iterations,status\n";
  const double p = c.params.p;
  for (const auto& r : rows) {
    const double pred = rows.front().result.kappa * std::pow(r.mu / rows.front().mu, -1.0 / (p - 1));
    detail::CsvRow row;
    row << r.mu << r.result.kappa << pred << std::abs(r.result.kappa - pred) / pred << r.result.profile.front()
        << r.result.stationarity << r.result.iterations << to_string(r.result.status);
    o << row.str() << "\n";
  }
  return o.str();
}

inline std::string radial_profile_csv(const RadialRow& r, const RunConfig& c) {
  std::ostringstream o;
  o << csv_preamble("oracle-radial-profile", c) << "r,w\n";
  for (std::size_t k = 0; k < r.result.radii.size(); ++k) {
    detail::CsvRow row;
    row << r.result.radii[k] << r.result.profile[k];
    o << row.str() << "\n";
  }
  return o.str();
}

/// Header "dim n L kind component", then node values in lexicographic order.
/// Non-cubic boxes write n and L as comma lists.
inline std::string field_dump(const Field& f, ProblemKind kind, int component) {
  const Grid& g = f.grid;
  std::ostringstream o;
  o << g.dim() << ' ';
  if (g.is_cubic()) {
    o << g.count(0) << ' ' << detail::num(g.half_width(0));
  } else {
    for (int d = 0; d < g.dim(); ++d) o << (d ? "," : "") << g.count(d);
    o << ' ';
    for (int d = 0; d < g.dim(); ++d) o << (d ? "," : "") << detail::num(g.half_width(d));
  }
  o << ' ' << detail::kind_word(kind) << ' ' << component << "\n";
  for (double v : f.values) o << detail::num(v) << "\n";
  return o.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

/// Matplotlib script for a sweep CSV; the artifact itself does no rendering.
inline std::string plot_script(const std::string& csv_name, bool eps_sweep) {
  std::ostringstream o;
  o << "import sys\nimport pandas as pd\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n"
    << "df = pd.read_csv('" << csv_name << "', comment='#')\n";
  if (eps_sweep) {
    o << "fig, ax = plt.subplots(1, 3, figsize=(13, 4))\n"
         "for i, g in df.groupby('i'):\n"
         "    ax[0].loglog(g['eps'], g['energy_i'], 'o-', label=f'u_{i}')\n"
         "    ratio = [c for c in df.columns if c.startswith('ratio_2p_d')]\n"
         "    for c in ratio:\n"
         "        ax[1].semilogx(g['eps'], g[c], 'o-', label=f'{c}, u_{i}')\n"
         "    ax[2].loglog(g['eps'], g['mass_term_i'], 'o-', label=f'u_{i}')\n"
         "ax[0].set_title('energy share')\nax[1].set_title('concentration ratio')\nax[2].set_title('mass term')\n"
         "for a in ax:\n    a.set_xlabel('eps')\n    a.legend(fontsize=7)\n";
  } else {
    o << "fig, ax = plt.subplots(1, 2, figsize=(9, 4))\n"
         "first = df[df['i'] == 1]\n"
         "ov = [c for c in df.columns if c.startswith('overlap_')]\n"
         "for c in ov:\n"
         "    ax[0].loglog(-first['lambda'], first[c], 'o-', label=c)\n"
         "ax[1].semilogx(-first['lambda'], first['energy_total'], 'o-', label='c_0')\n"
         "ax[1].semilogx(-first['lambda'], first['c_star'], '--', label='c_*')\n"
         "for a in ax:\n    a.set_xlabel('|lambda|')\n    a.legend()\n";
  }
  o << "fig.tight_layout()\nfig.savefig(sys.argv[1] if len(sys.argv) > 1 else '" << csv_name
    << ".png', dpi=120)\n";
  return o.str();
}

}  // namespace nehari
