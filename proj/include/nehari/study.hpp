#pragma once

// Experiment harness: rescalings between the original, rescaled and limit
// variables, concentration ratios, ε- and λ-sweeps, decay / sup-location
// checks and the blow-up exponent fit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nehari/radial.hpp"
#include "nehari/solver.hpp"

namespace nehari {

// ---------------------------------------------------------------------------
// Rescalings

namespace detail {

// Multilinear interpolation of src at point s; zero outside the box (Dirichlet).
inline double interpolate(const Field& src, std::span<const double> s) {
  const Grid& g = src.grid;
  const int n = g.dim();
  std::vector<int> i0(n);
  std::vector<double> frac(n);
  for (int d = 0; d < n; ++d) {
    const double xi = (s[d] + g.half_width(d)) / g.h() - 1.0;
    double fl = std::floor(xi);
    double f = xi - fl;
    if (f > 1.0 - 1e-9) {
      fl += 1.0;
      f = 0.0;
    } else if (f < 1e-9) {
      f = 0.0;
    }
    if (fl < -1.0 || fl > g.count(d)) return 0.0;
    i0[d] = static_cast<int>(fl);
    frac[d] = f;
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::size_t node = 0;
    bool inside = true;
    for (int d = 0; d < n && inside; ++d) {
      const int up = (corner >> d) & 1;
      const double wd = up ? frac[d] : 1.0 - frac[d];
      if (wd == 0.0) {
        inside = false;
        break;
      }
      const int idx = i0[d] + up;
      if (idx < 0 || idx >= g.count(d)) {
        inside = false;
        break;
      }
      w *= wd;
      node += static_cast<std::size_t>(idx) * g.stride(d);
    }
    if (inside) acc += w * src[node];
  }
  return acc;
}

inline bool inside_box(const Grid& g, std::span<const double> s) {
  for (int d = 0; d < g.dim(); ++d)
    if (std::abs(s[d]) > g.half_width(d) - 0.5 * g.h()) return false;
  return true;
}

// target(x) = scale * src(a x + b); CoverageError if more than `tol` of
// ∫|src|^{2p} sits at source nodes whose image falls outside the target box.
template <class ToSource, class ToTarget>
Field resample(const Field& src, const Grid& target, double scale, ToSource to_source, ToTarget to_target, double p,
               double tol) {
  const PowerLaw pw(p);
  std::vector<double> x(src.grid.dim()), y(src.grid.dim());
  double total = 0.0, lost = 0.0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double m = pw.abs_2p(src[k]);
    if (m == 0.0) continue;
    total += m;
    src.grid.node_coords(k, x);
    to_target(x, y);
    if (!inside_box(target, y)) lost += m;
  }
  if (total > 0.0 && lost > tol * total)
    throw CoverageError("rescaled field leaves the target grid (lost fraction " + std::to_string(lost / total) + ")");
  Field out(target);
  for (std::size_t k = 0; k < target.size(); ++k) {
    target.node_coords(k, x);
    to_source(x, y);
    out[k] = scale * interpolate(src, y);
  }
  return out;
}

}  // namespace detail

/// u(x) = ε^{1/(p-1)} v(εx), sampled on `target`.
inline Field rescale_v_to_u(const Field& v, double eps, double p, const Grid& target, double coverage_tol = 1e-6) {
  return detail::resample(
      v, target, std::pow(eps, 1.0 / (p - 1)),
      [&](std::span<const double> x, std::span<double> s) {
        for (std::size_t d = 0; d < x.size(); ++d) s[d] = eps * x[d];
      },
      [&](std::span<const double> s, std::span<double> x) {
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = s[d] / eps;
      },
      p, coverage_tol);
}

/// Inverse of rescale_v_to_u: v(y) = ε^{-1/(p-1)} u(y/ε).
inline Field rescale_u_to_v(const Field& u, double eps, double p, const Grid& target, double coverage_tol = 1e-6) {
  return detail::resample(
      u, target, std::pow(eps, -1.0 / (p - 1)),
      [&](std::span<const double> y, std::span<double> s) {
        for (std::size_t d = 0; d < y.size(); ++d) s[d] = y[d] / eps;
      },
      [&](std::span<const double> s, std::span<double> y) {
        for (std::size_t d = 0; d < y.size(); ++d) y[d] = eps * s[d];
      },
      p, coverage_tol);
}

/// w(x) = u(x + center/ε): the rescaled component seen from its own attraction centre.
inline Field rescale_u_to_w(const Field& u, double eps, std::span<const double> center, const Grid& target, double p,
                            double coverage_tol = 1e-6) {
  return detail::resample(
      u, target, 1.0,
      [&](std::span<const double> x, std::span<double> s) {
        for (std::size_t d = 0; d < x.size(); ++d) s[d] = x[d] + center[d] / eps;
      },
      [&](std::span<const double> s, std::span<double> x) {
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = s[d] - center[d] / eps;
      },
      p, coverage_tol);
}

// ---------------------------------------------------------------------------
// Concentration ratios

struct ConcentrationRatio {
  double radius = 0.0;
  double ratio_grad = 0.0;  // share of ∫(|∇f|² + σ²f²) inside the ball
  double ratio_2p = 0.0;    // share of ∫|f|^{2p} inside the ball
};

/// Pointwise |∇f|² from centred differences (zero outside the box).
inline Field gradient_density(const Field& f) {
  const Grid& g = f.grid;
  Field out(g);
  const double inv2h = 0.5 / g.h();
  for (std::size_t k = 0; k < g.size(); ++k) {
    double s = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
      const int i = g.axis_index(k, d);
      const double lo = i > 0 ? f[k - g.stride(d)] : 0.0;
      const double hi = i + 1 < g.count(d) ? f[k + g.stride(d)] : 0.0;
      const double dv = (hi - lo) * inv2h;
      s += dv * dv;
    }
    out[k] = s;
  }
  return out;
}

/// Ratios over balls B_r(center) for each r in `radii`; σ weights the L² part of the energy density.
inline std::vector<ConcentrationRatio> concentration_ratios(const Field& f, std::span<const double> center,
                                                            std::span<const double> radii, double p,
                                                            double sigma = 1.0) {
  Field dens = gradient_density(f);
  Field pow2p(f.grid);
  const PowerLaw pw(p);
  for (std::size_t k = 0; k < f.size(); ++k) {
    dens[k] += sigma * sigma * f[k] * f[k];
    pow2p[k] = pw.abs_2p(f[k]);
  }
  const double total_grad = integrate(dens);
  const double total_2p = integrate(pow2p);
  if (!(total_grad > 0.0) || !(total_2p > 0.0)) throw ZeroDenominator("concentration ratio of a zero field");
  std::vector<ConcentrationRatio> out;
  for (double r : radii) {
    if (!(r > 0.0)) throw ConfigError("concentration radius must be positive");
    out.push_back({r, restrict_ball_integral(dens, center, r) / total_grad,
                   restrict_ball_integral(pow2p, center, r) / total_2p});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise checks

struct DecayResult {
  double kappa = 0.0;          // max of u on the shell 1-h <= |x| <= 1+h
  double max_violation = 0.0;  // max over 1+h <= |x| <= L/2 of u |x|^{N-2} / κ - 1
};

/// Decay bound u(x) <= κ|x|^{2-N} outside the unit ball (limit geometry, centre 0).
inline DecayResult decay_check(const Field& u) {
  const Grid& g = u.grid;
  const double h = g.h();
  const double outer = 0.5 * g.min_half_width();
  if (!(outer > 1.0 + h)) throw GeometryError("decay check needs L/2 > 1 + h");
  const int n = g.dim();
  const Point origin(n, 0.0);
  DecayResult res;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double r = std::sqrt(g.node_radius2(k, origin));
    if (r >= 1.0 - h && r <= 1.0 + h) res.kappa = std::max(res.kappa, u[k]);
  }
  if (!(res.kappa > 0.0)) throw ZeroDenominator("u vanishes on the unit sphere");
  res.max_violation = -1.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double r = std::sqrt(g.node_radius2(k, origin));
    if (r < 1.0 + h || r > outer) continue;
    res.max_violation = std::max(res.max_violation, u[k] * std::pow(r, n - 2) / res.kappa - 1.0);
  }
  return res;
}

struct SupLocation {
  double sup = 0.0;
  std::size_t node = 0;
  bool inside_attraction = false;
};

/// Location of max |u_i| and whether it lies in the open attraction ball of component i.
inline SupLocation sup_location(const Field& u, const Problem& pr, int i) {
  SupLocation s;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (std::abs(u[k]) > s.sup) {
      s.sup = std::abs(u[k]);
      s.node = k;
    }
  const double r = pr.weight_radius();
  s.inside_attraction = u.grid.node_radius2(s.node, pr.weight_center(i)) < r * r;
  return s;
}

inline std::vector<SupLocation> sup_location_check(const SystemState& s) {
  detail::check_state(s);
  std::vector<SupLocation> out;
  for (int i = 0; i < s.size(); ++i) out.push_back(sup_location(s.comps[i], *s.problem, i));
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepMode { distinct_centers, single_core };

inline std::string to_string(SweepMode m) {
  return m == SweepMode::distinct_centers ? "distinct_centers" : "single_core";
}

struct GridConfig {
  double L = 8.0;
  int n = 64;
};

struct StudyConfig {
  SweepMode mode = SweepMode::distinct_centers;
  std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
  std::vector<double> lambda_list{-1.0, -10.0, -100.0, -1000.0};
  /// Concentration radii in original-variable units.
  std::vector<double> deltas{0.25, 0.5, 1.0};
  /// Support threshold relative to sup|u_i|.
  double theta = 1e-3;
  /// Cold-start solve at the last λ row, compared against the warm-started one.
  bool cold_check = true;
  int radial_n = 2048;
  /// Largest share of ∫|u|^{2p} allowed to fall outside the window when extracting w.
  double coverage_tol = 0.05;
};

struct ComponentRecord {
  double energy = 0.0;  // (p-1)/(2p) ‖u_i‖², the share of component i in the level
  std::vector<ConcentrationRatio> ratios;
  double mass_term = 0.0;  // ε² ∫ u_i²
  double norm_v_sq = 0.0;  // ‖v_i‖₁² = ε^{N-2p/(p-1)} ‖u_i‖_ε²
  double w_dist = std::numeric_limits<double>::quiet_NaN();
  SupLocation sup;
  double ball_2p = 0.0;  // μ_i ∫_{attraction ball} |u_i|^{2p}
  double support_volume = 0.0;
};

struct StudyRecord {
  double value = 0.0;  // ε or λ
  double energy_total = std::numeric_limits<double>::quiet_NaN();
  std::vector<ComponentRecord> comps;
  /// ∫|u_i|^p|u_j|^p and d_ij = λ_ij × overlap, full ℓ×ℓ (diagonal unused).
  std::vector<std::vector<double>> overlap;
  std::vector<std::vector<double>> coupling;
  double support_overlap = 0.0;  // Σ_{i<j} |{u_i > θ_i} ∩ {u_j > θ_j}|
  double upper_bound = std::numeric_limits<double>::quiet_NaN();  // d₀ (ε rows) or c_* (λ rows)
  double energy_limit = std::numeric_limits<double>::quiet_NaN();
  double energy_cold = std::numeric_limits<double>::quiet_NaN();
  double stationarity = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string status;
  std::optional<SystemState> state;

  bool ok() const { return status == "converged"; }
};

inline std::vector<std::vector<double>> uniform_lambda(int ell, double lambda) {
  std::vector<std::vector<double>> m(ell, std::vector<double>(ell, 0.0));
  for (int i = 0; i < ell; ++i)
    for (int j = 0; j < ell; ++j)
      if (i != j) m[i][j] = lambda;
  return m;
}

/// Grid for the rescaled problem at ε: the reference cube widened along each axis
/// by the largest |y_{i,d}|/ε, with h adjusted so that the farthest centre lands on
/// the lattice offset of the origin in the reference cube.
inline Grid rescaled_grid(const Params& params, double eps, const GridConfig& gc) {
  const int n = params.dim;
  std::vector<double> reach(n, 0.0);
  double far = 0.0;
  for (const auto& c : params.centers)
    for (int d = 0; d < n; ++d) {
      reach[d] = std::max(reach[d], std::abs(c[d]) / eps);
      far = std::max(far, std::abs(c[d]) / eps);
    }
  const Grid ref = Grid::cube(n, gc.L, gc.n);
  if (far == 0.0) return ref;
  double h = ref.h();
  const double m = std::max(1.0, std::round(far / h));
  h = far / m;
  std::vector<int> counts(n);
  for (int d = 0; d < n; ++d) counts[d] = gc.n + 2 * static_cast<int>(std::ceil(reach[d] / h - 1e-9));
  return Grid::box(h, counts);
}

inline Params with_eps(Params p, double eps) {
  p.eps = eps;
  return p;
}

namespace detail {

inline std::string error_status(const Error& e) { return std::string("error:") + e.kind(); }

inline double support_intersection(const Field& a, const Field& b, double ta, double tb) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] > ta && b[k] > tb) ++count;
  return count * a.grid.cell_volume();
}

// Diagnostics shared by both sweeps, evaluated at a Nehari point.
inline void fill_record(StudyRecord& rec, const SolveReport& rep, const StudyConfig& sc, bool eps_row) {
  const Problem& pr = *rep.state.problem;
  const int ell = pr.components();
  const double p = pr.p();
  const double sigma = pr.mass_eps();
  const auto coeffs = nehari_coeffs(rep.state);
  const PowerLaw pw(p);
  rec.energy_total = rep.energy;
  rec.stationarity = rep.stationarity;
  rec.iterations = rep.iterations;
  rec.status = to_string(rep.status);
  rec.overlap.assign(ell, std::vector<double>(ell, 0.0));
  rec.coupling.assign(ell, std::vector<double>(ell, 0.0));
  for (int i = 0; i < ell; ++i)
    for (int j = 0; j < ell; ++j)
      if (i != j) {
        rec.coupling[i][j] = coeffs.d[i][j];
        Field prod(pr.grid());
        for (std::size_t k = 0; k < prod.size(); ++k)
          prod[k] = pw.abs_p(rep.state.comps[i][k]) * pw.abs_p(rep.state.comps[j][k]);
        rec.overlap[i][j] = integrate(prod);
      }
  rec.comps.assign(ell, {});
  for (int i = 0; i < ell; ++i) {
    const Field& u = rep.state.comps[i];
    auto& c = rec.comps[i];
    c.energy = (p - 1) / (2 * p) * coeffs.a[i];
    c.mass_term = sigma * sigma * integrate_product(u, u);
    c.sup = sup_location(u, pr, i);
    Field ball(pr.grid());
    for (std::size_t k = 0; k < ball.size(); ++k) ball[k] = pw.abs_2p(u[k]);
    c.ball_2p = pr.mu(i) * restrict_ball_integral(ball, pr.weight_center(i), pr.weight_radius());
    const double thr = sc.theta * c.sup.sup;
    c.support_volume = support_intersection(u, u, thr, thr);
    if (eps_row) {
      const double eps = pr.params().eps;
      std::vector<double> radii;
      for (double d : sc.deltas) radii.push_back(d / eps);
      c.ratios = concentration_ratios(u, pr.weight_center(i), radii, p, sigma);
      const int n = pr.grid().dim();
      c.norm_v_sq = std::pow(eps, n - 2 * p / (p - 1)) * coeffs.a[i];
    }
  }
  rec.support_overlap = 0.0;
  for (int i = 0; i < ell; ++i)
    for (int j = i + 1; j < ell; ++j)
      rec.support_overlap += support_intersection(rep.state.comps[i], rep.state.comps[j], sc.theta * rec.comps[i].sup.sup,
                                                  sc.theta * rec.comps[j].sup.sup);
}

// Radial profile W(|x|) sampled on a grid (linear in r, 0 beyond R).
inline Field sample_radial(const Grid& g, const RadialResult& r) {
  const double dr = r.radii[1] - r.radii[0];
  const double R = r.radii.back() + 0.5 * dr;
  return sample(g, [&](std::span<const double> x) {
    double s2 = 0.0;
    for (double c : x) s2 += c * c;
    const double s = std::sqrt(s2);
    if (s >= R) return 0.0;
    const double xi = s / dr - 0.5;
    if (xi <= 0.0) return r.profile.front();
    const std::size_t k = static_cast<std::size_t>(xi);
    if (k + 1 >= r.profile.size()) return r.profile.back() * (R - s) / (0.5 * dr);
    const double f = xi - k;
    return (1 - f) * r.profile[k] + f * r.profile[k + 1];
  });
}

inline double relative_l2p_distance(const Field& a, const Field& b, double p) {
  const PowerLaw pw(p);
  Field diff(a.grid), ref(a.grid);
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff[k] = pw.abs_2p(a[k] - b[k]);
    ref[k] = pw.abs_2p(b[k]);
  }
  const double den = integrate(ref);
  if (!(den > 0.0)) throw ZeroDenominator("reference profile vanishes");
  return std::pow(integrate(diff) / den, 1.0 / (2 * p));
}

}  // namespace detail

/// ε-sweep of the rescaled system. Rows whose solve fails carry an "error:<kind>" status.
inline std::vector<StudyRecord> sweep_eps(const Params& params, const GridConfig& gc, const SolverConfig& cfg,
                                          const StudyConfig& sc) {
  for (std::size_t k = 0; k < sc.eps_list.size(); ++k) {
    if (!(sc.eps_list[k] > 0.0)) throw ConfigError("eps_list entries must be positive");
    if (k > 0 && !(sc.eps_list[k] < sc.eps_list[k - 1])) throw ConfigError("eps_list must be decreasing");
  }
  const int ell = params.ell;
  if (sc.mode == SweepMode::single_core) {
    for (const auto& c : params.centers)
      for (double x : c)
        if (x != 0.0) throw ConfigError("single_core mode needs every centre at the origin");
  } else {
    for (int i = 0; i < ell; ++i)
      for (int j = i + 1; j < ell; ++j)
        if (params.centers[i] == params.centers[j]) throw ConfigError("distinct_centers mode needs distinct centres");
  }
  const double p = params.p;

  // Reference limit objects.
  std::map<double, RadialResult> radial;
  std::optional<SolveReport> limit;
  double energy_limit = 0.0;
  const Grid ref_grid = Grid::cube(params.dim, gc.L, gc.n);
  if (sc.mode == SweepMode::distinct_centers) {
    for (int i = 0; i < ell; ++i) {
      if (!radial.count(params.mu[i]))
        radial.emplace(params.mu[i], solve_radial_limit_equation(params.mu[i], p, params.dim, gc.L, sc.radial_n, cfg));
      energy_limit += radial.at(params.mu[i]).kappa;
    }
  } else {
    Params lp = params;
    lp.eps = 0.0;
    limit = solve(make_problem(lp, ProblemKind::limit_system(), ref_grid), cfg);
    energy_limit = limit->energy;
  }

  std::vector<StudyRecord> rows;
  for (double eps : sc.eps_list) {
    StudyRecord rec;
    rec.value = eps;
    rec.energy_limit = energy_limit;
    try {
      const Grid grid = rescaled_grid(params, eps, gc);
      auto problem = make_problem(with_eps(params, eps), ProblemKind::rescaled(), grid);
      rec.upper_bound = test_function_energy(problem);
      const SolveReport rep = solve(problem, cfg);
      detail::fill_record(rec, rep, sc, true);
      for (int i = 0; i < ell; ++i) {
        if (sc.mode == SweepMode::distinct_centers) {
          const Grid wgrid = Grid::box(grid.h(), std::vector<int>(params.dim, gc.n));
          const Field w = rescale_u_to_w(rep.state.comps[i], eps, params.centers[i], wgrid, p, sc.coverage_tol);
          const Field ref = detail::sample_radial(wgrid, radial.at(params.mu[i]));
          rec.comps[i].w_dist = detail::relative_l2p_distance(w, ref, p);
        } else {
          const Field w = rescale_u_to_w(rep.state.comps[i], eps, params.centers[i], grid, p, sc.coverage_tol);
          rec.comps[i].w_dist = detail::relative_l2p_distance(w, limit->state.comps[i], p);
        }
      }
      rec.state = rep.state;
    } catch (const Error& e) {
      rec.status = detail::error_status(e);
    }
    rows.push_back(std::move(rec));
  }
  return rows;
}

/// λ-sweep of the limit system, each row warm-started from the previous solution.
inline std::vector<StudyRecord> sweep_lambda(const Params& params0, const GridConfig& gc, const SolverConfig& cfg,
                                             const StudyConfig& sc) {
  for (std::size_t k = 0; k < sc.lambda_list.size(); ++k) {
    if (!(sc.lambda_list[k] < 0.0)) throw ConfigError("lambda_list entries must be negative");
    if (k > 0 && !(std::abs(sc.lambda_list[k]) > std::abs(sc.lambda_list[k - 1])))
      throw ConfigError("lambda_list must increase in magnitude");
  }
  if (params0.ell < 2) throw ConfigError("lambda sweep needs at least two components");
  const Grid grid = Grid::cube(params0.dim, gc.L, gc.n);
  Params base = params0;
  base.eps = 0.0;
  for (auto& c : base.centers) std::fill(c.begin(), c.end(), 0.0);
  base.lambda = uniform_lambda(base.ell, sc.lambda_list.empty() ? -1.0 : sc.lambda_list.front());
  const double c_star = test_function_energy(make_problem(base, ProblemKind::limit_system(), grid));

  std::vector<StudyRecord> rows;
  std::optional<SystemState> warm;
  for (std::size_t row = 0; row < sc.lambda_list.size(); ++row) {
    const double lam = sc.lambda_list[row];
    StudyRecord rec;
    rec.value = lam;
    rec.upper_bound = c_star;
    try {
      Params pl = base;
      pl.lambda = uniform_lambda(pl.ell, lam);
      auto problem = make_problem(pl, ProblemKind::limit_system(), grid);
      SolveReport rep;
      if (warm) {
        rep = minimize(SystemState{problem, warm->comps}, cfg);
        rep.seed = cfg.seed;
      } else {
        rep = solve(problem, cfg);
      }
      detail::fill_record(rec, rep, sc, false);
      if (sc.cold_check && row + 1 == sc.lambda_list.size()) rec.energy_cold = warm ? solve(problem, cfg).energy : rep.energy;
      warm = rep.state;
      rec.state = rep.state;
    } catch (const Error& e) {
      rec.status = detail::error_status(e);
    }
    rows.push_back(std::move(rec));
  }
  return rows;
}

/// N - 2p/(p-1): exponent of ε relating ‖v‖₁² to ‖u‖_ε².
inline double expected_blowup_slope(int dim, double p) { return dim - 2 * p / (p - 1); }

/// Least-squares slope of log ‖v_i‖₁² against log ε over the converged rows.
inline std::vector<double> blowup_exponent_fit(const std::vector<StudyRecord>& rows) {
  std::vector<const StudyRecord*> good;
  for (const auto& r : rows)
    if (r.ok()) good.push_back(&r);
  if (good.size() < 3) throw ConfigError("exponent fit needs at least three converged rows");
  const std::size_t ell = good.front()->comps.size();
  std::vector<double> slopes(ell);
  for (std::size_t i = 0; i < ell; ++i) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(good.size());
    for (const auto* r : good) {
      const double x = std::log(r->value), y = std::log(r->comps[i].norm_v_sq);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    slopes[i] = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return slopes;
}

}  // namespace nehari
