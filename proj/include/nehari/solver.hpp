#pragma once

// Least-energy solutions on the grid: initial bumps, the grid space adapter
// for the sphere descent, and the minimize / solve drivers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nehari/descent.hpp"
#include "nehari/dst.hpp"
#include "nehari/energy.hpp"
#include "nehari/parallel.hpp"

namespace nehari {

enum class Preconditioner { dst, cg };

struct SolverConfig {
  int max_iters = 3000;
  double grad_tol = 1e-6;
  double step0 = 1.0;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  std::uint64_t seed = 1;
  int restarts = 1;
  int threads = 1;
  Preconditioner preconditioner = Preconditioner::dst;
  double cg_tol = 1e-12;
  double projection_tol = 1e-10;
  /// Iteration budget of the descent rerun after taking |u|.
  int polish_iters = 500;
  /// Relative energy change after |u| above which the state is flagged.
  double nonneg_tol = 1e-6;
  /// Amplitude of the multiplicative random perturbation of the initial bumps.
  double noise = 0.05;
  /// Add the coupling part of the Hessian to the preconditioner of coupled systems
  /// (truncated PCG on -Δ + σ² + V_i); stationarity is still measured in H^{-1}.
  bool coupling_preconditioner = true;
  int coupling_pcg_iters = 8;
  double coupling_pcg_tol = 1e-2;
};

inline std::vector<std::string> validate(const SolverConfig& c) {
  std::vector<std::string> v;
  if (!(c.grad_tol > 0.0)) v.emplace_back("grad_tol must be > 0");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 1.0)) v.emplace_back("armijo_c must lie in (0, 1)");
  if (!(c.armijo_shrink > 0.0 && c.armijo_shrink < 1.0)) v.emplace_back("armijo_shrink must lie in (0, 1)");
  if (!(c.step0 > 0.0)) v.emplace_back("step0 must be > 0");
  if (c.max_iters < 0) v.emplace_back("max_iters must be >= 0");
  if (c.restarts < 1) v.emplace_back("restarts must be >= 1");
  if (c.threads < 1) v.emplace_back("threads must be >= 1");
  if (c.coupling_pcg_iters < 1) v.emplace_back("coupling_pcg_iters must be >= 1");
  if (!(c.coupling_pcg_tol > 0.0 && c.coupling_pcg_tol < 1.0)) v.emplace_back("coupling_pcg_tol must lie in (0, 1)");
  return v;
}

inline DescentOptions descent_options(const SolverConfig& c, int max_iters) {
  DescentOptions o;
  o.max_iters = max_iters;
  o.grad_tol = c.grad_tol;
  o.step0 = c.step0;
  o.armijo_c = c.armijo_c;
  o.armijo_shrink = c.armijo_shrink;
  o.projection_tol = c.projection_tol;
  return o;
}

/// Grid discretisation seen by the sphere descent.
class GridSpace {
 public:
  using Vec = Field;

  GridSpace(std::shared_ptr<const Problem> problem, const SolverConfig& cfg)
      : problem_(std::move(problem)),
        threads_(cfg.threads),
        kind_(cfg.preconditioner),
        cg_tol_(cfg.cg_tol),
        pcg_iters_(cfg.coupling_pcg_iters),
        pcg_tol_(cfg.coupling_pcg_tol) {
    if (kind_ == Preconditioner::dst)
      dst_ = std::make_shared<DstHelmholtz>(problem_->grid(), problem_->mass_eps());
    for (int i = 0; i < components(); ++i)
      for (int j = 0; j < components(); ++j) coupled_ = coupled_ || (cfg.coupling_preconditioner && problem_->lambda(i, j) != 0.0);
  }

  int components() const { return problem_->components(); }
  double p() const { return problem_->p(); }
  const Problem& problem() const { return *problem_; }

  double inner(const Field& f, const Field& g) const { return inner_h1(f, g, problem_->mass_eps()); }
  double pairing(const Field& f, const Field& g) const { return integrate_product(f, g); }

  NehariCoeffs coefficients(std::span<const Field> comps) const { return nehari_coeffs(*problem_, comps); }

  std::vector<Field> gradients(std::span<const Field> comps) const {
    const auto pw = detail::abs_p_fields(*problem_, comps);
    std::vector<Field> out(comps.size());
    parallel_for(static_cast<int>(comps.size()), threads_,
                 [&](int i) { out[i] = grad_component(*problem_, comps, i, &pw); });
    return out;
  }

  Field precondition(const Field& rhs) const {
    if (dst_) return dst_->solve(rhs);
    return helmholtz_solve(rhs, problem_->mass_eps(), cg_tol_);
  }

  std::vector<Field> precondition(std::span<const Field> rhs) const {
    std::vector<Field> out(rhs.size());
    parallel_for(static_cast<int>(rhs.size()), threads_, [&](int i) { out[i] = precondition(rhs[i]); });
    return out;
  }

  /// Descent directions (-Δ + σ² + V_i)^{-1} G_i, V_i = (p-1) Σ_j |λ_ij| |z_j|^p |z_i|^{p-2}
  /// from the coupling Hessian at z; nullopt for uncoupled problems.
  std::optional<std::vector<Field>> direction(std::span<const Field> G, std::span<const Field> z) const {
    if (!coupled_) return std::nullopt;
    const Problem& pr = *problem_;
    const int ell = components();
    const double p = pr.p();
    const auto pw = detail::abs_p_fields(pr, z);
    std::vector<Field> out(G.size());
    parallel_for(ell, threads_, [&](int i) {
      double sup = 0.0;
      for (double v : z[i].values) sup = std::max(sup, std::abs(v));
      const double floor = 1e-3 * sup;
      std::vector<double> V(z[i].size(), 0.0);
      for (std::size_t k = 0; k < V.size(); ++k) {
        double s = 0.0;
        for (int j = 0; j < ell; ++j)
          if (j != i) s += std::abs(pr.lambda(i, j)) * pw[j][k];
        if (s != 0.0) V[k] = (p - 1) * s * std::pow(std::max(std::abs(z[i][k]), floor), p - 2);
      }
      out[i] = shifted_solve(G[i], V);
    });
    return out;
  }

 private:
  std::shared_ptr<const Problem> problem_;
  int threads_;
  Preconditioner kind_;
  double cg_tol_;
  std::shared_ptr<const DstHelmholtz> dst_;
  int pcg_iters_;
  double pcg_tol_;
  bool coupled_ = false;

  // Truncated PCG for (-Δ + σ² + V) x = b preconditioned by the Helmholtz solve.
  // Started from zero, every iterate x satisfies <b, x> > 0.
  Field shifted_solve(const Field& b, const std::vector<double>& V) const {
    const Grid& grid = b.grid;
    const std::size_t n = grid.size();
    const double e2 = problem_->mass_eps() * problem_->mass_eps();
    auto dot = [&](const Field& a, const Field& c) {
      return pairwise_sum(0, n, [&](std::size_t k) { return a[k] * c[k]; });
    };
    Field x(grid), r = b, ap(grid);
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) return x;
    Field zr = precondition(r);
    Field d = zr;
    double rz = dot(r, zr);
    for (int it = 0; it < pcg_iters_; ++it) {
      apply_neg_laplacian(grid, d.values, ap.values);
      for (std::size_t k = 0; k < n; ++k) ap[k] += (e2 + V[k]) * d[k];
      const double alpha = rz / dot(d, ap);
      for (std::size_t k = 0; k < n; ++k) {
        x[k] += alpha * d[k];
        r[k] -= alpha * ap[k];
      }
      if (std::sqrt(dot(r, r)) <= pcg_tol_ * bnorm) break;
      zr = precondition(r);
      const double rz_new = dot(r, zr);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < n; ++k) d[k] = zr[k] + beta * d[k];
    }
    return x;
  }
};

struct SolveReport {
  SystemState state;  // on the Nehari set
  std::vector<double> t;
  double energy = 0.0;
  std::vector<double> norms;  // ‖u_i‖_ε of the Nehari point
  double stationarity = 0.0;
  int iterations = 0;
  std::vector<HistoryEntry> history;
  DescentStatus status = DescentStatus::max_iters;
  bool nonnegative = false;
  bool projectable_throughout = true;
  /// |J(|u|) - J(u)| / |J(u)| exceeded SolverConfig::nonneg_tol.
  bool abs_changed_energy = false;
  double abs_energy_shift = 0.0;
  std::uint64_t seed = 0;

  bool converged() const { return status == DescentStatus::converged; }
};

namespace detail {

inline double mollifier(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

/// Tensor bump Π_d φ((x_d - c_d)/r).
inline double tensor_bump(std::span<const double> x, std::span<const double> c, double r) {
  double v = 1.0;
  for (std::size_t d = 0; d < x.size() && v != 0.0; ++d) v *= mollifier((x[d] - c[d]) / r);
  return v;
}

struct BumpSite {
  Point center;
  double half_width;
};

/// One cube-shaped support per component, inside that component's attraction
/// ball; components sharing a ball get disjoint sub-cubes on a circle of
/// radius R/2 in the (x_0, x_1) plane.
inline std::vector<BumpSite> bump_sites(const Problem& pr) {
  const int ell = pr.components();
  const int n = pr.grid().dim();
  const double radius = pr.weight_radius();
  std::vector<int> group(ell, -1);
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < ell; ++i) {
    if (group[i] >= 0) continue;
    group[i] = static_cast<int>(groups.size());
    groups.push_back({i});
    const Point ci = pr.weight_center(i);
    for (int j = i + 1; j < ell; ++j) {
      const Point cj = pr.weight_center(j);
      double dist2 = 0.0;
      for (int d = 0; d < n; ++d) dist2 += (ci[d] - cj[d]) * (ci[d] - cj[d]);
      if (dist2 < 1e-24 * (1.0 + radius * radius)) {
        group[j] = group[i];
        groups.back().push_back(j);
      }
    }
  }
  std::vector<BumpSite> sites(ell);
  for (const auto& members : groups) {
    const int k = static_cast<int>(members.size());
    const Point c = pr.weight_center(members[0]);
    if (k == 1) {
      sites[members[0]] = {c, radius / std::sqrt(static_cast<double>(n))};
      continue;
    }
    const double rho = 0.5 * radius;
    const double chord = 2.0 * rho * std::sin(std::numbers::pi / k);
    const double r = std::min(chord / (2.0 * std::sqrt(2.0)), (radius - rho) / std::sqrt(static_cast<double>(n)));
    for (int m = 0; m < k; ++m) {
      Point s = c;
      const double th = 2.0 * std::numbers::pi * m / k;
      s[0] += rho * std::cos(th);
      s[1] += rho * std::sin(th);
      sites[members[m]] = {s, r};
    }
  }
  return sites;
}

inline double uniform_pm1(std::mt19937_64& rng) {
  // 53 random bits mapped to [-1, 1), independent of the standard library's distributions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace detail

/// Unscaled bumps at the bump sites (no noise, not normalised).
inline SystemState bump_state(std::shared_ptr<const Problem> problem) {
  const Problem& pr = *problem;
  const Grid& grid = pr.grid();
  const double radius = pr.weight_radius();
  for (int i = 0; i < pr.components(); ++i)
    if (!grid.contains_ball(pr.weight_center(i), radius))
      throw GeometryError("attraction ball of component " + std::to_string(i) + " does not fit in the grid box");
  const auto sites = detail::bump_sites(pr);
  SystemState s{problem, {}};
  for (int i = 0; i < pr.components(); ++i) {
    const auto& site = sites[i];
    s.comps.push_back(
        sample(grid, [&](std::span<const double> x) { return detail::tensor_bump(x, site.center, site.half_width); }));
    if (s.comps.back().is_zero())
      throw GeometryError("grid too coarse to resolve the initial bump of component " + std::to_string(i));
  }
  return s;
}

/// Smooth compactly supported bumps inside the attraction balls, pairwise
/// disjoint, perturbed multiplicatively from `seed` and normalised to ‖u_i‖ = 1.
inline SystemState init_bumps(std::shared_ptr<const Problem> problem, std::uint64_t seed, double noise = 0.05) {
  SystemState s = bump_state(problem);
  std::mt19937_64 rng(seed);
  const double sigma = problem->mass_eps();
  for (auto& f : s.comps) {
    for (double& v : f.values) {
      const double xi = detail::uniform_pm1(rng);
      if (v != 0.0) v *= 1.0 + noise * xi;
    }
    const double n = norm_h1(f, sigma);
    for (double& v : f.values) v /= n;
  }
  return s;
}

namespace detail {

inline SolveReport make_report(const std::shared_ptr<const Problem>& problem, DescentResult<Field>&& r) {
  SolveReport rep;
  rep.state = SystemState{problem, std::move(r.sphere)};
  for (int i = 0; i < rep.state.size(); ++i)
    for (double& v : rep.state.comps[i].values) v *= r.t[i];
  rep.t = r.t;
  rep.energy = r.energy;
  rep.stationarity = r.stationarity;
  rep.iterations = r.iterations;
  rep.history = std::move(r.history);
  rep.status = r.status;
  rep.projectable_throughout = r.projectable_throughout;
  const double sigma = problem->mass_eps();
  for (const auto& c : rep.state.comps) rep.norms.push_back(norm_h1(c, sigma));
  rep.nonnegative = std::all_of(rep.state.comps.begin(), rep.state.comps.end(),
                                [](const Field& f) { return f.nonnegative(); });
  return rep;
}

}  // namespace detail

/// Descends Ψ from state0, then replaces every component by |u_i| and reruns a
/// short descent; the discrete energy shift caused by |·| is reported.
inline SolveReport minimize(const SystemState& state0, const SolverConfig& config) {
  detail::check_state(state0);
  const GridSpace space(state0.problem, config);
  auto first = riemannian_descent(space, state0.comps, descent_options(config, config.max_iters));
  const double before = first.energy;
  const int iters = first.iterations;
  auto history = first.history;
  const bool projectable = first.projectable_throughout;

  std::vector<Field> abs_dirs = first.sphere;
  for (auto& f : abs_dirs)
    for (double& v : f.values) v = std::abs(v);
  auto second = riemannian_descent(space, abs_dirs, descent_options(config, config.polish_iters));
  const double after_abs = second.history.front().energy;
  for (auto h : second.history) {
    if (h.iter == 0) continue;
    h.iter += iters;
    history.push_back(h);
  }
  const int total = iters + second.iterations;
  // Short rerun keeps its own status unless the main run had not converged.
  const DescentStatus status = (first.status == DescentStatus::converged || second.status == DescentStatus::converged)
                                   ? second.status
                                   : first.status;
  SolveReport rep = detail::make_report(state0.problem, std::move(second));
  rep.iterations = total;
  rep.history = std::move(history);
  rep.status = status;
  rep.projectable_throughout = projectable && rep.projectable_throughout;
  rep.abs_energy_shift = std::abs(after_abs - before) / std::max(std::abs(before), 1e-300);
  rep.abs_changed_energy = rep.abs_energy_shift > config.nonneg_tol;
  return rep;
}

/// minimize() from `restarts` seeded bump initialisations; keeps the lowest energy.
inline SolveReport solve(std::shared_ptr<const Problem> problem, const SolverConfig& config) {
  std::optional<SolveReport> best;
  for (int r = 0; r < config.restarts; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    auto rep = minimize(init_bumps(problem, seed, config.noise), config);
    rep.seed = seed;
    if (!best || rep.energy < best->energy) best = std::move(rep);
  }
  return std::move(*best);
}

/// Upper bound for the level: bumps at the bump sites scaled by the single-component
/// closed form t_i = (a_i / b_i)^{1/(2p-2)}; returns (p-1)/(2p) Σ t_i² a_i.
inline double test_function_energy(std::shared_ptr<const Problem> problem) {
  const SystemState s = bump_state(problem);
  const auto c = nehari_coeffs(s);
  const double p = problem->p();
  double sum = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    const double t = std::pow(c.a[i] / c.b[i], 1.0 / (2 * p - 2));
    sum += t * t * c.a[i];
  }
  return (p - 1) / (2 * p) * sum;
}

}  // namespace nehari
