#pragma once

// Discrete energy functional, component gradients, Nehari coefficients,
// projection onto the Nehari set and the sphere functional Ψ.

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nehari/grid.hpp"
#include "nehari/model.hpp"
#include "nehari/projection.hpp"

namespace nehari {

/// Pointwise powers sign(t)|t|^q with an exact fast path for p = 2.
class PowerLaw {
 public:
  explicit PowerLaw(double p) : p_(p), quadratic_(p == 2.0) {}
  double p() const { return p_; }
  /// |t|^p
  double abs_p(double t) const { return quadratic_ ? t * t : std::pow(std::abs(t), p_); }
  /// |t|^{2p}
  double abs_2p(double t) const {
    if (quadratic_) {
      const double t2 = t * t;
      return t2 * t2;
    }
    return std::pow(std::abs(t), 2 * p_);
  }
  /// |t|^{2p-2} t
  double odd_2p_1(double t) const {
    return quadratic_ ? t * t * t : std::copysign(std::pow(std::abs(t), 2 * p_ - 1), t);
  }
  /// |t|^{p-2} t
  double odd_p_1(double t) const {
    return quadratic_ ? t : std::copysign(std::pow(std::abs(t), p_ - 1), t);
  }

 private:
  double p_;
  bool quadratic_;
};

/// Parameters, problem kind and grid, plus the cached nodal weights μ_i Q̂_i.
class Problem {
 public:
  Problem(Params params, ProblemKind kind, Grid grid)
      : params_(std::move(params)), kind_(kind), grid_(std::move(grid)), powers_(params_.p) {
    const auto violations = validate(params_, kind_);
    if (!violations.empty()) {
      std::string msg = "invalid parameters:";
      for (const auto& v : violations) msg += " " + v.message + ";";
      throw ConfigError(msg);
    }
    if (params_.dim != grid_.dim()) throw GeometryError("grid dimension differs from params.dim");
    const int ell = components();
    weights_.resize(ell);
    for (int i = 0; i < ell; ++i) {
      const Point c = weight_center(i);
      const double r = weight_radius();
      const double m = mu(i);
      auto& w = weights_[i];
      w.resize(grid_.size());
      std::vector<double> x(grid_.dim());
      for (std::size_t k = 0; k < grid_.size(); ++k) {
        grid_.node_coords(k, x);
        w[k] = m * weight_q(x, r, c);
      }
    }
  }

  const Params& params() const { return params_; }
  ProblemKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  const PowerLaw& powers() const { return powers_; }
  double p() const { return params_.p; }

  /// Number of unknown components (1 for a single limit equation).
  int components() const { return kind_.tag == Kind::LimitEquation ? 1 : params_.ell; }

  /// σ in ‖u‖² = ∫|∇u|² + σ²∫u²: 1 for the original system, ε after rescaling, 0 in the limit.
  double mass_eps() const {
    switch (kind_.tag) {
      case Kind::OriginalV: return 1.0;
      case Kind::RescaledU: return params_.eps;
      default: return 0.0;
    }
  }

  /// Index into params for local component i.
  int param_index(int i) const { return kind_.tag == Kind::LimitEquation ? kind_.component : i; }

  double mu(int i) const { return params_.mu[param_index(i)]; }

  double lambda(int i, int j) const {
    if (kind_.tag == Kind::LimitEquation || i == j) return 0.0;
    return params_.lambda[i][j];
  }

  Point weight_center(int i) const {
    switch (kind_.tag) {
      case Kind::OriginalV: return params_.centers[param_index(i)];
      case Kind::RescaledU: {
        Point c = params_.centers[param_index(i)];
        for (double& v : c) v /= params_.eps;
        return c;
      }
      default: return Point(params_.dim, 0.0);
    }
  }

  double weight_radius() const { return kind_.tag == Kind::OriginalV ? params_.eps : 1.0; }

  std::span<const double> weights(int i) const { return weights_[i]; }

 private:
  Params params_;
  ProblemKind kind_;
  Grid grid_;
  PowerLaw powers_;
  std::vector<std::vector<double>> weights_;
};

inline std::shared_ptr<const Problem> make_problem(Params params, ProblemKind kind, Grid grid) {
  return std::make_shared<const Problem>(std::move(params), kind, std::move(grid));
}

/// ℓ-tuple of fields on one grid, tied to its problem.
struct SystemState {
  std::shared_ptr<const Problem> problem;
  std::vector<Field> comps;

  const Params& params() const { return problem->params(); }
  ProblemKind kind() const { return problem->kind(); }
  const Grid& grid() const { return problem->grid(); }
  int size() const { return static_cast<int>(comps.size()); }
};

inline SystemState zero_state(std::shared_ptr<const Problem> problem) {
  SystemState s{problem, {}};
  s.comps.assign(problem->components(), Field(problem->grid()));
  return s;
}

namespace detail {

inline void check_state(const SystemState& s) {
  if (!s.problem) throw Error("state has no problem attached");
  if (s.size() != s.problem->components()) throw Error("state has the wrong number of components");
  for (const auto& c : s.comps)
    if (!(c.grid == s.problem->grid())) throw GeometryError("component grid differs from problem grid");
}

inline std::vector<std::vector<double>> abs_p_fields(const Problem& pr, std::span<const Field> comps) {
  std::vector<std::vector<double>> out(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    out[i].resize(comps[i].size());
    for (std::size_t k = 0; k < comps[i].size(); ++k) out[i][k] = pr.powers().abs_p(comps[i][k]);
  }
  return out;
}

}  // namespace detail

/// Coefficients a, b, d of the fibre map for the given components.
inline NehariCoeffs nehari_coeffs(const Problem& pr, std::span<const Field> comps) {
  const int ell = static_cast<int>(comps.size());
  NehariCoeffs c(ell);
  const double vol = pr.grid().cell_volume();
  const double sigma = pr.mass_eps();
  const auto pw = detail::abs_p_fields(pr, comps);
  for (int i = 0; i < ell; ++i) {
    c.a[i] = inner_h1(comps[i], comps[i], sigma);
    const auto w = pr.weights(i);
    const auto& pi = pw[i];
    c.b[i] = vol * pairwise_sum(0, pi.size(), [&](std::size_t k) { return w[k] * pi[k] * pi[k]; });
  }
  for (int i = 0; i < ell; ++i)
    for (int j = i + 1; j < ell; ++j) {
      const auto& pi = pw[i];
      const auto& pj = pw[j];
      const double overlap = vol * pairwise_sum(0, pi.size(), [&](std::size_t k) { return pi[k] * pj[k]; });
      c.d[i][j] = pr.lambda(i, j) * overlap;
      c.d[j][i] = pr.lambda(j, i) * overlap;
    }
  return c;
}

inline NehariCoeffs nehari_coeffs(const SystemState& s) {
  detail::check_state(s);
  return nehari_coeffs(*s.problem, s.comps);
}

/// Discrete J: one quadrature pass over the local energy density.
inline double energy(const SystemState& s) {
  detail::check_state(s);
  const Problem& pr = *s.problem;
  const int ell = s.size();
  const double vol = pr.grid().cell_volume();
  const double e2 = pr.mass_eps() * pr.mass_eps();
  const double inv2p = 1.0 / (2 * pr.p());
  std::vector<Field> lap;
  lap.reserve(ell);
  for (const auto& c : s.comps) lap.push_back(apply_neg_laplacian(c));
  const auto pw = detail::abs_p_fields(pr, s.comps);
  return vol * pairwise_sum(0, pr.grid().size(), [&](std::size_t k) {
           double e = 0.0;
           for (int i = 0; i < ell; ++i) {
             const double u = s.comps[i][k];
             e += 0.5 * (u * lap[i][k] + e2 * u * u) - inv2p * pr.weights(i)[k] * pw[i][k] * pw[i][k];
             for (int j = 0; j < ell; ++j)
               if (j != i) e -= inv2p * pr.lambda(i, j) * pw[i][k] * pw[j][k];
           }
           return e;
         });
}

/// J reconstructed from the coefficients (= fibre energy at t = 1).
inline double energy_from_coeffs(const NehariCoeffs& c, double p) {
  const std::vector<double> ones(c.size(), 1.0);
  return fibre_energy(c, p, ones);
}

/// L² representer of ∂_i J:
/// (-Δ + σ²)u_i - μ_i Q̂_i |u_i|^{2p-2}u_i - Σ_{j≠i} λ_ij |u_j|^p |u_i|^{p-2}u_i.
inline Field grad_component(const Problem& pr, std::span<const Field> comps, int i,
                            const std::vector<std::vector<double>>* abs_p = nullptr) {
  std::vector<std::vector<double>> local;
  if (abs_p == nullptr) {
    local = detail::abs_p_fields(pr, comps);
    abs_p = &local;
  }
  const Field& u = comps[i];
  Field g = apply_neg_laplacian(u);
  const double e2 = pr.mass_eps() * pr.mass_eps();
  const auto w = pr.weights(i);
  const auto& P = pr.powers();
  const int ell = static_cast<int>(comps.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double ui = u[k];
    double coupling = 0.0;
    for (int j = 0; j < ell; ++j)
      if (j != i) coupling += pr.lambda(i, j) * (*abs_p)[j][k];
    g[k] += e2 * ui - w[k] * P.odd_2p_1(ui) - coupling * P.odd_p_1(ui);
  }
  return g;
}

inline Field grad_component(const SystemState& s, int i) {
  detail::check_state(s);
  return grad_component(*s.problem, s.comps, i);
}

/// r_i = a_i - b_i - Σ_{j≠i} d_ij = ∂_i J(u) u_i.
inline std::vector<double> nehari_residuals(const NehariCoeffs& c) {
  std::vector<double> r(c.size());
  for (int i = 0; i < c.size(); ++i) r[i] = c.a[i] - c.effective_b(i);
  return r;
}

inline std::vector<double> nehari_residuals(const SystemState& s) { return nehari_residuals(nehari_coeffs(s)); }

/// On the discrete Nehari set: every component nonzero and |r_i| <= tol max(a_i, 1).
inline bool on_nehari_set(const SystemState& s, double tol) {
  for (const auto& c : s.comps)
    if (c.is_zero()) return false;
  const auto c = nehari_coeffs(s);
  const auto r = nehari_residuals(c);
  for (int i = 0; i < c.size(); ++i)
    if (std::abs(r[i]) > tol * std::max(c.a[i], 1.0)) return false;
  return true;
}

struct Projection {
  std::vector<double> t;
  SystemState projected;
};

/// Scales each component by the unique t > 0 that puts t u on the Nehari set.
inline Projection nehari_project(const SystemState& s, double tol = 1e-10) {
  detail::check_state(s);
  for (int i = 0; i < s.size(); ++i)
    if (s.comps[i].is_zero())
      throw DegenerateComponent("component " + std::to_string(i) + " is identically zero");
  const auto c = nehari_coeffs(s);
  Projection out{solve_scaling_or_throw(c, s.problem->p(), tol), s};
  for (int i = 0; i < s.size(); ++i)
    for (double& v : out.projected.comps[i].values) v *= out.t[i];
  return out;
}

/// Ψ(u) = max_t J(t u) = J(t_u u).
inline double sphere_energy(const SystemState& s, double tol = 1e-10) {
  detail::check_state(s);
  for (int i = 0; i < s.size(); ++i)
    if (s.comps[i].is_zero())
      throw DegenerateComponent("component " + std::to_string(i) + " is identically zero");
  const auto c = nehari_coeffs(s);
  const auto t = solve_scaling_or_throw(c, s.problem->p(), tol);
  return fibre_energy(c, s.problem->p(), t);
}

}  // namespace nehari
