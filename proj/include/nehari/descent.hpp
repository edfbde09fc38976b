#pragma once

// Minimisation of Ψ(u) = max_t J(t u) over a product of unit spheres by
// preconditioned (Sobolev) Riemannian gradient descent with Armijo
// backtracking along the normalisation retraction.
//
// A Space supplies the discretisation:
//   using Vec;                                    // has std::vector<double> values
//   int components() const; double p() const;
//   double inner(const Vec&, const Vec&) const;   // metric ⟨·,·⟩ of the sphere
//   double pairing(const Vec&, const Vec&) const; // L² pairing ∫ f g
//   NehariCoeffs coefficients(std::span<const Vec>) const;
//   std::vector<Vec> gradients(std::span<const Vec>) const;      // L² representers
//   std::vector<Vec> precondition(std::span<const Vec>) const;   // metric representers

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nehari/errors.hpp"
#include "nehari/projection.hpp"

namespace nehari {

struct DescentOptions {
  int max_iters = 2000;
  /// Stop once ‖J'(t u)‖ / ‖t u‖ falls below this.
  double grad_tol = 1e-6;
  double step0 = 1.0;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int max_backtracks = 60;
  double projection_tol = 1e-10;
  bool barzilai_borwein = true;
};

struct HistoryEntry {
  int iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
};

enum class DescentStatus { converged, max_iters, stalled };

inline std::string to_string(DescentStatus s) {
  switch (s) {
    case DescentStatus::converged: return "converged";
    case DescentStatus::max_iters: return "max_iters";
    case DescentStatus::stalled: return "stalled";
  }
  return "unknown";
}

template <class Vec>
struct DescentResult {
  std::vector<Vec> sphere;  // normalised directions u
  std::vector<double> t;    // Nehari scaling, t u is the Nehari point
  NehariCoeffs coeffs;      // coefficients of u (a_i = 1 up to rounding)
  double energy = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  std::vector<HistoryEntry> history;
  DescentStatus status = DescentStatus::max_iters;
  bool projectable_throughout = true;
};

template <class Space>
DescentResult<typename Space::Vec> riemannian_descent(const Space& space,
                                                       std::vector<typename Space::Vec> u,
                                                       const DescentOptions& opt) {
  using Vec = typename Space::Vec;
  const int ell = space.components();
  const double p = space.p();

  auto normalize = [&](Vec& v) {
    const double n = std::sqrt(space.inner(v, v));
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateComponent("component has zero norm");
    for (double& x : v.values) x /= n;
  };
  for (auto& v : u) normalize(v);

  struct Eval {
    NehariCoeffs coeffs;
    std::vector<double> t;
    double psi;
  };
  auto evaluate = [&](std::span<const Vec> w, ScalingStatus* status) -> std::optional<Eval> {
    auto c = space.coefficients(w);
    auto s = solve_scaling(c, p, opt.projection_tol);
    if (status) *status = s.status;
    if (s.status != ScalingStatus::ok) return std::nullopt;
    const double psi = fibre_energy(c, p, s.t);
    if (!std::isfinite(psi)) return std::nullopt;
    return Eval{std::move(c), std::move(s.t), psi};
  };

  DescentResult<Vec> res;
  ScalingStatus st0{};
  auto cur = evaluate(u, &st0);
  if (!cur) {
    if (st0 == ScalingStatus::not_projectable)
      throw NotProjectable("initial state is not projectable onto the Nehari set");
    throw NoRoot("Nehari scaling failed at the initial state");
  }

  std::vector<Vec> prev_u, prev_r;
  double step = opt.step0;
  for (int iter = 0;; ++iter) {
    std::vector<Vec> z(u);
    for (int i = 0; i < ell; ++i)
      for (double& x : z[i].values) x *= cur->t[i];
    const auto G = space.gradients(z);
    const auto g = space.precondition(G);
    std::optional<std::vector<Vec>> alt;
    if constexpr (requires { space.direction(std::span<const Vec>(G), std::span<const Vec>(z)); })
      alt = space.direction(std::span<const Vec>(G), std::span<const Vec>(z));

    // r_i = t_i (d_i - <d_i, u_i> u_i) with d = g unless the space supplies its own direction;
    // rnorm2 = Σ t_i <G_i, r_i>, the slope of Ψ along -r.
    std::vector<Vec> r(u);
    double grad2 = 0.0, znorm2 = 0.0, rnorm2 = 0.0;
    for (int i = 0; i < ell; ++i) {
      const double gg = space.pairing(G[i], g[i]);
      const double gu = space.pairing(G[i], u[i]);
      const double ti = cur->t[i];
      grad2 += gg;
      znorm2 += ti * ti * cur->coeffs.a[i];
      if (alt) {
        const Vec& d = (*alt)[i];
        const double du = space.inner(d, u[i]);
        for (std::size_t k = 0; k < r[i].values.size(); ++k) r[i].values[k] = ti * (d.values[k] - du * u[i].values[k]);
        rnorm2 += std::max(ti * ti * (space.pairing(G[i], d) - du * gu), 0.0);
      } else {
        for (std::size_t k = 0; k < r[i].values.size(); ++k)
          r[i].values[k] = ti * (g[i].values[k] - gu * u[i].values[k]);
        rnorm2 += std::max(ti * ti * (gg - gu * gu), 0.0);
      }
    }
    res.stationarity = std::sqrt(std::max(grad2, 0.0) / znorm2);
    res.history.push_back({iter, cur->psi, res.stationarity});
    res.iterations = iter;
    if (res.stationarity <= opt.grad_tol) {
      res.status = DescentStatus::converged;
      break;
    }
    if (iter >= opt.max_iters) {
      res.status = DescentStatus::max_iters;
      break;
    }

    if (opt.barzilai_borwein && !prev_u.empty()) {
      double sxx = 0.0, sxr = 0.0;
      for (int i = 0; i < ell; ++i) {
        Vec dx(u[i]), dr(r[i]);
        for (std::size_t k = 0; k < dx.values.size(); ++k) {
          dx.values[k] -= prev_u[i].values[k];
          dr.values[k] -= prev_r[i].values[k];
        }
        sxx += space.inner(dx, dx);
        sxr += space.inner(dx, dr);
      }
      step = (sxr > 0.0 && std::isfinite(sxx / sxr)) ? sxx / sxr : 2.0 * step;
    }

    bool accepted = false;
    std::vector<Vec> trial(u);
    std::optional<Eval> next;
    for (int back = 0; back <= opt.max_backtracks; ++back) {
      for (int i = 0; i < ell; ++i) {
        for (std::size_t k = 0; k < trial[i].values.size(); ++k)
          trial[i].values[k] = u[i].values[k] - step * r[i].values[k];
        normalize(trial[i]);
      }
      ScalingStatus st{};
      next = evaluate(trial, &st);
      if (!next && st == ScalingStatus::not_projectable) res.projectable_throughout = false;
      if (next && next->psi <= cur->psi - opt.armijo_c * step * rnorm2) {
        accepted = true;
        break;
      }
      step *= opt.armijo_shrink;
    }
    if (!accepted) {
      res.status = DescentStatus::stalled;
      break;
    }
    prev_u = std::move(u);
    prev_r = std::move(r);
    u = std::move(trial);
    cur = std::move(next);
  }

  res.sphere = std::move(u);
  res.t = cur->t;
  res.coeffs = cur->coeffs;
  res.energy = cur->psi;
  return res;
}

}  // namespace nehari
