#pragma once

// The fibre map t -> J(t u) written in the scalar coefficients a, b, d, and its
// unique critical point (the Nehari scaling t_{ε,u}).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nehari/errors.hpp"

namespace nehari {

/// a_i = ‖u_i‖², b_i = ∫ μ_i Q_i |u_i|^{2p}, d_ij = ∫ λ_ij |u_j|^p |u_i|^p (i != j).
struct NehariCoeffs {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<std::vector<double>> d;

  NehariCoeffs() = default;
  explicit NehariCoeffs(int ell)
      : a(ell, 0.0), b(ell, 0.0), d(ell, std::vector<double>(ell, 0.0)) {}

  int size() const { return static_cast<int>(a.size()); }

  /// b_i + Σ_{j≠i} d_ij, the quantity that must be positive before projecting.
  double effective_b(int i) const {
    double s = b[i];
    for (int j = 0; j < size(); ++j)
      if (j != i) s += d[i][j];
    return s;
  }
};

inline bool projectable(const NehariCoeffs& c) {
  for (int i = 0; i < c.size(); ++i)
    if (!(c.a[i] > 0.0) || !(c.effective_b(i) > 0.0)) return false;
  return true;
}

/// I(t) = J(t u) = ½Σ a_i t_i² - (1/2p)Σ b_i t_i^{2p} - (1/2p)Σ_{i≠j} d_ij t_i^p t_j^p.
inline double fibre_energy(const NehariCoeffs& c, double p, std::span<const double> t) {
  const int ell = c.size();
  double e = 0.0;
  for (int i = 0; i < ell; ++i) {
    e += 0.5 * c.a[i] * t[i] * t[i] - c.b[i] * std::pow(t[i], 2 * p) / (2 * p);
    for (int j = 0; j < ell; ++j)
      if (j != i) e -= c.d[i][j] * std::pow(t[i] * t[j], p) / (2 * p);
  }
  return e;
}

/// F_i(t) = ∂I/∂t_i = a_i t_i - b_i t_i^{2p-1} - Σ_{j≠i} d_ij t_j^p t_i^{p-1}.
inline std::vector<double> fibre_gradient(const NehariCoeffs& c, double p, std::span<const double> t) {
  const int ell = c.size();
  std::vector<double> f(ell);
  for (int i = 0; i < ell; ++i) {
    double v = c.a[i] * t[i] - c.b[i] * std::pow(t[i], 2 * p - 1);
    for (int j = 0; j < ell; ++j)
      if (j != i) v -= c.d[i][j] * std::pow(t[j], p) * std::pow(t[i], p - 1);
    f[i] = v;
  }
  return f;
}

enum class ScalingStatus { ok, not_projectable, no_root };

struct ScalingResult {
  ScalingStatus status = ScalingStatus::no_root;
  std::vector<double> t;
  int iterations = 0;
  /// max_i |F_i(t)| t_i / max(t_i² a_i, 1), i.e. the relative Nehari residual of t u.
  double residual = 0.0;
  bool used_fallback = false;
};

namespace detail {

// Small dense solve with partial pivoting; returns false when singular.
inline bool solve_dense(std::vector<std::vector<double>> m, std::vector<double>& rhs) {
  const int n = static_cast<int>(rhs.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (m[piv][col] == 0.0 || !std::isfinite(m[piv][col])) return false;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < n; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < n; ++k) s -= m[r][k] * rhs[k];
    rhs[r] = s / m[r][r];
  }
  return true;
}

// f_i(s) = F_i(e^s) / t_i, scaled by 1/a_i.
inline std::vector<double> log_residual(const NehariCoeffs& c, double p, std::span<const double> s) {
  const int ell = c.size();
  std::vector<double> f(ell);
  for (int i = 0; i < ell; ++i) {
    double v = c.a[i] - c.b[i] * std::exp((2 * p - 2) * s[i]);
    for (int j = 0; j < ell; ++j)
      if (j != i) v -= c.d[i][j] * std::exp(p * s[j] + (p - 2) * s[i]);
    f[i] = v / c.a[i];
  }
  return f;
}

inline double merit(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m += v * v;
  return m;
}

inline double relative_residual(const NehariCoeffs& c, double p, std::span<const double> t) {
  const auto f = fibre_gradient(c, p, t);
  double worst = 0.0;
  for (int i = 0; i < c.size(); ++i)
    worst = std::max(worst, std::abs(f[i] * t[i]) / std::max(t[i] * t[i] * c.a[i], 1.0));
  return worst;
}

// Scalar case: F(t)/t = a - b t^{2p-2} is strictly decreasing in t.
inline double bisect_single(double a, double b, double p) {
  double lo = 0.0, hi = 1.0;
  while (a - b * std::pow(hi, 2 * p - 2) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (a - b * std::pow(mid, 2 * p - 2) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Solves F(t) = 0 with t > 0 by damped Newton in s = log t, started at the
/// decoupled value t_i = (a_i/b_i)^{1/(2p-2)} (exact when d = 0).
inline ScalingResult solve_scaling(const NehariCoeffs& c, double p, double tol = 1e-10) {
  ScalingResult res;
  const int ell = c.size();
  if (!projectable(c)) {
    res.status = ScalingStatus::not_projectable;
    return res;
  }
  std::vector<double> s(ell);
  for (int i = 0; i < ell; ++i) s[i] = std::log(c.a[i] / c.b[i]) / (2 * p - 2);

  auto f = detail::log_residual(c, p, s);
  double m = detail::merit(f);
  constexpr int kMaxNewton = 100;
  for (int it = 0; it < kMaxNewton && m > 1e-30; ++it) {
    res.iterations = it + 1;
    std::vector<std::vector<double>> jac(ell, std::vector<double>(ell, 0.0));
    for (int i = 0; i < ell; ++i) {
      double diag = -(2 * p - 2) * c.b[i] * std::exp((2 * p - 2) * s[i]);
      for (int j = 0; j < ell; ++j) {
        if (j == i) continue;
        const double e = c.d[i][j] * std::exp(p * s[j] + (p - 2) * s[i]);
        diag -= (p - 2) * e;
        jac[i][j] = -p * e / c.a[i];
      }
      jac[i][i] = diag / c.a[i];
    }
    std::vector<double> step(f);
    for (double& v : step) v = -v;
    if (!detail::solve_dense(jac, step)) break;
    double biggest = 0.0;
    for (double v : step) biggest = std::max(biggest, std::abs(v));
    // trust region in log space
    double alpha = biggest > 2.0 ? 2.0 / biggest : 1.0;
    bool improved = false;
    for (int back = 0; back < 60; ++back) {
      std::vector<double> trial(s);
      for (int i = 0; i < ell; ++i) trial[i] += alpha * step[i];
      auto ft = detail::log_residual(c, p, trial);
      const double mt = detail::merit(ft);
      if (std::isfinite(mt) && mt < m) {
        s = std::move(trial);
        f = std::move(ft);
        m = mt;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }

  res.t.resize(ell);
  for (int i = 0; i < ell; ++i) res.t[i] = std::exp(s[i]);
  res.residual = detail::relative_residual(c, p, res.t);

  if (!(res.residual <= tol) && ell == 1) {
    res.t[0] = detail::bisect_single(c.a[0], c.b[0], p);
    res.residual = detail::relative_residual(c, p, res.t);
    res.used_fallback = true;
  }
  res.status = res.residual <= tol ? ScalingStatus::ok : ScalingStatus::no_root;
  return res;
}

inline std::vector<double> solve_scaling_or_throw(const NehariCoeffs& c, double p, double tol = 1e-10) {
  auto res = solve_scaling(c, p, tol);
  switch (res.status) {
    case ScalingStatus::ok: return res.t;
    case ScalingStatus::not_projectable:
      throw NotProjectable("b_i + sum_j d_ij must be positive for every component");
    case ScalingStatus::no_root: break;
  }
  throw NoRoot("Nehari scaling did not converge (residual " + std::to_string(res.residual) + ")");
}

}  // namespace nehari
