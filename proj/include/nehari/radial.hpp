#pragma once

// Radial reduction of the single limit equation -Δw = μ Q_1(x)|w|^{2p-2}w on
// the ball B_R(0) ⊂ ℝ^N: cell-centred finite volumes on [0, R], Dirichlet at
// r = R, zero flux at r = 0. Minimised with the same sphere descent as the grid
// solver, so it serves as an independent oracle for the 3D level κ.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "nehari/descent.hpp"
#include "nehari/solver.hpp"

namespace nehari {

struct RadialProfile {
  std::vector<double> values;
};

class RadialSpace {
 public:
  using Vec = RadialProfile;

  RadialSpace(double mu, double p, int dim, double R, int n) : mu_(mu), p_(p), powers_(p), dr_(R / n), n_(n) {
    const double omega = 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
    r_.resize(n);
    mass_.resize(n);
    weight_.resize(n);
    face_.resize(n);
    for (int k = 0; k < n; ++k) {
      r_[k] = (k + 0.5) * dr_;
      const double lo = k * dr_, hi = (k + 1) * dr_;
      mass_[k] = omega * (std::pow(hi, dim) - std::pow(lo, dim)) / dim;
      weight_[k] = r_[k] < 1.0 ? mu : -mu;
      // conductance of the face at r_{k+1/2}; the last one couples to the zero boundary value half a cell away
      face_[k] = omega * std::pow(hi, dim - 1) / (k + 1 < n ? dr_ : 0.5 * dr_);
    }
  }

  int components() const { return 1; }
  double p() const { return p_; }
  int size() const { return n_; }
  double dr() const { return dr_; }
  std::span<const double> radii() const { return r_; }
  std::span<const double> shell_volumes() const { return mass_; }

  /// Stiffness matrix times w.
  std::vector<double> stiffness(const std::vector<double>& w) const {
    std::vector<double> out(n_, 0.0);
    for (int k = 0; k < n_; ++k) {
      const double next = k + 1 < n_ ? w[k + 1] : 0.0;
      const double flux = face_[k] * (w[k] - next);
      out[k] += flux;
      if (k + 1 < n_) out[k + 1] -= flux;
    }
    return out;
  }

  double inner(const Vec& f, const Vec& g) const {
    const auto kf = stiffness(f.values);
    return pairwise_sum(0, n_, [&](std::size_t k) { return kf[k] * g.values[k]; });
  }

  double pairing(const Vec& f, const Vec& g) const {
    return pairwise_sum(0, n_, [&](std::size_t k) { return mass_[k] * f.values[k] * g.values[k]; });
  }

  NehariCoeffs coefficients(std::span<const Vec> w) const {
    NehariCoeffs c(1);
    const auto& v = w[0].values;
    c.a[0] = inner(w[0], w[0]);
    c.b[0] = pairwise_sum(0, n_, [&](std::size_t k) { return mass_[k] * weight_[k] * powers_.abs_2p(v[k]); });
    return c;
  }

  std::vector<Vec> gradients(std::span<const Vec> w) const {
    const auto& v = w[0].values;
    auto g = stiffness(v);
    for (int k = 0; k < n_; ++k) g[k] = g[k] / mass_[k] - weight_[k] * powers_.odd_2p_1(v[k]);
    return {Vec{std::move(g)}};
  }

  /// Solves K g = M G with the tridiagonal stiffness K (Thomas algorithm).
  std::vector<Vec> precondition(std::span<const Vec> G) const {
    std::vector<double> diag(n_), upper(n_, 0.0), rhs(n_);
    for (int k = 0; k < n_; ++k) {
      diag[k] = face_[k] + (k > 0 ? face_[k - 1] : 0.0);
      if (k + 1 < n_) upper[k] = -face_[k];
      rhs[k] = mass_[k] * G[0].values[k];
    }
    for (int k = 1; k < n_; ++k) {
      const double f = upper[k - 1] / diag[k - 1];
      diag[k] -= f * upper[k - 1];
      rhs[k] -= f * rhs[k - 1];
    }
    std::vector<double> x(n_);
    x[n_ - 1] = rhs[n_ - 1] / diag[n_ - 1];
    for (int k = n_ - 2; k >= 0; --k) x[k] = (rhs[k] - upper[k] * x[k + 1]) / diag[k];
    return {Vec{std::move(x)}};
  }

 private:
  double mu_, p_;
  PowerLaw powers_;
  double dr_;
  int n_;
  std::vector<double> r_, mass_, weight_, face_;
};

struct RadialResult {
  double kappa = 0.0;
  std::vector<double> radii;
  std::vector<double> profile;  // Nehari-scaled, nonnegative
  double stationarity = 0.0;
  int iterations = 0;
  DescentStatus status = DescentStatus::max_iters;

  bool converged() const { return status == DescentStatus::converged; }
};

/// Least level κ of the limit equation restricted to radial functions on B_R.
inline RadialResult solve_radial_limit_equation(double mu, double p, int dim, double R, int n,
                                                const SolverConfig& config = {}) {
  if (dim < 3) throw ConfigError("radial solver needs N >= 3");
  if (!(R > 1.0)) throw ConfigError("radial solver needs R > 1");
  if (!(p > 1.0 && p < static_cast<double>(dim) / (dim - 2))) throw ConfigError("p outside (1, N/(N-2))");
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
  if (n < 4) throw ConfigError("radial solver needs n >= 4");
  const RadialSpace space(mu, p, dim, R, n);
  RadialProfile w0{std::vector<double>(n, 0.0)};
  for (int k = 0; k < n; ++k) {
    const double s = space.radii()[k];
    w0.values[k] = s < 1.0 ? (1 - s * s) * (1 - s * s) : 0.0;
  }
  auto first = riemannian_descent(space, std::vector<RadialProfile>{w0}, descent_options(config, config.max_iters));
  for (double& v : first.sphere[0].values) v = std::abs(v);
  auto res = riemannian_descent(space, std::move(first.sphere), descent_options(config, config.polish_iters));

  RadialResult out;
  out.kappa = res.energy;
  out.radii.assign(space.radii().begin(), space.radii().end());
  out.profile = res.sphere[0].values;
  for (double& v : out.profile) v *= res.t[0];
  out.stationarity = res.stationarity;
  out.iterations = first.iterations + res.iterations;
  out.status = first.status == DescentStatus::converged ? res.status : first.status;
  return out;
}

}  // namespace nehari
