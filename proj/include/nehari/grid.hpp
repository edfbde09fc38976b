#pragma once

// Uniform Cartesian truncation of R^N with homogeneous Dirichlet data,
// the 7-point (2N+1) Laplacian, midpoint quadrature and a CG Helmholtz solver.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "nehari/errors.hpp"

namespace nehari {

/// Sums term(k) for k in [begin, end) in a fixed binary-tree order, so the
/// result does not depend on how callers schedule the work.
template <class Term>
double pairwise_sum(std::size_t begin, std::size_t end, const Term& term) {
  constexpr std::size_t kLeaf = 128;
  if (end - begin <= kLeaf) {
    double s = 0.0;
    for (std::size_t k = begin; k < end; ++k) s += term(k);
    return s;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

inline double pairwise_sum(std::span<const double> v) {
  return pairwise_sum(0, v.size(), [&](std::size_t k) { return v[k]; });
}

/// Box [-L_0, L_0] x ... x [-L_{N-1}, L_{N-1}] with n_d interior nodes on axis d
/// and a common spacing h, so L_d = (n_d + 1) h / 2. Nodes sit at
/// x_k = -L_d + (k + 1) h; boundary values are zero.
class Grid {
 public:
  Grid() = default;

  static Grid cube(int dim, double half_width, int n) {
    if (dim < 1 || n < 1 || !(half_width > 0.0))
      throw GeometryError("grid needs dim >= 1, n >= 1 and L > 0");
    Grid g;
    g.h_ = 2.0 * half_width / (n + 1);
    g.counts_.assign(dim, n);
    g.init();
    return g;
  }

  static Grid box(double h, std::vector<int> counts) {
    if (counts.empty() || !(h > 0.0)) throw GeometryError("grid needs dim >= 1 and h > 0");
    for (int c : counts)
      if (c < 1) throw GeometryError("grid needs n_d >= 1 on every axis");
    Grid g;
    g.h_ = h;
    g.counts_ = std::move(counts);
    g.init();
    return g;
  }

  int dim() const { return static_cast<int>(counts_.size()); }
  double h() const { return h_; }
  int count(int d) const { return counts_[d]; }
  const std::vector<int>& counts() const { return counts_; }
  double half_width(int d) const { return 0.5 * (counts_[d] + 1) * h_; }
  double min_half_width() const {
    double m = half_width(0);
    for (int d = 1; d < dim(); ++d) m = std::min(m, half_width(d));
    return m;
  }
  bool is_cubic() const {
    return std::all_of(counts_.begin(), counts_.end(), [&](int c) { return c == counts_[0]; });
  }
  std::size_t size() const { return size_; }
  /// Index stride of axis d; the last axis is contiguous (lexicographic order).
  std::size_t stride(int d) const { return strides_[d]; }
  double cell_volume() const { return std::pow(h_, dim()); }
  double coord(int d, int k) const { return -half_width(d) + (k + 1) * h_; }

  int axis_index(std::size_t node, int d) const {
    return static_cast<int>((node / strides_[d]) % static_cast<std::size_t>(counts_[d]));
  }
  void node_coords(std::size_t node, std::span<double> x) const {
    for (int d = 0; d < dim(); ++d) x[d] = coord(d, axis_index(node, d));
  }
  double node_radius2(std::size_t node, std::span<const double> center) const {
    double r2 = 0.0;
    for (int d = 0; d < dim(); ++d) {
      const double dx = coord(d, axis_index(node, d)) - center[d];
      r2 += dx * dx;
    }
    return r2;
  }
  /// True when the closed ball fits strictly inside the box.
  bool contains_ball(std::span<const double> center, double radius) const {
    for (int d = 0; d < dim(); ++d)
      if (std::abs(center[d]) + radius >= half_width(d)) return false;
    return true;
  }

  bool operator==(const Grid& o) const { return h_ == o.h_ && counts_ == o.counts_; }

 private:
  void init() {
    strides_.assign(counts_.size(), 1);
    for (int d = dim() - 2; d >= 0; --d) strides_[d] = strides_[d + 1] * counts_[d + 1];
    size_ = strides_[0] * counts_[0];
  }

  double h_ = 1.0;
  std::vector<int> counts_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Real scalar field on the interior nodes of a grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(Grid g) : grid(std::move(g)), values(grid.size(), 0.0) {}
  Field(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    assert(values.size() == grid.size());
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
  bool nonnegative() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0; });
  }
  bool is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  }
};

/// Samples fn(x) at every node.
template <class Fn>
Field sample(const Grid& grid, Fn&& fn) {
  Field f(grid);
  std::vector<double> x(grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.node_coords(k, x);
    f[k] = fn(std::span<const double>(x));
  }
  return f;
}

/// out = (-Δ_h) in, with zero values read outside the box.
inline void apply_neg_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out) {
  const int n = grid.dim();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  const std::size_t total = grid.size();
  for (std::size_t k = 0; k < total; ++k) out[k] = 2.0 * n * in[k];
  for (int d = 0; d < n; ++d) {
    const std::size_t s = grid.stride(d);
    const std::size_t cnt = static_cast<std::size_t>(grid.count(d));
    const std::size_t block = s * cnt;
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t c = 0; c < cnt; ++c) {
        double* o = out.data() + base + c * s;
        const double* mid = in.data() + base + c * s;
        if (c > 0) {
          const double* lo = mid - s;
          for (std::size_t j = 0; j < s; ++j) o[j] -= lo[j];
        }
        if (c + 1 < cnt) {
          const double* hi = mid + s;
          for (std::size_t j = 0; j < s; ++j) o[j] -= hi[j];
        }
      }
    }
  }
  for (std::size_t k = 0; k < total; ++k) out[k] *= inv_h2;
}

inline Field apply_neg_laplacian(const Field& f) {
  Field out(f.grid);
  apply_neg_laplacian(f.grid, f.values, out.values);
  return out;
}

/// Midpoint rule on interior nodes: h^N Σ f.
inline double integrate(const Field& f) { return f.grid.cell_volume() * pairwise_sum(f.values); }

inline double integrate_product(const Field& f, const Field& g) {
  assert(f.grid == g.grid);
  const double* a = f.values.data();
  const double* b = g.values.data();
  return f.grid.cell_volume() *
         pairwise_sum(0, f.size(), [&](std::size_t k) { return a[k] * b[k]; });
}

/// ∫∇f·∇g + eps² ∫fg, with the gradient term taken as ∫ g (-Δf).
inline double inner_h1(const Field& f, const Field& g, double eps) {
  assert(f.grid == g.grid);
  const Field lf = apply_neg_laplacian(f);
  const double* a = f.values.data();
  const double* b = g.values.data();
  const double* l = lf.values.data();
  const double e2 = eps * eps;
  return f.grid.cell_volume() * pairwise_sum(0, f.size(), [&](std::size_t k) {
           return b[k] * l[k] + e2 * a[k] * b[k];
         });
}

inline double norm_h1(const Field& f, double eps) { return std::sqrt(inner_h1(f, f, eps)); }

inline double norm_l2(const Field& f) { return std::sqrt(integrate_product(f, f)); }

/// h^N Σ f over nodes with |x - center| <= radius.
inline double restrict_ball_integral(const Field& f, std::span<const double> center, double radius) {
  const double r2 = radius * radius;
  return f.grid.cell_volume() * pairwise_sum(0, f.size(), [&](std::size_t k) {
           return f.grid.node_radius2(k, center) <= r2 ? f[k] : 0.0;
         });
}

/// Solves (-Δ_h + eps²) g = rhs by conjugate gradients to relative residual tol.
inline Field helmholtz_solve(const Field& rhs, double eps, double tol, int max_iters = 20000) {
  const Grid& grid = rhs.grid;
  const std::size_t n = grid.size();
  Field x(grid);
  const double e2 = eps * eps;
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    return pairwise_sum(0, n, [&](std::size_t k) { return a[k] * b[k]; });
  };
  const double rhs_norm = std::sqrt(dot(rhs.values, rhs.values));
  if (rhs_norm == 0.0) return x;
  std::vector<double> r = rhs.values, p = rhs.values, ap(n);
  double rr = dot(r, r);
  for (int it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr) <= tol * rhs_norm) return x;
    apply_neg_laplacian(grid, p, ap);
    for (std::size_t k = 0; k < n; ++k) ap[k] += e2 * p[k];
    const double alpha = rr / dot(p, ap);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
  }
  if (std::sqrt(rr) <= tol * rhs_norm) return x;
  throw NoConvergence(max_iters, std::sqrt(rr) / rhs_norm);
}

}  // namespace nehari
