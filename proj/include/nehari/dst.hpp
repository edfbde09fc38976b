#pragma once

// Exact inverse of (-Δ_h + eps²) on a Dirichlet box through the type-I sine
// transform, which diagonalises the 7-point stencil. Same discrete operator
// as helmholtz_solve, but O(n log n) and iteration-free.

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "nehari/grid.hpp"

namespace nehari {

namespace detail {
// FFTW planning and plan destruction are not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class DstHelmholtz {
 public:
  DstHelmholtz(const Grid& grid, double eps) : grid_(grid) {
    const int n = grid.dim();
    std::vector<int> counts(grid.counts());
    std::vector<fftw_r2r_kind> kinds(n, FFTW_RODFT00);
    std::vector<double> scratch(grid.size());
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      fftw_plan plan = fftw_plan_r2r(n, counts.data(), scratch.data(), scratch.data(),
                                     kinds.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
      if (plan == nullptr) throw Error("fftw failed to build a sine-transform plan");
      plan_ = std::shared_ptr<fftw_plan_s>(plan, [](fftw_plan p) {
        std::lock_guard inner(detail::fftw_planner_mutex());
        fftw_destroy_plan(p);
      });
    }
    // 1D eigenvalues of the second-difference matrix per axis.
    const double inv_h2 = 1.0 / (grid.h() * grid.h());
    std::vector<std::vector<double>> axis_eig(n);
    double norm = 1.0;
    for (int d = 0; d < n; ++d) {
      const int m = grid.count(d);
      norm *= 2.0 * (m + 1);
      axis_eig[d].resize(m);
      for (int k = 0; k < m; ++k)
        axis_eig[d][k] = (2.0 - 2.0 * std::cos(std::numbers::pi * (k + 1) / (m + 1))) * inv_h2;
    }
    inv_eig_.resize(grid.size());
    const double e2 = eps * eps;
    for (std::size_t node = 0; node < grid.size(); ++node) {
      double lam = e2;
      for (int d = 0; d < n; ++d) lam += axis_eig[d][grid.axis_index(node, d)];
      inv_eig_[node] = 1.0 / (lam * norm);
    }
  }

  void solve(std::span<const double> rhs, std::span<double> out) const {
    std::copy(rhs.begin(), rhs.end(), out.begin());
    fftw_execute_r2r(plan_.get(), out.data(), out.data());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= inv_eig_[k];
    fftw_execute_r2r(plan_.get(), out.data(), out.data());
  }

  Field solve(const Field& rhs) const {
    Field out(grid_);
    solve(rhs.values, out.values);
    return out;
  }

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  std::shared_ptr<fftw_plan_s> plan_;
  std::vector<double> inv_eig_;
};

}  // namespace nehari
