#pragma once

// Problem definition for the competitive system with shrinking attraction
// regions: parameters, the sign-changing weight and hypothesis checks.

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace nehari {

using Point = std::vector<double>;

struct Params {
  int dim = 3;
  double p = 2.0;
  int ell = 1;
  std::vector<double> mu{1.0};
  /// Symmetric ell x ell matrix, diagonal ignored.
  std::vector<std::vector<double>> lambda{{0.0}};
  std::vector<Point> centers{Point(3, 0.0)};
  double eps = 1.0;

  /// Upper bound N/(N-2) on p, i.e. 2p below the critical exponent 2N/(N-2).
  double p_upper() const { return static_cast<double>(dim) / (dim - 2); }
  double critical_exponent() const { return 2.0 * dim / (dim - 2); }
};

enum class Kind {
  OriginalV,       // -Δv + v = μ Q_ε(x - y_i)|v|^{2p-2}v + coupling
  RescaledU,       // -Δu + ε²u = μ Q_1(x - y_i/ε)|u|^{2p-2}u + coupling
  LimitSystem,     // -Δu = μ Q_1(x)|u|^{2p-2}u + coupling
  LimitEquation,   // -Δw = μ_i Q_1(x)|w|^{2p-2}w, one component
};

struct ProblemKind {
  Kind tag = Kind::RescaledU;
  int component = 0;  // only meaningful for LimitEquation

  static ProblemKind original() { return {Kind::OriginalV, 0}; }
  static ProblemKind rescaled() { return {Kind::RescaledU, 0}; }
  static ProblemKind limit_system() { return {Kind::LimitSystem, 0}; }
  static ProblemKind limit_equation(int i) { return {Kind::LimitEquation, i}; }

  bool is_limit() const {
    return tag == Kind::LimitSystem || tag == Kind::LimitEquation;
  }
  bool operator==(const ProblemKind&) const = default;
};

inline std::string to_string(ProblemKind k) {
  switch (k.tag) {
    case Kind::OriginalV: return "original";
    case Kind::RescaledU: return "rescaled";
    case Kind::LimitSystem: return "limit_system";
    case Kind::LimitEquation: return "limit_equation_" + std::to_string(k.component);
  }
  return "unknown";
}

/// +1 inside the open ball B_eps(center), -1 elsewhere (the sphere itself is -1).
inline double weight_q(std::span<const double> x, double eps, std::span<const double> center) {
  double r2 = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double dx = x[d] - center[d];
    r2 += dx * dx;
  }
  return r2 < eps * eps ? 1.0 : -1.0;
}

struct Violation {
  std::string field;
  std::string message;
};

namespace detail {
inline std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}
}  // namespace detail

/// Every violated standing hypothesis; empty means the parameters are admissible.
/// eps = 0 is admissible only for the limit problems.
inline std::vector<Violation> validate(const Params& params,
                                       ProblemKind kind = ProblemKind::rescaled()) {
  std::vector<Violation> out;
  const int n = params.dim;
  const int ell = params.ell;
  if (n < 3) out.push_back({"dim", "dim must be >= 3"});
  if (!(params.p > 1.0)) out.push_back({"p", "p not > 1"});
  if (n >= 3 && !(params.p < params.p_upper()))
    out.push_back({"p", "p not < N/(N-2)=" + detail::fmt_g(params.p_upper())});
  if (ell < 1) {
    out.push_back({"ell", "ell must be >= 1"});
    return out;
  }
  if (static_cast<int>(params.mu.size()) != ell) {
    out.push_back({"mu", "mu must have ell entries"});
  } else {
    for (double m : params.mu)
      if (!(m > 0.0)) {
        out.push_back({"mu", "mu_i must be positive"});
        break;
      }
  }
  bool shape_ok = static_cast<int>(params.lambda.size()) == ell;
  for (const auto& row : params.lambda) shape_ok = shape_ok && static_cast<int>(row.size()) == ell;
  if (!shape_ok) {
    out.push_back({"lambda", "lambda must be ell x ell"});
  } else {
    bool negative = true, symmetric = true;
    for (int i = 0; i < ell; ++i)
      for (int j = 0; j < ell; ++j) {
        if (i == j) continue;
        if (!(params.lambda[i][j] < 0.0)) negative = false;
        if (params.lambda[i][j] != params.lambda[j][i]) symmetric = false;
      }
    if (!negative) out.push_back({"lambda", "lambda_ij must be negative"});
    if (!symmetric) out.push_back({"lambda", "lambda must be symmetric"});
  }
  if (static_cast<int>(params.centers.size()) != ell) {
    out.push_back({"centers", "centers must have ell points"});
  } else {
    for (const auto& c : params.centers)
      if (static_cast<int>(c.size()) != n) {
        out.push_back({"centers", "each center must have dim coordinates"});
        break;
      }
  }
  const bool eps_ok = kind.is_limit() ? params.eps >= 0.0 : params.eps > 0.0;
  if (!eps_ok || !std::isfinite(params.eps))
    out.push_back({"eps", kind.is_limit() ? "eps must be >= 0" : "eps must be > 0"});
  if (kind.tag == Kind::LimitEquation && (kind.component < 0 || kind.component >= ell))
    out.push_back({"kind", "limit equation component out of range"});
  return out;
}

}  // namespace nehari
