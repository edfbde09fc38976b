// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed below.
// Runs at N = 3, p = 2, L = 8, n = 64 unless a line says otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "nehari/io.hpp"

using namespace nehari;

namespace {

constexpr double kL = 8.0;
constexpr int kN = 64;

int g_failed = 0;

void verdict(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-26s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Params pair(Point y1, Point y2, double eps, double lambda = -1.0) {
  Params p;
  p.ell = 2;
  p.mu = {1.0, 1.0};
  p.lambda = uniform_lambda(2, lambda);
  p.centers = {std::move(y1), std::move(y2)};
  p.eps = eps;
  return p;
}

Params single_limit() {
  Params p;
  p.eps = 0.0;
  return p;
}

// Random smooth state: bumps at the attraction centres times a random trigonometric modulation.
SystemState random_state(std::shared_ptr<const Problem> pr, std::mt19937_64& rng, bool positive) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SystemState s{pr, {}};
  for (int i = 0; i < pr->components(); ++i) {
    const Point c = pr->weight_center(i);
    const double a = u(rng), b = u(rng), w = 1.0 + u(rng) * 0.5, amp = 2.0 + u(rng);
    s.comps.push_back(sample(pr->grid(), [&](std::span<const double> x) {
      double r2 = 0.0;
      for (int d = 0; d < 3; ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
      const double mod = positive ? 1.0 + 0.3 * std::sin(a * x[0] + b * x[1]) : std::cos(w * x[0] + a) + b * x[2];
      return amp * std::exp(-r2) * mod;
    }));
  }
  return s;
}

// ---------------------------------------------------------------------------

void criterion1() {
  auto pr = make_problem(pair({-1, 0, 0}, {1, 0, 0}, 0.4), ProblemKind::rescaled(),
                         rescaled_grid(pair({-1, 0, 0}, {1, 0, 0}, 0.4), 0.4, GridConfig{kL, kN}));
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const SystemState s = random_state(pr, rng, false), dir = random_state(pr, rng, false);
    for (int i = 0; i < 2; ++i) {
      const double h = 1e-4;
      SystemState plus = s, minus = s;
      for (std::size_t k = 0; k < pr->grid().size(); ++k) {
        plus.comps[i][k] += h * dir.comps[i][k];
        minus.comps[i][k] -= h * dir.comps[i][k];
      }
      const double fd = (energy(plus) - energy(minus)) / (2 * h);
      const double an = integrate_product(grad_component(s, i), dir.comps[i]);
      worst = std::max(worst, std::abs(fd - an) / std::abs(an));
    }
  }
  verdict(1, "gradient", worst < 1e-6, fmt("max relative error %.2e over 10 states x 2 components (< 1e-6)", worst));
}

struct LimitEquationRuns {
  SolveReport n64, n128;
  RadialResult radial;
};

void criterion2(const SolveReport& converged) {
  auto pr = make_problem(pair({-1, 0, 0}, {1, 0, 0}, 0.4), ProblemKind::rescaled(),
                         rescaled_grid(pair({-1, 0, 0}, {1, 0, 0}, 0.4), 0.4, GridConfig{kL, kN}));
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto proj = nehari_project(random_state(pr, rng, true));
    const auto c = nehari_coeffs(proj.projected);
    const double J = energy(proj.projected);
    worst = std::max(worst, std::abs(J - 0.25 * (c.a[0] + c.a[1])) / std::max(1.0, std::abs(J)));
  }
  const auto c = nehari_coeffs(converged.state);
  const double J = energy(converged.state);
  const double after = std::abs(J - 0.25 * c.a[0]) / std::abs(J);
  verdict(2, "Nehari identity", worst <= 1e-10 && after <= 1e-8,
          fmt("projected %.2e (<= 1e-10), after solve %.2e (<= 1e-8)", worst, after));
}

void criterion3() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  double worst1 = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    NehariCoeffs c(1);
    c.a[0] = u(rng);
    c.b[0] = u(rng);
    const double p = 1.05 + 1.9 * (u(rng) - 0.1) / 9.9;
    const double t = solve_scaling(c, p).t[0];
    // bracketing bisection on F(t) = a t - b t^{2p-1}
    double lo = 1e-12, hi = 1.0;
    while (c.a[0] * hi - c.b[0] * std::pow(hi, 2 * p - 1) > 0) hi *= 2;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (c.a[0] * mid - c.b[0] * std::pow(mid, 2 * p - 1) > 0 ? lo : hi) = mid;
    }
    worst1 = std::max(worst1, rel(t, 0.5 * (lo + hi)));
  }
  double worst2 = 0.0;
  bool above = true;
  for (int trial = 0; trial < 200; ++trial) {
    NehariCoeffs c(2);
    const double p = 2.0;
    c.a = {u(rng), u(rng)};
    c.b = {u(rng), u(rng)};
    c.d[0][1] = c.d[1][0] = -0.2 * std::min(c.b[0], c.b[1]) * u(rng) / 10.0;
    const auto s = solve_scaling(c, p);
    if (s.status != ScalingStatus::ok) {
      above = false;
      continue;
    }
    const auto F = fibre_gradient(c, p, s.t);
    for (int i = 0; i < 2; ++i) {
      worst2 = std::max(worst2, std::abs(F[i]) / c.a[i]);
      above = above && s.t[i] > std::pow(c.a[i] / c.b[i], 1.0 / (2 * p - 2));
    }
  }
  verdict(3, "projection oracle", worst1 <= 1e-12 && worst2 <= 1e-10 && above,
          fmt("l=1 vs bisection %.2e (<= 1e-12); l=2 |F_i|/a_i %.2e (<= 1e-10); t above decoupled: %s", worst1, worst2,
              above ? "yes" : "no"));
}

LimitEquationRuns criterion4() {
  LimitEquationRuns r;
  SolverConfig cfg;
  r.radial = solve_radial_limit_equation(1.0, 2.0, 3, kL, 2048, cfg);
  auto run = [&](int n) {
    return solve(make_problem(single_limit(), ProblemKind::limit_equation(0), Grid::cube(3, kL, n)), cfg);
  };
  r.n64 = run(kN);
  r.n128 = run(2 * kN);
  const double g64 = rel(r.n64.energy, r.radial.kappa), g128 = rel(r.n128.energy, r.radial.kappa);
  const bool ok = r.radial.converged() && r.n64.converged() && r.n128.converged() && g64 <= 0.05 && g128 < g64;
  verdict(4, "radial vs grid", ok,
          fmt("kappa radial %.6f (R = L = 8, 2048 cells); grid n=64 %.6f gap %.2f%% (<= 5%%), n=128 %.6f gap %.2f%% "
              "(shrinks)",
              r.radial.kappa, r.n64.energy, 100 * g64, r.n128.energy, 100 * g128));
  return r;
}

void criterion5(const std::vector<StudyRecord>& distinct, const std::vector<StudyRecord>& core) {
  bool ok = true;
  std::string detail;
  for (const auto* rows : {&distinct, &core})
    for (const auto& r : *rows) {
      ok = ok && r.ok() && r.energy_total > 0 && r.energy_total <= r.upper_bound;
      detail += fmt("%s%.3g:%.4g<=%.4g", detail.empty() ? "" : " ", r.value, r.energy_total, r.upper_bound);
    }
  verdict(5, "energy sandwich", ok, "eps:c<=d0 distinct then single-core " + detail);
}

void criterion6(const std::vector<StudyRecord>& rows, std::size_t delta_index) {
  bool mono = true, final_ok = true, all_ok = true;
  double mass_ratio = 0.0;
  std::string vals;
  for (int i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      all_ok = all_ok && rows[k].ok();
      if (!rows[k].ok()) continue;
      const auto& q = rows[k].comps[i].ratios[delta_index];
      if (k > 0) {
        const auto& prev = rows[k - 1].comps[i].ratios[delta_index];
        mono = mono && q.ratio_2p >= prev.ratio_2p - 0.02 && q.ratio_grad >= prev.ratio_grad - 0.02;
      }
    }
    if (!all_ok) break;
    const auto& last = rows.back().comps[i].ratios[delta_index];
    final_ok = final_ok && last.ratio_2p >= 0.95 && last.ratio_grad >= 0.95;
    bool decreasing = true;
    for (std::size_t k = 1; k < rows.size(); ++k)
      decreasing = decreasing && rows[k].comps[i].mass_term < rows[k - 1].comps[i].mass_term;
    const double mr = rows.back().comps[i].mass_term / rows.front().comps[i].mass_term;
    mass_ratio = std::max(mass_ratio, decreasing ? mr : INFINITY);
    if (i == 0) vals = fmt("final ratio_2p %.4f ratio_grad %.4f", last.ratio_2p, last.ratio_grad);
  }
  const bool ok = all_ok && mono && final_ok && mass_ratio < 1e-2;
  verdict(6, "concentration", ok,
          fmt("delta 0.5: monotone (tol 0.02) %s, %s (>= 0.95); mass term last/first %.4f (< 1e-2)",
              mono ? "yes" : "no", vals.c_str(), mass_ratio));
}

void criterion7(const std::vector<StudyRecord>& distinct, const std::vector<StudyRecord>& core) {
  auto d12 = [](const StudyRecord& r) { return std::abs(r.coupling[0][1]); };
  const bool rows_ok = std::all_of(distinct.begin(), distinct.end(), [](auto& r) { return r.ok(); }) &&
                       std::all_of(core.begin(), core.end(), [](auto& r) { return r.ok(); });
  if (!rows_ok) {
    verdict(7, "decoupling vs coupling", false, "a sweep row did not converge");
    return;
  }
  const double dr = d12(distinct.back()) / d12(distinct.front());
  const double cr = d12(core.back()) / d12(core.front());
  const double egap = rel(core.back().energy_total, core.back().energy_limit);
  verdict(7, "decoupling vs coupling", dr < 1e-3 && cr >= 0.1 && egap <= 0.02,
          fmt("distinct |d12| last/first %.2e (< 1e-3); single-core %.3f (>= 0.1); single-core c_eps %.5f vs limit %.5f "
              "gap %.2f%% (<= 2%%)",
              dr, cr, core.back().energy_total, core.back().energy_limit, 100 * egap));
}

void criterion8(const std::vector<StudyRecord>& rows) {
  bool ok = std::all_of(rows.begin(), rows.end(), [](auto& r) { return r.ok(); });
  if (!ok) {
    std::string st;
    for (const auto& r : rows) st += " " + r.status;
    verdict(8, "segregation", false, "rows not converged:" + st);
    return;
  }
  bool mono = true, bounded = true, below = true, inside = true;
  double C = 0.0, sup_max = 0.0, sup_min = INFINITY;
  for (const auto& r : rows)
    for (const auto& c : r.comps) {
      C = std::max(C, c.ball_2p);
      sup_max = std::max(sup_max, c.sup.sup);
      sup_min = std::min(sup_min, c.sup.sup);
      inside = inside && c.sup.inside_attraction;
    }
  std::string ov;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double o = rows[k].overlap[0][1];
    if (k > 0) mono = mono && o <= 1.05 * rows[k - 1].overlap[0][1];
    bounded = bounded && std::abs(rows[k].value) * o <= C;
    below = below && rows[k].energy_total <= rows[k].upper_bound;
    ov += fmt("%s%.3e", k ? "," : "", o);
  }
  const double final_ratio = rows.back().overlap[0][1] / rows.front().overlap[0][1];
  const double cold = rel(rows.back().energy_cold, rows.back().energy_total);
  ok = mono && final_ratio <= 1e-3 && bounded && below && inside && std::isfinite(sup_max);
  verdict(8, "segregation", ok,
          fmt("overlap %s monotone(5%%) %s, last/first %.2e (<= 1e-3); |lambda|*overlap <= C=%.3f %s; c0 <= c*=%.3f %s; "
              "sup in [%.3f, %.3f], argmax in B1 %s; cold-start gap %.1e",
              ov.c_str(), mono ? "yes" : "no", final_ratio, C, bounded ? "yes" : "no", rows.front().upper_bound,
              below ? "yes" : "no", sup_min, sup_max, inside ? "yes" : "no", cold));
}

void criterion9(const SolveReport& coarse, const SolveReport& fine) {
  double vc = -1.0, vf = -1.0;
  for (int i = 0; i < 2; ++i) {
    vc = std::max(vc, decay_check(coarse.state.comps[i]).max_violation);
    vf = std::max(vf, decay_check(fine.state.comps[i]).max_violation);
  }
  const bool ok = coarse.converged() && fine.converged() && vf <= 0.1 && vf <= vc;
  verdict(9, "decay", ok,
          fmt("limit system lambda=-1: max_violation n=64 %.4f, n=96 %.4f (<= 0.1, not increasing)", vc, vf));
}

void criterion10(const std::vector<StudyRecord>& rows) {
  const double expect = expected_blowup_slope(3, 2.0);
  std::vector<double> s;
  try {
    s = blowup_exponent_fit(rows);
  } catch (const Error& e) {
    verdict(10, "blow-up exponent", false, e.what());
    return;
  }
  bool ok = true;
  for (double v : s) ok = ok && rel(v, expect) <= 0.10;
  verdict(10, "blow-up exponent", ok,
          fmt("slopes %.4f, %.4f vs %.1f (within 10%%)", s[0], s[1], expect));
}

void criterion11() {
  RunConfig c;
  c.params = pair({0, 0, 0}, {0, 0, 0}, 0.0);
  c.kind = ProblemKind::limit_system();
  c.grid = {6.0, 24};
  c.study.lambda_list = {-1, -10, -100, -1000};
  RunConfig c2 = c;
  c2.solver.threads = 2;
  const std::string a = sweep_lambda_csv(sweep_lambda(c.params, c.grid, c.solver, c.study), c);
  const std::string b = sweep_lambda_csv(sweep_lambda(c2.params, c2.grid, c2.solver, c2.study), c2);
  RunConfig e = c;
  e.params = pair({-1, 0, 0}, {1, 0, 0}, 0.4);
  e.kind = ProblemKind::rescaled();
  e.study.eps_list = {0.4, 0.2};
  e.study.radial_n = 256;
  RunConfig e2 = e;
  e2.solver.threads = 2;
  const std::string x = sweep_eps_csv(sweep_eps(e.params, e.grid, e.solver, e.study), e);
  const std::string y = sweep_eps_csv(sweep_eps(e2.params, e2.grid, e2.solver, e2.study), e2);
  verdict(11, "determinism", a == b && x == y,
          fmt("threads 1 vs 2: sweep-lambda CSV %s (%zu bytes), sweep-eps CSV %s (%zu bytes)",
              a == b ? "identical" : "DIFFERENT", a.size(), x == y ? "identical" : "DIFFERENT", x.size()));
}

void criterion12(const RadialResult& radial) {
  SolverConfig cfg;
  cfg.grad_tol = 1e-9;
  cfg.max_iters = 6000;
  const auto rep = solve(make_problem(single_limit(), ProblemKind::limit_equation(0), Grid::cube(3, kL, kN)), cfg);
  const Field& u = rep.state.comps[0];
  const Grid& g = u.grid;
  const int n = g.count(0);
  // 48 symmetries of the cube: axis permutations times reflections
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  double worst = 0.0;
  const double norm = norm_l2(u);
  for (const auto& pm : perms)
    for (int flips = 0; flips < 8; ++flips) {
      Field v(g);
      for (std::size_t k = 0; k < g.size(); ++k) {
        int idx[3];
        for (int d = 0; d < 3; ++d) {
          const int a = g.axis_index(k, pm[d]);
          idx[d] = (flips >> d) & 1 ? n - 1 - a : a;
        }
        v[k] = u[k] - u[idx[0] * g.stride(0) + idx[1] * g.stride(1) + idx[2]];
      }
      worst = std::max(worst, norm_l2(v) / norm);
    }
  bool mono = true;
  for (std::size_t k = 1; k < radial.profile.size(); ++k) mono = mono && radial.profile[k] <= radial.profile[k - 1];
  verdict(12, "radial structure", worst <= 1e-6 && mono,
          fmt("symmetry defect %.2e (<= 1e-6, %s after %d iterations, stationarity %.1e); radial profile nonincreasing %s",
              worst, to_string(rep.status).c_str(), rep.iterations, rep.stationarity, mono ? "yes" : "no"));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const SolverConfig cfg;
  const GridConfig gc{kL, kN};

  criterion1();
  const auto le = criterion4();
  criterion2(le.n64);
  criterion3();

  StudyConfig sd;
  sd.mode = SweepMode::distinct_centers;
  const auto distinct = sweep_eps(pair({-1, 0, 0}, {1, 0, 0}, 0.4), gc, cfg, sd);
  StudyConfig sc;
  sc.mode = SweepMode::single_core;
  const auto core = sweep_eps(pair({0, 0, 0}, {0, 0, 0}, 0.4), gc, cfg, sc);
  criterion5(distinct, core);
  criterion6(distinct, 1);
  criterion7(distinct, core);

  StudyConfig sl;
  const auto lam = sweep_lambda(pair({0, 0, 0}, {0, 0, 0}, 0.0), gc, cfg, sl);
  criterion8(lam);

  const auto sys = [&](int n) {
    return solve(make_problem(pair({0, 0, 0}, {0, 0, 0}, 0.0), ProblemKind::limit_system(), Grid::cube(3, kL, n)), cfg);
  };
  criterion9(sys(kN), sys(96));
  criterion10(distinct);
  criterion11();
  criterion12(le.radial);

  std::printf("%d of 12 criteria failed (%.0f s)\n", g_failed, seconds_since(t0));
  return g_failed == 0 ? 0 : 1;
}
