// Batch front end: nehari <solve|sweep-eps|sweep-lambda|check|oracle-radial> <config>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nehari/io.hpp"

namespace fs = std::filesystem;
using namespace nehari;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCheck = 4;

struct Failure {
  int code;
  std::string kind;
  std::string message;
  std::vector<std::string> details;
};

int report(const Failure& f) {
  nlohmann::json j;
  j["exit_code"] = f.code;
  j["error"] = f.kind;
  j["message"] = f.message;
  if (!f.details.empty()) j["violations"] = f.details;
  std::cerr << j.dump() << std::endl;
  return f.code;
}

void require_valid(const RunConfig& c, ProblemKind kind) {
  std::vector<std::string> msgs;
  for (const auto& v : validate(c.params, kind)) msgs.push_back(v.field + ": " + v.message);
  for (const auto& m : check_run_config(c)) msgs.push_back(m);
  if (!msgs.empty()) throw Failure{kExitConfig, "config", "invalid configuration", msgs};
}

Grid solve_grid(const RunConfig& c) {
  if (c.kind.tag == Kind::RescaledU) return rescaled_grid(c.params, c.params.eps, c.grid);
  return Grid::cube(c.params.dim, c.grid.L, c.grid.n);
}

void emit(const fs::path& dir, const std::string& name, const std::string& text) {
  write_text(dir / name, text);
  std::cout << "wrote " << (dir / name).string() << "\n";
}

int run_solve(const RunConfig& c) {
  require_valid(c, c.kind);
  auto problem = make_problem(c.params, c.kind, solve_grid(c));
  const SolveReport rep = solve(problem, c.solver);
  const fs::path dir = c.output.directory;
  emit(dir, "solve.csv", solve_csv(rep, c));
  emit(dir, "solve_history.csv", history_csv(rep, c));
  if (c.output.dump_fields)
    for (int i = 0; i < rep.state.size(); ++i)
      emit(dir, "field_u" + std::to_string(i + 1) + ".txt", field_dump(rep.state.comps[i], c.kind, i));
  std::printf("energy %.12g  stationarity %.3g  iterations %d  status %s\n", rep.energy, rep.stationarity,
              rep.iterations, to_string(rep.status).c_str());
  if (!rep.converged())
    return report({kExitSolver, "max_iters", "descent stopped with status " + to_string(rep.status), {}});
  return 0;
}

int finish_sweep(const RunConfig& c, const std::vector<StudyRecord>& rows, const std::string& name, bool eps) {
  const fs::path dir = c.output.directory;
  emit(dir, name + ".csv", eps ? sweep_eps_csv(rows, c) : sweep_lambda_csv(rows, c));
  if (c.output.emit_plots) emit(dir, "plot_" + name + ".py", plot_script(name + ".csv", eps));
  if (c.output.dump_fields)
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (rows[r].state)
        for (int i = 0; i < rows[r].state->size(); ++i)
          emit(dir, name + "_row" + std::to_string(r + 1) + "_u" + std::to_string(i + 1) + ".txt",
               field_dump(rows[r].state->comps[i], rows[r].state->kind(), i));
  int failed = 0;
  for (const auto& r : rows) failed += r.ok() ? 0 : 1;
  if (failed > 0)
    return report({kExitSolver, "sweep_rows", std::to_string(failed) + " sweep row(s) did not converge", {}});
  return 0;
}

int run_sweep_eps(const RunConfig& c) {
  require_valid(c, ProblemKind::rescaled());
  if (c.study.eps_list.empty()) throw Failure{kExitConfig, "config", "study eps_list is empty", {}};
  return finish_sweep(c, sweep_eps(c.params, c.grid, c.solver, c.study), "sweep_eps", true);
}

int run_sweep_lambda(const RunConfig& c) {
  require_valid(c, ProblemKind::limit_system());
  if (c.study.lambda_list.empty()) throw Failure{kExitConfig, "config", "study lambda_list is empty", {}};
  return finish_sweep(c, sweep_lambda(c.params, c.grid, c.solver, c.study), "sweep_lambda", false);
}

int run_oracle_radial(const RunConfig& c) {
  if (c.radial.mu_list.empty()) throw Failure{kExitConfig, "config", "radial mu_list is empty", {}};
  std::vector<RadialRow> rows;
  for (double mu : c.radial.mu_list)
    rows.push_back({mu, solve_radial_limit_equation(mu, c.params.p, c.params.dim, c.radial.R, c.radial.n, c.solver)});
  const fs::path dir = c.output.directory;
  emit(dir, "oracle_radial.csv", radial_csv(rows, c));
  emit(dir, "oracle_radial_profile.csv", radial_profile_csv(rows.front(), c));
  for (const auto& r : rows)
    std::printf("mu %-8g kappa %.12g  status %s\n", r.mu, r.result.kappa, to_string(r.result.status).c_str());
  for (const auto& r : rows)
    if (!r.result.converged()) return report({kExitSolver, "max_iters", "radial descent did not converge", {}});
  return 0;
}

// Invariant suite on a reduced grid of the configured problem.
int run_check(const RunConfig& c) {
  require_valid(c, c.kind);
  RunConfig small = c;
  small.grid.n = std::min(c.grid.n, 24);
  const Grid grid = c.kind.tag == Kind::RescaledU ? rescaled_grid(c.params, c.params.eps, small.grid)
                                                   : Grid::cube(c.params.dim, c.grid.L, small.grid.n);
  auto problem = make_problem(c.params, c.kind, grid);
  const double p = problem->p();
  const int ell = problem->components();
  std::mt19937_64 rng(c.solver.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const SystemState base = init_bumps(problem, c.solver.seed, c.solver.noise);

  auto perturbed = [&](double amp) {
    SystemState s = base;
    for (auto& f : s.comps)
      for (double& v : f.values)
        if (v != 0.0) v *= 1.0 + amp * unif(rng);
    return s;
  };
  int failures = 0;
  auto line = [&](const std::string& name, bool ok, double value) {
    std::printf("%-28s %s  (%.3g)\n", name.c_str(), ok ? "PASS" : "FAIL", value);
    failures += ok ? 0 : 1;
  };

  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    const SystemState s = perturbed(0.5), dir = perturbed(0.5);
    for (int i = 0; i < ell; ++i) {
      const double h = 1e-4;
      SystemState plus = s, minus = s;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        plus.comps[i][k] += h * dir.comps[i][k];
        minus.comps[i][k] -= h * dir.comps[i][k];
      }
      const double fd = (energy(plus) - energy(minus)) / (2 * h);
      const double an = integrate_product(grad_component(s, i), dir.comps[i]);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
    }
  }
  line("gradient_vs_fd", worst < 1e-6, worst);

  const auto proj = nehari_project(base, c.solver.projection_tol);
  const auto coeffs = nehari_coeffs(proj.projected);
  double sum_a = 0.0;
  for (double a : coeffs.a) sum_a += a;
  const double e = energy(proj.projected);
  const double gap = std::abs(e - (p - 1) / (2 * p) * sum_a) / std::max(1.0, std::abs(e));
  line("nehari_identity", gap <= 1e-10, gap);

  const auto c0 = nehari_coeffs(base);
  const auto F = fibre_gradient(c0, p, proj.t);
  double fres = 0.0;
  for (int i = 0; i < ell; ++i) fres = std::max(fres, std::abs(F[i]) / c0.a[i]);
  line("projection_root", fres <= 1e-10, fres);

  const double best = fibre_energy(c0, p, proj.t);
  bool is_max = true;
  for (int m = 0; m < 20; ++m) {
    std::vector<double> t = proj.t;
    for (double& v : t) v *= 1.0 + 0.3 * unif(rng);
    is_max = is_max && fibre_energy(c0, p, t) <= best + 1e-14 * std::abs(best);
  }
  line("projection_global_max", is_max, best);

  const SystemState r1 = perturbed(1.0), r2 = perturbed(1.0);
  const double fg = integrate_product(r2.comps[0], apply_neg_laplacian(r1.comps[0]));
  const double gf = integrate_product(r1.comps[0], apply_neg_laplacian(r2.comps[0]));
  const double ibp = std::abs(fg - gf) / std::max(std::abs(fg), 1e-300);
  line("integration_by_parts", ibp <= 1e-12, ibp);

  const double ef = energy_from_coeffs(nehari_coeffs(r1), p);
  const double ed = energy(r1);
  const double rec = std::abs(ef - ed) / std::max(std::abs(ed), 1e-300);
  line("energy_from_coefficients", rec <= 1e-12, rec);

  if (failures > 0)
    return report({kExitCheck, "check_failed", std::to_string(failures) + " invariant check(s) failed", {}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-energy solutions of competitive weighted elliptic systems"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  long long seed = -1;
  std::string output;
  const char* names[] = {"solve", "sweep-eps", "sweep-lambda", "check", "oracle-radial"};
  const char* help[] = {"minimise the configured problem", "epsilon sweep of the rescaled system",
                        "lambda sweep of the limit system", "run the invariant suite",
                        "radial limit-equation levels over [radial] mu_list"};
  for (int k = 0; k < 5; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_option("--threads", threads, "worker threads (overrides [solver] threads)");
    sub->add_option("--seed", seed, "initialisation seed (overrides [solver] seed)");
    sub->add_option("--output", output, "output directory (overrides [output] directory)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : report({kExitConfig, "usage", e.what(), {}});
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    RunConfig c = load_config(config_path);
    if (threads > 0) c.solver.threads = threads;
    if (seed >= 0) c.solver.seed = static_cast<std::uint64_t>(seed);
    if (!output.empty()) c.output.directory = output;
    if (cmd == "solve") return run_solve(c);
    if (cmd == "sweep-eps") return run_sweep_eps(c);
    if (cmd == "sweep-lambda") return run_sweep_lambda(c);
    if (cmd == "check") return run_check(c);
    return run_oracle_radial(c);
  } catch (const Failure& f) {
    return report(f);
  } catch (const ConfigError& e) {
    return report({kExitConfig, e.kind(), e.what(), {}});
  } catch (const Error& e) {
    return report({kExitSolver, e.kind(), e.what(), {}});
  } catch (const std::exception& e) {
    return report({kExitSolver, "internal", e.what(), {}});
  }
}
