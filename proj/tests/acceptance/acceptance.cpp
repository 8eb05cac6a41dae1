// Prints one PASS/FAIL line per acceptance criterion. Exits 0 unless it crashes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "../support/brinkman_oracle.hpp"
#include "sblab/brinkman/brinkman.hpp"
#include "sblab/core/random.hpp"
#include "sblab/geometry/configuration.hpp"
#include "sblab/harness/report.hpp"
#include "sblab/harness/studies.hpp"
#include "sblab/harness/study_config.hpp"
#include "sblab/sampling/sampler.hpp"
#include "sblab/stokes/drag.hpp"
#include "sblab/stokes/many_sphere.hpp"
#include "sblab/stokes/stokeslet.hpp"
#include "sblab/transport/chaos.hpp"

using namespace sblab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... xs) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

int failures = 0;
std::FILE* log_file = nullptr;  // copy of the PASS/FAIL lines

void emit(const std::string& line) {
  std::fputs(line.c_str(), stdout);
  std::fflush(stdout);
  if (log_file) {
    std::fputs(line.c_str(), log_file);
    std::fflush(log_file);
  }
}

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !o.pass;
  emit(fmt("%s criterion %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), s));
}

const std::string source_dir = SBLAB_SOURCE_DIR;
const fs::path out_root = fs::path(SBLAB_BINARY_DIR) / "acceptance_out";

StudyConfig shipped(const std::string& name) {
  StudyConfig c = load_study_config(source_dir + "/configs/" + name + ".json");
  c.threads = default_threads();
  c.output_dir = (out_root / name).string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_outputs(const fs::path& a, const fs::path& b, std::string& which) {
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string name = e.path().filename().string();
    if (name == "timing.json") continue;
    if (slurp(e.path()) != slurp(b / name)) {
      which = name;
      return false;
    }
  }
  return true;
}

BrinkmanProblem block_problem(double L, int m, int lo, int s, std::uint64_t seed) {
  BrinkmanProblem pr;
  pr.L = L;
  pr.m = m;
  pr.j = GridField(L, m);
  pr.rho.assign(pr.points(), 0.0);
  pr.omega0 = Box{{-L / 2, -L / 2, -L / 2}, {L / 2, L / 2, L / 2}};
  Engine g(seed);
  for (int k = lo; k < lo + s; ++k)
    for (int j = lo; j < lo + s; ++j)
      for (int i = lo; i < lo + s; ++i) {
        const std::size_t p = pr.j.index(i, j, k);
        pr.rho[p] = 2.0 * uniform01(g);
        pr.j.set(p, {2 * uniform01(g) - 1, 2 * uniform01(g) - 1, 2 * uniform01(g) - 1});
      }
  return pr;
}

double max_diff(const GridField& a, const GridField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

}  // namespace

int main() {
  fs::create_directories(out_root);
  log_file = std::fopen((out_root / "acceptance.txt").string().c_str(), "w");
  emit(fmt("acceptance run, %u thread(s), outputs under %s\n", default_threads(), out_root.string().c_str()));

  criterion(1, "Stokeslet boundary identity", [] {
    Engine g(2024);
    double worst = 0.0;
    const double n = 100.0;
    for (int k = 0; k < 1000; ++k) {
      const Vec3 v{2 * uniform01(g) - 1, 2 * uniform01(g) - 1, 2 * uniform01(g) - 1};
      const Vec3 x = (1.0 / n) * uniform_on_sphere(g);
      worst = std::max(worst, norm(stokeslet_velocity(v, x, n) - v));
    }
    return Outcome{worst <= 1e-12, fmt("max |G[v](x) - v| = %.3g over 1000 points on |x| = 1/%g", worst, n)};
  });

  criterion(2, "Stokes drag 6 pi v / n", [] {
    Engine g(7);
    double worst = 0.0;
    for (double n : {1.0, 10.0, 1000.0})
      for (int k = 0; k < 20; ++k) {
        const Vec3 v{2 * uniform01(g) - 1, 2 * uniform01(g) - 1, 2 * uniform01(g) - 1};
        const Vec3 exact = (6.0 * pi / n) * v;
        worst = std::max(worst, norm(drag_integral(v, n, 26) - exact) / norm(exact));
      }
    return Outcome{worst <= 1e-6, fmt("max relative error %.3g with the 26-point rule", worst)};
  });

  criterion(3, "single-sphere Dirichlet energy (shells)", [] {
    const Vec3 v{0.3, -1.2, 0.7};
    const ParticleConfiguration c({{0.5, 0.5, 0.5}}, {v});
    EnergyOptions o;
    o.method = EnergyMethod::shells;
    const double e = dirichlet_energy(solve(c), o), exact = 6.0 * pi * norm2(v);
    const double rel = std::abs(e - exact) / exact;
    return Outcome{rel <= 0.005, fmt("energy %.8g vs 6 pi |v|^2 = %.8g, relative error %.3g", e, exact, rel)};
  });

  criterion(4, "chaos rate of W1", [] {
    ChaosOptions o;
    o.phase_max_n = 0;
    o.threads = default_threads();
    const ChaosStudy s = chaos_rate_study(PhaseDensity::uniform_point_mass({}), {64, 128, 256, 512, 1024, 2048, 4096},
                                          20, 4242, o);
    write_text_file((out_root / "chaos.csv").string(), chaos_csv(s));
    const double slope = s.position_fit.slope;
    return Outcome{slope >= -0.45 && slope <= -0.22, fmt("slope %.4f (+- %.4f), target [-0.45, -0.22]", slope,
                                                         s.position_fit.slope_stderr)};
  });

  criterion(5, "concentration bound shape", [] {
    const StudyConfig c = shipped("concentration");
    const StudyReport r = run_concentration_study(c);
    emit_report(r, c.output_dir);
    const auto& q = r.summary["ratio_alpha"];
    const std::size_t levels = q["levels_with_events"].get<std::size_t>();
    const double v = levels == c.n_list.size() ? q["max_over_min"].get<double>() : INFINITY;
    return Outcome{v < 4.0, fmt("max/min of P(O_alpha)/n^-0.4 over %zu levels = %.4f (< 4)", levels, v)};
  });

  // criteria 6 and 11 share one run of the default convergence study
  StudyReport conv;
  bool conv_ok = false;
  criterion(6, "convergence in mean", [&] {
    const StudyConfig c = shipped("convergence");
    conv = run_convergence_study(c);
    emit_report(conv, c.output_dir);
    conv_ok = true;
    const Table& t = conv.table("convergence");
    double e100 = NAN, e800 = NAN;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
      if (t.number(k, "n") == 100) e100 = t.number(k, "mean_error");
      if (t.number(k, "n") == 800) e800 = t.number(k, "mean_error");
    }
    const bool mono = conv.summary["monotone_within_2se"].get<bool>();
    const double ratio = e800 / e100;
    return Outcome{ratio <= 0.6 && mono && conv.failures == 0,
                   fmt("mean error %.5g at n=100, %.5g at n=800, ratio %.3f (<= 0.6); monotone within 2 SE: %s; "
                       "fitted slope %.3f",
                       e100, e800, ratio, mono ? "yes" : "no", conv.summary["error_fit"]["slope"].get<double>())};
  });

  criterion(7, "cell-problem scaling", [] {
    const StudyConfig c = shipped("constants");
    std::vector<double> inv, err;
    for (double dm : c.constants.cell_dm) {
      const auto r = cell_problem_experiment(c.constants.cell_width_factor * dm, c.constants.cell_m, c.constants.cell_n,
                                             dm, WallProfile::constant, c.master_seed);
      inv.push_back(1.0 / dm);
      err.push_back(r.error);
    }
    const auto fit = loglog_fit(inv, err);
    const double s = fit ? fit->slope : NAN;
    return Outcome{s >= 0.3 && s <= 0.7,
                   fmt("slope %.4f of log error vs log(1/d_m), errors %.4g %.4g %.4g, target [0.3, 0.7]", s, err[0],
                       err[1], err[2])};
  });

  criterion(8, "Brinkman sanity", [] {
    const double tol = 1e-8;
    // (a) constant data over the periodic box
    BrinkmanProblem a = block_problem(1.0, 16, 0, 0, 1);
    a.mode = BoxMode::periodic;
    const double rho0 = 1.7;
    const Vec3 j0{0.4, -1.0, 2.5};
    std::fill(a.rho.begin(), a.rho.end(), rho0);
    for (std::size_t p = 0; p < a.points(); ++p) a.j.set(p, j0);
    const auto sa = solve_brinkman(a, tol);
    double ea = 0.0;
    for (std::size_t p = 0; p < a.points(); ++p) ea = std::max(ea, norm(sa.field.at(p) - j0 / rho0));
    ea /= norm(j0 / rho0);
    // (b) rho = 0 reduces to Stokes
    BrinkmanProblem b = block_problem(1.0, 16, 5, 6, 2);
    std::fill(b.rho.begin(), b.rho.end(), 0.0);
    const GridField us = solve_stokes(b.j);
    const double eb = max_diff(solve_brinkman(b, tol).field, us) / us.max_abs();
    // (c) dense direct solve of the same discrete system
    const BrinkmanProblem cpr = block_problem(1.0, 16, 5, 6, 42);
    const GridField ref = sblab_test::dense_brinkman_reference(cpr, 5, 6);
    const double ec = max_diff(solve_brinkman(cpr, tol).field, ref) / ref.max_abs();
    return Outcome{ea <= tol && eb <= tol && ec <= 10 * tol,
                   fmt("(a) %.3g <= %.0e, (b) %.3g <= %.0e, (c) %.3g <= %.0e (relative sup errors)", ea, tol, eb, tol,
                       ec, 10 * tol)};
  });

  criterion(9, "Poincare-Wirtinger scaling", [] {
    const StudyConfig c = shipped("constants");
    const StudyReport r = run_constants_study(c);
    emit_report(r, c.output_dir);
    const double slope = r.summary["pw_fit"]["slope"].get<double>();
    const double cube_err = r.summary["full_cube"]["relative_error"].get<double>();
    const Table& t = r.table("pw_scaling");
    std::string vals;
    for (std::size_t k = 0; k < t.rows.size(); ++k) vals += fmt(" %.4f", t.number(k, "pw_estimate"));
    return Outcome{slope >= 0.7 && slope <= 1.3 && cube_err <= 0.03,
                   fmt("slope %.4f (target [0.7, 1.3]); estimates%s; full cube %.5f vs 2/pi, relative error %.2g",
                       slope, vals.c_str(), r.summary["full_cube"]["estimate"].get<double>(), cube_err)};
  });

  criterion(10, "neighbor count bound", [] {
    const PhaseDensity f = PhaseDensity::uniform_point_mass({});
    int worst = 0;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      const auto [c, rep] = sample_conditioned(f, 200, derive_seed(99, 200, r));
      for (int k : neighbor_counts(c)) worst = std::max(worst, k);
    }
    return Outcome{worst <= 64, fmt("max neighbor count %d over 1000 configurations (<= 64)", worst)};
  });

  criterion(11, "energy bound audit", [&] {
    if (!conv_ok) return Outcome{false, "convergence study did not complete"};
    const auto& e = conv.summary["energy_ratio"];
    const double mx = e["max"].get<double>(), md = e["median"].get<double>();
    return Outcome{std::isfinite(mx) && mx <= 10.0 * md,
                   fmt("%zu replicas, max ratio %.4g, median %.4g, max/median %.3f (<= 10)",
                       e["count"].get<std::size_t>(), mx, md, mx / md)};
  });

  criterion(12, "determinism", [] {
    std::string which;
    StudyConfig k = shipped("concentration");
    const fs::path a = out_root / "concentration", b = out_root / "concentration_rerun";
    emit_report(run_concentration_study(k), b.string());
    if (!fs::exists(a / "report.json")) emit_report(run_concentration_study(k), a.string());
    if (!same_outputs(a, b, which)) return Outcome{false, "concentration rerun differs in " + which};
    StudyConfig s = shipped("smoke");
    const fs::path c = out_root / "smoke_1", d = out_root / "smoke_2";
    emit_report(run_convergence_study(s), c.string());
    s.threads = 1;
    emit_report(run_convergence_study(s), d.string());
    if (!same_outputs(c, d, which)) return Outcome{false, "convergence rerun differs in " + which};
    StudyConfig bnd = shipped("smoke");
    bnd.n_list = {100};
    emit_report(run_bound_audit(bnd), (out_root / "bounds_1").string());
    emit_report(run_bound_audit(bnd), (out_root / "bounds_2").string());
    if (!same_outputs(out_root / "bounds_1", out_root / "bounds_2", which))
      return Outcome{false, "bound audit rerun differs in " + which};
    return Outcome{true, "concentration, convergence and bound-audit reruns are byte-identical (CSV, JSON, SVG)"};
  });

  emit(fmt("%d of 12 criteria failed\n", failures));
  if (log_file) std::fclose(log_file);
  return 0;
}
