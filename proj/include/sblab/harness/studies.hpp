#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sblab/annulus/annulus.hpp"
#include "sblab/brinkman/brinkman.hpp"
#include "sblab/core/parallel.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/geometry/concentration.hpp"
#include "sblab/harness/report.hpp"
#include "sblab/harness/study_config.hpp"
#include "sblab/sampling/sampler.hpp"
#include "sblab/stokes/cell_problem.hpp"
#include "sblab/stokes/many_sphere.hpp"
#include "sblab/transport/holder.hpp"
#include "sblab/transport/wasserstein.hpp"

namespace sblab {

/// e1(alpha) = min((1 - alpha)/95, (3 alpha - 2)/2).
inline double composite_exponent_e1(double alpha) {
  check_alpha(alpha);
  return std::min((1.0 - alpha) / 95.0, (3.0 * alpha - 2.0) / 2.0);
}

/// C1 of the marginal bound, estimated by the sup of the limit density
/// (never below 1).
inline double c1_estimate(const PhaseDensity& f) { return std::max(1.0, f.rho_sup()); }

/// Smallness gate eta < 1 / (2 e C1).
inline double eta_threshold(const PhaseDensity& f) { return 1.0 / (2.0 * std::exp(1.0) * c1_estimate(f)); }

/// Stream key shared by every study, so replica (n, r) sees the same
/// configuration in all of them.
inline std::uint64_t replica_seed(const StudyConfig& cfg, std::size_t n, std::size_t r) {
  return derive_seed(cfg.master_seed, n, r);
}

struct ReplicaRecord {
  std::size_t n = 0, r = 0;
  std::uint64_t seed = 0;
  std::string status;  // solved, concentrated, saturated, nonconverged, sampled
  std::string message;
  std::uint64_t attempts = 0;
  double d_min = 0.0;
  bool in_O_alpha = false, in_O_lambda_M = false;
  std::size_t max_cell_count = 0;
  double error = 0.0, error_se = 0.0;
  double w1 = 0.0;
  double flux_lower = 0.0, flux_upper = 0.0;
  double energy_lhs = 0.0, energy_rhs = 0.0, energy_ratio = 0.0;
  double mean_v2 = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double bound_rhs = 0.0, bound_ratio = 0.0;

  bool solved() const { return status == "solved"; }
  bool concentrated() const { return in_O_alpha || in_O_lambda_M; }
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

inline double max_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::max_element(v.begin(), v.end());
}

inline nlohmann::json json_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

inline nlohmann::json fit_json(const std::optional<LinearFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"slope_stderr", f->slope_stderr}};
}

/// Brinkman reference u[rho, j] on the study box.
inline BrinkmanSolution reference_field(const StudyConfig& cfg) {
  const BrinkmanProblem pr = rasterize(cfg.distribution, cfg.box.half_width, cfg.box.grid_m, BoxMode::free_space);
  return solve_brinkman(pr, cfg.box.tol, cfg.box.max_iter);
}

/// Samples, classifies and (if `ref` is given and the replica is not
/// concentrated) solves one replica. Saturation and non-convergence are
/// recorded in the returned record.
inline ReplicaRecord run_replica(const StudyConfig& cfg, std::size_t n, std::size_t r, const GridField* ref) {
  ReplicaRecord rec;
  rec.n = n;
  rec.r = r;
  rec.seed = replica_seed(cfg, n, r);
  const auto& P = cfg.parameters;
  ParticleConfiguration c;
  try {
    auto [conf, rep] = sample_conditioned(cfg.distribution, n, rec.seed);
    c = std::move(conf);
    rec.attempts = rep.attempts;
  } catch (const SaturationError& e) {
    rec.status = "saturated";
    rec.message = e.what();
    rec.attempts = e.attempts;
    return rec;
  }
  const ConcentrationReport cr = classify_concentration(c, P.alpha, P.beta, P.eta);
  rec.d_min = cr.d_min;
  rec.in_O_alpha = cr.in_O_alpha;
  rec.in_O_lambda_M = cr.in_O_lambda_M;
  rec.max_cell_count = cr.max_cell_count;
  for (const Vec3& v : c.velocities) rec.mean_v2 += norm2(v) / static_cast<double>(n);
  if (!ref) {
    rec.status = "sampled";
    return rec;
  }
  if (cr.concentrated()) {
    rec.status = "concentrated";
    return rec;
  }
  try {
    SolveOptions so = cfg.solver;
    so.threads = 1;
    const StokesSolution sol = solve(c, so);
    rec.iterations = sol.iterations;
    rec.residual = sol.residual;
    const BallError be = l2_error_ball(sol, *ref, cfg.ball_radius, cfg.quad_points, derive_seed(rec.seed, 0xB411, 0));
    rec.error = be.value;
    rec.error_se = be.std_error;
    EnergyOptions eo = cfg.energy;
    eo.threads = 1;
    const EnergyAudit ea = energy_bound_audit(sol, eo);
    rec.energy_lhs = ea.lhs;
    rec.energy_rhs = ea.rhs;
    rec.energy_ratio = ea.ratio;
  } catch (const NonConvergenceError& e) {
    rec.status = "nonconverged";
    rec.message = e.what();
    return rec;
  }
  // reference draws of rho carry the payload j / rho = E[v | x]
  const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.flux.reference_factor * n)));
  const auto draws = sample_iid(cfg.distribution, m, derive_seed(rec.seed, 0x5EF, 0));
  std::vector<Vec3> ys;
  ys.reserve(m);
  for (const auto& d : draws) ys.push_back(d.x);
  EmpiricalMeasure ref_measure = EmpiricalMeasure::uniform(ys);
  for (const Vec3& y : ys) ref_measure.payload.push_back(cfg.distribution.mean_velocity(y));
  const EmpiricalMeasure emp = EmpiricalMeasure::density(c);
  rec.w1 = w1_discrete(emp, ref_measure);
  const DualInterval fd =
      flux_distance(emp, ref_measure, P.theta, cfg.flux.dictionary, derive_seed(rec.seed, 0xF10, 0));
  rec.flux_lower = fd.lower;
  rec.flux_upper = fd.upper;
  rec.status = "solved";
  return rec;
}

inline std::vector<ReplicaRecord> run_replicas(const StudyConfig& cfg, const GridField* ref) {
  std::vector<ReplicaRecord> out(cfg.n_list.size() * cfg.reps);
  parallel_for(out.size(), cfg.threads, [&](std::size_t k) {
    out[k] = run_replica(cfg, cfg.n_list[k / cfg.reps], k % cfg.reps, ref);
  });
  return out;
}

inline Table replica_table(const std::vector<ReplicaRecord>& recs) {
  Table t;
  t.name = "replicas";
  t.columns = {"n",          "replica",     "seed",         "status",       "attempts",   "d_min",
               "in_O_alpha", "in_O_lambda", "max_cell",     "error",        "error_se",   "w1",
               "flux_lower", "flux_upper",  "energy_lhs",   "energy_rhs",   "energy_ratio", "mean_v2",
               "iterations", "residual",    "bound_rhs",    "bound_ratio",  "message"};
  for (const auto& r : recs)
    t.add({r.n, r.r, r.seed, r.status, r.attempts, json_or_null(r.d_min), r.in_O_alpha ? 1 : 0,
           r.in_O_lambda_M ? 1 : 0, r.max_cell_count, r.error, r.error_se, r.w1, r.flux_lower, r.flux_upper,
           r.energy_lhs, r.energy_rhs, r.energy_ratio, r.mean_v2, r.iterations, r.residual, r.bound_rhs,
           r.bound_ratio, r.message});
  return t;
}

inline nlohmann::json provenance(const StudyConfig& cfg) {
  return {{"master_seed", cfg.master_seed}, {"version", generated::version}};
}

/// Config echo without the fields that do not change results.
inline nlohmann::json config_echo(const StudyConfig& cfg) {
  nlohmann::json j = study_config_to_json(cfg);
  j.erase("threads");
  j.erase("output_dir");
  return j;
}

inline std::size_t count_failures(const std::vector<ReplicaRecord>& recs) {
  return static_cast<std::size_t>(std::count_if(recs.begin(), recs.end(), [](const ReplicaRecord& r) {
    return r.status == "saturated" || r.status == "nonconverged";
  }));
}

template <typename Fn>
MeanEstimate mean_over(const std::vector<const ReplicaRecord*>& rs, Fn&& get) {
  std::vector<double> xs;
  for (const auto* r : rs) xs.push_back(get(*r));
  return mean_and_stderr(xs);
}

}  // namespace detail

/// Monte-Carlo convergence study of ||U_N - u||_{L2(B(0,R))} with the
/// composite bound W1^(1/57) + flux^(1/3) + n^(-e1).
inline StudyReport run_convergence_study(const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyReport rep;
  rep.study = "convergence";
  rep.config = detail::config_echo(cfg);
  const BrinkmanSolution ref = detail::reference_field(cfg);
  const auto recs = detail::run_replicas(cfg, &ref.field);
  rep.failures = detail::count_failures(recs);

  const double e1 = composite_exponent_e1(cfg.parameters.alpha);
  Table t;
  t.name = "convergence";
  t.columns = {"n",           "reps",          "solved",        "concentrated",   "failed",
               "concentrated_fraction",        "mean_error",    "se_error",       "mean_w1",
               "se_w1",       "mean_flux_lower", "se_flux_lower", "mean_flux_upper", "se_flux_upper",
               "mean_energy_ratio", "se_energy_ratio", "composite_bound", "lhs_over_bound", "normalized_ratio"};
  std::vector<double> ns, means, ses, ratios;
  std::vector<double> energy_ratios;
  std::vector<MeanEstimate> err_rows;
  struct Row {
    std::size_t n, solved, conc, failed;
    MeanEstimate err, w1, fl, fu, er;
    double bound;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    std::vector<const ReplicaRecord*> solved;
    Row row{cfg.n_list[i], 0, 0, 0, {}, {}, {}, {}, {}, 0.0};
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const ReplicaRecord& rec = recs[i * cfg.reps + r];
      if (rec.solved()) {
        solved.push_back(&rec);
        energy_ratios.push_back(rec.energy_ratio);
      }
      if (rec.status == "concentrated") ++row.conc;
      if (rec.status == "saturated" || rec.status == "nonconverged") ++row.failed;
    }
    row.solved = solved.size();
    row.err = detail::mean_over(solved, [](const ReplicaRecord& r) { return r.error; });
    row.w1 = detail::mean_over(solved, [](const ReplicaRecord& r) { return r.w1; });
    row.fl = detail::mean_over(solved, [](const ReplicaRecord& r) { return r.flux_lower; });
    row.fu = detail::mean_over(solved, [](const ReplicaRecord& r) { return r.flux_upper; });
    row.er = detail::mean_over(solved, [](const ReplicaRecord& r) { return r.energy_ratio; });
    row.bound = std::pow(row.w1.mean, 1.0 / 57.0) + std::cbrt(row.fu.mean) +
                std::pow(static_cast<double>(row.n), -e1);
    rows.push_back(row);
  }
  // one global constant: C = max lhs / bound, so every normalised ratio is <= 1
  double C = 0.0;
  for (const auto& row : rows)
    if (row.solved > 0 && row.bound > 0.0) C = std::max(C, row.err.mean / row.bound);
  for (const auto& row : rows) {
    const bool any = row.solved > 0;
    const double ratio = any && row.bound > 0.0 ? row.err.mean / row.bound : std::numeric_limits<double>::quiet_NaN();
    const double norm = C > 0.0 ? ratio / C : (any ? 0.0 : ratio);
    auto val = [&](double x) { return any ? nlohmann::json(x) : nlohmann::json(); };
    t.add({row.n, cfg.reps, row.solved, row.conc, row.failed,
           static_cast<double>(row.conc) / static_cast<double>(cfg.reps), val(row.err.mean), val(row.err.std_error),
           val(row.w1.mean), val(row.w1.std_error), val(row.fl.mean), val(row.fl.std_error), val(row.fu.mean),
           val(row.fu.std_error), val(row.er.mean), val(row.er.std_error), val(row.bound),
           detail::json_or_null(ratio), detail::json_or_null(norm)});
    if (any) {
      ns.push_back(static_cast<double>(row.n));
      means.push_back(row.err.mean);
      ses.push_back(row.err.std_error);
    }
  }
  // non-increasing within two pooled standard errors
  bool monotone = true;
  for (std::size_t k = 1; k < means.size(); ++k)
    if (means[k] > means[k - 1] + 2.0 * std::hypot(ses[k], ses[k - 1])) monotone = false;
  const auto fit = loglog_fit(ns, means);
  const double emax = detail::max_of(energy_ratios), emed = detail::median(energy_ratios);

  rep.summary["provenance"] = detail::provenance(cfg);
  rep.summary["e1"] = e1;
  rep.summary["error_fit"] = detail::fit_json(fit);
  rep.summary["fitted_constant"] = C;
  rep.summary["monotone_within_2se"] = monotone;
  rep.summary["brinkman"] = {{"iterations", ref.iterations},
                             {"residual", ref.residual},
                             {"interpolation_bound", ref.field.interpolation_error_bound()},
                             {"max_abs", ref.field.max_abs()}};
  rep.summary["energy_ratio"] = {{"count", energy_ratios.size()},
                                 {"max", detail::json_or_null(emax)},
                                 {"median", detail::json_or_null(emed)},
                                 {"max_over_median", detail::json_or_null(emed > 0.0 ? emax / emed : NAN)}};
  rep.summary["failures"] = rep.failures;

  Plot p;
  p.name = "convergence_error";
  p.title = "mean L2(B(0,R)) error against n";
  p.xlabel = "n";
  p.ylabel = "error";
  PlotSeries s{"mean error", ns, means, {}, {}};
  for (std::size_t k = 0; k < ns.size(); ++k) {
    s.lower.push_back(means[k] - 2.0 * ses[k]);
    s.upper.push_back(means[k] + 2.0 * ses[k]);
  }
  p.series.push_back(s);
  if (fit) {
    p.lines.push_back({"least-squares fit", fit->slope, fit->intercept});
    p.annotation = "slope = " + format_double(fit->slope);
  }
  rep.plots.push_back(p);
  rep.tables.push_back(t);
  rep.tables.push_back(detail::replica_table(recs));
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// One-sided 95% upper limit for zero observed events.
inline double zero_event_upper(std::size_t trials) { return 1.0 - std::pow(0.05, 1.0 / static_cast<double>(trials)); }

/// Frequencies of the close-pair and crowded-cell events with Wilson
/// intervals, the ratio against n^(2 - 3 alpha), and the slope of the log
/// cell frequency against n^beta.
inline StudyReport run_concentration_study(const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyReport rep;
  rep.study = "concentration";
  rep.config = detail::config_echo(cfg);
  const auto& P = cfg.parameters;
  const auto recs = detail::run_replicas(cfg, nullptr);
  rep.failures = detail::count_failures(recs);

  Table t;
  t.name = "concentration";
  t.columns = {"n",          "reps",       "sampled",     "M_N",         "lambda_N",    "count_alpha",
               "freq_alpha", "lo_alpha",   "hi_alpha",    "one_sided_alpha", "count_cell", "freq_cell",
               "lo_cell",    "hi_cell",    "one_sided_cell", "count_union", "freq_union", "lo_union",
               "hi_union",   "rate",       "ratio_alpha", "ratio_lo",    "ratio_hi"};
  std::vector<double> ns, fa, la, ha, ratios, cell_x, cell_ly;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const std::size_t n = cfg.n_list[i];
    std::size_t trials = 0, ca = 0, cc = 0, cu = 0;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const auto& rec = recs[i * cfg.reps + r];
      if (rec.status != "sampled") continue;
      ++trials;
      ca += rec.in_O_alpha;
      cc += rec.in_O_lambda_M;
      cu += rec.concentrated();
    }
    const auto th = concentration_parameters(n, P.alpha, P.beta, P.eta);
    auto interval = [&](std::size_t k) {
      if (trials == 0) return std::pair<double, double>{0.0, 1.0};
      if (k == 0) return std::pair<double, double>{0.0, zero_event_upper(trials)};
      return wilson_interval(k, trials);
    };
    const double denom = std::max<std::size_t>(trials, 1);
    const auto ia = interval(ca), ic = interval(cc), iu = interval(cu);
    const double rate = std::pow(static_cast<double>(n), 2.0 - 3.0 * P.alpha);
    const double f_a = ca / denom, f_c = cc / denom;
    t.add({n, cfg.reps, trials, th.cell_count, th.cell_width, ca, f_a, ia.first, ia.second, ca == 0 ? 1 : 0, cc, f_c,
           ic.first, ic.second, cc == 0 ? 1 : 0, cu, cu / denom, iu.first, iu.second, rate, f_a / rate,
           ia.first / rate, ia.second / rate});
    ns.push_back(static_cast<double>(n));
    fa.push_back(f_a);
    la.push_back(ia.first);
    ha.push_back(ia.second);
    if (ca > 0) ratios.push_back(f_a / rate);
    if (cc > 0) {
      cell_x.push_back(std::pow(static_cast<double>(n), P.beta));
      cell_ly.push_back(std::log(f_c));
    }
  }
  std::optional<LinearFit> cell_fit;
  if (cell_x.size() >= 2 && cell_x.front() != cell_x.back()) cell_fit = least_squares(cell_x, cell_ly);
  const double thr = eta_threshold(cfg.distribution);
  const bool eta_ok = P.eta < thr;
  rep.summary["provenance"] = detail::provenance(cfg);
  rep.summary["eta_threshold"] = thr;
  rep.summary["c1_estimate"] = c1_estimate(cfg.distribution);
  rep.summary["eta_gate_ok"] = eta_ok;
  rep.summary["warnings"] = nlohmann::json::array();
  if (!eta_ok)
    rep.summary["warnings"].push_back("eta = " + format_double(P.eta) + " is not below 1/(2 e C1) = " +
                                      format_double(thr) + "; crowded-cell bound not in force");
  const double rmax = detail::max_of(ratios), rmin = ratios.empty() ? NAN : *std::min_element(ratios.begin(), ratios.end());
  rep.summary["ratio_alpha"] = {{"max", detail::json_or_null(rmax)},
                                {"min", detail::json_or_null(rmin)},
                                {"max_over_min", detail::json_or_null(rmax / rmin)},
                                {"levels_with_events", ratios.size()}};
  rep.summary["cell_log_frequency_vs_n_beta"] = detail::fit_json(cell_fit);
  rep.summary["failures"] = rep.failures;

  Plot p;
  p.name = "concentration_probability";
  p.title = "close-pair frequency against n";
  p.xlabel = "n";
  p.ylabel = "P(O_alpha)";
  p.series.push_back({"frequency (Wilson 95%)", ns, fa, la, ha});
  if (std::isfinite(rmax)) {
    p.lines.push_back({"C n^(2 - 3 alpha), C = max ratio", 2.0 - 3.0 * P.alpha, std::log(rmax)});
    p.annotation = "max/min ratio = " + format_double(rmax / rmin);
  }
  rep.plots.push_back(p);
  rep.tables.push_back(t);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// rhs bracket of the deterministic estimate for a non-concentrated
/// configuration: (1/eta)[flux + (1 + mean|V|^2)^(5/4) ((1 + |rho|_2) / delta^(1/3)
///   + delta^6 (n^(-(1 - alpha)/5) + min(2, W1^(1/2))))].
inline double bound_audit_rhs(const ReplicaRecord& r, const StudyConfig& cfg, double rho_l2) {
  const auto& P = cfg.parameters;
  const double n = static_cast<double>(r.n);
  const double rho_dual = std::min(2.0, std::sqrt(r.w1));
  return (r.flux_upper + std::pow(1.0 + r.mean_v2, 1.25) *
                             ((1.0 + rho_l2) / std::cbrt(P.delta) +
                              std::pow(P.delta, 6) * (std::pow(n, -(1.0 - P.alpha) / 5.0) + rho_dual))) /
         P.eta;
}

inline StudyReport run_bound_audit(const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyReport rep;
  rep.study = "bounds";
  rep.config = detail::config_echo(cfg);
  StudyConfig c2 = cfg;
  c2.parameters.theta = 0.5;  // the bracket uses the C^{0,1/2} dual norm
  const BrinkmanSolution ref = detail::reference_field(c2);
  auto recs = detail::run_replicas(c2, &ref.field);
  rep.failures = detail::count_failures(recs);
  const double rho_l2 = std::sqrt(cfg.distribution.rho_sup());  // uniform law: |rho|_2^2 = rho_sup
  std::vector<double> ratios, eratios;
  for (auto& r : recs) {
    if (!r.solved()) continue;
    r.bound_rhs = bound_audit_rhs(r, c2, rho_l2);
    r.bound_ratio = r.bound_rhs > 0.0 ? r.error / r.bound_rhs : 0.0;
    ratios.push_back(r.bound_ratio);
    eratios.push_back(r.energy_ratio);
  }
  Table t;
  t.name = "bounds";
  t.columns = {"n", "reps", "solved", "max_ratio", "median_ratio", "max_over_median", "max_energy_ratio",
               "median_energy_ratio"};
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    std::vector<double> a, b;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const auto& rec = recs[i * cfg.reps + r];
      if (!rec.solved()) continue;
      a.push_back(rec.bound_ratio);
      b.push_back(rec.energy_ratio);
    }
    const double amax = detail::max_of(a), amed = detail::median(a);
    t.add({cfg.n_list[i], cfg.reps, a.size(), detail::json_or_null(amax), detail::json_or_null(amed),
           detail::json_or_null(amed > 0.0 ? amax / amed : NAN), detail::json_or_null(detail::max_of(b)),
           detail::json_or_null(detail::median(b))});
  }
  const double m = detail::max_of(ratios), md = detail::median(ratios);
  const double em = detail::max_of(eratios), emd = detail::median(eratios);
  rep.summary["provenance"] = detail::provenance(cfg);
  rep.summary["ratio"] = {{"count", ratios.size()},
                          {"max", detail::json_or_null(m)},
                          {"median", detail::json_or_null(md)},
                          {"max_over_median", detail::json_or_null(md > 0.0 ? m / md : NAN)}};
  rep.summary["energy_ratio"] = {{"count", eratios.size()},
                                 {"max", detail::json_or_null(em)},
                                 {"median", detail::json_or_null(emd)},
                                 {"max_over_median", detail::json_or_null(emd > 0.0 ? em / emd : NAN)}};
  rep.summary["failures"] = rep.failures;
  rep.tables.push_back(t);
  rep.tables.push_back(detail::replica_table(recs));
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// Annulus maps, Poincare-Wirtinger scaling and the cell-problem scaling.
inline StudyReport run_constants_study(const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& K = cfg.constants;
  StudyReport rep;
  rep.study = "constants";
  rep.config = detail::config_echo(cfg);

  Table maps;
  maps.name = "map_audit";
  maps.columns = {"delta", "k", "c_chi1", "c_chi2", "c_sigma1", "c_sigma2", "inverse_error", "pass"};
  for (double d : K.deltas) {
    const AnnulusMap mp(d);
    const MapAudit a = map_derivative_audit(mp, static_cast<int>(K.map_samples));
    maps.add({d, mp.k(), a.c_chi1, a.c_chi2, a.c_sigma1, a.c_sigma2, a.inverse_error, a.pass ? 1 : 0});
  }

  const auto runs = pw_scaling_study(K.deltas, K.grid_m, cfg.threads);
  const PwEstimate cube = pw_constant_full_cube(K.grid_m);
  Table pw;
  pw.name = "pw_scaling";
  pw.columns = {"delta", "grid_m", "lambda1", "pw_estimate", "iterations"};
  std::vector<double> ds, es;
  for (const auto& r : runs) {
    pw.add({r.delta, r.grid_m, r.lambda1, r.estimate, r.iterations});
    ds.push_back(r.delta);
    es.push_back(r.estimate);
  }
  const auto pw_fit = loglog_fit(ds, es);

  Table cell;
  cell.name = "cell_problem";
  cell.columns = {"d_m", "inverse_d_m", "width", "error", "bound_rhs", "fit_residual", "condition"};
  std::vector<double> inv, errs;
  for (double dm : K.cell_dm) {
    const CellProblemResult r = cell_problem_experiment(K.cell_width_factor * dm, K.cell_m, K.cell_n, dm,
                                                        WallProfile::constant, cfg.master_seed);
    cell.add({dm, 1.0 / dm, K.cell_width_factor * dm, r.error, r.bound_rhs, r.fit_residual, r.condition});
    inv.push_back(1.0 / dm);
    errs.push_back(r.error);
  }
  const auto cell_fit = loglog_fit(inv, errs);

  rep.summary["provenance"] = detail::provenance(cfg);
  rep.summary["pw_fit"] = detail::fit_json(pw_fit);
  rep.summary["full_cube"] = {{"estimate", cube.estimate}, {"two_over_pi", 2.0 / pi},
                              {"relative_error", std::abs(cube.estimate - 2.0 / pi) / (2.0 / pi)}};
  rep.summary["cell_fit"] = detail::fit_json(cell_fit);

  Plot pp;
  pp.name = "pw_scaling";
  pp.title = "Poincare-Wirtinger estimate against delta";
  pp.xlabel = "delta";
  pp.ylabel = "C_PW estimate";
  pp.series.push_back({"estimate", ds, es, {}, {}});
  if (pw_fit) {
    pp.lines.push_back({"least-squares fit", pw_fit->slope, pw_fit->intercept});
    pp.annotation = "slope = " + format_double(pw_fit->slope);
  }
  Plot cp;
  cp.name = "cell_problem";
  cp.title = "cell-problem gradient error against 1/d_m";
  cp.xlabel = "1/d_m";
  cp.ylabel = "error";
  cp.series.push_back({"error", inv, errs, {}, {}});
  if (cell_fit) {
    cp.lines.push_back({"least-squares fit", cell_fit->slope, cell_fit->intercept});
    cp.annotation = "slope = " + format_double(cell_fit->slope);
  }
  rep.plots = {pp, cp};
  rep.tables = {maps, pw, cell};
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline StudyReport run_study(const StudyConfig& cfg) {
  switch (cfg.study) {
    case StudyKind::convergence:
      return run_convergence_study(cfg);
    case StudyKind::concentration:
      return run_concentration_study(cfg);
    case StudyKind::bounds:
      return run_bound_audit(cfg);
    case StudyKind::constants:
      return run_constants_study(cfg);
  }
  throw ConfigError("unknown study");
}

}  // namespace sblab
