#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sblab/brinkman/brinkman.hpp"
#include "sblab/geometry/concentration.hpp"
#include "sblab/geometry/config_io.hpp"
#include "sblab/harness/report.hpp"
#include "sblab/harness/studies.hpp"
#include "sblab/harness/study_config.hpp"
#include "sblab/sampling/sampler.hpp"
#include "sblab/stokes/many_sphere.hpp"
#include "sblab/transport/chaos.hpp"

namespace fs = std::filesystem;
using namespace sblab;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  bool allow_invalid = false;
  std::string input;
  std::size_t n = 0;
  std::string study;
};

StudyConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  StudyConfig c = load_study_config(g.config);
  if (g.seed) c.master_seed = *g.seed;
  if (!g.out.empty()) c.output_dir = g.out;
  if (g.threads) c.threads = *g.threads;
  return c;
}

std::string out_dir(const Globals& g, const std::string& fallback) {
  const std::string d = g.out.empty() ? fallback : g.out;
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec || !fs::is_directory(d)) throw IoError("cannot create output directory " + d);
  return d;
}

std::string in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

int cmd_sample(const Globals& g) {
  const StudyConfig c = load(g);
  const std::size_t n = g.n ? g.n : c.n_list.front();
  const auto [conf, rep] = sample_conditioned(c.distribution, n, c.master_seed);
  const std::string d = out_dir(g, c.output_dir);
  write_text_file(in(d, "configuration.json"), configuration_to_json(conf).dump(2) + "\n");
  const nlohmann::json s{{"n", n},
                         {"seed", rep.seed},
                         {"attempts", rep.attempts},
                         {"acceptance_rate", rep.acceptance_rate},
                         {"partition_estimate", rep.partition_estimate}};
  write_text_file(in(d, "sampler.json"), s.dump(2) + "\n");
  std::cout << "sampled n=" << n << " in " << rep.attempts << " attempt(s) -> " << d << "\n";
  return 0;
}

int cmd_solve(const Globals& g) {
  if (g.input.empty()) throw ConfigError("solve: --input <configuration.json> is required");
  const ParticleConfiguration conf = configuration_from_json(read_json_file(g.input), g.allow_invalid);
  SolveOptions so;
  EnergyOptions eo;
  std::string dflt = "sblab_out";
  if (!g.config.empty()) {
    const StudyConfig c = load(g);
    so = c.solver;
    so.threads = c.threads;
    eo = c.energy;
    eo.threads = c.threads;
    dflt = c.output_dir;
  } else if (g.threads) {
    so.threads = eo.threads = *g.threads;
  }
  const StokesSolution sol = solve(conf, so);
  const EnergyAudit ea = energy_bound_audit(sol, eo);
  const std::string d = out_dir(g, dflt);
  nlohmann::json j = solution_to_json(sol, g.input);
  j["energy"] = {{"lhs", ea.lhs}, {"rhs", ea.rhs}, {"ratio", ea.ratio}};
  write_text_file(in(d, "solution.json"), j.dump(2) + "\n");
  std::cout << "solved n=" << conf.n() << " iterations=" << sol.iterations << " residual=" << sol.residual << "\n";
  return 0;
}

int cmd_brinkman(const Globals& g) {
  const StudyConfig c = load(g);
  const BrinkmanProblem pr = rasterize(c.distribution, c.box.half_width, c.box.grid_m, BoxMode::free_space);
  const BrinkmanSolution s = solve_brinkman(pr, c.box.tol, c.box.max_iter);
  const std::string d = out_dir(g, c.output_dir);
  write_grid_field(s.field, in(d, "u"));
  write_grid_slice_csv(s.field, in(d, "u_slice.csv"), c.box.grid_m / 2);
  const BrinkmanEnergy e = brinkman_energy(pr, s.field);
  const nlohmann::json j{{"iterations", s.iterations},
                         {"residual", s.residual},
                         {"history", s.history},
                         {"interpolation_bound", s.field.interpolation_error_bound()},
                         {"divergence", spectral_divergence(s.field)},
                         {"energy", {{"dirichlet", e.dirichlet}, {"friction", e.friction}, {"pairing", e.pairing}}}};
  write_text_file(in(d, "brinkman.json"), j.dump(2) + "\n");
  std::cout << "brinkman: " << s.iterations << " iterations, residual " << s.residual << " -> " << d << "\n";
  return 0;
}

int cmd_metrics(const Globals& g) {
  if (!g.input.empty()) {
    // single snapshot: W1 and flux distance against a reference sample, concentration flags
    const ParticleConfiguration conf = configuration_from_json(read_json_file(g.input), g.allow_invalid);
    const StudyConfig c = load(g);
    const std::size_t n = conf.n();
    const auto draws = sample_iid(c.distribution, n, derive_seed(c.master_seed, 0x5EF, n));
    std::vector<Vec3> ys;
    for (const auto& p : draws) ys.push_back(p.x);
    EmpiricalMeasure ref = EmpiricalMeasure::uniform(ys);
    for (const Vec3& y : ys) ref.payload.push_back(c.distribution.mean_velocity(y));
    const EmpiricalMeasure emp = EmpiricalMeasure::density(conf);
    const DualInterval fd = flux_distance(emp, ref, c.parameters.theta, c.flux.dictionary, c.master_seed);
    const ConcentrationReport cr =
        classify_concentration(conf, c.parameters.alpha, c.parameters.beta, c.parameters.eta);
    nlohmann::json j{{"n", n},
                     {"w1", w1_discrete(emp, ref)},
                     {"flux_lower", fd.lower},
                     {"flux_upper", fd.upper},
                     {"in_O_alpha", cr.in_O_alpha},
                     {"in_O_lambda_M", cr.in_O_lambda_M},
                     {"max_cell_count", cr.max_cell_count}};
    if (n >= 2) j["d_min"] = cr.d_min;
    const std::string d = out_dir(g, c.output_dir);
    write_text_file(in(d, "metrics.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  const StudyConfig c = load(g);
  ChaosOptions o;
  o.threads = c.threads;
  const ChaosStudy s = chaos_rate_study(c.distribution, c.n_list, c.reps, c.master_seed, o);
  const std::string d = out_dir(g, c.output_dir);
  write_text_file(in(d, "chaos.csv"), chaos_csv(s));
  nlohmann::json j{{"position_slope", s.position_fit.slope}, {"position_slope_stderr", s.position_fit.slope_stderr}};
  if (s.has_phase_fit) j["phase_slope"] = s.phase_fit.slope;
  write_text_file(in(d, "chaos.json"), j.dump(2) + "\n");
  std::cout << "W1 slope " << s.position_fit.slope << " -> " << d << "\n";
  return 0;
}

int cmd_study(const Globals& g) {
  StudyConfig c = load(g);
  c.study = study_from_name(g.study);
  const StudyReport r = run_study(c);
  emit_report(r, c.output_dir);
  std::cout << r.study << " study written to " << c.output_dir << " (" << r.seconds << " s)\n";
  if (r.failures > 0) {
    std::cerr << r.failures << " replica(s) failed to sample or converge; see replicas.csv\n";
    return 3;
  }
  return 0;
}

int cmd_report(const Globals& g) {
  if (g.input.empty()) throw ConfigError("report: --input <study directory> is required");
  const StudyReport r = report_from_json(read_json_file(in(g.input, "report.json")));
  const std::string d = g.out.empty() ? g.input : g.out;
  for (const auto& f : emit_report(r, d)) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo laboratory for dilute Stokes suspensions and their Brinkman limit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "study configuration (JSON)");
  app.add_option("--seed", g.seed, "override the master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--allow-invalid", g.allow_invalid, "accept configuration snapshots with overlaps");

  auto* sample = app.add_subcommand("sample", "draw one configuration from the conditioned law");
  sample->add_option("--n", g.n, "particle count (default: first entry of n_list)");
  auto* solve_cmd = app.add_subcommand("solve", "solve the many-sphere Stokes problem for a snapshot");
  solve_cmd->add_option("--input", g.input, "configuration snapshot")->required();
  app.add_subcommand("brinkman", "solve the Stokes-Brinkman limit problem on the study box");
  auto* metrics = app.add_subcommand("metrics", "chaos-rate study, or snapshot metrics with --input");
  metrics->add_option("--input", g.input, "configuration snapshot");
  auto* study = app.add_subcommand("study", "run a Monte-Carlo study");
  study->add_option("kind", g.study, "convergence | concentration | bounds | constants")
      ->required()
      ->check(CLI::IsMember({"convergence", "concentration", "bounds", "constants"}));
  auto* report = app.add_subcommand("report", "re-emit CSV/SVG from a study directory");
  report->add_option("--input", g.input, "directory holding report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*sample) return cmd_sample(g);
    if (*solve_cmd) return cmd_solve(g);
    if (app.got_subcommand("brinkman")) return cmd_brinkman(g);
    if (*metrics) return cmd_metrics(g);
    if (*study) return cmd_study(g);
    if (*report) return cmd_report(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
