#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "sblab/core/errors.hpp"
#include "sblab/generated.hpp"
#include "sblab/geometry/config_io.hpp"
#include "sblab/sampling/phase_density.hpp"
#include "sblab/stokes/many_sphere.hpp"

namespace sblab {

enum class StudyKind { convergence, concentration, bounds, constants };

inline std::string study_name(StudyKind k) {
  switch (k) {
    case StudyKind::convergence:
      return "convergence";
    case StudyKind::concentration:
      return "concentration";
    case StudyKind::bounds:
      return "bounds";
    case StudyKind::constants:
      return "constants";
  }
  return "?";
}

inline StudyKind study_from_name(const std::string& s) {
  if (s == "convergence") return StudyKind::convergence;
  if (s == "concentration") return StudyKind::concentration;
  if (s == "bounds") return StudyKind::bounds;
  if (s == "constants") return StudyKind::constants;
  throw ConfigError("unknown study '" + s + "'");
}

struct StudyParameters {
  double alpha = 0.8;
  double beta = 0.4;
  double eta = 0.1;
  double delta = 2.0;
  double theta = 0.5;
};

struct BoxParameters {
  double half_width = 4.0;
  int grid_m = 128;
  double tol = 1e-10;
  int max_iter = 500;
};

struct FluxParameters {
  std::size_t dictionary = 64;
  double reference_factor = 1.0;  // reference sample size = factor * n
};

struct ConstantsParameters {
  std::vector<double> deltas{4.0, 8.0, 16.0, 32.0};
  int grid_m = 48;
  std::size_t map_samples = 10000;
  std::size_t cell_m = 4;
  double cell_n = 50.0;
  std::vector<double> cell_dm{8.0 / 50.0, 16.0 / 50.0, 32.0 / 50.0};
  double cell_width_factor = 3.0;  // cell width W = factor * d_m
};

struct StudyConfig {
  StudyKind study = StudyKind::convergence;
  std::uint64_t master_seed = 0;
  std::vector<std::size_t> n_list;
  std::size_t reps = 1;
  PhaseDensity distribution;
  SolveOptions solver;
  StudyParameters parameters;
  double ball_radius = 1.5;
  std::size_t quad_points = 4000;
  BoxParameters box;
  EnergyOptions energy;
  FluxParameters flux;
  ConstantsParameters constants;
  std::string output_dir = "sblab_out";
  unsigned threads = 1;
};

/// Validates `text` against the shipped draft-04 schema; throws ConfigError
/// naming the offending pointer.
inline void validate_study_schema(const std::string& text) {
  rapidjson::Document sd;
  sd.Parse(generated::study_config_schema);
  if (sd.HasParseError()) throw ConfigError("internal: study schema does not parse");
  const rapidjson::SchemaDocument schema(sd);
  rapidjson::Document d;
  d.Parse(text.c_str());
  if (d.HasParseError())
    throw ConfigError(std::string("study config: malformed JSON at offset ") + std::to_string(d.GetErrorOffset()) +
                      ": " + rapidjson::GetParseError_En(d.GetParseError()));
  rapidjson::SchemaValidator v(schema);
  if (!d.Accept(v)) {
    rapidjson::StringBuffer where, rule;
    v.GetInvalidDocumentPointer().StringifyUriFragment(where);
    v.GetInvalidSchemaPointer().StringifyUriFragment(rule);
    throw ConfigError(std::string("study config: schema violation at ") + where.GetString() + " (rule " +
                      rule.GetString() + ", keyword " + v.GetInvalidSchemaKeyword() + ")");
  }
}

/// Schema validation, then the semantic checks a schema cannot express.
inline StudyConfig study_config_from_json(const nlohmann::json& j) {
  validate_study_schema(j.dump());
  StudyConfig c;
  try {
    if (j.contains("study")) c.study = study_from_name(j["study"].get<std::string>());
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.n_list = j.at("n_list").get<std::vector<std::size_t>>();
    c.reps = j.at("reps").get<std::size_t>();
    c.distribution = phase_density_from_json(j.at("distribution"));
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      c.solver.tol = s.value("tol", c.solver.tol);
      c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
      if (s.contains("scheme")) c.solver.scheme = scheme_from_name(s["scheme"].get<std::string>());
    }
    const auto& p = j.at("parameters");
    c.parameters.alpha = p.at("alpha").get<double>();
    c.parameters.beta = p.at("beta").get<double>();
    c.parameters.eta = p.at("eta").get<double>();
    c.parameters.delta = p.at("delta").get<double>();
    c.parameters.theta = p.value("theta", c.parameters.theta);
    c.ball_radius = j.value("ball_radius", c.ball_radius);
    c.quad_points = j.value("quad_points", c.quad_points);
    if (j.contains("box")) {
      const auto& b = j["box"];
      c.box.half_width = b.value("half_width", c.box.half_width);
      c.box.grid_m = b.value("grid_m", c.box.grid_m);
      c.box.tol = b.value("tol", c.box.tol);
      c.box.max_iter = b.value("max_iter", c.box.max_iter);
    }
    if (j.contains("energy")) {
      const auto& e = j["energy"];
      if (e.contains("method"))
        c.energy.method = e["method"].get<std::string>() == "shells" ? EnergyMethod::shells : EnergyMethod::boundary;
      c.energy.sphere_order = e.value("sphere_order", c.energy.sphere_order);
    }
    if (j.contains("flux")) {
      c.flux.dictionary = j["flux"].value("dictionary", c.flux.dictionary);
      c.flux.reference_factor = j["flux"].value("reference_factor", c.flux.reference_factor);
    }
    if (j.contains("constants")) {
      const auto& k = j["constants"];
      c.constants.deltas = k.value("deltas", c.constants.deltas);
      c.constants.grid_m = k.value("grid_m", c.constants.grid_m);
      c.constants.map_samples = k.value("map_samples", c.constants.map_samples);
      c.constants.cell_m = k.value("cell_m", c.constants.cell_m);
      c.constants.cell_n = k.value("cell_n", c.constants.cell_n);
      c.constants.cell_dm = k.value("cell_dm", c.constants.cell_dm);
      c.constants.cell_width_factor = k.value("cell_width_factor", c.constants.cell_width_factor);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study config: ") + e.what());
  }
  for (std::size_t k = 1; k < c.n_list.size(); ++k)
    if (c.n_list[k] <= c.n_list[k - 1]) throw ConfigError("study config: n_list must be strictly increasing");
  if (c.box.grid_m % 2 != 0) throw ConfigError("study config: box.grid_m must be even");
  if (c.ball_radius > c.box.half_width) throw ConfigError("study config: ball_radius exceeds the box half-width");
  return c;
}

inline StudyConfig load_study_config(const std::string& path) { return study_config_from_json(read_json_file(path)); }

/// Canonical JSON echo of a config (every field explicit).
inline nlohmann::json study_config_to_json(const StudyConfig& c) {
  nlohmann::json j;
  j["study"] = study_name(c.study);
  j["master_seed"] = c.master_seed;
  j["n_list"] = c.n_list;
  j["reps"] = c.reps;
  j["distribution"] = phase_density_to_json(c.distribution);
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"scheme", scheme_name(c.solver.scheme)}};
  j["parameters"] = {{"alpha", c.parameters.alpha},
                     {"beta", c.parameters.beta},
                     {"eta", c.parameters.eta},
                     {"delta", c.parameters.delta},
                     {"theta", c.parameters.theta}};
  j["ball_radius"] = c.ball_radius;
  j["quad_points"] = c.quad_points;
  j["box"] = {{"half_width", c.box.half_width}, {"grid_m", c.box.grid_m}, {"tol", c.box.tol}, {"max_iter", c.box.max_iter}};
  j["energy"] = {{"method", c.energy.method == EnergyMethod::shells ? "shells" : "boundary"},
                 {"sphere_order", c.energy.sphere_order}};
  j["flux"] = {{"dictionary", c.flux.dictionary}, {"reference_factor", c.flux.reference_factor}};
  j["constants"] = {{"deltas", c.constants.deltas},
                    {"grid_m", c.constants.grid_m},
                    {"map_samples", c.constants.map_samples},
                    {"cell_m", c.constants.cell_m},
                    {"cell_n", c.constants.cell_n},
                    {"cell_dm", c.constants.cell_dm},
                    {"cell_width_factor", c.constants.cell_width_factor}};
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  return j;
}

}  // namespace sblab
