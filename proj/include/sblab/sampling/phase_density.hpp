#pragma once

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "sblab/core/errors.hpp"
#include "sblab/core/quadrature.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

/// One phase-space point (position, velocity).
struct PhasePoint {
  Vec3 x;
  Vec3 v;
};

enum class VelocityModel {
  point_mass,  // v = v0
  gaussian,    // v = v0 + sigma * standard normal
  shear,       // v = (shear_rate * x_2, 0, 0)
};

/// Limit phase-space law f(x, v): uniform positions on a box and one of the
/// velocity models above. Evaluators give rho(x), j(x) = rho(x) E[v | x]
/// and the moments M_k(f) = int (1 + |v|^2)^(k/2) f.
struct PhaseDensity {
  Box support{};
  VelocityModel model = VelocityModel::point_mass;
  Vec3 v0{};
  double sigma = 1.0;
  double shear_rate = 1.0;

  static PhaseDensity uniform_point_mass(const Vec3& v0_, Box b = Box{}) {
    PhaseDensity f;
    f.support = b;
    f.model = VelocityModel::point_mass;
    f.v0 = v0_;
    return f;
  }
  static PhaseDensity uniform_gaussian(double sigma_, const Vec3& mean = Vec3{}, Box b = Box{}) {
    PhaseDensity f;
    f.support = b;
    f.model = VelocityModel::gaussian;
    f.v0 = mean;
    f.sigma = sigma_;
    return f;
  }
  static PhaseDensity uniform_shear(double rate = 1.0, Box b = Box{}) {
    PhaseDensity f;
    f.support = b;
    f.model = VelocityModel::shear;
    f.shear_rate = rate;
    return f;
  }

  /// A zero-volume support box is a single position site (no density).
  bool single_site() const { return !(support.volume() > 0.0); }

  double rho(const Vec3& x) const { return support.contains(x) ? 1.0 / support.volume() : 0.0; }
  double rho_sup() const { return 1.0 / support.volume(); }

  Vec3 mean_velocity(const Vec3& x) const {
    switch (model) {
      case VelocityModel::shear:
        return {shear_rate * x.y, 0.0, 0.0};
      default:
        return v0;
    }
  }

  Vec3 flux(const Vec3& x) const { return rho(x) * mean_velocity(x); }

  bool velocities_vanish() const {
    switch (model) {
      case VelocityModel::point_mass:
        return v0 == Vec3{};
      case VelocityModel::gaussian:
        return v0 == Vec3{} && sigma == 0.0;
      case VelocityModel::shear:
        return shear_rate == 0.0;
    }
    return false;
  }

  /// True when the velocity law given x is a single atom.
  bool deterministic_velocity() const {
    return model != VelocityModel::gaussian || sigma == 0.0;
  }

  PhasePoint sample(Engine& g) const {
    PhasePoint p;
    p.x = uniform_in_box(g, support);
    switch (model) {
      case VelocityModel::point_mass:
        p.v = v0;
        break;
      case VelocityModel::gaussian: {
        const double a = standard_normal(g), b = standard_normal(g), c = standard_normal(g);
        p.v = v0 + sigma * Vec3{a, b, c};
        break;
      }
      case VelocityModel::shear:
        p.v = mean_velocity(p.x);
        break;
    }
    return p;
  }

  Vec3 sample_position(Engine& g) const { return uniform_in_box(g, support); }

  /// M_k(f) = int (1 + |v|^2)^(k/2) f(dx, dv).
  double moment(double k) const {
    switch (model) {
      case VelocityModel::point_mass:
        return std::pow(1.0 + norm2(v0), k / 2.0);
      case VelocityModel::shear: {
        const double lo = support.lo.y, hi = support.hi.y;
        return integrate_gl(
                   [&](double y) { return std::pow(1.0 + shear_rate * shear_rate * y * y, k / 2.0); }, lo, hi) /
               (hi - lo);
      }
      case VelocityModel::gaussian: {
        if (!(v0 == Vec3{}))
          throw DomainError("moment: gaussian moments implemented for centred velocities only");
        // |v| = sigma R with R chi-distributed (3 dof).
        const double cut = 12.0;
        return integrate_gl(
            [&](double r) {
              return std::pow(1.0 + sigma * sigma * r * r, k / 2.0) * std::sqrt(2.0 / pi) * r * r *
                     std::exp(-0.5 * r * r);
            },
            0.0, cut, 128);
      }
    }
    return 1.0;
  }
};

/// Reads {"type": "uniform_box" | "gaussian_velocity" | "shear", ...}.
inline PhaseDensity phase_density_from_json(const nlohmann::json& j) {
  PhaseDensity f;
  auto vec = [](const nlohmann::json& a) {
    if (!a.is_array() || a.size() != 3) throw ConfigError("distribution: expected 3-vector");
    return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  };
  try {
    if (j.contains("box")) {
      f.support.lo = vec(j["box"].at("lo"));
      f.support.hi = vec(j["box"].at("hi"));
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "uniform_box") {
      f.model = VelocityModel::point_mass;
      f.v0 = j.contains("velocity") ? vec(j["velocity"]) : Vec3{};
    } else if (type == "gaussian_velocity") {
      f.model = VelocityModel::gaussian;
      f.sigma = j.value("sigma", 1.0);
      f.v0 = j.contains("mean") ? vec(j["mean"]) : Vec3{};
      if (!(f.sigma >= 0.0)) throw ConfigError("distribution: sigma must be nonnegative");
    } else if (type == "shear") {
      f.model = VelocityModel::shear;
      f.shear_rate = j.value("rate", 1.0);
    } else {
      throw ConfigError("distribution: unknown type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("distribution: ") + e.what());
  }
  const Vec3 ext = f.support.extent();
  if (ext.x < 0.0 || ext.y < 0.0 || ext.z < 0.0) throw ConfigError("distribution: inverted support box");
  return f;
}

inline nlohmann::json phase_density_to_json(const PhaseDensity& f) {
  nlohmann::json j;
  switch (f.model) {
    case VelocityModel::point_mass:
      j["type"] = "uniform_box";
      j["velocity"] = {f.v0.x, f.v0.y, f.v0.z};
      break;
    case VelocityModel::gaussian:
      j["type"] = "gaussian_velocity";
      j["sigma"] = f.sigma;
      j["mean"] = {f.v0.x, f.v0.y, f.v0.z};
      break;
    case VelocityModel::shear:
      j["type"] = "shear";
      j["rate"] = f.shear_rate;
      break;
  }
  j["box"] = {{"lo", {f.support.lo.x, f.support.lo.y, f.support.lo.z}},
              {"hi", {f.support.hi.x, f.support.hi.y, f.support.hi.z}}};
  return j;
}

}  // namespace sblab
