#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

/// Vector field on the periodic box [-L, L)^3 sampled at m^3 nodes
/// x = -L + (i, j, k) h, h = 2L/m. Values are component-major; inside a
/// component the x index runs fastest.
struct GridField {
  double L = 1.0;
  int m = 0;
  std::vector<double> values;
  bool mean_zero = false;
  // max over nodes of sum_a |d^2 u / dx_a^2|; NaN when unknown
  double curvature = std::numeric_limits<double>::quiet_NaN();

  GridField() = default;
  GridField(double L_, int m_) : L(L_), m(m_) {
    if (!(L_ > 0.0) || m_ < 2) throw ParameterError("GridField: need L > 0 and m >= 2");
    values.assign(3 * points(), 0.0);
  }

  std::size_t points() const { return static_cast<std::size_t>(m) * m * m; }
  double h() const { return 2.0 * L / m; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(m) * (j + static_cast<std::size_t>(m) * k);
  }
  Vec3 node(int i, int j, int k) const { return {-L + i * h(), -L + j * h(), -L + k * h()}; }
  Vec3 node(std::size_t p) const {
    const int i = static_cast<int>(p % m), j = static_cast<int>((p / m) % m), k = static_cast<int>(p / (m * m));
    return node(i, j, k);
  }
  double* component(int c) { return values.data() + c * points(); }
  const double* component(int c) const { return values.data() + c * points(); }
  Vec3 at(std::size_t p) const {
    const std::size_t N = points();
    return {values[p], values[N + p], values[2 * N + p]};
  }
  void set(std::size_t p, const Vec3& v) {
    const std::size_t N = points();
    values[p] = v.x;
    values[N + p] = v.y;
    values[2 * N + p] = v.z;
  }

  bool contains(const Vec3& x) const {
    return std::abs(x.x) <= L && std::abs(x.y) <= L && std::abs(x.z) <= L;
  }
  /// Ball B(0, R) lies in the box.
  bool covers(double R) const { return R <= L; }

  /// Trilinear interpolation (periodic wrap at the upper faces).
  Vec3 evaluate(const Vec3& x) const {
    if (!contains(x)) throw DomainError("GridField::evaluate: point outside the box");
    const double hh = h();
    int i0[3];
    double t[3];
    for (int a = 0; a < 3; ++a) {
      const double s = (x[a] + L) / hh;
      int i = static_cast<int>(std::floor(s));
      if (i >= m) i = m - 1;
      t[a] = s - i;
      i0[a] = i;
    }
    Vec3 out{};
    for (int c = 0; c < 8; ++c) {
      const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
      const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) * (dz ? t[2] : 1.0 - t[2]);
      if (w == 0.0) continue;
      out += w * at(index((i0[0] + dx) % m, (i0[1] + dy) % m, (i0[2] + dz) % m));
    }
    return out;
  }

  /// Trilinear error bound (h^2 / 8) max sum_a |d_aa u|; NaN if the
  /// curvature was never estimated.
  double interpolation_error_bound() const { return h() * h() / 8.0 * curvature; }

  double max_abs() const {
    double r = 0.0;
    for (std::size_t p = 0; p < points(); ++p) r = std::max(r, norm(at(p)));
    return r;
  }
};

struct GridEvaluation {
  Vec3 value;
  double error_bound;
};

inline GridEvaluation evaluate(const GridField& f, const Vec3& x) {
  return {f.evaluate(x), f.interpolation_error_bound()};
}

/// Samples an analytic field at the nodes.
template <typename Fn>
GridField sample_to_grid(Fn&& fn, double L, int m) {
  GridField g(L, m);
  for (std::size_t p = 0; p < g.points(); ++p) g.set(p, fn(g.node(p)));
  return g;
}

// ---- persistence ----------------------------------------------------------

namespace detail {

inline double to_little_endian(double v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t b;
  std::memcpy(&b, &v, 8);
  b = __builtin_bswap64(b);
  std::memcpy(&v, &b, 8);
  return v;
}

}  // namespace detail

/// Writes stem.json (header) and stem.bin (raw little-endian doubles).
inline void write_grid_field(const GridField& f, const std::string& stem) {
  nlohmann::json hdr = {{"L", f.L},
                        {"m", f.m},
                        {"components", 3},
                        {"layout", "x-fastest"},
                        {"component_order", "component-major"},
                        {"byte_order", "little-endian"},
                        {"mean_zero", f.mean_zero}};
  if (std::isfinite(f.curvature)) hdr["curvature"] = f.curvature;
  std::ofstream js(stem + ".json");
  if (!js) throw IoError("cannot write " + stem + ".json");
  js << hdr.dump(2) << "\n";
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + stem + ".bin");
  for (double v : f.values) {
    const double le = detail::to_little_endian(v);
    bin.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
  if (!bin) throw IoError("write failed: " + stem + ".bin");
}

inline GridField read_grid_field(const std::string& stem) {
  std::ifstream js(stem + ".json");
  if (!js) throw IoError("cannot open " + stem + ".json");
  nlohmann::json hdr;
  try {
    js >> hdr;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad field header: ") + e.what());
  }
  GridField f;
  try {
    if (hdr.at("components").get<int>() != 3 || hdr.at("layout").get<std::string>() != "x-fastest" ||
        hdr.at("byte_order").get<std::string>() != "little-endian")
      throw IoError("unsupported field layout in " + stem + ".json");
    f = GridField(hdr.at("L").get<double>(), hdr.at("m").get<int>());
    f.mean_zero = hdr.value("mean_zero", false);
    if (hdr.contains("curvature")) f.curvature = hdr["curvature"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad field header: ") + e.what());
  }
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open " + stem + ".bin");
  for (double& v : f.values) {
    double le;
    if (!bin.read(reinterpret_cast<char*>(&le), sizeof le)) throw IoError("truncated " + stem + ".bin");
    v = detail::to_little_endian(le);
  }
  return f;
}

/// CSV of the plane z = node k: x,y,ux,uy,uz.
inline void write_grid_slice_csv(const GridField& f, const std::string& path, int k) {
  if (k < 0 || k >= f.m) throw ParameterError("slice index out of range");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(12);
  out << "x,y,ux,uy,uz\n";
  for (int j = 0; j < f.m; ++j)
    for (int i = 0; i < f.m; ++i) {
      const Vec3 x = f.node(i, j, k), u = f.at(f.index(i, j, k));
      out << x.x << ',' << x.y << ',' << u.x << ',' << u.y << ',' << u.z << '\n';
    }
}

}  // namespace sblab
