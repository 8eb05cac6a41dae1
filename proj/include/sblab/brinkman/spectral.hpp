#pragma once

#include <array>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "sblab/brinkman/grid_field.hpp"
#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

using cplx = std::complex<double>;

namespace detail {
// The FFTW planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Real-to-half-complex transforms on an m^3 periodic grid of half-width L.
/// Complex index c = kx + nh (ky + m kz), kx in [0, m/2].
class SpectralGrid {
 public:
  SpectralGrid(double L, int m) : L_(L), m_(m), nh_(m / 2 + 1) {
    if (!(L > 0.0) || m < 4 || m % 2 != 0) throw ParameterError("SpectralGrid: need L > 0 and even m >= 4");
    std::vector<double> r(nreal());
    std::vector<cplx> c(ncomplex());
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_.reset(fftw_plan_dft_r2c_3d(m, m, m, r.data(), cp, flags));
    inv_.reset(fftw_plan_dft_c2r_3d(m, m, m, cp, r.data(), flags | FFTW_DESTROY_INPUT));
    if (!fwd_ || !inv_) throw ParameterError("SpectralGrid: FFT planning failed");
  }

  double L() const { return L_; }
  int m() const { return m_; }
  std::size_t nreal() const { return static_cast<std::size_t>(m_) * m_ * m_; }
  std::size_t ncomplex() const { return static_cast<std::size_t>(m_) * m_ * nh_; }
  double h() const { return 2.0 * L_ / m_; }
  double cell_volume() const { return h() * h() * h(); }

  /// Unnormalised DFT.
  void forward(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(fwd_.get(), const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  /// Inverse DFT including the 1/m^3 factor; `in` is preserved.
  void inverse(const cplx* in, double* out) const {
    scratch_.assign(in, in + ncomplex());
    fftw_execute_dft_c2r(inv_.get(), reinterpret_cast<fftw_complex*>(scratch_.data()), out);
    const double s = 1.0 / static_cast<double>(nreal());
    for (std::size_t p = 0; p < nreal(); ++p) out[p] *= s;
  }

  int frequency(int q) const { return q <= m_ / 2 ? q : q - m_; }
  Vec3 wavevector(std::size_t c) const {
    const int qx = static_cast<int>(c % nh_), qy = static_cast<int>((c / nh_) % m_), qz = static_cast<int>(c / (nh_ * m_));
    const double s = pi / L_;
    return {s * frequency(qx), s * frequency(qy), s * frequency(qz)};
  }
  /// Modes with a Nyquist index in any direction are excluded from the
  /// discrete operators (their derivatives are not real).
  bool nyquist(std::size_t c) const {
    const int qx = static_cast<int>(c % nh_), qy = static_cast<int>((c / nh_) % m_), qz = static_cast<int>(c / (nh_ * m_));
    return qx == m_ / 2 || qy == m_ / 2 || qz == m_ / 2;
  }
  /// Multiplicity in the full spectrum (Parseval weight).
  double weight(std::size_t c) const {
    const int qx = static_cast<int>(c % nh_);
    return (qx == 0 || qx == m_ / 2) ? 1.0 : 2.0;
  }

 private:
  struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      fftw_destroy_plan(p);
    }
  };
  double L_;
  int m_, nh_;
  std::unique_ptr<fftw_plan_s, PlanDeleter> fwd_, inv_;
  mutable std::vector<cplx> scratch_;
};

/// Three half-spectra.
using SpectralVector = std::array<std::vector<cplx>, 3>;

inline SpectralVector to_spectral(const SpectralGrid& g, const GridField& f) {
  SpectralVector s;
  for (int a = 0; a < 3; ++a) {
    s[a].resize(g.ncomplex());
    g.forward(f.component(a), s[a].data());
  }
  return s;
}

inline GridField from_spectral(const SpectralGrid& g, const SpectralVector& s) {
  GridField f(g.L(), g.m());
  for (int a = 0; a < 3; ++a) g.inverse(s[a].data(), f.component(a));
  return f;
}

/// Sum over the full spectrum of conj(a) . b, real part.
inline double spectral_dot(const SpectralGrid& g, const SpectralVector& a, const SpectralVector& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.ncomplex(); ++c) {
    double t = 0.0;
    for (int k = 0; k < 3; ++k) t += a[k][c].real() * b[k][c].real() + a[k][c].imag() * b[k][c].imag();
    s += g.weight(c) * t;
  }
  return s;
}

/// Leray projection; Nyquist modes are zeroed and the zero mode is kept
/// only when keep_mean is set.
inline void leray_project(const SpectralGrid& g, SpectralVector& s, bool keep_mean) {
  for (std::size_t c = 0; c < g.ncomplex(); ++c) {
    if (g.nyquist(c) || (c == 0 && !keep_mean)) {
      for (int a = 0; a < 3; ++a) s[a][c] = 0.0;
      continue;
    }
    if (c == 0) continue;
    const Vec3 k = g.wavevector(c);
    const double k2 = norm2(k);
    const cplx kd = (k.x * s[0][c] + k.y * s[1][c] + k.z * s[2][c]) / k2;
    for (int a = 0; a < 3; ++a) s[a][c] -= k[a] * kd;
  }
}

}  // namespace sblab
