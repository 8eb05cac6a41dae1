#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/parallel.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/sampling/sampler.hpp"
#include "sblab/transport/wasserstein.hpp"

namespace sblab {

struct ChaosRow {
  std::size_t n = 0;
  std::string metric;  // "w1_position" or "w1_phase"
  MeanEstimate value;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
};

struct ChaosStudy {
  std::vector<ChaosRow> rows;
  LinearFit position_fit;  // log mean vs log n
  LinearFit phase_fit;
  bool has_phase_fit = false;
};

struct ChaosOptions {
  std::size_t phase_max_n = static_cast<std::size_t>(-1);  // skip the R^6 metric above this n
  unsigned threads = 1;
};

/// For each n: reps draws Z^N ~ Pi^N[f]; W1(rho^N, rho) and W1(mu^N, f) are
/// estimated against an independent n-point sample of rho (resp. f), so
/// every distance is an exact assignment problem. Slopes are least-squares
/// fits of log mean against log n.
inline ChaosStudy chaos_rate_study(const PhaseDensity& f, const std::vector<std::size_t>& n_list, std::size_t reps,
                                   std::uint64_t seed, ChaosOptions opt = {}) {
  if (reps < 10) throw ParameterError("chaos_rate_study: reps must be >= 10");
  if (n_list.empty()) throw ParameterError("chaos_rate_study: empty n_list");
  for (std::size_t k = 1; k < n_list.size(); ++k)
    if (n_list[k] <= n_list[k - 1]) throw ParameterError("chaos_rate_study: n_list must be increasing");
  for (std::size_t n : n_list)
    if (n >= 2 && f.single_site())
      throw ParameterError("chaos_rate_study: a single-site position law admits no configuration with n >= 2");
  ChaosStudy out;
  std::vector<double> ln, lpos, lphase_n, lphase;
  for (std::size_t n : n_list) {
    const bool phase = n <= opt.phase_max_n;
    std::vector<double> pos(reps), ph(reps);
    parallel_for(reps, opt.threads, [&](std::size_t r) {
      const std::uint64_t s = derive_seed(seed, n, r);
      const auto [c, rep] = sample_conditioned(f, n, s);
      const auto ref = sample_iid(f, n, derive_seed(s, 0x5EF, 0));
      std::vector<Vec3> ref_x;
      for (const auto& p : ref) ref_x.push_back(p.x);
      pos[r] = w1_discrete(EmpiricalMeasure::density(c), EmpiricalMeasure::uniform(ref_x));
      if (phase) {
        const ParticleConfiguration rc = to_configuration(ref, f.support);
        ph[r] = w1_discrete(EmpiricalMeasure::phase(c), EmpiricalMeasure::phase(rc));
      }
    });
    const std::uint64_t row_seed = derive_seed(seed, n, 0);
    out.rows.push_back({n, "w1_position", mean_and_stderr(pos), reps, row_seed});
    ln.push_back(std::log(static_cast<double>(n)));
    lpos.push_back(std::log(out.rows.back().value.mean));
    if (phase) {
      out.rows.push_back({n, "w1_phase", mean_and_stderr(ph), reps, row_seed});
      lphase_n.push_back(ln.back());
      lphase.push_back(std::log(out.rows.back().value.mean));
    }
  }
  if (ln.size() >= 2) out.position_fit = least_squares(ln, lpos);
  if (lphase_n.size() >= 2) {
    out.phase_fit = least_squares(lphase_n, lphase);
    out.has_phase_fit = true;
  }
  return out;
}

/// CSV with columns n,metric,mean,stderr,reps,seed (17 significant digits).
inline std::string chaos_csv(const ChaosStudy& s) {
  std::ostringstream os;
  os.precision(17);
  os << "n,metric,mean,stderr,reps,seed\n";
  for (const auto& r : s.rows)
    os << r.n << ',' << r.metric << ',' << r.value.mean << ',' << r.value.std_error << ',' << r.reps << ',' << r.seed
       << '\n';
  return os.str();
}

}  // namespace sblab
