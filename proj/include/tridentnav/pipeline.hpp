#pragma once

// Batch fusion pipeline shared by the command-line tool and higher-level
// harnesses: initialize from the first fix plus a stationary IMU window,
// then predict per IMU sample and fold in each later fix at its epoch.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "tridentnav/logio.hpp"

namespace tridentnav {

struct FuseCounters {
  std::size_t predicts = 0;
  std::size_t fixes_used = 0;  // fixes folded at their epoch, beyond the init fix
  std::size_t fixes_accepted = 0;
  std::size_t fixes_gated = 0;
  std::size_t renormalizations = 0;  // strapdown steps + accepted feedbacks
};

struct FuseResult {
  std::vector<NavLogRow> rows;  // init epoch first, then one per IMU sample
  FilterState state;            // state at the last completed epoch
  FuseCounters counters;
  bool diverged = false;
  std::string diagnostic;  // set when diverged
};

// Runs the full predict/update cycle over in-memory logs. The first fix
// seeds position/velocity and the IMU samples inside cfg.init_window level
// the attitude; every subsequent fix is an EKF measurement (skipped when
// ins_only). Numerical failure mid-run is reported through FuseResult with
// all rows up to the failure intact, so callers can write a post-mortem log.
inline FuseResult run_fuse(const RunConfig& cfg, const std::vector<ImuSample>& imu,
                           const std::vector<GpsFix>& gps_in, bool ins_only = false) {
  cfg.validate();
  if (imu.empty()) {
    throw InitializationError("fuse: IMU log is empty");
  }
  if (gps_in.empty()) {
    throw InitializationError("fuse: at least one GNSS fix is required to initialize");
  }

  // The GNSS log format carries no noise levels; stamp the configured ones.
  std::vector<GpsFix> gps = gps_in;
  for (GpsFix& g : gps) {
    g.r_p = cfg.noise.r_p;
    g.r_v = cfg.noise.r_v;
  }

  std::vector<ImuSample> window;
  for (const ImuSample& s : imu) {
    if (s.t <= gps[0].t + cfg.init_window + 1e-12) {
      window.push_back(s);
    }
  }

  const auto make_row = [](const FilterState& fs) {
    NavLogRow r;
    r.nav = fs.nav;
    r.cov_diag = fs.P.diagonal();
    return r;
  };

  FuseResult res;
  res.state = init_filter(cfg.earth, {gps[0]}, window, cfg.init);
  res.rows.push_back(make_row(res.state));

  std::size_t fix_i = 1;
  const double half = 0.5 * cfg.dt_nominal;
  try {
    for (const ImuSample& s : imu) {
      if (s.t <= res.state.nav.t + 1e-12) {
        continue;  // at or before the init epoch; already consumed by leveling
      }
      res.state = predict(cfg.earth, res.state, s.w_ib_b, s.f_b, s.t - res.state.nav.t,
                          cfg.noise, cfg.form);
      ++res.counters.predicts;
      ++res.counters.renormalizations;
      res.rows.push_back(make_row(res.state));  // kept even if an update below fails
      if (!ins_only) {
        while (fix_i < gps.size() && gps[fix_i].t <= res.state.nav.t + half) {
          const GpsFix& fix = gps[fix_i];
          ++fix_i;
          ++res.counters.fixes_used;
          const UpdateResult u = update(res.state, fix, half + 1e-9, cfg.gate);
          res.state = u.fs;
          NavLogRow row = make_row(res.state);
          row.has_fix = true;
          row.dy = u.innov.dy;
          row.nis = u.innov.nis;
          res.rows.back() = row;
          if (u.innov.accepted) {
            ++res.counters.fixes_accepted;
            ++res.counters.renormalizations;
          } else {
            ++res.counters.fixes_gated;
          }
        }
      }
    }
  } catch (const NumericalError& e) {
    res.diverged = true;
    res.diagnostic = e.what();
  }
  return res;
}

// Normalized autocorrelation of a scalar series at lags 0..max_lag (clamped
// to the series length minus one). Lag 0 is exactly 1 by construction.
inline std::vector<double> autocorrelation(const std::vector<double>& x, std::size_t max_lag) {
  if (x.size() < 2) {
    throw ContractViolation("autocorrelation: need at least two samples");
  }
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) {
    mean += v;
  }
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : x) {
    denom += (v - mean) * (v - mean);
  }
  if (!(denom > 0.0)) {
    throw NumericalError("autocorrelation: series has zero variance");
  }
  const std::size_t lags = std::min(max_lag, n - 1);
  std::vector<double> rho;
  rho.reserve(lags + 1);
  for (std::size_t ell = 0; ell <= lags; ++ell) {
    double num = 0.0;
    for (std::size_t k = 0; k + ell < n; ++k) {
      num += (x[k] - mean) * (x[k + ell] - mean);
    }
    rho.push_back(num / denom);
  }
  return rho;
}

}  // namespace tridentnav
