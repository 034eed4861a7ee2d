// Command-line front end: generate synthetic flight logs, fuse logged
// IMU/GNSS data through the error-state filter, and distill nav logs into
// plot-ready consistency reports.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tridentnav/pipeline.hpp"
#include "tridentnav/simulator.hpp"

namespace tn = tridentnav;

namespace {

std::string d2s(double v) { return tn::detail::fmt17(v); }

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string profile_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double imu_rate = 200.0;
  double gps_rate = 1.0;
  bool no_noise = false;
  bool walk_bias = false;
  std::vector<double> bias_w{0.0, 0.0, 0.0};
  std::vector<double> bias_f{0.0, 0.0, 0.0};
};

int run_simulate(const SimulateArgs& a) {
  tn::ProfileSpec spec = tn::read_profile(a.profile_path);
  if (a.seed_set) {
    spec.seed = a.seed;
  }
  spec.validate();

  const tn::EarthModel em;
  const tn::TruthTrajectory truth = tn::gen_trajectory(em, spec, a.imu_rate);

  tn::NoiseParams noise;
  if (a.no_noise) {
    noise.sigma_w = noise.sigma_f = noise.sigma_bw = noise.sigma_bf = 0.0;
    noise.r_p = noise.r_v = 0.0;
  }
  const tn::Vector3d bw(a.bias_w[0], a.bias_w[1], a.bias_w[2]);
  const tn::Vector3d bf(a.bias_f[0], a.bias_f[1], a.bias_f[2]);
  const std::vector<tn::ImuSample> imu =
      tn::synth_imu(truth, noise, bw, bf, spec.seed, a.walk_bias);
  // Decorrelate the GNSS noise stream from the IMU stream.
  const std::vector<tn::GpsFix> gps =
      tn::synth_gps(truth, noise, a.gps_rate, spec.seed + 0x9E3779B97F4A7C15ull);

  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  tn::write_truth_csv((dir / "truth.csv").string(), truth.samples);
  tn::write_imu_csv((dir / "imu.csv").string(), imu);
  tn::write_gps_csv((dir / "gps.csv").string(), gps);

  const double duration = truth.samples.back().t - truth.samples.front().t;
  std::cout << "simulated " << spec.segments.size() << " segment(s), " << d2s(duration)
            << " s at " << d2s(truth.rate_hz) << " Hz IMU / " << d2s(a.gps_rate)
            << " Hz GNSS, seed " << spec.seed << (a.no_noise ? ", noise-free" : "") << "\n";
  std::cout << "wrote " << (dir / "truth.csv").string() << " (" << truth.samples.size()
            << " rows), " << (dir / "imu.csv").string() << " (" << imu.size() << "), "
            << (dir / "gps.csv").string() << " (" << gps.size() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fuse

struct FuseArgs {
  std::string imu_path;
  std::string gps_path;
  std::string config_path;
  std::string out_path;
  std::string form;  // empty = take the config's choice
  bool ins_only = false;
};

int run_fuse_cmd(const FuseArgs& a) {
  tn::RunConfig cfg = tn::read_config(a.config_path);
  if (a.form == "classical") {
    cfg.form = tn::MechForm::kClassical;
  } else if (a.form == "trident") {
    cfg.form = tn::MechForm::kTrident;
  }

  const std::vector<tn::ImuSample> imu = tn::read_imu_csv(a.imu_path);
  const std::vector<tn::GpsFix> gps = tn::read_gps_csv(a.gps_path);
  const tn::FuseResult res = tn::run_fuse(cfg, imu, gps, a.ins_only);
  tn::write_nav_csv(a.out_path, res.rows);

  const tn::NavState& nav = res.state.nav;
  std::cout << "fused " << res.counters.predicts << " IMU epochs"
            << (a.ins_only ? " (inertial-only)" : "") << "; wrote " << a.out_path << " ("
            << res.rows.size() << " rows)\n";
  std::cout << "final t = " << d2s(nav.t) << " s\n";
  std::cout << "final p_e = [" << d2s(nav.p_e.x()) << ", " << d2s(nav.p_e.y()) << ", "
            << d2s(nav.p_e.z()) << "] m\n";
  std::cout << "final v_e = [" << d2s(nav.v_e.x()) << ", " << d2s(nav.v_e.y()) << ", "
            << d2s(nav.v_e.z()) << "] m/s\n";
  std::cout << "final b_w = [" << d2s(nav.b_w.x()) << ", " << d2s(nav.b_w.y()) << ", "
            << d2s(nav.b_w.z()) << "] rad/s\n";
  std::cout << "final b_f = [" << d2s(nav.b_f.x()) << ", " << d2s(nav.b_f.y()) << ", "
            << d2s(nav.b_f.z()) << "] m/s^2\n";
  std::cout << "fixes used " << res.counters.fixes_used << ", accepted "
            << res.counters.fixes_accepted << ", gated " << res.counters.fixes_gated
            << "; normalization events " << res.counters.renormalizations << "\n";
  if (res.diverged) {
    std::cerr << "error: filter diverged: " << res.diagnostic
              << " (partial output written)\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string nav_path;
  std::string truth_path;  // optional
  std::string report_path;
};

struct TruthMatch {
  tn::Vector3d dsig;  // attitude error, body frame, truth minus estimate
  tn::Vector3d dvel;
  tn::Vector3d dpos;
  double nees = 0.0;
  double t = 0.0;
};

constexpr std::size_t kAutocorrMaxLag = 50;

int run_analyze(const AnalyzeArgs& a) {
  const std::vector<tn::NavLogRow> rows = tn::read_nav_csv(a.nav_path);
  if (rows.empty()) {
    throw tn::IngestionError(a.nav_path + ": nav log has no epochs");
  }

  // Innovation channels (position, velocity) from the fix rows.
  std::vector<double> nis_t, nis_v;
  std::vector<std::vector<double>> chan(6);
  for (const tn::NavLogRow& r : rows) {
    if (!r.has_fix) continue;
    nis_t.push_back(r.nav.t);
    nis_v.push_back(r.nis);
    for (int i = 0; i < 6; ++i) {
      chan[static_cast<std::size_t>(i)].push_back(r.dy[i]);
    }
  }

  std::vector<std::vector<double>> rho(6);
  if (nis_v.size() >= 2) {
    for (std::size_t c = 0; c < 6; ++c) {
      rho[c] = tn::autocorrelation(chan[c], kAutocorrMaxLag);
    }
  }

  // Truth comparison: pair rows by epoch (truth and nav logs share the IMU
  // clock, so matching is exact up to print round-trip).
  std::vector<TruthMatch> matched;
  if (!a.truth_path.empty()) {
    const std::vector<tn::TruthSample> truth = tn::read_truth_csv(a.truth_path);
    std::size_t ti = 0;
    for (const tn::NavLogRow& r : rows) {
      while (ti < truth.size() && truth[ti].t < r.nav.t - 1e-9) ++ti;
      if (ti == truth.size()) break;
      if (std::abs(truth[ti].t - r.nav.t) > 1e-9) continue;
      const tn::TruthSample& ts = truth[ti];
      TruthMatch m;
      m.t = r.nav.t;
      const tn::Matrix3d c_eb = tn::quat_to_rotmat(r.nav.q_be).transpose();
      m.dsig = 2.0 * tn::quat_log_vec(tn::quat_mul(tn::quat_conj(r.nav.q_be), ts.q_be));
      m.dvel = c_eb * (ts.v_e - r.nav.v_e);
      m.dpos = c_eb * (ts.p_e - r.nav.p_e);
      for (int i = 0; i < 3; ++i) {
        const double ca = r.cov_diag[i];
        const double cv = r.cov_diag[3 + i];
        const double cp = r.cov_diag[6 + i];
        if (!(ca > 0.0) || !(cv > 0.0) || !(cp > 0.0)) {
          throw tn::NumericalError(a.nav_path + ": nonpositive covariance diagonal at t = " +
                                   d2s(r.nav.t));
        }
        m.nees += m.dsig[i] * m.dsig[i] / ca + m.dvel[i] * m.dvel[i] / cv +
                  m.dpos[i] * m.dpos[i] / cp;
      }
      matched.push_back(m);
    }
  }

  std::ofstream out(a.report_path);
  if (!out) {
    throw tn::IngestionError(a.report_path + ": cannot open for writing");
  }

  out << "section = summary\n";
  out << "n_epochs = " << rows.size() << "\n";
  out << "n_fixes = " << nis_v.size() << "\n";
  if (!nis_v.empty()) {
    double nis_mean = 0.0;
    for (double v : nis_v) nis_mean += v;
    nis_mean /= static_cast<double>(nis_v.size());
    out << "nis_mean = " << d2s(nis_mean) << "\n";
  }
  const tn::NavLogRow& last = rows.back();
  const char* axis = "xyz";
  for (int i = 0; i < 3; ++i) {
    out << "final_bias_w_" << axis[i] << " = " << d2s(last.nav.b_w[i]) << "\n";
    out << "final_bias_w_sigma_" << axis[i] << " = " << d2s(std::sqrt(last.cov_diag[9 + i]))
        << "\n";
  }
  for (int i = 0; i < 3; ++i) {
    out << "final_bias_f_" << axis[i] << " = " << d2s(last.nav.b_f[i]) << "\n";
    out << "final_bias_f_sigma_" << axis[i] << " = " << d2s(std::sqrt(last.cov_diag[12 + i]))
        << "\n";
  }
  if (!matched.empty()) {
    double nees_mean = 0.0, sum_p2 = 0.0, sum_v2 = 0.0;
    for (const TruthMatch& m : matched) {
      nees_mean += m.nees;
      sum_p2 += m.dpos.squaredNorm();
      sum_v2 += m.dvel.squaredNorm();
    }
    const double n = static_cast<double>(matched.size());
    out << "nees_mean = " << d2s(nees_mean / n) << "\n";
    out << "nees_dof = 9\n";
    out << "rmse_pos_m = " << d2s(std::sqrt(sum_p2 / n)) << "\n";
    out << "rmse_vel_mps = " << d2s(std::sqrt(sum_v2 / n)) << "\n";
    out << "final_att_err_rad = " << d2s(matched.back().dsig.norm()) << "\n";
  }

  out << "\nsection = autocorr\n";
  out << "lag,px,py,pz,vx,vy,vz\n";
  if (!rho[0].empty()) {
    for (std::size_t ell = 0; ell < rho[0].size(); ++ell) {
      out << ell;
      for (std::size_t c = 0; c < 6; ++c) {
        out << "," << d2s(rho[c][ell]);
      }
      out << "\n";
    }
  }

  out << "\nsection = nis\n";
  out << "t,value\n";
  for (std::size_t k = 0; k < nis_v.size(); ++k) {
    out << d2s(nis_t[k]) << "," << d2s(nis_v[k]) << "\n";
  }

  if (!matched.empty()) {
    out << "\nsection = nees\n";
    out << "t,value\n";
    for (const TruthMatch& m : matched) {
      out << d2s(m.t) << "," << d2s(m.nees) << "\n";
    }
  }

  out.flush();
  if (!out) {
    throw tn::IngestionError(a.report_path + ": write failed");
  }

  std::cout << "analyzed " << rows.size() << " epochs (" << nis_v.size() << " fixes";
  if (!matched.empty()) {
    std::cout << ", " << matched.size() << " truth-matched";
  }
  std::cout << "); wrote " << a.report_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trident-quaternion strapdown INS/GNSS toolkit"};
  app.require_subcommand(1);

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand("simulate", "Generate synthetic truth/IMU/GNSS logs");
  sim->add_option("profile", sa.profile_path, "Flight profile file")->required();
  sim->add_option("out_dir", sa.out_dir, "Output directory for truth.csv/imu.csv/gps.csv")
      ->required();
  CLI::Option* seed_opt =
      sim->add_option("--seed", sa.seed, "Override the profile's random seed");
  sim->add_option("--imu-rate", sa.imu_rate, "IMU rate in Hz (50..1000)")
      ->capture_default_str();
  sim->add_option("--gps-rate", sa.gps_rate, "GNSS fix rate in Hz")->capture_default_str();
  sim->add_flag("--no-noise", sa.no_noise, "Disable sensor and GNSS noise");
  sim->add_flag("--walk-bias", sa.walk_bias, "Let IMU biases random-walk from their start");
  sim->add_option("--bias-w", sa.bias_w, "Initial gyro bias (rad/s), three values")
      ->expected(3);
  sim->add_option("--bias-f", sa.bias_f, "Initial accel bias (m/s^2), three values")
      ->expected(3);

  FuseArgs fa;
  CLI::App* fuse = app.add_subcommand("fuse", "Fuse IMU and GNSS logs into a nav solution");
  fuse->add_option("imu", fa.imu_path, "IMU log (CSV)")->required();
  fuse->add_option("gps", fa.gps_path, "GNSS log (CSV)")->required();
  fuse->add_option("out", fa.out_path, "Output nav log (CSV)")->required();
  fuse->add_option("--config", fa.config_path, "Run configuration file")->required();
  fuse->add_option("--form", fa.form, "Mechanization form")
      ->check(CLI::IsMember({"classical", "trident"}));
  fuse->add_flag("--ins-only", fa.ins_only, "Dead-reckon without GNSS updates");

  AnalyzeArgs aa;
  CLI::App* ana =
      app.add_subcommand("analyze", "Distill a nav log into a consistency report");
  ana->add_option("nav", aa.nav_path, "Nav log from fuse (CSV)")->required();
  ana->add_option("report", aa.report_path, "Output report file")->required();
  ana->add_option("--truth", aa.truth_path, "Truth log for error statistics and NEES");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help exits cleanly; everything else is usage
  }
  sa.seed_set = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return run_simulate(sa);
    if (fuse->parsed()) return run_fuse_cmd(fa);
    return run_analyze(aa);
  } catch (const tn::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
