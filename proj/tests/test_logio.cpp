#include "tridentnav/logio.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace tridentnav;

std::string tmp_path(const std::string& name) { return ::testing::TempDir() + "tn_logio_" + name; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void expect_ingestion_error_containing(Fn fn, const std::string& needle) {
  try {
    fn();
    ADD_FAILURE() << "expected IngestionError containing \"" << needle << "\"";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

// Short hover-then-accelerate truth: enough dynamics that every serialized
// double carries a full mantissa.
TruthTrajectory short_truth() {
  EarthModel em;
  ProfileSpec spec;
  spec.origin = {45.0 * M_PI / 180.0, 7.0 * M_PI / 180.0, 300.0};
  spec.segments.push_back({ManeuverKind::kHover, 3.0, Vector3d::Zero(), 0.0, 0.0});
  spec.segments.push_back({ManeuverKind::kConstantAccel, 2.0, Vector3d(1.0, 0.5, -0.2), 0.0, 0.0});
  return gen_trajectory(em, spec, 100.0);
}

TEST(ImuCsv, RoundTripIsBitExactOverNoisySensorOutput) {
  const TruthTrajectory truth = short_truth();
  const std::vector<ImuSample> imu =
      synth_imu(truth, NoiseParams{}, Vector3d(1e-4, -2e-4, 3e-5), Vector3d(0.01, -0.02, 0.03),
                0xA11CEull, true);
  const std::string path = tmp_path("imu_roundtrip.csv");
  write_imu_csv(path, imu);
  const std::vector<ImuSample> back = read_imu_csv(path);
  ASSERT_EQ(back.size(), imu.size());
  for (std::size_t i = 0; i < imu.size(); ++i) {
    EXPECT_EQ(back[i].t, imu[i].t);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(back[i].w_ib_b[k], imu[i].w_ib_b[k]);
      EXPECT_EQ(back[i].f_b[k], imu[i].f_b[k]);
    }
  }
}

TEST(GpsCsv, RoundTripIsBitExactAndLeavesNoiseStdsAtDefaults) {
  const TruthTrajectory truth = short_truth();
  NoiseParams noise;
  noise.r_p = 3.5;  // stamped on the synthesized fixes, deliberately not the default
  noise.r_v = 0.7;
  const std::vector<GpsFix> fixes = synth_gps(truth, noise, 1.0, 0xBEEFull);
  const std::string path = tmp_path("gps_roundtrip.csv");
  write_gps_csv(path, fixes);
  const std::vector<GpsFix> back = read_gps_csv(path);
  ASSERT_EQ(back.size(), fixes.size());
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    EXPECT_EQ(back[i].t, fixes[i].t);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(back[i].p_e[k], fixes[i].p_e[k]);
      EXPECT_EQ(back[i].v_e[k], fixes[i].v_e[k]);
    }
    // The log carries no noise columns; readers hand back default stds and
    // the fuse pipeline stamps the configured ones.
    EXPECT_EQ(back[i].r_p, GpsFix{}.r_p);
    EXPECT_EQ(back[i].r_v, GpsFix{}.r_v);
  }
}

TEST(TruthCsv, RoundTripIsBitExact) {
  const TruthTrajectory truth = short_truth();
  const std::string path = tmp_path("truth_roundtrip.csv");
  write_truth_csv(path, truth.samples);
  const std::vector<TruthSample> back = read_truth_csv(path);
  ASSERT_EQ(back.size(), truth.samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const TruthSample& a = truth.samples[i];
    const TruthSample& b = back[i];
    EXPECT_EQ(b.t, a.t);
    EXPECT_EQ(b.q_be.w, a.q_be.w);
    EXPECT_EQ(b.q_be.x, a.q_be.x);
    EXPECT_EQ(b.q_be.y, a.q_be.y);
    EXPECT_EQ(b.q_be.z, a.q_be.z);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(b.v_e[k], a.v_e[k]);
      EXPECT_EQ(b.p_e[k], a.p_e[k]);
      EXPECT_EQ(b.w_ib_b[k], a.w_ib_b[k]);
      EXPECT_EQ(b.f_b[k], a.f_b[k]);
    }
  }
}

TEST(NavCsv, RoundTripPreservesFixAndNoFixRows) {
  std::vector<NavLogRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    NavLogRow& r = rows[static_cast<std::size_t>(i)];
    r.nav.t = 0.005 * (i + 1);
    r.nav.q_be = quat_normalize(Quaternion(1.0, 0.01 * i, -0.02, 0.3));
    r.nav.v_e = Vector3d(1.0 / 3.0, -2.0 / 7.0, 1e-12) * (i + 1);
    r.nav.p_e = Vector3d(4.5e6, -1.2e6, 4.3e6) + Vector3d::Constant(0.123456789 * i);
    r.nav.b_w = Vector3d(1e-4, 2e-4, -3e-4);
    r.nav.b_f = Vector3d(0.01, -0.02, 0.03);
    for (int k = 0; k < 15; ++k) {
      r.cov_diag[k] = (k + 1) * 1e-3 / (i + 1);
    }
  }
  rows[1].has_fix = true;
  rows[1].dy << 0.5, -0.25, 1.0 / 9.0, 0.01, -0.02, 0.003;
  rows[1].nis = 4.217;

  const std::string path = tmp_path("nav_roundtrip.csv");
  write_nav_csv(path, rows);
  const std::vector<NavLogRow> back = read_nav_csv(path);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].nav.t, rows[i].nav.t);
    EXPECT_EQ(back[i].nav.q_be.w, rows[i].nav.q_be.w);
    EXPECT_EQ(back[i].nav.q_be.x, rows[i].nav.q_be.x);
    EXPECT_EQ(back[i].nav.q_be.y, rows[i].nav.q_be.y);
    EXPECT_EQ(back[i].nav.q_be.z, rows[i].nav.q_be.z);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(back[i].nav.v_e[k], rows[i].nav.v_e[k]);
      EXPECT_EQ(back[i].nav.p_e[k], rows[i].nav.p_e[k]);
      EXPECT_EQ(back[i].nav.b_w[k], rows[i].nav.b_w[k]);
      EXPECT_EQ(back[i].nav.b_f[k], rows[i].nav.b_f[k]);
    }
    for (int k = 0; k < 15; ++k) {
      EXPECT_EQ(back[i].cov_diag[k], rows[i].cov_diag[k]);
    }
    ASSERT_EQ(back[i].has_fix, rows[i].has_fix);
    if (rows[i].has_fix) {
      for (int k = 0; k < 6; ++k) {
        EXPECT_EQ(back[i].dy[k], rows[i].dy[k]);
      }
      EXPECT_EQ(back[i].nis, rows[i].nis);
    }
  }
}

TEST(NavCsv, EmptyInputWritesHeaderOnlyAndReadsBackEmpty) {
  const std::string path = tmp_path("nav_empty.csv");
  write_nav_csv(path, {});
  EXPECT_EQ(read_text(path), std::string(kNavCsvHeader) + "\n");
  EXPECT_TRUE(read_nav_csv(path).empty());
}

TEST(ImuCsv, EmptyDataSectionGivesEmptySequence) {
  const std::string path = tmp_path("imu_empty.csv");
  write_text(path, std::string(kImuCsvHeader) + "\n");
  EXPECT_TRUE(read_imu_csv(path).empty());
}

TEST(ImuCsv, RejectsWrongHeader) {
  const std::string path = tmp_path("imu_bad_header.csv");
  write_text(path, "time,wx,wy,wz,fx,fy,fz\n0.005,0,0,0,0,0,-9.8\n");
  expect_ingestion_error_containing([&] { read_imu_csv(path); }, ":1:");
}

TEST(ImuCsv, RejectsWrongFieldCount) {
  const std::string path = tmp_path("imu_short_row.csv");
  write_text(path, std::string(kImuCsvHeader) + "\n0.005,0,0,0,0,-9.8\n");
  expect_ingestion_error_containing([&] { read_imu_csv(path); }, ":2:");
}

TEST(ImuCsv, RejectsNaNValueNamingTheLine) {
  const std::string path = tmp_path("imu_nan.csv");
  write_text(path, std::string(kImuCsvHeader) +
                       "\n0.005,0,0,0,0,0,-9.8\n0.01,nan,0,0,0,0,-9.8\n");
  expect_ingestion_error_containing([&] { read_imu_csv(path); }, ":3:");
  expect_ingestion_error_containing([&] { read_imu_csv(path); }, "non-finite");
}

TEST(ImuCsv, RejectsNonMonotonicTime) {
  const std::string path = tmp_path("imu_time.csv");
  write_text(path, std::string(kImuCsvHeader) +
                       "\n0.005,0,0,0,0,0,-9.8\n0.005,0,0,0,0,0,-9.8\n");
  expect_ingestion_error_containing([&] { read_imu_csv(path); }, "increase strictly");
  expect_ingestion_error_containing([&] { read_imu_csv(path); }, ":3:");
}

TEST(ImuCsv, MissingFileNamesThePath) {
  expect_ingestion_error_containing([] { read_imu_csv("/nonexistent/imu.csv"); },
                                    "/nonexistent/imu.csv");
}

TEST(NavCsv, RejectsPartiallyEmptyInnovationColumns) {
  std::vector<NavLogRow> rows(1);
  rows[0].nav.t = 0.005;
  rows[0].nav.q_be = Quaternion::identity();
  const std::string path = tmp_path("nav_partial_innov.csv");
  write_nav_csv(path, rows);
  // Splice a NIS value into an otherwise-empty innovation block.
  std::string text = read_text(path);
  text.replace(text.rfind(',') + 1, 0, "4.2");
  write_text(path, text + (text.back() == '\n' ? "" : "\n"));
  expect_ingestion_error_containing([&] { read_nav_csv(path); },
                                    "all empty or all present");
}

TEST(Config, EmptyFileYieldsAllDefaults) {
  const std::string path = tmp_path("config_defaults.cfg");
  write_text(path, "# nothing overridden\n\n");
  const RunConfig cfg = read_config(path);
  EXPECT_EQ(cfg.earth.mu, EarthModel{}.mu);
  EXPECT_EQ(cfg.earth.omega_ie, EarthModel{}.omega_ie);
  EXPECT_FALSE(cfg.earth.use_j2);
  EXPECT_EQ(cfg.noise.sigma_w, NoiseParams{}.sigma_w);
  EXPECT_EQ(cfg.noise.r_p, NoiseParams{}.r_p);
  EXPECT_EQ(cfg.init.sigma_yaw, FilterInitConfig{}.sigma_yaw);
  EXPECT_EQ(cfg.init_window, 3.0);
  EXPECT_EQ(cfg.dt_nominal, 0.005);
  EXPECT_EQ(cfg.gate, kInnovationGate);
  EXPECT_EQ(cfg.form, MechForm::kTrident);
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesEveryKnownKey) {
  const std::string path = tmp_path("config_full.cfg");
  write_text(path,
             "earth.mu = 3.9e14\n"
             "earth.omega_ie = 7.3e-5\n"
             "earth.a = 6378000\n"
             "earth.f = 0.00335\n"
             "earth.j2 = 1.08e-3\n"
             "earth.use_j2 = 1\n"
             "noise.sigma_w = 1e-3\n"
             "noise.sigma_f = 2e-3\n"
             "noise.sigma_bw = 3e-5\n"
             "noise.sigma_bf = 4e-4\n"
             "noise.r_p = 2.5\n"
             "noise.r_v = 0.25\n"
             "init.sigma_roll_pitch = 0.03\n"
             "init.sigma_yaw = 0.6\n"
             "init.sigma_v = 0.4\n"
             "init.sigma_p = 6\n"
             "init.sigma_bw = 0.01\n"
             "init.sigma_bf = 0.2\n"
             "init.window = 2.5\n"
             "filter.dt = 0.01\n"
             "  filter.gate   =   18.5  \n"
             "filter.form = classical\n"
             "seed = 42\n");
  const RunConfig cfg = read_config(path);
  EXPECT_EQ(cfg.earth.mu, 3.9e14);
  EXPECT_EQ(cfg.earth.omega_ie, 7.3e-5);
  EXPECT_EQ(cfg.earth.a, 6378000.0);
  EXPECT_EQ(cfg.earth.f, 0.00335);
  EXPECT_EQ(cfg.earth.j2, 1.08e-3);
  EXPECT_TRUE(cfg.earth.use_j2);
  EXPECT_EQ(cfg.noise.sigma_w, 1e-3);
  EXPECT_EQ(cfg.noise.sigma_f, 2e-3);
  EXPECT_EQ(cfg.noise.sigma_bw, 3e-5);
  EXPECT_EQ(cfg.noise.sigma_bf, 4e-4);
  EXPECT_EQ(cfg.noise.r_p, 2.5);
  EXPECT_EQ(cfg.noise.r_v, 0.25);
  EXPECT_EQ(cfg.init.sigma_roll_pitch, 0.03);
  EXPECT_EQ(cfg.init.sigma_yaw, 0.6);
  EXPECT_EQ(cfg.init.sigma_v, 0.4);
  EXPECT_EQ(cfg.init.sigma_p, 6.0);
  EXPECT_EQ(cfg.init.sigma_bw, 0.01);
  EXPECT_EQ(cfg.init.sigma_bf, 0.2);
  EXPECT_EQ(cfg.init_window, 2.5);
  EXPECT_EQ(cfg.dt_nominal, 0.01);
  EXPECT_EQ(cfg.gate, 18.5);
  EXPECT_EQ(cfg.form, MechForm::kClassical);
  EXPECT_EQ(cfg.seed, 42u);
}

TEST(Config, RejectsUnknownKeyNamingIt) {
  const std::string path = tmp_path("config_unknown.cfg");
  write_text(path, "filter.gate = 20\nfilter.gait = 1\n");
  expect_ingestion_error_containing([&] { read_config(path); }, "unknown key \"filter.gait\"");
  expect_ingestion_error_containing([&] { read_config(path); }, ":2:");
}

TEST(Config, RejectsMalformedLines) {
  const std::string no_eq = tmp_path("config_noeq.cfg");
  write_text(no_eq, "filter.gate 20\n");
  expect_ingestion_error_containing([&] { read_config(no_eq); }, "key = value");

  const std::string bad_num = tmp_path("config_badnum.cfg");
  write_text(bad_num, "filter.gate = fast\n");
  expect_ingestion_error_containing([&] { read_config(bad_num); }, "malformed number");

  const std::string bad_form = tmp_path("config_badform.cfg");
  write_text(bad_form, "filter.form = cubic\n");
  expect_ingestion_error_containing([&] { read_config(bad_form); },
                                    "classical or trident");

  const std::string bad_flag = tmp_path("config_badflag.cfg");
  write_text(bad_flag, "earth.use_j2 = yes\n");
  expect_ingestion_error_containing([&] { read_config(bad_flag); }, "0 or 1");

  const std::string bad_seed = tmp_path("config_badseed.cfg");
  write_text(bad_seed, "seed = -3\n");
  expect_ingestion_error_containing([&] { read_config(bad_seed); }, "unsigned");
}

TEST(Config, LaterKeysOverrideEarlier) {
  const std::string path = tmp_path("config_override.cfg");
  write_text(path, "filter.gate = 5\nfilter.gate = 9\n");
  EXPECT_EQ(read_config(path).gate, 9.0);
}

TEST(Profile, ParsesOriginHeadingSeedAndSegmentsInOrder) {
  const std::string path = tmp_path("profile_full.prof");
  write_text(path,
             "# short mixed flight\n"
             "origin.lat_deg = 45\n"
             "origin.lon_deg = 7\n"
             "origin.h = 300\n"
             "yaw0_deg = 90\n"
             "seed = 9\n"
             "segment = hover 10\n"
             "segment = accel 5 1 0 0\n"
             "segment = turn 40 0.15\n"
             "segment = climb 20 100\n");
  const ProfileSpec spec = read_profile(path);
  EXPECT_DOUBLE_EQ(spec.origin.lat, 45.0 * M_PI / 180.0);
  EXPECT_DOUBLE_EQ(spec.origin.lon, 7.0 * M_PI / 180.0);
  EXPECT_EQ(spec.origin.h, 300.0);
  EXPECT_DOUBLE_EQ(spec.yaw0, M_PI / 2.0);
  EXPECT_EQ(spec.seed, 9u);
  ASSERT_EQ(spec.segments.size(), 4u);
  EXPECT_EQ(spec.segments[0].kind, ManeuverKind::kHover);
  EXPECT_EQ(spec.segments[0].duration, 10.0);
  EXPECT_EQ(spec.segments[1].kind, ManeuverKind::kConstantAccel);
  EXPECT_EQ(spec.segments[1].accel_ned, Vector3d(1.0, 0.0, 0.0));
  EXPECT_EQ(spec.segments[2].kind, ManeuverKind::kCoordinatedTurn);
  EXPECT_EQ(spec.segments[2].yaw_rate, 0.15);
  EXPECT_EQ(spec.segments[3].kind, ManeuverKind::kClimb);
  EXPECT_EQ(spec.segments[3].delta_h, 100.0);
  EXPECT_NO_THROW(spec.validate());
}

TEST(Profile, RejectsBadSegments) {
  const std::string unknown = tmp_path("profile_unknown.prof");
  write_text(unknown, "segment = wobble 5\n");
  expect_ingestion_error_containing([&] { read_profile(unknown); },
                                    "unknown segment kind \"wobble\"");

  const std::string arity = tmp_path("profile_arity.prof");
  write_text(arity, "segment = turn 40\n");
  expect_ingestion_error_containing([&] { read_profile(arity); }, "segment usage");

  const std::string bare = tmp_path("profile_bare.prof");
  write_text(bare, "segment =\n");
  expect_ingestion_error_containing([&] { read_profile(bare); }, "maneuver kind");

  const std::string key = tmp_path("profile_key.prof");
  write_text(key, "origin.latitude = 45\n");
  expect_ingestion_error_containing([&] { read_profile(key); }, "unknown key");
}

}  // namespace
