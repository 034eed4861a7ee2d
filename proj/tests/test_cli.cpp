// End-to-end tests of the command-line tool: each test runs the real binary
// as a subprocess and inspects its exit code, console output, and files.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tridentnav/logio.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in.good()) << "cannot open " << p;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  ASSERT_TRUE(out.good()) << "cannot create " << p;
  out << body;
}

class CliTest : public ::testing::Test {
 protected:
  // One scratch tree for the whole suite; the expensive 120 s logs are
  // generated once and shared read-only by the individual tests.
  static fs::path root() { return fs::temp_directory_path() / "tridentnav_cli_test"; }

  static CliResult run_cli(const std::string& args) {
    const fs::path out_f = root() / "stdout.txt";
    const fs::path err_f = root() / "stderr.txt";
    const std::string cmd = std::string(TRIDENTNAV_BIN) + " " + args + " >" + out_f.string() +
                            " 2>" + err_f.string();
    CliResult r;
    const int rc = std::system(cmd.c_str());
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_text(out_f);
    r.err = read_text(err_f);
    return r;
  }

  static void SetUpTestSuite() {
    fs::remove_all(root());
    fs::create_directories(root());

    // 120 s stationary hover; zero initial heading so that the filter's
    // yaw-at-zero bootstrap matches truth and dead reckoning has no
    // azimuth/Earth-rate coupling error.
    write_text(root() / "hover.profile",
               "origin.lat_deg = 45.0\n"
               "origin.lon_deg = 7.0\n"
               "origin.h = 300.0\n"
               "yaw0_deg = 0.0\n"
               "seed = 7\n"
               "segment = hover 120\n");

    // 120 s out-and-back flight: accelerate north, half-circle turn,
    // symmetric brake back to rest, hover out the clock.
    write_text(root() / "flight.profile",
               "origin.lat_deg = 45.0\n"
               "origin.lon_deg = 7.0\n"
               "origin.h = 300.0\n"
               "yaw0_deg = 0.0\n"
               "seed = 42\n"
               "segment = hover 10\n"
               "segment = accel 5 2.0 0.0 0.0\n"
               "segment = turn 39.269908169872414 0.08\n"
               "segment = accel 5 2.0 0.0 0.0\n"
               "segment = hover 60.730091830127586\n");

    write_text(root() / "defaults.cfg", "# all defaults\n");

    CliResult r = run_cli("simulate " + (root() / "hover.profile").string() + " " +
                          (root() / "clean").string() + " --no-noise");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    r = run_cli("simulate " + (root() / "flight.profile").string() + " " +
                (root() / "noisy").string() + " --bias-w 0.002 -0.001 0.0015 --bias-f 0.02 "
                "-0.03 0.01");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    r = run_cli("simulate " + (root() / "flight.profile").string() + " " +
                (root() / "flight_clean").string() + " --no-noise");
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }

  static std::string arg(const fs::path& p) { return p.string(); }

  static std::size_t data_rows(const fs::path& csv) {
    std::ifstream in(csv);
    EXPECT_TRUE(in.good()) << csv;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n == 0 ? 0 : n - 1;  // minus header
  }

  // Parses "key = value" lines of the report's summary section.
  static std::map<std::string, std::string> report_summary(const fs::path& report) {
    std::ifstream in(report);
    EXPECT_TRUE(in.good()) << report;
    std::map<std::string, std::string> kv;
    std::string line;
    bool in_summary = false;
    while (std::getline(in, line)) {
      if (line == "section = summary") {
        in_summary = true;
        continue;
      }
      if (line.rfind("section = ", 0) == 0) in_summary = false;
      if (!in_summary) continue;
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
  }
};

TEST_F(CliTest, HelpExitsZeroAndNamesSubcommands) {
  const CliResult r = run_cli("--help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  EXPECT_NE(r.out.find("fuse"), std::string::npos);
  EXPECT_NE(r.out.find("analyze"), std::string::npos);
}

TEST_F(CliTest, MissingSubcommandOrFlagsIsUsageError) {
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("fuse").exit_code, 1);                       // missing paths
  EXPECT_EQ(run_cli("simulate only_one_arg").exit_code, 1);      // missing out dir
  EXPECT_EQ(run_cli("fuse a b c --config d --form cubic").exit_code, 1);
}

TEST_F(CliTest, SimulateMissingProfileIsDataErrorNamingPath) {
  const fs::path missing = root() / "no_such.profile";
  const CliResult r = run_cli("simulate " + arg(missing) + " " + arg(root() / "x"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;
}

TEST_F(CliTest, SimulateWritesExpectedRowCounts) {
  // 120 s at the default 200 Hz IMU / 1 Hz GNSS.
  EXPECT_EQ(data_rows(root() / "clean" / "truth.csv"), 24001u);
  EXPECT_EQ(data_rows(root() / "clean" / "imu.csv"), 24000u);
  EXPECT_EQ(data_rows(root() / "clean" / "gps.csv"), 121u);

  const std::string imu_head = read_text(root() / "clean" / "imu.csv").substr(0, 20);
  EXPECT_EQ(imu_head.rfind("t,wx,wy,wz,fx,fy,fz", 0), 0u) << imu_head;
}

TEST_F(CliTest, SimulateSameSeedIsByteIdenticalAndSeedOverrideChangesOutput) {
  const CliResult r = run_cli("simulate " + arg(root() / "flight.profile") + " " +
                              arg(root() / "noisy_again") + " --bias-w 0.002 -0.001 0.0015 "
                              "--bias-f 0.02 -0.03 0.01");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"truth.csv", "imu.csv", "gps.csv"}) {
    EXPECT_EQ(read_text(root() / "noisy" / f), read_text(root() / "noisy_again" / f)) << f;
  }

  const CliResult r2 = run_cli("simulate " + arg(root() / "flight.profile") + " " +
                               arg(root() / "noisy_seed9") + " --seed 9");
  ASSERT_EQ(r2.exit_code, 0) << r2.err;
  EXPECT_NE(read_text(root() / "noisy" / "imu.csv"),
            read_text(root() / "noisy_seed9" / "imu.csv"));
}

TEST_F(CliTest, InsOnlyReplayOfPerfectHoverStaysPut) {
  const fs::path nav = root() / "nav_ins.csv";
  const CliResult r = run_cli("fuse " + arg(root() / "clean" / "imu.csv") + " " +
                              arg(root() / "clean" / "gps.csv") + " " + arg(nav) +
                              " --config " + arg(root() / "defaults.cfg") + " --ins-only");
  ASSERT_EQ(r.exit_code, 0) << r.err;

  const auto rows = tridentnav::read_nav_csv(nav.string());
  ASSERT_EQ(rows.size(), 24001u);
  const auto gps = tridentnav::read_gps_csv((root() / "clean" / "gps.csv").string());
  const double drift = (rows.back().nav.p_e - gps.front().p_e).norm();
  EXPECT_LT(drift, 0.01) << "dead-reckoning drift over 120 s: " << drift << " m";
  EXPECT_LT(rows.back().nav.v_e.norm(), 1e-3);
  for (const auto& row : rows) {
    EXPECT_FALSE(row.has_fix);
  }
}

TEST_F(CliTest, MechanizationFormsAgreeThroughTheFilter) {
  // Identical clean logs through both mechanization forms. The filter loop
  // accumulates state per step without compensated summation, so the forms'
  // agreement is limited by position-scale rounding random walk (~1e-6 m
  // over 120 s), not by the far tighter mechanization-level equivalence.
  for (const char* form : {"classical", "trident"}) {
    const CliResult r = run_cli("fuse " + arg(root() / "flight_clean" / "imu.csv") + " " +
                                arg(root() / "flight_clean" / "gps.csv") + " " +
                                arg(root() / (std::string("nav_") + form + ".csv")) +
                                " --config " + arg(root() / "defaults.cfg") + " --form " + form);
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  const auto a = tridentnav::read_nav_csv((root() / "nav_classical.csv").string());
  const auto b = tridentnav::read_nav_csv((root() / "nav_trident.csv").string());
  ASSERT_EQ(a.size(), b.size());
  EXPECT_LT((a.back().nav.p_e - b.back().nav.p_e).norm(), 1e-5);
}

TEST_F(CliTest, FuseIsByteDeterministic) {
  const fs::path nav1 = root() / "nav_det1.csv";
  const fs::path nav2 = root() / "nav_det2.csv";
  for (const fs::path& nav : {nav1, nav2}) {
    const CliResult r = run_cli("fuse " + arg(root() / "noisy" / "imu.csv") + " " +
                                arg(root() / "noisy" / "gps.csv") + " " + arg(nav) +
                                " --config " + arg(root() / "defaults.cfg"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  EXPECT_EQ(read_text(nav1), read_text(nav2));
}

TEST_F(CliTest, FuseReportsHealthCounters) {
  const CliResult r = run_cli("fuse " + arg(root() / "noisy" / "imu.csv") + " " +
                              arg(root() / "noisy" / "gps.csv") + " " +
                              arg(root() / "nav_counters.csv") + " --config " +
                              arg(root() / "defaults.cfg"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("fixes used 120"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("gated"), std::string::npos);
  EXPECT_NE(r.out.find("normalization events"), std::string::npos);
}

TEST_F(CliTest, DivergenceWritesPartialLogAndExitsThree) {
  // A fix with a wildly wrong velocity, a config that trusts velocity to
  // 1e-6 m/s, and a gate too large to reject it: the resulting feedback
  // correction leaves the small-error regime and the filter must stop,
  // keeping everything up to the failure for post-mortem.
  const std::string gps = read_text(root() / "clean" / "gps.csv");
  std::istringstream in(gps);
  std::ostringstream poisoned;
  std::string line;
  std::getline(in, line);
  poisoned << line << "\n";
  while (std::getline(in, line)) {
    if (line.rfind("1,", 0) == 0) {  // the fix at t = 1 s
      std::vector<std::string> parts;
      std::istringstream ls(line);
      std::string tok;
      while (std::getline(ls, tok, ',')) parts.push_back(tok);
      ASSERT_EQ(parts.size(), 7u);
      parts[4] = parts[5] = parts[6] = "1e8";  // velocity columns
      line = parts[0];
      for (std::size_t i = 1; i < parts.size(); ++i) line += "," + parts[i];
    }
    poisoned << line << "\n";
  }
  write_text(root() / "poison_gps.csv", poisoned.str());
  write_text(root() / "trusting.cfg", "noise.r_v = 1e-6\nfilter.gate = 1e300\n");

  const fs::path nav = root() / "nav_div.csv";
  const CliResult r = run_cli("fuse " + arg(root() / "clean" / "imu.csv") + " " +
                              arg(root() / "poison_gps.csv") + " " + arg(nav) + " --config " +
                              arg(root() / "trusting.cfg"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("diverged"), std::string::npos) << r.err;
  EXPECT_GE(data_rows(nav), 2u) << "partial log must hold the states up to the failure";
}

TEST_F(CliTest, AnalyzeEmitsAllSectionsWithTruth) {
  const fs::path nav = root() / "nav_full.csv";
  CliResult r = run_cli("fuse " + arg(root() / "noisy" / "imu.csv") + " " +
                        arg(root() / "noisy" / "gps.csv") + " " + arg(nav) + " --config " +
                        arg(root() / "defaults.cfg"));
  ASSERT_EQ(r.exit_code, 0) << r.err;

  const fs::path report = root() / "report.txt";
  r = run_cli("analyze " + arg(nav) + " " + arg(report) + " --truth " +
              arg(root() / "noisy" / "truth.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;

  const std::string body = read_text(report);
  EXPECT_NE(body.find("section = summary"), std::string::npos);
  EXPECT_NE(body.find("section = autocorr"), std::string::npos);
  EXPECT_NE(body.find("section = nis"), std::string::npos);
  EXPECT_NE(body.find("section = nees"), std::string::npos);
  EXPECT_NE(body.find("\n0,1,1,1,1,1,1\n"), std::string::npos)
      << "lag-0 autocorrelation must be exactly 1 on all channels";

  const auto kv = report_summary(report);
  ASSERT_TRUE(kv.count("rmse_pos_m"));
  // Converged position error stays within 1.5x the per-axis GNSS noise.
  EXPECT_LT(std::stod(kv.at("rmse_pos_m")), 1.5 * 2.0);
  ASSERT_TRUE(kv.count("nis_mean"));
  EXPECT_GT(std::stod(kv.at("nis_mean")), 3.0);
  EXPECT_LT(std::stod(kv.at("nis_mean")), 9.0);
  ASSERT_TRUE(kv.count("nees_dof"));
  EXPECT_EQ(kv.at("nees_dof"), "9");
}

TEST_F(CliTest, AnalyzeInnovationAutocorrelationIsWhite) {
  const fs::path nav = root() / "nav_full.csv";  // produced by the test above or here
  if (!fs::exists(nav)) {
    const CliResult rf = run_cli("fuse " + arg(root() / "noisy" / "imu.csv") + " " +
                                 arg(root() / "noisy" / "gps.csv") + " " + arg(nav) +
                                 " --config " + arg(root() / "defaults.cfg"));
    ASSERT_EQ(rf.exit_code, 0) << rf.err;
  }
  const fs::path report = root() / "report_white.txt";
  const CliResult r = run_cli("analyze " + arg(nav) + " " + arg(report));
  ASSERT_EQ(r.exit_code, 0) << r.err;

  // 120 accepted fixes -> the white-noise band is 3/sqrt(120).
  const double band = 3.0 / std::sqrt(120.0);
  std::istringstream in(read_text(report));
  std::string line;
  bool in_autocorr = false;
  std::size_t checked = 0;
  while (std::getline(in, line)) {
    if (line == "section = autocorr") {
      in_autocorr = true;
      std::getline(in, line);  // column header
      continue;
    }
    if (line.empty() || line.rfind("section = ", 0) == 0) {
      in_autocorr = false;
      continue;
    }
    if (!in_autocorr) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    const int lag = std::stoi(tok);
    if (lag == 0) continue;
    if (lag > 10) break;  // low lags carry the filter-mistuning signature
    while (std::getline(ls, tok, ',')) {
      EXPECT_LT(std::abs(std::stod(tok)), band) << "lag " << lag;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 60u);  // 10 lags x 6 channels
}

TEST_F(CliTest, AnalyzeWithoutTruthOmitsNeesAndExitsZero) {
  const fs::path nav = root() / "nav_ins.csv";
  if (!fs::exists(nav)) {
    const CliResult rf = run_cli("fuse " + arg(root() / "clean" / "imu.csv") + " " +
                                 arg(root() / "clean" / "gps.csv") + " " + arg(nav) +
                                 " --config " + arg(root() / "defaults.cfg") + " --ins-only");
    ASSERT_EQ(rf.exit_code, 0) << rf.err;
  }
  const fs::path report = root() / "report_no_truth.txt";
  const CliResult r = run_cli("analyze " + arg(nav) + " " + arg(report));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  const std::string body = read_text(report);
  EXPECT_EQ(body.find("section = nees"), std::string::npos);
  EXPECT_EQ(body.find("nees_mean"), std::string::npos);
  EXPECT_NE(body.find("section = summary"), std::string::npos);
}

TEST_F(CliTest, AnalyzeRejectsForeignSchema) {
  const fs::path report = root() / "report_bad.txt";
  const CliResult r = run_cli("analyze " + arg(root() / "clean" / "gps.csv") + " " +
                              arg(report));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

}  // namespace
