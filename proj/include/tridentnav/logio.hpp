#pragma once

// CSV log schemas and flat key=value run files. These formats are the
// toolkit's public data contract: column sets are fixed, doubles are written
// with 17 significant digits so write -> read is bit-exact, rows must be
// strictly time-ordered, and malformed input is rejected with the offending
// path and line number. Readers throw; they never crash or return a prefix
// of a bad file.

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tridentnav/ekf.hpp"
#include "tridentnav/simulator.hpp"

namespace tridentnav {

inline constexpr const char* kImuCsvHeader = "t,wx,wy,wz,fx,fy,fz";
inline constexpr const char* kGpsCsvHeader = "t,px,py,pz,vx,vy,vz";
inline constexpr const char* kTruthCsvHeader =
    "t,qw,qx,qy,qz,vx,vy,vz,px,py,pz,wx,wy,wz,fx,fy,fz";
inline constexpr const char* kNavCsvHeader =
    "t,qw,qx,qy,qz,vx,vy,vz,px,py,pz,bwx,bwy,bwz,bfx,bfy,bfz,"
    "cov_att_x,cov_att_y,cov_att_z,cov_vel_x,cov_vel_y,cov_vel_z,"
    "cov_pos_x,cov_pos_y,cov_pos_z,cov_bw_x,cov_bw_y,cov_bw_z,"
    "cov_bf_x,cov_bf_y,cov_bf_z,"
    "innov_px,innov_py,innov_pz,innov_vx,innov_vy,innov_vz,nis";

// One written navigation epoch: state, covariance diagonal, and — when a fix
// was folded in at this time — the innovation and its normalized squared
// magnitude. The innovation columns are empty on IMU-only epochs.
struct NavLogRow {
  NavState nav;
  Vector15d cov_diag{Vector15d::Zero()};
  bool has_fix = false;
  Vector6d dy{Vector6d::Zero()};  // position (m) then velocity (m/s) residual
  double nis = 0.0;
};

namespace detail {

inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] inline void fail_at(const std::string& path, std::size_t line,
                                 const std::string& what) {
  throw IngestionError(path + ":" + std::to_string(line) + ": " + what);
}

inline double parse_double(std::string_view tok, const std::string& path, std::size_t line) {
  const std::string t{trim(tok)};
  if (t.empty()) {
    fail_at(path, line, "empty numeric field");
  }
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    fail_at(path, line, "malformed number \"" + t + "\"");
  }
  if (!std::isfinite(x)) {
    fail_at(path, line, "non-finite value \"" + t + "\"");
  }
  return x;
}

inline std::uint64_t parse_u64(std::string_view tok, const std::string& path,
                               std::size_t line) {
  const std::string t{trim(tok)};
  if (t.empty() || t.front() == '-' || t.front() == '+') {
    fail_at(path, line, "expected an unsigned integer, got \"" + t + "\"");
  }
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    fail_at(path, line, "malformed unsigned integer \"" + t + "\"");
  }
  return static_cast<std::uint64_t>(x);
}

// Line source that tracks numbers (1-based) and tolerates CRLF endings.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) {
      throw IngestionError(path + ": cannot open for reading");
    }
  }

  bool next(std::string& line) {
    if (!std::getline(in_, line)) {
      return false;
    }
    ++line_no_;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    return true;
  }

  const std::string& path() const { return path_; }
  std::size_t line_no() const { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

inline void split_csv(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.emplace_back(line.substr(start));
      return;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Header-checked fixed-width CSV with strictly increasing time in column 0.
class CsvTable {
 public:
  CsvTable(const std::string& path, const char* header, std::size_t n_fields)
      : reader_(path), n_fields_(n_fields) {
    std::string line;
    if (!reader_.next(line)) {
      fail_at(path, 1, std::string("missing header, expected \"") + header + "\"");
    }
    if (line != header) {
      fail_at(path, 1, std::string("header must be \"") + header + "\"");
    }
  }

  // Returns false at end of data; otherwise fills the fields and the parsed,
  // monotonicity-checked timestamp.
  bool next_row(std::vector<std::string>& fields, double& t) {
    std::string line;
    if (!reader_.next(line)) {
      return false;
    }
    split_csv(line, fields);
    if (fields.size() != n_fields_) {
      fail_at(reader_.path(), reader_.line_no(),
              "expected " + std::to_string(n_fields_) + " fields, got " +
                  std::to_string(fields.size()));
    }
    t = parse_double(fields[0], reader_.path(), reader_.line_no());
    if (!(t > prev_t_)) {
      fail_at(reader_.path(), reader_.line_no(), "time must increase strictly");
    }
    prev_t_ = t;
    return true;
  }

  const std::string& path() const { return reader_.path(); }
  std::size_t line_no() const { return reader_.line_no(); }

 private:
  LineReader reader_;
  std::size_t n_fields_;
  double prev_t_ = -std::numeric_limits<double>::infinity();
};

inline Vector3d parse_vec3(const std::vector<std::string>& f, std::size_t at,
                           const std::string& path, std::size_t line) {
  return {parse_double(f[at], path, line), parse_double(f[at + 1], path, line),
          parse_double(f[at + 2], path, line)};
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const char* header) : path_(path), out_(path) {
    if (!out_) {
      throw IngestionError(path + ": cannot open for writing");
    }
    out_ << header << '\n';
  }

  CsvWriter& field(double x) {
    sep();
    out_ << fmt17(x);
    return *this;
  }

  CsvWriter& field(const Vector3d& v) { return field(v.x()).field(v.y()).field(v.z()); }

  CsvWriter& empty_field() {
    sep();
    return *this;
  }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  void finish() {
    out_.flush();
    if (!out_) {
      throw IngestionError(path_ + ": write failed");
    }
  }

 private:
  void sep() {
    if (!first_) {
      out_ << ',';
    }
    first_ = false;
  }

  std::string path_;
  std::ofstream out_;
  bool first_ = true;
};

}  // namespace detail

inline std::vector<ImuSample> read_imu_csv(const std::string& path) {
  detail::CsvTable table(path, kImuCsvHeader, 7);
  std::vector<ImuSample> out;
  std::vector<std::string> f;
  double t = 0.0;
  while (table.next_row(f, t)) {
    ImuSample s;
    s.t = t;
    s.w_ib_b = detail::parse_vec3(f, 1, table.path(), table.line_no());
    s.f_b = detail::parse_vec3(f, 4, table.path(), table.line_no());
    out.push_back(s);
  }
  return out;
}

inline void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  detail::CsvWriter w(path, kImuCsvHeader);
  for (const ImuSample& s : samples) {
    w.field(s.t).field(s.w_ib_b).field(s.f_b);
    w.end_row();
  }
  w.finish();
}

// GNSS log rows carry no per-fix noise levels; the fuse pipeline stamps the
// configured measurement stds onto each fix after reading.
inline std::vector<GpsFix> read_gps_csv(const std::string& path) {
  detail::CsvTable table(path, kGpsCsvHeader, 7);
  std::vector<GpsFix> out;
  std::vector<std::string> f;
  double t = 0.0;
  while (table.next_row(f, t)) {
    GpsFix fix;
    fix.t = t;
    fix.p_e = detail::parse_vec3(f, 1, table.path(), table.line_no());
    fix.v_e = detail::parse_vec3(f, 4, table.path(), table.line_no());
    out.push_back(fix);
  }
  return out;
}

inline void write_gps_csv(const std::string& path, const std::vector<GpsFix>& fixes) {
  detail::CsvWriter w(path, kGpsCsvHeader);
  for (const GpsFix& fix : fixes) {
    w.field(fix.t).field(fix.p_e).field(fix.v_e);
    w.end_row();
  }
  w.finish();
}

inline std::vector<TruthSample> read_truth_csv(const std::string& path) {
  detail::CsvTable table(path, kTruthCsvHeader, 17);
  std::vector<TruthSample> out;
  std::vector<std::string> f;
  double t = 0.0;
  while (table.next_row(f, t)) {
    TruthSample s;
    s.t = t;
    s.q_be.w = detail::parse_double(f[1], table.path(), table.line_no());
    s.q_be.x = detail::parse_double(f[2], table.path(), table.line_no());
    s.q_be.y = detail::parse_double(f[3], table.path(), table.line_no());
    s.q_be.z = detail::parse_double(f[4], table.path(), table.line_no());
    s.v_e = detail::parse_vec3(f, 5, table.path(), table.line_no());
    s.p_e = detail::parse_vec3(f, 8, table.path(), table.line_no());
    s.w_ib_b = detail::parse_vec3(f, 11, table.path(), table.line_no());
    s.f_b = detail::parse_vec3(f, 14, table.path(), table.line_no());
    out.push_back(s);
  }
  return out;
}

inline void write_truth_csv(const std::string& path, const std::vector<TruthSample>& samples) {
  detail::CsvWriter w(path, kTruthCsvHeader);
  for (const TruthSample& s : samples) {
    w.field(s.t).field(s.q_be.w).field(s.q_be.x).field(s.q_be.y).field(s.q_be.z);
    w.field(s.v_e).field(s.p_e).field(s.w_ib_b).field(s.f_b);
    w.end_row();
  }
  w.finish();
}

inline std::vector<NavLogRow> read_nav_csv(const std::string& path) {
  detail::CsvTable table(path, kNavCsvHeader, 39);
  std::vector<NavLogRow> out;
  std::vector<std::string> f;
  double t = 0.0;
  while (table.next_row(f, t)) {
    NavLogRow r;
    r.nav.t = t;
    r.nav.q_be.w = detail::parse_double(f[1], table.path(), table.line_no());
    r.nav.q_be.x = detail::parse_double(f[2], table.path(), table.line_no());
    r.nav.q_be.y = detail::parse_double(f[3], table.path(), table.line_no());
    r.nav.q_be.z = detail::parse_double(f[4], table.path(), table.line_no());
    r.nav.v_e = detail::parse_vec3(f, 5, table.path(), table.line_no());
    r.nav.p_e = detail::parse_vec3(f, 8, table.path(), table.line_no());
    r.nav.b_w = detail::parse_vec3(f, 11, table.path(), table.line_no());
    r.nav.b_f = detail::parse_vec3(f, 14, table.path(), table.line_no());
    for (int i = 0; i < 15; ++i) {
      r.cov_diag[i] =
          detail::parse_double(f[17 + static_cast<std::size_t>(i)], table.path(), table.line_no());
    }
    std::size_t n_empty = 0;
    for (std::size_t i = 32; i < 39; ++i) {
      n_empty += detail::trim(f[i]).empty() ? 1 : 0;
    }
    if (n_empty == 0) {
      r.has_fix = true;
      for (int i = 0; i < 6; ++i) {
        r.dy[i] = detail::parse_double(f[32 + static_cast<std::size_t>(i)], table.path(),
                                       table.line_no());
      }
      r.nis = detail::parse_double(f[38], table.path(), table.line_no());
    } else if (n_empty != 7) {
      detail::fail_at(table.path(), table.line_no(),
                      "innovation columns must be all empty or all present");
    }
    out.push_back(r);
  }
  return out;
}

inline void write_nav_csv(const std::string& path, const std::vector<NavLogRow>& rows) {
  detail::CsvWriter w(path, kNavCsvHeader);
  for (const NavLogRow& r : rows) {
    w.field(r.nav.t)
        .field(r.nav.q_be.w)
        .field(r.nav.q_be.x)
        .field(r.nav.q_be.y)
        .field(r.nav.q_be.z);
    w.field(r.nav.v_e).field(r.nav.p_e).field(r.nav.b_w).field(r.nav.b_f);
    for (int i = 0; i < 15; ++i) {
      w.field(r.cov_diag[i]);
    }
    if (r.has_fix) {
      w.field(r.dy.head<3>().eval()).field(r.dy.tail<3>().eval()).field(r.nis);
    } else {
      for (int i = 0; i < 7; ++i) {
        w.empty_field();
      }
    }
    w.end_row();
  }
  w.finish();
}

// Everything a fuse run needs beyond the logs themselves. Every key has a
// default; a config file only lists what it overrides.
struct RunConfig {
  EarthModel earth{};
  NoiseParams noise{};
  FilterInitConfig init{};
  double init_window = 3.0;       // s of IMU handed to the coarse initializer
  double dt_nominal = 0.005;      // s, expected IMU step; also the fix-alignment tolerance
  double gate = kInnovationGate;  // chi-square acceptance threshold (6 dof)
  MechForm form = MechForm::kTrident;
  std::uint64_t seed = 0;  // reserved for synthesis pipelines driven by config

  void validate() const {
    earth.validate();
    noise.validate();
    init.validate();
    if (!(init_window > 0.0) || !(dt_nominal > 0.0) || dt_nominal > 1.0 || !(gate > 0.0)) {
      throw SpecError(
          "RunConfig: init.window, filter.dt (at most 1 s), and filter.gate must be positive");
    }
  }
};

// Flat key=value file, '#' comments and blank lines ignored, unknown keys
// rejected. Later occurrences of a key override earlier ones.
inline RunConfig read_config(const std::string& path) {
  RunConfig cfg;
  detail::LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      detail::fail_at(path, reader.line_no(), "expected key = value");
    }
    const std::string key{detail::trim(stripped.substr(0, eq))};
    const std::string val{detail::trim(stripped.substr(eq + 1))};
    const std::size_t n = reader.line_no();
    const auto num = [&] { return detail::parse_double(val, path, n); };
    if (key == "earth.mu") {
      cfg.earth.mu = num();
    } else if (key == "earth.omega_ie") {
      cfg.earth.omega_ie = num();
    } else if (key == "earth.a") {
      cfg.earth.a = num();
    } else if (key == "earth.f") {
      cfg.earth.f = num();
    } else if (key == "earth.j2") {
      cfg.earth.j2 = num();
    } else if (key == "earth.use_j2") {
      if (val != "0" && val != "1") {
        detail::fail_at(path, n, "earth.use_j2 must be 0 or 1");
      }
      cfg.earth.use_j2 = val == "1";
    } else if (key == "noise.sigma_w") {
      cfg.noise.sigma_w = num();
    } else if (key == "noise.sigma_f") {
      cfg.noise.sigma_f = num();
    } else if (key == "noise.sigma_bw") {
      cfg.noise.sigma_bw = num();
    } else if (key == "noise.sigma_bf") {
      cfg.noise.sigma_bf = num();
    } else if (key == "noise.r_p") {
      cfg.noise.r_p = num();
    } else if (key == "noise.r_v") {
      cfg.noise.r_v = num();
    } else if (key == "init.sigma_roll_pitch") {
      cfg.init.sigma_roll_pitch = num();
    } else if (key == "init.sigma_yaw") {
      cfg.init.sigma_yaw = num();
    } else if (key == "init.sigma_v") {
      cfg.init.sigma_v = num();
    } else if (key == "init.sigma_p") {
      cfg.init.sigma_p = num();
    } else if (key == "init.sigma_bw") {
      cfg.init.sigma_bw = num();
    } else if (key == "init.sigma_bf") {
      cfg.init.sigma_bf = num();
    } else if (key == "init.window") {
      cfg.init_window = num();
    } else if (key == "filter.dt") {
      cfg.dt_nominal = num();
    } else if (key == "filter.gate") {
      cfg.gate = num();
    } else if (key == "filter.form") {
      if (val == "classical") {
        cfg.form = MechForm::kClassical;
      } else if (val == "trident") {
        cfg.form = MechForm::kTrident;
      } else {
        detail::fail_at(path, n, "filter.form must be classical or trident");
      }
    } else if (key == "seed") {
      cfg.seed = detail::parse_u64(val, path, n);
    } else {
      detail::fail_at(path, n, "unknown key \"" + key + "\"");
    }
  }
  return cfg;
}

// Flight-profile file: same key=value shape as the run config. Origin and
// heading are given in degrees; each repeated `segment` key appends one
// maneuver:
//   segment = hover <duration_s>
//   segment = accel <duration_s> <a_north> <a_east> <a_down>   (m/s^2)
//   segment = turn <duration_s> <yaw_rate_rad_s>
//   segment = climb <duration_s> <delta_h_m>
inline ProfileSpec read_profile(const std::string& path) {
  constexpr double kDegToRad = M_PI / 180.0;
  ProfileSpec spec;
  detail::LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      detail::fail_at(path, reader.line_no(), "expected key = value");
    }
    const std::string key{detail::trim(stripped.substr(0, eq))};
    const std::string val{detail::trim(stripped.substr(eq + 1))};
    const std::size_t n = reader.line_no();
    if (key == "origin.lat_deg") {
      spec.origin.lat = detail::parse_double(val, path, n) * kDegToRad;
    } else if (key == "origin.lon_deg") {
      spec.origin.lon = detail::parse_double(val, path, n) * kDegToRad;
    } else if (key == "origin.h") {
      spec.origin.h = detail::parse_double(val, path, n);
    } else if (key == "yaw0_deg") {
      spec.yaw0 = detail::parse_double(val, path, n) * kDegToRad;
    } else if (key == "seed") {
      spec.seed = detail::parse_u64(val, path, n);
    } else if (key == "segment") {
      std::istringstream ss(val);
      std::vector<std::string> tok;
      std::string piece;
      while (ss >> piece) {
        tok.push_back(piece);
      }
      if (tok.empty()) {
        detail::fail_at(path, n, "segment needs a maneuver kind");
      }
      const auto want = [&](std::size_t count, const char* usage) {
        if (tok.size() != count + 1) {
          detail::fail_at(path, n, std::string("segment usage: ") + usage);
        }
      };
      Segment seg;
      if (tok[0] == "hover") {
        want(1, "hover <duration_s>");
        seg.kind = ManeuverKind::kHover;
      } else if (tok[0] == "accel") {
        want(4, "accel <duration_s> <a_north> <a_east> <a_down>");
        seg.kind = ManeuverKind::kConstantAccel;
        seg.accel_ned = {detail::parse_double(tok[2], path, n),
                         detail::parse_double(tok[3], path, n),
                         detail::parse_double(tok[4], path, n)};
      } else if (tok[0] == "turn") {
        want(2, "turn <duration_s> <yaw_rate_rad_s>");
        seg.kind = ManeuverKind::kCoordinatedTurn;
        seg.yaw_rate = detail::parse_double(tok[2], path, n);
      } else if (tok[0] == "climb") {
        want(2, "climb <duration_s> <delta_h_m>");
        seg.kind = ManeuverKind::kClimb;
        seg.delta_h = detail::parse_double(tok[2], path, n);
      } else {
        detail::fail_at(path, n, "unknown segment kind \"" + tok[0] + "\"");
      }
      seg.duration = detail::parse_double(tok[1], path, n);
      spec.segments.push_back(seg);
    } else {
      detail::fail_at(path, n, "unknown key \"" + key + "\"");
    }
  }
  return spec;
}

}  // namespace tridentnav
