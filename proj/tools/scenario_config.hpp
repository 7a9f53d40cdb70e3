#pragma once

#include "awf/detector.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace awf::cli {

inline constexpr int kSchemaVersion = 1;

struct FlowSection {
  double h = 0.05;
  double T = 1.0;
  double tol = 1e-10;
  std::vector<double> ladder = {0.1, 0.05, 0.025};
};

struct PhaseSection {
  double h = 0.05;
  double s_max = 100.0;
  double xi_lo = 0.5, xi_hi = 2.0;
  int s_points = 21, xi_points = 16;
  double eikonal_tol = 1e-3;  // bound on <s>^{1+sigma} |d_s W - q(d_xi W, xi)|
};

struct ContourSection {
  double h = 0.05;
  std::vector<double> s = {1.0, 10.0, 100.0, 1000.0};
  std::vector<double> t = {0.0, 0.5, 1.0};
  double R = 64.0;
  double r = 0.1;
  int samples = 10000;
  cplx a1_z{0.0, -1.5};
  cplx a2_z{4.8, -1.5};
  double a2_eps = 0.1;
  bool a2 = true;
  double saddle_tol = 1e-8;
};

struct RunConfig {
  nlohmann::ordered_json raw;  // the file as read
  int version = kSchemaVersion;
  std::string family_name;
  double family_eps = 0.1;
  Scenario scenario;
  DetectorOptions detector;
  FlowSection flow;
  PhaseSection phase;
  ContourSection contours;
};

// Throws Error(ConfigInvalid) whose message starts with the JSON pointer of the offending field.
RunConfig parse_config(const nlohmann::ordered_json& j);
RunConfig load_config(const std::string& path);

// Every field after defaults are applied; parse_config(resolved(c)) reproduces c.
nlohmann::ordered_json resolved(const RunConfig& c);

}  // namespace awf::cli
