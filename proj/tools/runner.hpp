#pragma once

#include "scenario_config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace awf::cli {

enum class StageStatus { Pass, Fail, Error, Inconclusive };

const char* to_string(StageStatus s);

struct StageResult {
  std::string name;
  StageStatus status = StageStatus::Pass;
  std::string error;  // "<Kind>: message" when status is Error or Inconclusive
  double seconds = 0.0;
  nlohmann::ordered_json certificates = nlohmann::ordered_json::object();
  std::vector<std::string> outputs;  // file names relative to the output directory
};

struct RunResult {
  int exit_code = 0;  // 0 all gates pass, 2 InconclusiveGap, 1 anything else
  std::vector<StageResult> stages;
};

const std::vector<std::string>& subcommands();  // flow, phase, fbi, evolve, contours, detect, all

// Runs the stages of `subcommand`, writes their files and manifest.json into out_dir (created if missing).
// Progress lines go to `log`; `detect` also prints the verdict record there.
RunResult run(const std::string& subcommand, const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

}  // namespace awf::cli
