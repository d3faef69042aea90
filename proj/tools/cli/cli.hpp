#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mergelens/ingest.hpp"
#include "mergelens/pipeline.hpp"
#include "mergelens/synth.hpp"

namespace mergelens::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitPredictor = 3,
};

enum class PredictorKind { kNone, kConstantVelocity, kConstantAcceleration, kFrozen, kReplay, kExternal };

std::string_view to_string(PredictorKind k) noexcept;
PredictorKind parse_predictor_kind(std::string_view text);

struct RunConfig {
  std::filesystem::path road;
  std::vector<std::filesystem::path> inputs;
  std::optional<std::filesystem::path> columns;
  std::filesystem::path output = "mergelens-out";
  SplitTag split = SplitTag::kAll;
  AnalysisConfig analysis;
  PredictionConfig prediction;
  PredictorKind predictor = PredictorKind::kNone;
  std::string predictor_command;
  double predictor_timeout = 10.0;
  std::uint64_t seed = 42;
  std::size_t count = 10;  // synth
  CourtesyPolicy policy = CourtesyPolicy::kInert;
  double courtesy_probability = 1.0;
};

/// Reads a run configuration file (JSON). Relative paths are resolved against
/// the file's directory. Throws Error(kInvalidConfig).
RunConfig load_run_config(const std::filesystem::path& path);

/// Expands directories into their *.csv files, sorted by name.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs);

int cmd_analyze(const RunConfig& cfg, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& log);
int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_validate(const RunConfig& cfg, std::ostream& log);
int cmd_events(const RunConfig& cfg, std::ostream& log);

/// Full command line handling; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mergelens::cli
