#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mergelens/metrics.hpp"
#include "mergelens/pipeline.hpp"

namespace mergelens::cli {

/// Shortest text that parses back to the same double.
std::string fmt(double v);
/// "1", "2.5": used in file names.
std::string tau_label(double tau);

// One row per bin: tau,bin,lower,upper,count,successes,frequency.
// Open-ended bins use -inf / inf; undefined frequencies are left empty.
std::string binned_csv(const BinnedStatistic& stat);
// One row per (tau, phenomenon, zone).
std::string conflict_csv(const std::vector<TauResult>& taus);
// One row per (tau, phenomenon, reason).
std::string exclusions_csv(const std::vector<TauResult>& taus);
std::string events_csv(const std::vector<EventRecord>& events, const std::vector<std::string>& sources);
// Observed and predicted side by side; difference = observed - predicted.
std::string diff_csv(const BinnedStatistic& observed, const BinnedStatistic& predicted);
std::string diff_conflict_csv(const std::vector<TauResult>& observed, const std::vector<TauResult>& predicted);
std::string displacement_csv(const std::vector<DisplacementErrors>& errors, const std::vector<double>& taus,
                             double dt);

/// Collects written files so the manifest can list them.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);
  void write(const std::string& name, const std::string& content);
  const std::vector<std::string>& written() const noexcept { return written_; }
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

/// FNV-1a over the file's bytes, hex.
std::string file_digest(const std::filesystem::path& path);

}  // namespace mergelens::cli
