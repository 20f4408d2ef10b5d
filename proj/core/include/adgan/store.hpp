#pragma once

#include <map>
#include <string>
#include <vector>

#include "adgan/datamodel.hpp"
#include "adgan/scoring.hpp"

namespace adgan {

// Experiment directory layout. The config snapshot (with its hash) lands on
// disk before the first training iteration so every artifact can be traced.
struct ExperimentDir {
  std::string root;

  std::string config_path() const;
  std::string checkpoints_dir() const;
  std::string metrics_path() const;
  std::string scores_dir() const;
  std::string reconstructions_dir() const;
  std::string report_path() const;
};

// Creates the layout and writes the config snapshot. An existing non-empty
// root is refused unless force is set.
ExperimentDir prepare_experiment_dir(const std::string& root, const TrainConfig& cfg, bool force);

// Refuses existing non-empty directories unless force is set (used by
// commands that own their whole output directory).
void ensure_fresh_dir(const std::string& root, bool force);

// Resolves a relative output path under $ADGAN_OUT_ROOT when that variable
// is set; absolute paths and unset environments pass through.
std::string resolve_out_dir(const std::string& path);

// Scores-file metadata ("# key=value" comment lines before the header).
void write_scores_with_meta(const std::string& path, const std::vector<ScoredExample>& scored,
                            const std::map<std::string, std::string>& meta);
std::map<std::string, std::string> read_scores_meta(const std::string& path);

}  // namespace adgan
