#include "adgan/store.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "adgan/error.hpp"

namespace fs = std::filesystem;

namespace adgan {

std::string ExperimentDir::config_path() const { return (fs::path(root) / "config.json").string(); }
std::string ExperimentDir::checkpoints_dir() const {
  return (fs::path(root) / "checkpoints").string();
}
std::string ExperimentDir::metrics_path() const { return (fs::path(root) / "metrics.csv").string(); }
std::string ExperimentDir::scores_dir() const { return (fs::path(root) / "scores").string(); }
std::string ExperimentDir::reconstructions_dir() const {
  return (fs::path(root) / "reconstructions").string();
}
std::string ExperimentDir::report_path() const { return (fs::path(root) / "report.tsv").string(); }

void ensure_fresh_dir(const std::string& root, bool force) {
  const fs::path p(root);
  if (fs::exists(p) && !fs::is_empty(p) && !force)
    throw ConfigError("output directory exists and is not empty (use --force): " + root);
  fs::create_directories(p);
}

ExperimentDir prepare_experiment_dir(const std::string& root, const TrainConfig& cfg,
                                     bool force) {
  ensure_fresh_dir(root, force);
  ExperimentDir dir{root};
  fs::create_directories(dir.checkpoints_dir());
  fs::create_directories(dir.scores_dir());
  fs::create_directories(dir.reconstructions_dir());

  std::ofstream out(dir.config_path(), std::ios::trunc);
  if (!out) throw IoError("cannot write config snapshot: " + dir.config_path());
  out << train_config_json(cfg);

  std::ofstream hash((fs::path(root) / "config.hash").string(), std::ios::trunc);
  hash << config_hash(cfg) << "\n";
  return dir;
}

std::string resolve_out_dir(const std::string& path) {
  const char* root = std::getenv("ADGAN_OUT_ROOT");
  if (!root || *root == '\0' || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

void write_scores_with_meta(const std::string& path, const std::vector<ScoredExample>& scored,
                            const std::map<std::string, std::string>& meta) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write scores file: " + path);
  for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
  out.close();

  // Reuse the canonical writer for the table, then prepend the comments.
  const std::string tmp = path + ".tmp";
  write_scores(tmp, scored);
  std::ifstream table(tmp);
  std::ofstream app(path, std::ios::app);
  app << table.rdbuf();
  table.close();
  fs::remove(tmp);
}

std::map<std::string, std::string> read_scores_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file: " + path);
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(1, eq - 1);
    while (!key.empty() && key.front() == ' ') key.erase(key.begin());
    meta[key] = line.substr(eq + 1);
  }
  return meta;
}

}  // namespace adgan
