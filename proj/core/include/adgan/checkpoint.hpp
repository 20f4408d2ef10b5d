#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adgan/tensor.hpp"

namespace adgan {

// On-disk container: magic + version, a JSON metadata header (method,
// iteration, seed, config snapshot, string-valued extras), then every array
// as name + shape + little-endian float32 payload. Round-trips are
// byte-exact; a schema-version mismatch is refused.
struct CheckpointData {
  std::string method = "adgan";  // adgan | dae | vae | fanogan
  std::int64_t iteration = 0;
  std::int64_t seed = 0;
  std::string config_json;  // canonical TrainConfig snapshot
  std::map<std::string, std::string> extra;
  std::vector<std::pair<std::string, Tensor>> arrays;

  const Tensor* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointSchemaVersion = 1;

void save_checkpoint_file(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint_file(const std::string& path);

}  // namespace adgan
