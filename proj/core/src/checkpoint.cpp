#include "adgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "adgan/error.hpp"
#include "json.hpp"

namespace adgan {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'D', 'G', 'A', 'N', 'C', 'K', 'P'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint while reading " + what);
  return v;
}

}  // namespace

const Tensor* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint_file(const std::string& path, const CheckpointData& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);

  nlohmann::json header;
  header["schema_version"] = kCheckpointSchemaVersion;
  header["method"] = data.method;
  header["iteration"] = data.iteration;
  header["seed"] = data.seed;
  header["config"] = data.config_json;
  header["extra"] = data.extra;
  header["array_count"] = data.arrays.size();
  const std::string htext = header.dump();

  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointSchemaVersion);
  put<std::uint64_t>(out, htext.size());
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  for (const auto& [name, t] : data.arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape) put<std::int64_t>(out, d);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.numel()) * sizeof(float));
    out.write(reinterpret_cast<const char*>(t.ptr()),
              static_cast<std::streamsize>(t.numel() * static_cast<std::int64_t>(sizeof(float))));
  }
  if (!out) throw IoError("write failure on checkpoint: " + path);
}

CheckpointData load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path);
  const auto version = get<std::uint32_t>(in, "schema version");
  if (version != kCheckpointSchemaVersion)
    throw IoError("checkpoint schema version " + std::to_string(version) +
                  " is not supported (expected " + std::to_string(kCheckpointSchemaVersion) +
                  "): " + path);

  const auto hlen = get<std::uint64_t>(in, "header length");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("truncated checkpoint while reading header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint header: " + std::string(e.what()));
  }

  CheckpointData data;
  data.method = header.at("method").get<std::string>();
  data.iteration = header.at("iteration").get<std::int64_t>();
  data.seed = header.at("seed").get<std::int64_t>();
  data.config_json = header.at("config").get<std::string>();
  data.extra = header.at("extra").get<std::map<std::string, std::string>>();
  const auto count = header.at("array_count").get<std::uint64_t>();

  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, "array name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated checkpoint while reading array name: " + path);
    const auto ndim = get<std::uint32_t>(in, "array rank");
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<int>(get<std::int64_t>(in, "array dim")));
    const auto bytes = get<std::uint64_t>(in, "array payload size");
    Tensor t(shape);
    if (bytes != static_cast<std::uint64_t>(t.numel()) * sizeof(float))
      throw IoError("checkpoint array '" + name + "' payload size mismatch");
    in.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("truncated checkpoint while reading array '" + name + "'");
    data.arrays.emplace_back(std::move(name), std::move(t));
  }
  return data;
}

}  // namespace adgan
