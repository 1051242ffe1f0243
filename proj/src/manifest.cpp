#include "vicscan/manifest.hpp"

#include <chrono>
#include <fstream>

#include "json.hpp"
#include "vicscan/common.hpp"

namespace vicscan {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void RunManifest::write(const std::string& out_dir) const {
  nlohmann::json j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  if (!effective_config_json.empty())
    j["effective_config"] = nlohmann::json::parse(effective_config_json);
  j["timestamp_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  std::ofstream out(out_dir + "/manifest.json");
  if (!out)
    throw ConfigError("manifest: cannot write " + out_dir + "/manifest.json");
  out << j.dump(2) << '\n';
}

}  // namespace vicscan
