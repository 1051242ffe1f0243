#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vicscan {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit over a string; used to fingerprint the effective config.
std::uint64_t fnv1a64(const std::string& data);

/// Run provenance written once per output directory as manifest.json.
/// The timestamp is the only field allowed to differ between identical runs.
struct RunManifest {
  std::string command;
  std::string config_hash;  // hex FNV-1a of the serialized effective config
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string effective_config_json;

  void write(const std::string& out_dir) const;
};

}  // namespace vicscan
