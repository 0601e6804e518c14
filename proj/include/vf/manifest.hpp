#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace vf {

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

// Provenance of one command invocation; written to <out>/manifest.json
// before the outputs it describes are finalized.
struct RunManifest {
  std::string command_line;
  std::string config_hash;
  std::map<std::string, std::string> input_digests;
  std::uint64_t base_seed = 0;
  std::map<std::string, std::uint64_t> run_seeds;  // grid point -> sampling seed
  std::map<std::string, std::string> notes;        // timings, counts, flags
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace vf
