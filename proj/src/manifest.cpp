#include "vf/manifest.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vf/variant.hpp"

namespace vf {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64_hex(buf.str());
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  nlohmann::json doc;
  doc["tool_version"] = kToolVersion;
  doc["command_line"] = manifest.command_line;
  doc["config_hash"] = manifest.config_hash;
  doc["inputs"] = manifest.input_digests;
  doc["base_seed"] = manifest.base_seed;
  if (!manifest.run_seeds.empty()) doc["run_seeds"] = manifest.run_seeds;
  doc["notes"] = manifest.notes;
  const auto now = std::chrono::system_clock::now();
  doc["created_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
          .count();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << doc.dump(1) << "\n";
}

}  // namespace vf
