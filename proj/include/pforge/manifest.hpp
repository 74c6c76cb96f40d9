#ifndef PFORGE_MANIFEST_HPP
#define PFORGE_MANIFEST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pforge {

inline constexpr const char* kToolVersion = "precoder-forge 1.0.0";

/// FNV-1a over a byte buffer.
uint64_t fnv1a64(const void* data, size_t len);

/// FNV-1a over a file's contents.
uint64_t hash_file(const std::string& path);

/// Replay record written next to every command's outputs: the exact
/// configuration, seeds, timings, and a content hash per output file.
class RunManifest {
 public:
  RunManifest(const std::string& command, const std::vector<std::string>& argv);

  nlohmann::json& config() { return json_["config"]; }
  void note_seed(const std::string& name, uint64_t value);
  void add_output(const std::string& path);
  void set_wall_time(double seconds);

  const nlohmann::json& json() const { return json_; }
  void write(const std::string& path) const;

 private:
  nlohmann::json json_;
};

}  // namespace pforge

#endif  // PFORGE_MANIFEST_HPP
