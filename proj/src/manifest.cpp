#include "pforge/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "pforge/errors.hpp"

namespace pforge {

uint64_t fnv1a64(const void* data, size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t hash = 0xCBF29CE484222325ull;
  for (size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001B3ull;
  }
  return hash;
}

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path);
  uint64_t hash = 0xCBF29CE484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = static_cast<size_t>(in.gcount());
    for (size_t i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001B3ull;
    }
  }
  return hash;
}

namespace {

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunManifest::RunManifest(const std::string& command, const std::vector<std::string>& argv) {
  json_["tool"] = kToolVersion;
  json_["command"] = command;
  json_["argv"] = argv;
  json_["config"] = nlohmann::json::object();
  json_["seeds"] = nlohmann::json::object();
  json_["outputs"] = nlohmann::json::array();
}

void RunManifest::note_seed(const std::string& name, uint64_t value) {
  json_["seeds"][name] = value;
}

void RunManifest::add_output(const std::string& path) {
  json_["outputs"].push_back({{"path", path}, {"fnv1a64", hex64(hash_file(path))}});
}

void RunManifest::set_wall_time(double seconds) { json_["wall_time_sec"] = seconds; }

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << json_.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace pforge
