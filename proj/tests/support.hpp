#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "envdt/dsl.hpp"

namespace envdt::testing {

inline std::filesystem::path source_dir() { return ENVDT_SOURCE_DIR; }

inline std::filesystem::path fixture_path(const std::string& device) {
  return source_dir() / "fixtures" / (device + ".envdt");
}

inline const EnvironmentModel& fixture(const std::string& device) {
  static std::map<std::string, EnvironmentModel> cache;
  auto it = cache.find(device);
  if (it == cache.end()) it = cache.emplace(device, load_model(fixture_path(device))).first;
  return it->second;
}

inline const std::vector<std::string>& devices() {
  static const std::vector<std::string> all{"karie", "medido", "pilly"};
  return all;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline EnvironmentModel parse_or_die(std::string_view text) {
  auto r = parse_model(text, "inline.envdt");
  if (!r.ok()) {
    std::string what;
    for (const auto& e : r.errors) what += e.format() + "\n";
    throw std::runtime_error(what);
  }
  return *r.model;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("envdt-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace envdt::testing
