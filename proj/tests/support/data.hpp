#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "hierion/codec.hpp"

namespace data {

inline std::filesystem::path path(const std::string& name) {
  return std::filesystem::path(HIERION_TEST_DATA) / name;
}

inline std::string read(const std::string& name) {
  std::ifstream in(path(name), std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline hierion::io::ModelBundle demo_bundle() {
  return hierion::io::load_bundle(read("demo_bundle.json")).bundle;
}

// Bundle holding one scenario's diagrams, groups and schedule.
inline hierion::io::ModelBundle bundle_of(const hierion::scenario::Scenario& s) {
  hierion::io::ModelBundle b;
  hierion::io::ScenarioSpec spec;
  spec.id = s.id.empty() ? "sc" : s.id;
  for (const auto& [id, d] : s.diagrams) {
    b.control[id] = d;
    spec.diagrams.push_back(id);
  }
  for (const auto& g : s.after_effect) {
    b.groups[g.id] = g;
    spec.after_effect.push_back(g.id);
  }
  if (!s.hierarchy.nodes().empty()) spec.hierarchy = s.hierarchy;
  spec.mapping = s.mapping;
  spec.schedule = s.schedule;
  b.scenarios[spec.id] = spec;
  return b;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("hierion-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return dir_ / name; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }

  std::filesystem::path dir_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace data
