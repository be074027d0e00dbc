// tests/support/util.hpp — corpus paths and small file helpers for tests.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fuseplan {
namespace testing {

#ifndef FUSEPLAN_SOURCE_DIR
#define FUSEPLAN_SOURCE_DIR "."
#endif

inline std::string source_dir() { return FUSEPLAN_SOURCE_DIR; }

inline std::string corpus_path(const std::string& name) {
  return source_dir() + "/tests/programs/" + name + ".ir";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every program in tests/programs/, by basename.
inline const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names = {
      "greedyBottomUpBad", "greedyTopDownBad", "horiz",   "mapzip",
      "reverse",           "scanlr",           "scatterExample",
      "simple1",           "simple2",          "simple3",
      "simple4",           "simple5",          "singleLoop"};
  return names;
}

inline std::string corpus_source(const std::string& name) {
  return read_file(corpus_path(name));
}

}  // namespace testing
}  // namespace fuseplan
