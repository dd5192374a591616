#ifndef V2XSLICE_TESTS_SUPPORT_HPP_
#define V2XSLICE_TESTS_SUPPORT_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "v2xslice/scenario.hpp"

namespace v2xslice::testing {

/// Default two-slice scenario shrunk for fast tests.
inline Scenario small_scenario(int vues = 12, int epochs = 3, Slot epoch_slots = 200) {
  Scenario s = default_scenario();
  s.vue_count = vues;
  s.episode_epochs = epochs;
  s.epoch_slots = epoch_slots;
  s.norm.max_vues = 24;
  return s;
}

/// One slice with a single configuration.
inline Scenario single_slice(int vues, int f, Hz b, Slot sw, Slot period = 50) {
  Scenario s = default_scenario();
  s.vue_count = vues;
  s.churn = 0.0;
  s.total_bandwidth = static_cast<Hz>(f) * b;
  SliceScenario sl = s.slices.front();
  sl.spec.packet_period = period;
  sl.share = 1.0;
  sl.grid = SliceGrid{{f}, {b}, {sw}};
  s.slices = {sl};
  s.default_action = 0;
  return s;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("v2xslice_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace v2xslice::testing

#endif  // V2XSLICE_TESTS_SUPPORT_HPP_
