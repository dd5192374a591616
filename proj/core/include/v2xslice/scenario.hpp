#ifndef V2XSLICE_SCENARIO_HPP_
#define V2XSLICE_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "v2xslice/channel.hpp"
#include "v2xslice/mac.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {

struct RoadParams {
  double length_m = 3400.0;  // ring; positions wrap
  int lanes_per_direction = 3;
  double lane_width_m = 4.0;
  double speed_mps = 70.0 / 3.6;
};

/// Channel inputs in the units a scenario file uses; params() resolves them.
struct ChannelConfig {
  double tx_power_dbm = 20.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double carrier_ghz = 5.9;
  double antenna_height_m = 1.5;
  std::optional<PathlossParams> pathloss;  // explicit override of the B1 LOS law
  bool fading = true;
  double rician_k_db = 6.0;
  double shadowing_sigma_db = 3.0;

  ChannelParams params() const;
};

struct SliceScenario {
  SliceSpec spec;
  double share = 0.5;  // fraction of the vehicles assigned to this slice
  SliceGrid grid;
};

/// Everything needed to build an environment, with shipped defaults that
/// mirror the two-slice freeway setup (100 VUEs, 10 MHz, 400-slot epochs).
struct Scenario {
  std::string name = "freeway-two-slice";
  Slot epoch_slots = 400;
  int episode_epochs = 50;
  Hz total_bandwidth = 10'000'000;
  RoadParams road;
  int vue_count = 100;
  double churn = 0.05;  // per-epoch departure probability; arrivals keep the mean
  ChannelConfig channel;
  MacParams mac;
  std::size_t queue_cap = 10;
  std::size_t default_action = 0;  // config used for the warm-up epoch
  ObservationNorm norm;
  std::vector<SliceScenario> slices;

  void validate() const;
  ActionSpace action_space() const;
  std::vector<SliceSpec> slice_specs() const;
  /// Per-slice vehicle targets: round(vue_count * share), remainder to the last slice.
  std::vector<int> vehicles_per_slice() const;
};

/// The shipped default scenario (safety + autonomous-driving slices).
Scenario default_scenario();

/// Schema error pinned to a JSON pointer inside the document.
class SchemaError : public ConfigError {
 public:
  SchemaError(std::string pointer, std::string detail)
      : ConfigError((pointer.empty() ? "/" : pointer) + ": " + detail),
        pointer_(std::move(pointer)),
        detail_(std::move(detail)) {}
  const std::string& pointer() const { return pointer_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string pointer_;
  std::string detail_;
};

/// Overlays the keys present in `j` on top of `base`. Unknown keys and type
/// or range violations throw SchemaError; `at` is the pointer of `j` within
/// an enclosing document.
Scenario scenario_from_json(const nlohmann::json& j, Scenario base = default_scenario(), const std::string& at = "");
nlohmann::json to_json(const Scenario& s);

/// 1-based line of the value addressed by a JSON pointer in raw JSON text,
/// or 0 if it cannot be found.
int line_of_pointer(std::string_view text, std::string_view pointer);

/// Parses JSON text, turning parse errors into ConfigError "<source>:<line>: ...".
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace v2xslice

#endif  // V2XSLICE_SCENARIO_HPP_
