#ifndef V2XSLICE_TYPES_HPP_
#define V2XSLICE_TYPES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2xslice {

/// Slot index. One slot lasts kSlotSeconds.
using Slot = std::int64_t;
/// Bandwidth in integer Hz, so feasibility checks are exact.
using Hz = std::int64_t;
using VueId = std::uint32_t;

inline constexpr double kSlotSeconds = 1e-3;

/// Invalid scenario / experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Static description of one network slice and its QoS targets.
struct SliceSpec {
  std::string name;
  Slot packet_period = 50;  // T_n
  int packet_bits = 2400;   // Z_n
  double pdr_min = 0.01;
  double pdr_max = 0.10;
  double delay_min = 10.0;  // slots
  double delay_max = 50.0;  // slots
  std::array<double, 2> alpha{1.0, 2.0};

  void validate() const;
};

/// MAC parameters the controller assigns to one slice for an epoch.
struct SliceParams {
  int num_subchannels = 1;       // F_n
  Hz subchannel_bandwidth = 0;   // B_n
  Slot selection_window = 1;     // T_n^sw

  Hz bandwidth() const { return static_cast<Hz>(num_subchannels) * subchannel_bandwidth; }
  friend bool operator==(const SliceParams&, const SliceParams&) = default;
};

struct SliceConfig {
  std::vector<SliceParams> slices;

  Hz total_bandwidth() const;
  std::string to_string() const;
  friend bool operator==(const SliceConfig&, const SliceConfig&) = default;
};

/// Candidate values for one slice; the action space is their filtered product.
struct SliceGrid {
  std::vector<int> subchannels;
  std::vector<Hz> bandwidths;
  std::vector<Slot> selection_windows;
};

class ActionSpace {
 public:
  ActionSpace() = default;
  explicit ActionSpace(std::vector<SliceConfig> configs) : configs_(std::move(configs)) {}

  std::size_t size() const { return configs_.size(); }
  bool empty() const { return configs_.empty(); }
  const SliceConfig& at(std::size_t i) const;
  const std::vector<SliceConfig>& configs() const { return configs_; }
  std::size_t num_slices() const { return configs_.empty() ? 0 : configs_.front().slices.size(); }
  /// Largest F_n any config assigns to slice n.
  int max_subchannels(std::size_t slice) const;

 private:
  std::vector<SliceConfig> configs_;
};

/// Cartesian product of the per-slice grids (slice 0 varies slowest; inside a
/// slice F, then B, then T^sw), keeping configs with sum F_n*B_n <= total.
/// Throws ConfigError when nothing is feasible.
ActionSpace build_action_space(std::span<const SliceGrid> grids, Hz total_bandwidth);

struct Grant {
  int subchannel = 0;
  Slot slot = 0;
  friend bool operator==(const Grant&, const Grant&) = default;
};

struct Packet {
  Slot arrival = 0;
  int size_bits = 0;
  std::int64_t seq = 0;
  std::optional<Grant> grant;
};

struct Reservation {
  int subchannel = 0;
  Slot offset = 1;   // slots between packet arrival and its transmission
  int counter = 0;   // transmissions left before the reselection check
};

struct Vue {
  VueId id = 0;
  int slice = 0;
  double start_position_m = 0.0;  // along the ring at enter_slot
  int direction = 1;              // +1 or -1
  int lane = 0;                   // 0 .. lanes_per_direction-1 within its direction
  Slot enter_slot = 0;
  Slot phase = 0;                 // packets arrive at phase + l * T_n
  std::optional<VueId> receiver;
  std::optional<Reservation> reservation;
  std::deque<Packet> queue;
  bool departing = false;
};

struct SliceObservation {
  int vue_count = 0;
  double occupancy = 0.0;
  friend bool operator==(const SliceObservation&, const SliceObservation&) = default;
};

/// What the controller sees at the end of an epoch.
struct Observation {
  std::vector<SliceObservation> slices;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ObservationNorm {
  double max_vues = 100.0;
};

struct ObservationVector {
  std::vector<double> values;
  bool clamped = false;
};

/// Layout (0-based): [2n] = count / max_vues clamped to 1, [2n+1] = occupancy.
ObservationVector observation_to_vector(const Observation& obs, const ObservationNorm& norm);

struct SliceMetrics {
  int vue_count = 0;
  double occupancy = 0.0;
  double avg_delay = 0.0;  // slots
  double avg_pdr = 0.0;
  std::int64_t packets = 0;
  std::int64_t lost = 0;
};

/// Environment-internal per-epoch aggregates; only count and occupancy reach
/// the controller.
struct EpochMetrics {
  std::vector<SliceMetrics> slices;
};

/// The K most recent observation vectors, oldest first, zero-padded.
class HistoryWindow {
 public:
  HistoryWindow(std::size_t length, std::size_t dim);

  void push(std::span<const double> obs);
  std::size_t length() const { return length_; }
  std::size_t dim() const { return dim_; }
  /// Row i (0 = oldest).
  std::span<const double> row(std::size_t i) const;
  /// Row-major length x dim copy.
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t length_;
  std::size_t dim_;
  std::vector<double> data_;
};

}  // namespace v2xslice

#endif  // V2XSLICE_TYPES_HPP_
