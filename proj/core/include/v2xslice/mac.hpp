#ifndef V2XSLICE_MAC_HPP_
#define V2XSLICE_MAC_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "v2xslice/rng.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {

struct MacParams {
  int sensing_slots = 100;   // T_sense
  double p_res = 0.2;        // reselection probability when the counter expires
  int counter_min = 5;
  int counter_max = 15;
  int candidate_percent = 20;

  void validate() const;
};

/// Per-VUE ring buffer of sensed power per (subchannel, slot) over the last
/// `depth` slots. The oldest slot is evicted first.
class SensingMemory {
 public:
  SensingMemory(int depth, int width);

  /// Records the powers sensed at `slot`. Slots must be pushed in increasing
  /// order; subchannels beyond powers.size() record zero.
  void push(Slot slot, std::span<const double> powers);

  int depth() const { return depth_; }
  int width() const { return width_; }
  int size() const { return count_; }

  /// Mean over every stored slot of subchannel m (0 when empty).
  double average(int m) const;
  /// Stored power of subchannel m at an absolute slot, if still in memory.
  std::optional<double> sample(int m, Slot slot) const;

  /// Stored samples of subchannel m at slot - j*period (j >= 1), newest first.
  std::vector<double> history(int m, Slot slot, Slot period) const;

  /// RSSI predicted for resource (m, slot): mean of the `limit` newest
  /// history() samples, or average(m) if none are stored.
  double predicted(int m, Slot slot, Slot period, std::size_t limit = SIZE_MAX) const;

 private:
  int depth_;
  int width_;
  int head_ = 0;  // next write position
  int count_ = 0;
  std::vector<double> power_;  // depth x width
  std::vector<Slot> slot_of_;
};

struct Resource {
  int subchannel = 0;
  Slot slot = 0;
  friend bool operator==(const Resource&, const Resource&) = default;
};

struct RankedResource {
  Resource resource;
  double rssi = 0.0;
};

/// max(1, ceil(percent * n / 100)).
std::size_t candidate_count(std::size_t resources, int percent);

/// Lowest-RSSI candidates. Ties on RSSI go to the lower (subchannel, slot).
std::vector<Resource> bottom_candidates(std::span<const RankedResource> resources, int percent);

/// Candidate list for a selection window [first, last] over subchannels
/// [0, num_subchannels), ranked by the memory's predicted RSSI. Every
/// resource averages the same number of samples (the smallest history any of
/// them has), so window position alone never biases the ranking.
std::vector<Resource> candidate_list(const SensingMemory& memory, int num_subchannels, Slot first, Slot last,
                                     Slot period, int percent);

/// Uniform pick from a non-empty candidate list.
Resource select_resource(std::span<const Resource> candidates, Engine& rng);

/// Fresh reservation anchored on a packet that arrived at `arrival`.
Reservation make_reservation(const Resource& chosen, Slot arrival, const MacParams& params, Engine& rng);

enum class ReselectDecision { kKeep, kReselect };

/// Called when a reservation's counter has reached zero. kKeep redraws the
/// counter in place; kReselect means the caller drops the reservation.
ReselectDecision maybe_reselect(Reservation& reservation, const MacParams& params, Engine& rng);

struct SubchannelUse {
  VueId vue = 0;
  int subchannel = 0;
};

/// x = #{m : some VUE uses m} / F, evaluated from the raw indicators.
double occupancy(int num_subchannels, std::span<const SubchannelUse> uses);

/// Incrementally maintained per-slice subchannel usage for the current slot.
class UsageGrid {
 public:
  explicit UsageGrid(std::vector<int> widths);

  void clear();
  void add(int slice, int subchannel);
  int users(int slice, int subchannel) const;
  int used_subchannels(int slice) const { return used_[static_cast<std::size_t>(slice)]; }
  /// Occupancy against F_n, which may be smaller than the grid width.
  double occupancy(int slice, int num_subchannels) const;

 private:
  std::vector<std::vector<int>> count_;
  std::vector<int> used_;
};

}  // namespace v2xslice

#endif  // V2XSLICE_MAC_HPP_
