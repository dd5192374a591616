#ifndef V2XSLICE_SIMULATOR_HPP_
#define V2XSLICE_SIMULATOR_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "v2xslice/channel.hpp"
#include "v2xslice/mac.hpp"
#include "v2xslice/rng.hpp"
#include "v2xslice/scenario.hpp"
#include "v2xslice/traffic.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {

/// Optional taps into the slot loop. Unset callbacks cost nothing.
struct SimHooks {
  std::function<void(const PacketRecord&)> on_packet;
  /// Every transmission: slot, slice, subchannel, transmitter, SINR at its receiver, delivered bits.
  std::function<void(Slot, int, int, VueId, double, double)> on_transmission;
  /// End of every slot, per slice: raw subchannel uses and the incremental occupancy.
  std::function<void(Slot, int, int, std::span<const SubchannelUse>, double)> on_slot;
};

/// Hidden network state X_k plus the slot-level dynamics that advance it.
///
/// An epoch is begin_epoch(config), epoch_slots calls to step_slot(), then
/// end_epoch(). Everything is a pure function of (scenario, seed, configs).
class Simulator {
 public:
  Simulator(Scenario scenario, std::uint64_t seed);

  void set_hooks(SimHooks hooks) { hooks_ = std::move(hooks); }

  void begin_epoch(const SliceConfig& config);
  void step_slot();
  EpochMetrics end_epoch();
  /// Runs slots without new arrivals until every queue is empty, so every
  /// generated packet is scored. Returns the number of slots run. The
  /// resulting scores join the current (still open) epoch accumulators.
  Slot drain(Slot max_slots = 100000);

  Slot slot() const { return t_; }
  std::int64_t epoch() const { return epoch_; }
  const SliceConfig& config() const { return config_; }
  const Scenario& scenario() const { return scenario_; }
  std::vector<Vue> vehicles() const;
  /// Active (non-departing) VUEs in slice n.
  int active_count(int slice) const;
  std::int64_t packets_generated() const { return generated_; }
  std::int64_t packets_scored() const { return scored_; }

  double position_m(const Vue& v, Slot t) const;
  double distance_m(const Vue& a, const Vue& b, Slot t) const;

 private:
  struct Agent {
    Vue vue;
    SensingMemory memory;
    Engine rng;
    Slot last_grant = -1;  // latest slot already promised to a queued packet
  };

  struct Accumulator {
    double delay_sum = 0.0;
    std::int64_t packets = 0;
    std::int64_t lost = 0;
    double occupancy_sum = 0.0;
    Slot slots = 0;
  };

  void add_vehicle(int slice, Slot t);
  void apply_churn();
  void pair_receivers();
  void schedule(Agent& a, Packet& p, Slot earliest);
  void record(const Agent& a, const Packet& p, Slot service, Slot delay, bool lost, bool dropped);
  void run_slot(bool arrivals_on);
  Agent* find(VueId id);

  Scenario scenario_;
  std::uint64_t seed_;
  ChannelModel channel_;
  CounterRng sense_noise_;
  Engine world_rng_;
  std::vector<SliceSpec> specs_;
  std::vector<int> widths_;  // sensing/usage width per slice: max F_n over the action space
  std::vector<int> targets_;
  std::vector<Agent> agents_;  // kept sorted by id
  VueId next_id_ = 0;
  SliceConfig config_;
  bool have_config_ = false;
  bool in_epoch_ = false;
  Slot t_ = 0;
  std::int64_t epoch_ = -1;
  std::vector<Accumulator> acc_;
  std::vector<int> epoch_counts_;
  UsageGrid usage_;
  std::int64_t generated_ = 0;
  std::int64_t scored_ = 0;
  SimHooks hooks_;
};

}  // namespace v2xslice

#endif  // V2XSLICE_SIMULATOR_HPP_
