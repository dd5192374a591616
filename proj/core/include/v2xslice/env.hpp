#ifndef V2XSLICE_ENV_HPP_
#define V2XSLICE_ENV_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "v2xslice/scenario.hpp"
#include "v2xslice/simulator.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {

/// 1 below lo, linear down to 0 at hi, 0 from hi on.
double utility_pdr(double pdr, double pdr_min, double pdr_max);
double utility_delay(double delay, double delay_min, double delay_max);

/// alpha1 * U_pdr + alpha2 * U_delay. A slice that scored no packets meets
/// its QoS vacuously and earns both utilities in full.
double slice_reward(const SliceMetrics& metrics, const SliceSpec& spec);

/// G_k = J_k + lambda * G_{k+1}, with G past the last epoch = 0.
std::vector<double> discounted_returns(std::span<const double> rewards, double lambda);

struct EpochStep {
  Observation observation;
  double reward = 0.0;
  std::vector<double> slice_rewards;
  EpochMetrics metrics;
  bool done = false;
  Slot slots = 0;        // slots simulated for the epoch itself
  Slot drain_slots = 0;  // extra slots run after the final epoch to score queued packets
};

/// Epoch-level environment: one step applies a slice configuration for
/// epoch_slots slots and reports what the controller may see plus the reward.
class Environment {
 public:
  explicit Environment(Scenario scenario);

  /// Fresh hidden state for `seed`, then one warm-up epoch under the
  /// scenario's default action. Returns that epoch's observation.
  Observation reset(std::uint64_t seed);
  EpochStep step(std::size_t action);

  const ActionSpace& action_space() const { return space_; }
  const Scenario& scenario() const { return scenario_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  std::size_t observation_dim() const { return 2 * scenario_.slices.size(); }
  ObservationVector vectorize(const Observation& obs) const { return observation_to_vector(obs, scenario_.norm); }

  /// Hooks apply to the simulator created by the next reset().
  void set_hooks(SimHooks hooks) { hooks_ = std::move(hooks); }
  const Simulator& simulator() const;

 private:
  Scenario scenario_;
  ActionSpace space_;
  std::vector<SliceSpec> specs_;
  std::unique_ptr<Simulator> sim_;
  SimHooks hooks_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace v2xslice

#endif  // V2XSLICE_ENV_HPP_
