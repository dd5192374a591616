#include "v2xslice/env.hpp"

#include <fmt/format.h>

namespace v2xslice {

namespace {

double piecewise_utility(double x, double lo, double hi) {
  if (!(lo < hi)) throw ContractViolation(fmt::format("utility bounds need lo < hi, got [{}, {}]", lo, hi));
  if (x < lo) return 1.0;
  if (x >= hi) return 0.0;
  return (hi - x) / (hi - lo);
}

}  // namespace

double utility_pdr(double pdr, double pdr_min, double pdr_max) { return piecewise_utility(pdr, pdr_min, pdr_max); }

double utility_delay(double delay, double delay_min, double delay_max) {
  return piecewise_utility(delay, delay_min, delay_max);
}

double slice_reward(const SliceMetrics& metrics, const SliceSpec& spec) {
  const double u_pdr = metrics.packets == 0 ? 1.0 : utility_pdr(metrics.avg_pdr, spec.pdr_min, spec.pdr_max);
  const double u_delay = metrics.packets == 0 ? 1.0 : utility_delay(metrics.avg_delay, spec.delay_min, spec.delay_max);
  return spec.alpha[0] * u_pdr + spec.alpha[1] * u_delay;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ContractViolation(fmt::format("discount {} outside [0, 1)", lambda));
  std::vector<double> g(rewards.size());
  double next = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    next = rewards[k] + lambda * next;
    g[k] = next;
  }
  return g;
}

Environment::Environment(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  space_ = scenario_.action_space();
  specs_ = scenario_.slice_specs();
}

const Simulator& Environment::simulator() const {
  if (!sim_) throw ContractViolation("environment used before reset()");
  return *sim_;
}

Observation Environment::reset(std::uint64_t seed) {
  sim_ = std::make_unique<Simulator>(scenario_, seed);
  sim_->set_hooks(hooks_);
  sim_->begin_epoch(space_.at(scenario_.default_action));
  for (Slot i = 0; i < scenario_.epoch_slots; ++i) sim_->step_slot();
  const EpochMetrics m = sim_->end_epoch();
  steps_ = 0;
  done_ = false;
  Observation obs;
  for (const auto& s : m.slices) obs.slices.push_back({s.vue_count, s.occupancy});
  return obs;
}

EpochStep Environment::step(std::size_t action) {
  if (!sim_ || done_) throw ContractViolation("step() after the episode ended; call reset()");
  const SliceConfig& config = space_.at(action);
  EpochStep out;
  sim_->begin_epoch(config);
  for (Slot i = 0; i < scenario_.epoch_slots; ++i) sim_->step_slot();
  out.slots = scenario_.epoch_slots;
  ++steps_;
  done_ = steps_ >= scenario_.episode_epochs;
  if (done_) out.drain_slots = sim_->drain();
  out.metrics = sim_->end_epoch();
  out.done = done_;
  for (std::size_t n = 0; n < specs_.size(); ++n) {
    const auto& s = out.metrics.slices[n];
    out.observation.slices.push_back({s.vue_count, s.occupancy});
    out.slice_rewards.push_back(slice_reward(s, specs_[n]));
    out.reward += out.slice_rewards.back();
  }
  return out;
}

}  // namespace v2xslice
