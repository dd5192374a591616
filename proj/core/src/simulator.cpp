#include "v2xslice/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace v2xslice {

namespace {

double wrap(double x, double length) {
  double r = std::fmod(x, length);
  return r < 0.0 ? r + length : r;
}

}  // namespace

Simulator::Simulator(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      seed_(seed),
      channel_(scenario_.channel.params(), derive_seed(seed, "channel")),
      sense_noise_(derive_seed(seed, "sensing.noise")),
      world_rng_(make_engine(derive_seed(seed, "world"))),
      usage_({}) {
  scenario_.validate();
  specs_ = scenario_.slice_specs();
  const auto space = scenario_.action_space();
  for (std::size_t n = 0; n < specs_.size(); ++n) widths_.push_back(space.max_subchannels(n));
  usage_ = UsageGrid(widths_);
  acc_.resize(specs_.size());
  epoch_counts_.assign(specs_.size(), 0);
  targets_ = scenario_.vehicles_per_slice();
  for (std::size_t n = 0; n < targets_.size(); ++n)
    for (int i = 0; i < targets_[n]; ++i) add_vehicle(static_cast<int>(n), 0);
}

void Simulator::add_vehicle(int slice, Slot t) {
  const auto& road = scenario_.road;
  Vue v;
  v.id = next_id_++;
  v.slice = slice;
  v.start_position_m = uniform01(world_rng_) * road.length_m;
  v.direction = bernoulli(world_rng_, 0.5) ? 1 : -1;
  v.lane = static_cast<int>(uniform_index(world_rng_, static_cast<std::uint64_t>(road.lanes_per_direction)));
  v.enter_slot = t;
  v.phase = static_cast<Slot>(uniform_index(world_rng_, static_cast<std::uint64_t>(specs_[slice].packet_period)));
  // A newcomer starts with a full window of noise-only samples, as if the
  // channel had been idle before it joined.
  const int width = widths_[static_cast<std::size_t>(slice)];
  SensingMemory memory(scenario_.mac.sensing_slots, width);
  const double noise = channel_.noise_power(1);
  std::vector<double> row(static_cast<std::size_t>(width));
  for (Slot s = t - scenario_.mac.sensing_slots; s < t; ++s) {
    for (int m = 0; m < width; ++m)
      row[static_cast<std::size_t>(m)] = noise * sense_noise_.exponential(v.id, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(s));
    memory.push(s, row);
  }
  agents_.push_back(Agent{std::move(v), std::move(memory), make_engine(derive_seed(seed_, "mac", {next_id_ - 1})), -1});
}

double Simulator::position_m(const Vue& v, Slot t) const {
  const double travelled = scenario_.road.speed_mps * static_cast<double>(t - v.enter_slot) * kSlotSeconds;
  return wrap(v.start_position_m + v.direction * travelled, scenario_.road.length_m);
}

double Simulator::distance_m(const Vue& a, const Vue& b, Slot t) const {
  const double len = scenario_.road.length_m;
  double dx = std::abs(position_m(a, t) - position_m(b, t));
  dx = std::min(dx, len - dx);
  const double w = scenario_.road.lane_width_m;
  const double dy = a.direction * (a.lane + 0.5) * w - b.direction * (b.lane + 0.5) * w;
  return std::hypot(dx, dy);
}

Simulator::Agent* Simulator::find(VueId id) {
  auto it = std::lower_bound(agents_.begin(), agents_.end(), id,
                             [](const Agent& a, VueId key) { return a.vue.id < key; });
  return it != agents_.end() && it->vue.id == id ? &*it : nullptr;
}

std::vector<Vue> Simulator::vehicles() const {
  std::vector<Vue> out;
  out.reserve(agents_.size());
  for (const auto& a : agents_) out.push_back(a.vue);
  return out;
}

int Simulator::active_count(int slice) const {
  int c = 0;
  for (const auto& a : agents_) c += a.vue.slice == slice && !a.vue.departing ? 1 : 0;
  return c;
}

void Simulator::apply_churn() {
  std::erase_if(agents_, [](const Agent& a) { return a.vue.departing && a.vue.queue.empty(); });
  if (scenario_.churn <= 0.0) return;
  for (auto& a : agents_)
    if (!a.vue.departing && bernoulli(world_rng_, scenario_.churn)) a.vue.departing = true;
  for (std::size_t n = 0; n < targets_.size(); ++n)
    for (int i = 0; i < targets_[n]; ++i)
      if (bernoulli(world_rng_, scenario_.churn)) add_vehicle(static_cast<int>(n), t_);
}

void Simulator::pair_receivers() {
  for (auto& a : agents_) {
    std::optional<VueId> best;
    double best_d = std::numeric_limits<double>::infinity();
    bool best_same = false;
    for (const auto& b : agents_) {
      if (b.vue.id == a.vue.id) continue;
      const bool same = b.vue.direction == a.vue.direction;
      if (best_same && !same) continue;
      const double d = distance_m(a.vue, b.vue, t_);
      if ((same && !best_same) || d < best_d) {
        best = b.vue.id;
        best_d = d;
        best_same = same;
      }
    }
    a.vue.receiver = best;
  }
}

void Simulator::begin_epoch(const SliceConfig& config) {
  if (in_epoch_) throw ContractViolation("begin_epoch while an epoch is open");
  if (config.slices.size() != specs_.size())
    throw ContractViolation(fmt::format("config has {} slices, scenario has {}", config.slices.size(), specs_.size()));
  for (std::size_t n = 0; n < specs_.size(); ++n) {
    const auto& p = config.slices[n];
    if (p.num_subchannels < 1 || p.num_subchannels > widths_[n] || p.selection_window < 1 || p.subchannel_bandwidth <= 0)
      throw ContractViolation(fmt::format("slice {} config {} outside the scenario grid", n, config.to_string()));
  }
  ++epoch_;
  if (epoch_ > 0) apply_churn();
  pair_receivers();
  config_ = config;
  have_config_ = true;
  in_epoch_ = true;

  for (auto& a : agents_) {
    const int f = config_.slices[static_cast<std::size_t>(a.vue.slice)].num_subchannels;
    if (a.vue.reservation && a.vue.reservation->subchannel >= f) a.vue.reservation.reset();
    a.last_grant = -1;
    for (auto& p : a.vue.queue) {
      if (p.grant && p.grant->subchannel >= f) p.grant.reset();
      if (p.grant) a.last_grant = std::max(a.last_grant, p.grant->slot);
    }
    for (auto& p : a.vue.queue)
      if (!p.grant) schedule(a, p, t_);
  }
  for (std::size_t n = 0; n < specs_.size(); ++n) {
    acc_[n] = Accumulator{};
    epoch_counts_[n] = active_count(static_cast<int>(n));
  }
}

void Simulator::schedule(Agent& a, Packet& p, Slot earliest) {
  const auto& params = config_.slices[static_cast<std::size_t>(a.vue.slice)];
  const auto& spec = specs_[static_cast<std::size_t>(a.vue.slice)];
  const Slot first = std::max({earliest, a.last_grant + 1, p.arrival + 1});
  const Slot last = p.arrival + params.selection_window;

  auto& res = a.vue.reservation;
  if (res) {
    const Slot slot = p.arrival + res->offset;
    if (res->subchannel < params.num_subchannels && res->offset <= params.selection_window && slot >= first) {
      p.grant = Grant{res->subchannel, slot};
    } else {
      res.reset();
    }
  }
  if (!res) {
    if (first > last) return;
    const auto candidates = candidate_list(a.memory, params.num_subchannels, first, last, spec.packet_period,
                                           scenario_.mac.candidate_percent);
    const Resource chosen = select_resource(candidates, a.rng);
    res = make_reservation(chosen, p.arrival, scenario_.mac, a.rng);
    p.grant = Grant{chosen.subchannel, chosen.slot};
  }
  a.last_grant = p.grant->slot;
  if (--res->counter <= 0) {
    res->counter = 0;
    if (maybe_reselect(*res, scenario_.mac, a.rng) == ReselectDecision::kReselect) res.reset();
  }
}

void Simulator::record(const Agent& a, const Packet& p, Slot service, Slot delay, bool lost, bool dropped) {
  auto& acc = acc_[static_cast<std::size_t>(a.vue.slice)];
  acc.delay_sum += static_cast<double>(delay);
  acc.packets += 1;
  acc.lost += lost ? 1 : 0;
  ++scored_;
  if (hooks_.on_packet)
    hooks_.on_packet(PacketRecord{a.vue.id, a.vue.slice, p.seq, p.arrival, service, delay, lost, dropped});
}

void Simulator::step_slot() {
  if (!in_epoch_) throw ContractViolation("step_slot outside an epoch");
  run_slot(true);
}

void Simulator::run_slot(bool arrivals_on) {
  const Slot t = t_;
  const std::size_t slices = specs_.size();

  for (auto& a : agents_) {
    const auto& params = config_.slices[static_cast<std::size_t>(a.vue.slice)];
    for (auto& p : expire_unserved(a.vue.queue, t, params.selection_window))
      record(a, p, t, params.selection_window, true, true);
  }

  if (arrivals_on) {
    for (auto& a : agents_) {
      if (a.vue.departing || t < a.vue.phase) continue;
      const auto& spec = specs_[static_cast<std::size_t>(a.vue.slice)];
      auto packet = arrivals(spec.packet_period, spec.packet_bits, t - a.vue.phase);
      if (!packet) continue;
      packet->arrival = t;
      ++generated_;
      if (auto evicted = enqueue(a.vue.queue, std::move(*packet), scenario_.queue_cap)) {
        const Slot sw = config_.slices[static_cast<std::size_t>(a.vue.slice)].selection_window;
        record(a, *evicted, t, std::min(t - evicted->arrival, sw), true, true);
      }
      schedule(a, a.vue.queue.back(), t + 1);
    }
  }

  // Transmitters per (slice, subchannel).
  std::vector<std::vector<std::vector<Agent*>>> tx(slices);
  for (std::size_t n = 0; n < slices; ++n) tx[n].resize(static_cast<std::size_t>(widths_[n]));
  usage_.clear();
  std::vector<std::vector<SubchannelUse>> uses(slices);
  for (auto& a : agents_) {
    for (const auto& p : a.vue.queue) {
      if (p.grant && p.grant->slot == t) {
        const auto n = static_cast<std::size_t>(a.vue.slice);
        tx[n][static_cast<std::size_t>(p.grant->subchannel)].push_back(&a);
        usage_.add(a.vue.slice, p.grant->subchannel);
        uses[n].push_back(SubchannelUse{a.vue.id, p.grant->subchannel});
        break;
      }
    }
  }

  const double power = channel_.params().tx_power_w;
  std::vector<double> interference;
  for (std::size_t n = 0; n < slices; ++n) {
    const auto& params = config_.slices[n];
    const double noise = channel_.noise_power(params.subchannel_bandwidth);
    for (int m = 0; m < params.num_subchannels; ++m) {
      const auto& group = tx[n][static_cast<std::size_t>(m)];
      for (Agent* a : group) {
        auto it = std::find_if(a->vue.queue.begin(), a->vue.queue.end(),
                               [t](const Packet& p) { return p.grant && p.grant->slot == t; });
        double gamma = 0.0;
        Agent* rx = a->vue.receiver ? find(*a->vue.receiver) : nullptr;
        if (rx) {
          const double signal = power * channel_.link_gain(a->vue.id, rx->vue.id, distance_m(a->vue, rx->vue, t), m, t,
                                                           epoch_).value;
          interference.clear();
          for (Agent* j : group) {
            if (j == a || j == rx) continue;
            interference.push_back(
                power * channel_.link_gain(j->vue.id, rx->vue.id, distance_m(j->vue, rx->vue, t), m, t, epoch_).value);
          }
          gamma = sinr(signal, interference, noise);
        }
        const double bits = shannon_rate_bits(params.subchannel_bandwidth, gamma);
        if (hooks_.on_transmission) hooks_.on_transmission(t, static_cast<int>(n), m, a->vue.id, gamma, bits);
        const PacketScore score = score_packet(*it, t, bits);
        record(*a, *it, t, score.delay, score.lost, false);
        a->vue.queue.erase(it);
      }
    }
  }

  // Sensed power is kept as a spectral density (W/Hz) so samples stay
  // comparable when B_n changes between epochs.
  std::vector<double> sensed;
  for (auto& a : agents_) {
    const auto n = static_cast<std::size_t>(a.vue.slice);
    const auto& params = config_.slices[n];
    const double psd = channel_.noise_power(1);
    const double per_hz = 1.0 / static_cast<double>(params.subchannel_bandwidth);
    sensed.assign(static_cast<std::size_t>(params.num_subchannels), 0.0);
    for (int m = 0; m < params.num_subchannels; ++m) {
      double s = psd * sense_noise_.exponential(a.vue.id, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(t));
      for (Agent* j : tx[n][static_cast<std::size_t>(m)]) {
        if (j == &a) continue;
        s += power * per_hz * channel_.link_gain(j->vue.id, a.vue.id, distance_m(j->vue, a.vue, t), m, t, epoch_).value;
      }
      sensed[static_cast<std::size_t>(m)] = s;
    }
    a.memory.push(t, sensed);
  }

  for (std::size_t n = 0; n < slices; ++n) {
    const int f = config_.slices[n].num_subchannels;
    const double x = usage_.occupancy(static_cast<int>(n), f);
    if (arrivals_on) {
      acc_[n].occupancy_sum += x;
      acc_[n].slots += 1;
    }
    if (hooks_.on_slot) hooks_.on_slot(t, static_cast<int>(n), f, uses[n], x);
  }
  ++t_;
}

EpochMetrics Simulator::end_epoch() {
  if (!in_epoch_) throw ContractViolation("end_epoch without an open epoch");
  in_epoch_ = false;
  EpochMetrics m;
  for (std::size_t n = 0; n < specs_.size(); ++n) {
    const auto& acc = acc_[n];
    SliceMetrics s;
    s.vue_count = epoch_counts_[n];
    s.occupancy = acc.slots > 0 ? acc.occupancy_sum / static_cast<double>(acc.slots) : 0.0;
    s.packets = acc.packets;
    s.lost = acc.lost;
    s.avg_delay = acc.packets > 0 ? acc.delay_sum / static_cast<double>(acc.packets) : 0.0;
    s.avg_pdr = acc.packets > 0 ? static_cast<double>(acc.lost) / static_cast<double>(acc.packets) : 0.0;
    m.slices.push_back(s);
  }
  return m;
}

Slot Simulator::drain(Slot max_slots) {
  if (!in_epoch_) throw ContractViolation("drain outside an epoch");
  Slot ran = 0;
  auto pending = [&] {
    return std::any_of(agents_.begin(), agents_.end(), [](const Agent& a) { return !a.vue.queue.empty(); });
  };
  while (pending()) {
    if (ran >= max_slots) throw ContractViolation(fmt::format("queues not drained after {} slots", max_slots));
    run_slot(false);
    ++ran;
  }
  return ran;
}

}  // namespace v2xslice
