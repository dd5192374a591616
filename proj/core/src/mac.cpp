#include "v2xslice/mac.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace v2xslice {

void MacParams::validate() const {
  if (sensing_slots < 1) throw ConfigError("mac: sensing window must be >= 1 slot");
  if (!(p_res >= 0.0 && p_res <= 1.0)) throw ConfigError("mac: p_res must lie in [0, 1]");
  if (counter_min < 1 || counter_max < counter_min) throw ConfigError("mac: need 1 <= counter_min <= counter_max");
  if (candidate_percent < 1 || candidate_percent > 100) throw ConfigError("mac: candidate percent must be in [1, 100]");
}

SensingMemory::SensingMemory(int depth, int width)
    : depth_(depth),
      width_(width),
      power_(static_cast<std::size_t>(depth) * static_cast<std::size_t>(width), 0.0),
      slot_of_(static_cast<std::size_t>(depth), -1) {
  if (depth < 1 || width < 1) throw ContractViolation("sensing memory needs positive depth and width");
}

void SensingMemory::push(Slot slot, std::span<const double> powers) {
  if (powers.size() > static_cast<std::size_t>(width_))
    throw ContractViolation(fmt::format("sensing memory width {} < {} powers", width_, powers.size()));
  if (count_ > 0) {
    const int last = (head_ + depth_ - 1) % depth_;
    if (slot <= slot_of_[static_cast<std::size_t>(last)])
      throw ContractViolation("sensing memory slots must increase");
  }
  auto row = power_.begin() + static_cast<std::ptrdiff_t>(head_) * width_;
  for (int m = 0; m < width_; ++m) {
    const double p = static_cast<std::size_t>(m) < powers.size() ? powers[static_cast<std::size_t>(m)] : 0.0;
    if (p < 0.0) throw ContractViolation("sensed power must be >= 0");
    row[m] = p;
  }
  slot_of_[static_cast<std::size_t>(head_)] = slot;
  head_ = (head_ + 1) % depth_;
  count_ = std::min(count_ + 1, depth_);
}

double SensingMemory::average(int m) const {
  if (count_ == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < count_; ++i) {
    const int idx = (head_ + depth_ - 1 - i) % depth_;
    sum += power_[static_cast<std::size_t>(idx) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(m)];
  }
  return sum / count_;
}

std::optional<double> SensingMemory::sample(int m, Slot slot) const {
  if (count_ == 0 || m < 0 || m >= width_) return std::nullopt;
  const int last = (head_ + depth_ - 1) % depth_;
  const Slot newest = slot_of_[static_cast<std::size_t>(last)];
  const Slot age = newest - slot;
  if (age < 0 || age >= count_) return std::nullopt;
  // Slots are pushed one per simulated slot, but tolerate gaps.
  const int idx = (last - static_cast<int>(age) + depth_ * 2) % depth_;
  if (slot_of_[static_cast<std::size_t>(idx)] == slot)
    return power_[static_cast<std::size_t>(idx) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(m)];
  for (int i = 0; i < count_; ++i) {
    const int j = (head_ + depth_ - 1 - i) % depth_;
    if (slot_of_[static_cast<std::size_t>(j)] == slot)
      return power_[static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(m)];
  }
  return std::nullopt;
}

std::vector<double> SensingMemory::history(int m, Slot slot, Slot period) const {
  std::vector<double> out;
  if (count_ == 0 || period <= 0) return out;
  const Slot newest = slot_of_[static_cast<std::size_t>((head_ + depth_ - 1) % depth_)];
  Slot s = slot - period;
  while (s > newest) s -= period;
  for (; newest - s < count_; s -= period)
    if (auto v = sample(m, s)) out.push_back(*v);
  return out;
}

double SensingMemory::predicted(int m, Slot slot, Slot period, std::size_t limit) const {
  const auto h = history(m, slot, period);
  const std::size_t n = std::min(h.size(), limit);
  if (n == 0) return average(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += h[i];
  return sum / static_cast<double>(n);
}

std::size_t candidate_count(std::size_t resources, int percent) {
  const std::size_t k = (resources * static_cast<std::size_t>(percent) + 99) / 100;
  return std::max<std::size_t>(1, k);
}

std::vector<Resource> bottom_candidates(std::span<const RankedResource> resources, int percent) {
  std::vector<RankedResource> sorted(resources.begin(), resources.end());
  std::sort(sorted.begin(), sorted.end(), [](const RankedResource& a, const RankedResource& b) {
    if (a.rssi != b.rssi) return a.rssi < b.rssi;
    if (a.resource.subchannel != b.resource.subchannel) return a.resource.subchannel < b.resource.subchannel;
    return a.resource.slot < b.resource.slot;
  });
  const std::size_t k = std::min(sorted.size(), candidate_count(sorted.size(), percent));
  std::vector<Resource> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(sorted[i].resource);
  return out;
}

std::vector<Resource> candidate_list(const SensingMemory& memory, int num_subchannels, Slot first, Slot last,
                                     Slot period, int percent) {
  if (num_subchannels < 1 || last < first) throw ContractViolation("candidate list needs F >= 1 and a non-empty window");
  std::vector<std::vector<double>> hist;
  std::size_t common = SIZE_MAX;
  for (int m = 0; m < num_subchannels; ++m)
    for (Slot t = first; t <= last; ++t) {
      hist.push_back(memory.history(m, t, period));
      common = std::min(common, hist.back().size());
    }
  std::vector<RankedResource> ranked;
  ranked.reserve(hist.size());
  std::size_t i = 0;
  for (int m = 0; m < num_subchannels; ++m)
    for (Slot t = first; t <= last; ++t, ++i) {
      const auto& h = hist[i];
      double rssi = 0.0;
      if (common == 0) {
        rssi = memory.average(m);
      } else {
        for (std::size_t j = 0; j < common; ++j) rssi += h[j];
        rssi /= static_cast<double>(common);
      }
      ranked.push_back({{m, t}, rssi});
    }
  return bottom_candidates(ranked, percent);
}

Resource select_resource(std::span<const Resource> candidates, Engine& rng) {
  if (candidates.empty()) throw ContractViolation("resource selection from an empty candidate list");
  return candidates[uniform_index(rng, candidates.size())];
}

Reservation make_reservation(const Resource& chosen, Slot arrival, const MacParams& params, Engine& rng) {
  if (chosen.slot <= arrival) throw ContractViolation("reserved slot must follow the packet arrival");
  return Reservation{chosen.subchannel, chosen.slot - arrival,
                     static_cast<int>(uniform_int(rng, params.counter_min, params.counter_max))};
}

ReselectDecision maybe_reselect(Reservation& reservation, const MacParams& params, Engine& rng) {
  if (reservation.counter != 0) throw ContractViolation("reselection check before the counter expired");
  if (bernoulli(rng, params.p_res)) return ReselectDecision::kReselect;
  reservation.counter = static_cast<int>(uniform_int(rng, params.counter_min, params.counter_max));
  return ReselectDecision::kKeep;
}

double occupancy(int num_subchannels, std::span<const SubchannelUse> uses) {
  if (num_subchannels < 1) throw ContractViolation("occupancy needs F >= 1");
  int used = 0;
  for (int m = 0; m < num_subchannels; ++m) {
    int sum = 0;
    for (const auto& u : uses) sum += u.subchannel == m ? 1 : 0;
    used += sum >= 1 ? 1 : 0;
  }
  return static_cast<double>(used) / num_subchannels;
}

UsageGrid::UsageGrid(std::vector<int> widths) : used_(widths.size(), 0) {
  for (int w : widths) count_.emplace_back(static_cast<std::size_t>(w), 0);
}

void UsageGrid::clear() {
  for (auto& row : count_) std::fill(row.begin(), row.end(), 0);
  std::fill(used_.begin(), used_.end(), 0);
}

void UsageGrid::add(int slice, int subchannel) {
  auto& c = count_.at(static_cast<std::size_t>(slice)).at(static_cast<std::size_t>(subchannel));
  if (c++ == 0) ++used_[static_cast<std::size_t>(slice)];
}

int UsageGrid::users(int slice, int subchannel) const {
  return count_.at(static_cast<std::size_t>(slice)).at(static_cast<std::size_t>(subchannel));
}

double UsageGrid::occupancy(int slice, int num_subchannels) const {
  return static_cast<double>(used_.at(static_cast<std::size_t>(slice))) / num_subchannels;
}

}  // namespace v2xslice
