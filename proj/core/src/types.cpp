#include "v2xslice/types.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace v2xslice {

void SliceSpec::validate() const {
  if (packet_period < 1) throw ConfigError(fmt::format("slice '{}': packet period must be >= 1", name));
  if (packet_bits <= 0) throw ConfigError(fmt::format("slice '{}': packet size must be > 0", name));
  if (!(pdr_min < pdr_max) || pdr_min < 0.0 || pdr_max > 1.0)
    throw ConfigError(fmt::format("slice '{}': need 0 <= pdr_min < pdr_max <= 1", name));
  if (!(delay_min < delay_max) || delay_min < 0.0)
    throw ConfigError(fmt::format("slice '{}': need 0 <= delay_min < delay_max", name));
  if (alpha[0] < 0.0 || alpha[1] < 0.0)
    throw ConfigError(fmt::format("slice '{}': reward weights must be nonnegative", name));
}

Hz SliceConfig::total_bandwidth() const {
  Hz total = 0;
  for (const auto& s : slices) total += s.bandwidth();
  return total;
}

std::string SliceConfig::to_string() const {
  std::string out;
  for (std::size_t n = 0; n < slices.size(); ++n) {
    const auto& s = slices[n];
    if (n) out += ' ';
    out += fmt::format("[F={} B={}Hz SW={}]", s.num_subchannels, s.subchannel_bandwidth, s.selection_window);
  }
  return out;
}

const SliceConfig& ActionSpace::at(std::size_t i) const {
  if (i >= configs_.size())
    throw ContractViolation(fmt::format("action index {} outside action space of size {}", i, configs_.size()));
  return configs_[i];
}

int ActionSpace::max_subchannels(std::size_t slice) const {
  int best = 0;
  for (const auto& c : configs_) best = std::max(best, c.slices.at(slice).num_subchannels);
  return best;
}

ActionSpace build_action_space(std::span<const SliceGrid> grids, Hz total_bandwidth) {
  if (grids.empty()) throw ConfigError("action space: no slices");
  std::vector<std::vector<SliceParams>> per_slice;
  for (std::size_t n = 0; n < grids.size(); ++n) {
    const auto& g = grids[n];
    if (g.subchannels.empty() || g.bandwidths.empty() || g.selection_windows.empty())
      throw ConfigError(fmt::format("action space: slice {} has an empty candidate grid", n));
    std::vector<SliceParams> options;
    for (int f : g.subchannels) {
      if (f < 1) throw ConfigError(fmt::format("action space: slice {} subchannel count {} < 1", n, f));
      for (Hz b : g.bandwidths) {
        if (b <= 0) throw ConfigError(fmt::format("action space: slice {} bandwidth {} <= 0", n, b));
        for (Slot sw : g.selection_windows) {
          if (sw < 1) throw ConfigError(fmt::format("action space: slice {} selection window {} < 1", n, sw));
          SliceParams p{f, b, sw};
          if (std::find(options.begin(), options.end(), p) == options.end()) options.push_back(p);
        }
      }
    }
    per_slice.push_back(std::move(options));
  }

  std::vector<SliceConfig> configs;
  SliceConfig current;
  current.slices.resize(grids.size());
  auto recurse = [&](auto&& self, std::size_t n, Hz used) -> void {
    if (n == per_slice.size()) {
      configs.push_back(current);
      return;
    }
    for (const auto& p : per_slice[n]) {
      if (used + p.bandwidth() > total_bandwidth) continue;
      current.slices[n] = p;
      self(self, n + 1, used + p.bandwidth());
    }
  };
  recurse(recurse, 0, 0);
  if (configs.empty())
    throw ConfigError(fmt::format("action space: no slice configuration fits in {} Hz", total_bandwidth));
  return ActionSpace(std::move(configs));
}

ObservationVector observation_to_vector(const Observation& obs, const ObservationNorm& norm) {
  if (!(norm.max_vues > 0.0)) throw ContractViolation("observation normalization needs max_vues > 0");
  ObservationVector out;
  out.values.reserve(2 * obs.slices.size());
  for (const auto& s : obs.slices) {
    double count = static_cast<double>(s.vue_count) / norm.max_vues;
    if (count > 1.0) {
      count = 1.0;
      out.clamped = true;
    }
    out.values.push_back(std::max(count, 0.0));
    out.values.push_back(std::clamp(s.occupancy, 0.0, 1.0));
  }
  return out;
}

HistoryWindow::HistoryWindow(std::size_t length, std::size_t dim)
    : length_(length), dim_(dim), data_(length * dim, 0.0) {
  if (length == 0 || dim == 0) throw ContractViolation("history window needs positive length and dim");
}

void HistoryWindow::push(std::span<const double> obs) {
  if (obs.size() != dim_)
    throw ContractViolation(fmt::format("history window expects dim {}, got {}", dim_, obs.size()));
  std::move(data_.begin() + static_cast<std::ptrdiff_t>(dim_), data_.end(), data_.begin());
  std::copy(obs.begin(), obs.end(), data_.end() - static_cast<std::ptrdiff_t>(dim_));
}

std::span<const double> HistoryWindow::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * dim_, dim_);
}

}  // namespace v2xslice
