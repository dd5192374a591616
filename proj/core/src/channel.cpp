#include "v2xslice/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace v2xslice {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

PathlossParams winner_b1_los(double carrier_ghz, double antenna_height_m) {
  const double h_eff = antenna_height_m - 1.0;
  if (h_eff <= 0.0) throw ConfigError("WINNER+ B1: antenna height must exceed 1 m");
  PathlossParams p;
  p.a1 = 22.7;
  p.b1 = 41.0 + 20.0 * std::log10(carrier_ghz / 5.0);
  p.a2 = 40.0;
  p.b2 = 9.45 - 17.3 * std::log10(h_eff) - 17.3 * std::log10(h_eff) + 2.7 * std::log10(carrier_ghz / 5.0);
  p.breakpoint_m = 4.0 * h_eff * h_eff * carrier_ghz * 1e9 / kSpeedOfLight;
  return p;
}

void ChannelParams::validate() const {
  if (!(tx_power_w > 0.0)) throw ConfigError("channel: tx power must be > 0");
  if (!(noise_psd_w_per_hz > 0.0)) throw ConfigError("channel: noise power must be > 0");
  if (!(pathloss.breakpoint_m > 0.0)) throw ConfigError("channel: pathloss breakpoint must be > 0");
  if (!(rician_k >= 0.0)) throw ConfigError("channel: Rician K must be >= 0");
  if (!(shadowing_sigma_db >= 0.0)) throw ConfigError("channel: shadowing sigma must be >= 0");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double pathloss_gain(const PathlossParams& p, double distance_m) {
  const double d = std::max(distance_m, 1.0);
  const double pl_db = d < p.breakpoint_m ? p.a1 * std::log10(d) + p.b1 : p.a2 * std::log10(d) + p.b2;
  return std::pow(10.0, -pl_db / 10.0);
}

double rician_power(double k, double n1, double n2) {
  if (std::isinf(k)) return 1.0;
  const double los = std::sqrt(k / (k + 1.0));
  const double scatter = std::sqrt(1.0 / (2.0 * (k + 1.0)));
  const double re = los + scatter * n1;
  const double im = scatter * n2;
  return re * re + im * im;
}

ChannelModel::ChannelModel(ChannelParams params, std::uint64_t seed)
    : params_(params),
      fading_rng_(derive_seed(seed, "channel.fading")),
      shadow_rng_(derive_seed(seed, "channel.shadowing")) {
  params_.validate();
}

double ChannelModel::fading(VueId tx, VueId rx, int subchannel, Slot slot) const {
  if (std::isinf(params_.rician_k)) return 1.0;
  const auto [n1, n2] = fading_rng_.normal_pair(tx, rx, static_cast<std::uint64_t>(subchannel),
                                                static_cast<std::uint64_t>(slot));
  return rician_power(params_.rician_k, n1, n2);
}

double ChannelModel::shadowing(VueId a, VueId b, std::int64_t epoch) const {
  if (params_.shadowing_sigma_db == 0.0) return 1.0;
  const VueId lo = std::min(a, b);
  const VueId hi = std::max(a, b);
  const double db = params_.shadowing_sigma_db * shadow_rng_.normal(lo, hi, static_cast<std::uint64_t>(epoch));
  return std::pow(10.0, db / 10.0);
}

LinkGain ChannelModel::link_gain(VueId tx, VueId rx, double distance_m, int subchannel, Slot slot,
                                 std::int64_t epoch) const {
  if (tx == rx) throw ContractViolation(fmt::format("link gain requested for vue {} to itself", tx));
  return LinkGain{pathloss_gain(params_.pathloss, distance_m) * shadowing(tx, rx, epoch) *
                  fading(tx, rx, subchannel, slot)};
}

double sinr(double signal_power, std::span<const double> interference, double noise_power) {
  double denom = noise_power;
  for (double p : interference) denom += p;
  return signal_power / denom;
}

double shannon_rate_bits(Hz subchannel_bandwidth, double sinr_linear) {
  return static_cast<double>(subchannel_bandwidth) * kSlotSeconds * std::log2(1.0 + sinr_linear);
}

}  // namespace v2xslice
