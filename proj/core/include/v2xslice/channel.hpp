#ifndef V2XSLICE_CHANNEL_HPP_
#define V2XSLICE_CHANNEL_HPP_

#include <cstdint>
#include <limits>
#include <span>

#include "v2xslice/rng.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {

/// Two-segment log-distance law: PL[dB] = a1*log10(d) + b1 below the
/// breakpoint, a2*log10(d) + b2 at or beyond it.
struct PathlossParams {
  double a1 = 0.0;
  double b1 = 0.0;
  double a2 = 0.0;
  double b2 = 0.0;
  double breakpoint_m = 1.0;
};

/// Coefficients of the WINNER+ B1 LOS law for equal antenna heights h
/// (effective height h - 1 m), evaluated at the given carrier.
PathlossParams winner_b1_los(double carrier_ghz, double antenna_height_m);

struct ChannelParams {
  double tx_power_w = 0.1;                  // 20 dBm
  double noise_psd_w_per_hz = 3.162e-20;    // -165 dBm/Hz: thermal + 9 dB noise figure
  PathlossParams pathloss = winner_b1_los(5.9, 1.5);
  double rician_k = 4.0;                    // linear; +inf disables small-scale fading
  double shadowing_sigma_db = 3.0;          // 0 disables shadowing

  void validate() const;
};

double dbm_to_watts(double dbm);

struct LinkGain {
  double value = 0.0;  // |g|^2, linear
};

/// Deterministic path-loss gain 10^(-PL/10); distances below 1 m are clamped.
double pathloss_gain(const PathlossParams& p, double distance_m);

/// Unit-mean Rician power |h|^2 built from two standard normals.
double rician_power(double k, double n1, double n2);

/// Link gains with counter-based randomness: fading is independent per
/// (tx, rx, subchannel, slot), shadowing per unordered link per epoch.
class ChannelModel {
 public:
  ChannelModel(ChannelParams params, std::uint64_t seed);

  const ChannelParams& params() const { return params_; }

  LinkGain link_gain(VueId tx, VueId rx, double distance_m, int subchannel, Slot slot,
                     std::int64_t epoch) const;

  double fading(VueId tx, VueId rx, int subchannel, Slot slot) const;
  double shadowing(VueId a, VueId b, std::int64_t epoch) const;

  /// Received power P*|g|^2.
  double received_power(const LinkGain& g) const { return params_.tx_power_w * g.value; }

  /// AWGN power over one subchannel of the given bandwidth.
  double noise_power(Hz bandwidth) const { return params_.noise_psd_w_per_hz * static_cast<double>(bandwidth); }

 private:
  ChannelParams params_;
  CounterRng fading_rng_;
  CounterRng shadow_rng_;
};

/// gamma = S / (sum(I) + N0). Only co-slice, co-subchannel transmitters
/// belong in `interference`.
double sinr(double signal_power, std::span<const double> interference, double noise_power);

/// Bits delivered in one slot: B_n * delta * log2(1 + gamma).
double shannon_rate_bits(Hz subchannel_bandwidth, double sinr_linear);

}  // namespace v2xslice

#endif  // V2XSLICE_CHANNEL_HPP_
