#ifndef V2XSLICE_TRAFFIC_HPP_
#define V2XSLICE_TRAFFIC_HPP_

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "v2xslice/types.hpp"

namespace v2xslice {

/// Packet l is generated at slot l * period; nothing otherwise.
std::optional<Packet> arrivals(Slot period, int packet_bits, Slot t);

struct PacketScore {
  Slot delay = 0;
  bool lost = false;
};

/// d = t - t^a; lost iff fewer than size_bits were deliverable.
PacketScore score_packet(const Packet& packet, Slot service_slot, double delivered_bits);

/// Removes packets with no grant whose selection window closed before t
/// (t > t^a + window). They count as lost with delay = window.
std::vector<Packet> expire_unserved(std::deque<Packet>& queue, Slot t, Slot selection_window);

/// FCFS append; when the queue exceeds `cap`, the oldest packet is evicted
/// and returned.
std::optional<Packet> enqueue(std::deque<Packet>& queue, Packet packet, std::size_t cap);

/// One scored packet, as written to the per-packet trace.
struct PacketRecord {
  VueId vue = 0;
  int slice = 0;
  std::int64_t seq = 0;
  Slot arrival = 0;
  Slot service = 0;  // expiry slot for dropped packets
  Slot delay = 0;
  bool lost = false;
  bool dropped = false;  // expired or evicted without transmission
};

}  // namespace v2xslice

#endif  // V2XSLICE_TRAFFIC_HPP_
