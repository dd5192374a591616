#include "v2xslice/traffic.hpp"

#include <fmt/format.h>

namespace v2xslice {

std::optional<Packet> arrivals(Slot period, int packet_bits, Slot t) {
  if (t < 0) throw ContractViolation("arrivals: negative slot");
  if (period < 1) throw ContractViolation("arrivals: period must be >= 1");
  if (t % period != 0) return std::nullopt;
  return Packet{t, packet_bits, t / period, std::nullopt};
}

PacketScore score_packet(const Packet& packet, Slot service_slot, double delivered_bits) {
  if (service_slot <= packet.arrival)
    throw ContractViolation(
        fmt::format("packet {} served at slot {} before or at its arrival {}", packet.seq, service_slot, packet.arrival));
  return PacketScore{service_slot - packet.arrival, delivered_bits < static_cast<double>(packet.size_bits)};
}

std::vector<Packet> expire_unserved(std::deque<Packet>& queue, Slot t, Slot selection_window) {
  std::vector<Packet> dropped;
  for (auto it = queue.begin(); it != queue.end();) {
    if (!it->grant && t > it->arrival + selection_window) {
      dropped.push_back(std::move(*it));
      it = queue.erase(it);
    } else {
      ++it;
    }
  }
  return dropped;
}

std::optional<Packet> enqueue(std::deque<Packet>& queue, Packet packet, std::size_t cap) {
  queue.push_back(std::move(packet));
  if (queue.size() <= cap) return std::nullopt;
  Packet oldest = std::move(queue.front());
  queue.pop_front();
  return oldest;
}

}  // namespace v2xslice
