#include "v2xslice/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "v2xslice/json_reader.hpp"

namespace v2xslice {

ChannelParams ChannelConfig::params() const {
  ChannelParams p;
  p.tx_power_w = dbm_to_watts(tx_power_dbm);
  p.noise_psd_w_per_hz = dbm_to_watts(noise_psd_dbm_hz + noise_figure_db);
  p.pathloss = pathloss ? *pathloss : winner_b1_los(carrier_ghz, antenna_height_m);
  p.rician_k = fading ? std::pow(10.0, rician_k_db / 10.0) : std::numeric_limits<double>::infinity();
  p.shadowing_sigma_db = shadowing_sigma_db;
  return p;
}

Scenario default_scenario() {
  Scenario s;
  SliceScenario safety;
  safety.spec = SliceSpec{"traffic-safety", 50, 300 * 8, 0.01, 0.10, 10.0, 50.0, {1.0, 2.0}};
  safety.share = 0.5;
  safety.grid = SliceGrid{{2, 3, 4}, {1'440'000, 2'160'000}, {30, 50}};
  SliceScenario autonomous;
  autonomous.spec = SliceSpec{"autonomous-driving", 25, 200 * 8, 0.005, 0.05, 5.0, 25.0, {1.0, 3.0}};
  autonomous.share = 0.5;
  autonomous.grid = SliceGrid{{2, 3, 4}, {1'080'000, 1'440'000}, {25, 15}};
  s.slices = {safety, autonomous};
  return s;
}

void Scenario::validate() const {
  if (epoch_slots < 1) throw ConfigError("epoch_slots must be >= 1");
  if (episode_epochs < 1) throw ConfigError("episode_epochs must be >= 1");
  if (total_bandwidth <= 0) throw ConfigError("total bandwidth must be > 0");
  if (vue_count < 0) throw ConfigError("vue_count must be >= 0");
  if (!(churn >= 0.0 && churn <= 1.0)) throw ConfigError("churn must lie in [0, 1]");
  if (!(road.length_m > 0.0) || road.lanes_per_direction < 1 || !(road.lane_width_m > 0.0) || road.speed_mps < 0.0)
    throw ConfigError("road geometry must be positive");
  if (queue_cap < 1) throw ConfigError("queue_cap must be >= 1");
  if (!(norm.max_vues > 0.0)) throw ConfigError("max_vues must be > 0");
  if (slices.empty()) throw ConfigError("at least one slice is required");
  double share = 0.0;
  for (const auto& sl : slices) {
    sl.spec.validate();
    if (sl.share < 0.0) throw ConfigError(fmt::format("slice '{}': share must be >= 0", sl.spec.name));
    share += sl.share;
  }
  if (std::abs(share - 1.0) > 1e-9) throw ConfigError(fmt::format("slice shares sum to {}, expected 1", share));
  channel.params().validate();
  mac.validate();
  const auto space = action_space();
  if (default_action >= space.size())
    throw ConfigError(fmt::format("default_action {} outside action space of size {}", default_action, space.size()));
}

ActionSpace Scenario::action_space() const {
  std::vector<SliceGrid> grids;
  for (const auto& sl : slices) grids.push_back(sl.grid);
  return build_action_space(grids, total_bandwidth);
}

std::vector<SliceSpec> Scenario::slice_specs() const {
  std::vector<SliceSpec> out;
  for (const auto& sl : slices) out.push_back(sl.spec);
  return out;
}

std::vector<int> Scenario::vehicles_per_slice() const {
  std::vector<int> out;
  int assigned = 0;
  for (std::size_t n = 0; n < slices.size(); ++n) {
    int c = n + 1 == slices.size() ? vue_count - assigned
                                   : static_cast<int>(std::lround(vue_count * slices[n].share));
    c = std::max(0, std::min(c, vue_count - assigned));
    out.push_back(c);
    assigned += c;
  }
  return out;
}

namespace {

void read_slice(ObjectReader& r, SliceScenario& sl) {
  r.string("name", sl.spec.name);
  r.number("share", sl.share, 0.0, 1.0);
  std::int64_t period = sl.spec.packet_period;
  r.integer("period_slots", period, 1);
  sl.spec.packet_period = period;
  r.integer("packet_bits", sl.spec.packet_bits, 1);
  r.number("pdr_min", sl.spec.pdr_min, 0.0, 1.0);
  r.number("pdr_max", sl.spec.pdr_max, 0.0, 1.0);
  r.number("delay_min", sl.spec.delay_min, 0.0);
  r.number("delay_max", sl.spec.delay_max, 0.0);
  std::vector<double> alpha{sl.spec.alpha[0], sl.spec.alpha[1]};
  r.number_list("alpha", alpha);
  if (alpha.size() != 2 || alpha[0] < 0.0 || alpha[1] < 0.0) r.fail("alpha", "expected two nonnegative weights");
  sl.spec.alpha = {alpha[0], alpha[1]};

  std::vector<std::int64_t> f(sl.grid.subchannels.begin(), sl.grid.subchannels.end());
  r.int_list("subchannels", f, 1);
  sl.grid.subchannels.assign(f.begin(), f.end());
  r.int_list("subchannel_bandwidth_hz", sl.grid.bandwidths, 1);
  r.int_list("selection_window", sl.grid.selection_windows, 1);

  try {
    sl.spec.validate();
  } catch (const ConfigError& e) {
    throw SchemaError(r.pointer(), e.what());
  }
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j, Scenario base, const std::string& at) {
  Scenario s = std::move(base);
  ObjectReader r(j, at);
  r.string("name", s.name);
  r.integer("epoch_slots", s.epoch_slots, 1);
  r.integer("episode_epochs", s.episode_epochs, 1);
  r.integer("total_bandwidth_hz", s.total_bandwidth, 1);
  r.integer("vue_count", s.vue_count, 0, 100000);
  r.number("churn", s.churn, 0.0, 1.0);
  r.size("queue_cap", s.queue_cap, 1);
  r.size("default_action", s.default_action);
  r.number("max_vues", s.norm.max_vues, 1e-9);
  r.object("road", [&](ObjectReader& o) {
    o.number("length_m", s.road.length_m, 1e-9);
    o.integer("lanes_per_direction", s.road.lanes_per_direction, 1, 64);
    o.number("lane_width_m", s.road.lane_width_m, 1e-9);
    double kmh = s.road.speed_mps * 3.6;
    o.number("speed_kmh", kmh, 0.0, 1000.0);
    s.road.speed_mps = kmh / 3.6;
  });
  r.object("channel", [&](ObjectReader& o) {
    auto& c = s.channel;
    o.number("tx_power_dbm", c.tx_power_dbm, -100.0, 100.0);
    o.number("noise_psd_dbm_hz", c.noise_psd_dbm_hz, -300.0, 0.0);
    o.number("noise_figure_db", c.noise_figure_db, 0.0, 100.0);
    o.number("carrier_ghz", c.carrier_ghz, 1e-3, 1000.0);
    o.number("antenna_height_m", c.antenna_height_m, 1.0 + 1e-9, 1000.0);
    o.boolean("fading", c.fading);
    o.number("rician_k_db", c.rician_k_db, -100.0, 100.0);
    o.number("shadowing_sigma_db", c.shadowing_sigma_db, 0.0, 100.0);
    o.object("pathloss", [&](ObjectReader& p) {
      PathlossParams pl = c.pathloss ? *c.pathloss : winner_b1_los(c.carrier_ghz, c.antenna_height_m);
      p.number("a1", pl.a1);
      p.number("b1", pl.b1);
      p.number("a2", pl.a2);
      p.number("b2", pl.b2);
      p.number("breakpoint_m", pl.breakpoint_m, 1e-9);
      c.pathloss = pl;
    });
  });
  r.object("mac", [&](ObjectReader& o) {
    o.integer("sensing_slots", s.mac.sensing_slots, 1, 100000);
    o.number("p_res", s.mac.p_res, 0.0, 1.0);
    o.integer("counter_min", s.mac.counter_min, 1, 100000);
    o.integer("counter_max", s.mac.counter_max, 1, 100000);
    o.integer("candidate_percent", s.mac.candidate_percent, 1, 100);
    if (s.mac.counter_max < s.mac.counter_min) o.fail("counter_max", "must be >= counter_min");
  });
  if (const auto* arr = j.is_object() && j.contains("slices") ? &j.at("slices") : nullptr) {
    if (!arr->is_array() || arr->empty()) r.fail("slices", "expected a non-empty array of slice objects");
    const auto defaults = s.slices;
    s.slices.assign(arr->size(), SliceScenario{});
    for (std::size_t i = 0; i < arr->size(); ++i)
      s.slices[i] = i < defaults.size() ? defaults[i] : (defaults.empty() ? SliceScenario{} : defaults.back());
    r.object_array("slices", [&](ObjectReader& o, std::size_t i) { read_slice(o, s.slices[i]); });
  }
  r.finish();

  try {
    s.validate();
  } catch (const SchemaError&) {
    throw;
  } catch (const ConfigError& e) {
    throw SchemaError(at, e.what());
  }
  return s;
}

nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  const auto pl = s.channel.pathloss ? *s.channel.pathloss : winner_b1_los(s.channel.carrier_ghz, s.channel.antenna_height_m);
  json slices = json::array();
  for (const auto& sl : s.slices) {
    slices.push_back({{"name", sl.spec.name},
                      {"share", sl.share},
                      {"period_slots", sl.spec.packet_period},
                      {"packet_bits", sl.spec.packet_bits},
                      {"pdr_min", sl.spec.pdr_min},
                      {"pdr_max", sl.spec.pdr_max},
                      {"delay_min", sl.spec.delay_min},
                      {"delay_max", sl.spec.delay_max},
                      {"alpha", {sl.spec.alpha[0], sl.spec.alpha[1]}},
                      {"subchannels", sl.grid.subchannels},
                      {"subchannel_bandwidth_hz", sl.grid.bandwidths},
                      {"selection_window", sl.grid.selection_windows}});
  }
  return json{{"name", s.name},
              {"epoch_slots", s.epoch_slots},
              {"episode_epochs", s.episode_epochs},
              {"total_bandwidth_hz", s.total_bandwidth},
              {"vue_count", s.vue_count},
              {"churn", s.churn},
              {"queue_cap", s.queue_cap},
              {"default_action", s.default_action},
              {"max_vues", s.norm.max_vues},
              {"road",
               {{"length_m", s.road.length_m},
                {"lanes_per_direction", s.road.lanes_per_direction},
                {"lane_width_m", s.road.lane_width_m},
                {"speed_kmh", s.road.speed_mps * 3.6}}},
              {"channel",
               {{"tx_power_dbm", s.channel.tx_power_dbm},
                {"noise_psd_dbm_hz", s.channel.noise_psd_dbm_hz},
                {"noise_figure_db", s.channel.noise_figure_db},
                {"carrier_ghz", s.channel.carrier_ghz},
                {"antenna_height_m", s.channel.antenna_height_m},
                {"fading", s.channel.fading},
                {"rician_k_db", s.channel.rician_k_db},
                {"shadowing_sigma_db", s.channel.shadowing_sigma_db},
                {"pathloss",
                 {{"a1", pl.a1}, {"b1", pl.b1}, {"a2", pl.a2}, {"b2", pl.b2}, {"breakpoint_m", pl.breakpoint_m}}}}},
              {"mac",
               {{"sensing_slots", s.mac.sensing_slots},
                {"p_res", s.mac.p_res},
                {"counter_min", s.mac.counter_min},
                {"counter_max", s.mac.counter_max},
                {"candidate_percent", s.mac.candidate_percent}}},
              {"slices", slices}};
}

namespace {

// Minimal JSON walker used only to map a pointer back to a source line.
class PointerLocator {
 public:
  explicit PointerLocator(std::string_view text) : text_(text) {}

  int locate(const std::vector<std::string>& tokens) {
    pos_ = 0;
    skip_ws();
    for (const auto& tok : tokens) {
      if (!descend(tok)) return 0;
      skip_ws();
    }
    return line_at(pos_);
  }

 private:
  int line_at(std::size_t p) const {
    int line = 1;
    for (std::size_t i = 0; i < p && i < text_.size(); ++i)
      if (text_[i] == '\n') ++line;
    return line;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool read_string(std::string* out) {
    if (pos_ >= text_.size() || text_[pos_] != '"') return false;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (out && pos_ < text_.size()) out->push_back(text_[pos_]);
      } else if (out) {
        out->push_back(text_[pos_]);
      }
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    ++pos_;
    return true;
  }

  bool skip_value() {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if (c == '"') return read_string(nullptr);
    if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++pos_;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == close) {
        ++pos_;
        return true;
      }
      while (pos_ < text_.size()) {
        skip_ws();
        if (c == '{') {
          if (!read_string(nullptr)) return false;
          skip_ws();
          if (pos_ >= text_.size() || text_[pos_] != ':') return false;
          ++pos_;
        }
        if (!skip_value()) return false;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (pos_ < text_.size() && text_[pos_] == close) {
          ++pos_;
          return true;
        }
        return false;
      }
      return false;
    }
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    return true;
  }

  bool descend(const std::string& tok) {
    if (pos_ >= text_.size()) return false;
    if (text_[pos_] == '{') {
      ++pos_;
      while (true) {
        skip_ws();
        const std::size_t key_pos = pos_;
        std::string key;
        if (!read_string(&key)) return false;
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != ':') return false;
        ++pos_;
        skip_ws();
        if (key == tok) {
          // Unknown-key errors point at the key; values start on the same line
          // in any sane layout, so report the key position.
          if (text_[pos_] != '{' && text_[pos_] != '[') pos_ = key_pos;
          return true;
        }
        if (!skip_value()) return false;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        return false;
      }
    }
    if (text_[pos_] == '[') {
      std::size_t index = 0;
      try {
        index = std::stoul(tok);
      } catch (...) {
        return false;
      }
      ++pos_;
      for (std::size_t i = 0;; ++i) {
        skip_ws();
        if (i == index) return pos_ < text_.size() && text_[pos_] != ']';
        if (!skip_value()) return false;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        return false;
      }
    }
    return false;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

int line_of_pointer(std::string_view text, std::string_view pointer) {
  std::vector<std::string> tokens;
  if (!pointer.empty()) {
    std::size_t start = pointer.front() == '/' ? 1 : 0;
    while (start <= pointer.size()) {
      const std::size_t end = std::min(pointer.find('/', start), pointer.size());
      std::string tok(pointer.substr(start, end - start));
      std::string unescaped;
      for (std::size_t i = 0; i < tok.size(); ++i) {
        if (tok[i] == '~' && i + 1 < tok.size()) {
          unescaped += tok[i + 1] == '1' ? '/' : '~';
          ++i;
        } else {
          unescaped += tok[i];
        }
      }
      tokens.push_back(unescaped);
      start = end + 1;
    }
  }
  return PointerLocator(text).locate(tokens);
}

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(fmt::format("{}:{}: JSON syntax error: {}", source, line, e.what()));
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace v2xslice
