#include "v2xslice/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "v2xslice/json_reader.hpp"
#include "v2xslice/rng.hpp"
#include "v2xslice/stats.hpp"
#include "v2xslice/validation.hpp"

namespace v2xslice {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSchemes{"a2c", "drqn", "random"};
const std::vector<std::string> kRandomModes{"fixed", "per-epoch"};

void string_list(ObjectReader& r, const std::string& key, std::vector<std::string>& out,
                 const std::vector<std::string>& allowed) {
  const auto* v = r.raw(key);
  if (!v) return;
  if (!v->is_array() || v->empty()) r.fail(key, "expected a non-empty array of strings");
  std::vector<std::string> tmp;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& e = (*v)[i];
    const std::string at = r.child(key) + "/" + std::to_string(i);
    if (!e.is_string()) throw SchemaError(at, "expected a string");
    const auto s = e.get<std::string>();
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end())
      throw SchemaError(at, fmt::format("unknown scheme '{}'", s));
    if (std::find(tmp.begin(), tmp.end(), s) != tmp.end()) throw SchemaError(at, fmt::format("duplicate '{}'", s));
    tmp.push_back(s);
  }
  out = std::move(tmp);
}

std::vector<int> to_ints(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

void read_hidden(ObjectReader& r, std::vector<int>& hidden) {
  std::vector<std::int64_t> h(hidden.begin(), hidden.end());
  r.int_list("hidden", h, 1, false);
  hidden = to_ints(h);
}

void read_activation(ObjectReader& r, Activation& a) {
  std::string s = to_string(a);
  r.string_choice("activation", s, {"relu", "tanh"});
  a = parse_activation(s);
}

void read_a2c(ObjectReader& r, A2CConfig& c) {
  r.integer("iterations", c.iterations, 0);
  r.integer("batch", c.batch, 1);
  r.size("history", c.history, 1);
  r.integer("lstm_units", c.lstm_units, 1);
  read_hidden(r, c.hidden);
  read_activation(r, c.activation);
  r.number("lr_actor", c.lr_actor, 0.0);
  r.number("lr_critic", c.lr_critic, 0.0);
  r.number("lambda", c.lambda, 0.0, 0.999999);
  r.boolean("discount_weight", c.discount_weight);
  r.boolean("normalize_advantages", c.normalize_advantages);
  r.number("divergence_bound", c.divergence_bound, 0.0);
}

void read_drqn(ObjectReader& r, DrqnConfig& c) {
  r.integer("episodes", c.episodes, 0);
  r.size("history", c.history, 1);
  r.integer("lstm_units", c.lstm_units, 1);
  read_hidden(r, c.hidden);
  read_activation(r, c.activation);
  r.number("lr", c.lr, 0.0);
  r.number("lambda", c.lambda, 0.0, 0.999999);
  r.number("epsilon_start", c.epsilon_start, 0.0, 1.0);
  r.number("epsilon_min", c.epsilon_min, 0.0, 1.0);
  r.number("epsilon_decay", c.epsilon_decay, 0.0, 1.0);
  r.integer("target_sync", c.target_sync, 1);
  r.size("replay_capacity", c.replay_capacity, 1);
  r.size("minibatch", c.minibatch, 1);
  r.number("divergence_bound", c.divergence_bound, 0.0);
}

std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal().string();
}

json a2c_json(const A2CConfig& c) {
  return {{"iterations", c.iterations},
          {"batch", c.batch},
          {"history", c.history},
          {"lstm_units", c.lstm_units},
          {"hidden", c.hidden},
          {"activation", to_string(c.activation)},
          {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"lambda", c.lambda},
          {"discount_weight", c.discount_weight},
          {"normalize_advantages", c.normalize_advantages},
          {"divergence_bound", c.divergence_bound}};
}

json drqn_json(const DrqnConfig& c) {
  return {{"episodes", c.episodes},
          {"history", c.history},
          {"lstm_units", c.lstm_units},
          {"hidden", c.hidden},
          {"activation", to_string(c.activation)},
          {"lr", c.lr},
          {"lambda", c.lambda},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_min", c.epsilon_min},
          {"epsilon_decay", c.epsilon_decay},
          {"target_sync", c.target_sync},
          {"replay_capacity", c.replay_capacity},
          {"minibatch", c.minibatch},
          {"divergence_bound", c.divergence_bound}};
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

std::vector<std::string> slice_names(const Scenario& s) {
  std::vector<std::string> out;
  for (const auto& sl : s.slices) out.push_back(sl.spec.name);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return x;
}

RandomPolicy::Mode random_mode(const std::string& s) {
  return s == "per-epoch" ? RandomPolicy::Mode::kPerEpoch : RandomPolicy::Mode::kFixedPerEpisode;
}

struct Seeds {
  std::uint64_t a2c, drqn, evaluate, sweep, gradients;
  explicit Seeds(std::uint64_t master)
      : a2c(derive_seed(master, "experiment.a2c")),
        drqn(derive_seed(master, "experiment.drqn")),
        evaluate(derive_seed(master, "experiment.evaluate")),
        sweep(derive_seed(master, "experiment.sweep")),
        gradients(derive_seed(master, "experiment.gradients")) {}
  json to_json() const {
    return {{"a2c", a2c}, {"drqn", drqn}, {"evaluate", evaluate}, {"density_sweep", sweep}, {"gradients", gradients}};
  }
};

/// Output directory bookkeeping: every file written goes through here.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", (dir_ / name).string()));
    out << content;
    if (!out) throw ConfigError(fmt::format("write failed for '{}'", (dir_ / name).string()));
    note(name);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", (dir_ / name).string()));
    note(name);
    return out;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  void note(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

class PartialRun : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check_net(const RecurrentNet& net, const Scenario& s, const std::string& head, const std::string& what) {
  const int dim = static_cast<int>(2 * s.slices.size());
  const auto actions = static_cast<int>(s.action_space().size());
  if (net.config().input_dim != dim)
    throw ConfigError(fmt::format("{}: input dimension {} does not match the scenario ({})", what,
                                  net.config().input_dim, dim));
  for (const auto& h : net.config().heads)
    if (h.name == head) {
      if (h.outputs != actions)
        throw ConfigError(fmt::format("{}: {} outputs, scenario has {} configurations", what, h.outputs, actions));
      return;
    }
  throw ConfigError(fmt::format("{}: no '{}' head", what, head));
}

RecurrentNet obtain_a2c(const ExperimentConfig& cfg, const Seeds& seeds, Artifacts& art) {
  if (!cfg.evaluate.a2c_checkpoint.empty()) {
    RecurrentNet net = RecurrentNet::load(cfg.evaluate.a2c_checkpoint);
    check_net(net, cfg.scenario, "actor", cfg.evaluate.a2c_checkpoint);
    return net;
  }
  A2CConfig a = cfg.a2c;
  a.workers = cfg.workers;
  auto curve = art.open("curve.csv");
  curve << curve_csv_header(slice_names(cfg.scenario));
  TrainResult r = train_a2c(cfg.scenario, a, seeds.a2c, [&](const CurveRow& row) {
    curve << curve_csv_row(row);
    curve.flush();
  });
  if (r.diverged) {
    r.net.save(art.path("checkpoint_a2c_diverged.json"));
    art.note("checkpoint_a2c_diverged.json");
    throw PartialRun("a2c training diverged: " + r.message);
  }
  r.net.save(art.path("checkpoint_a2c.json"));
  art.note("checkpoint_a2c.json");
  return std::move(r.net);
}

RecurrentNet obtain_drqn(const ExperimentConfig& cfg, const Seeds& seeds, Artifacts& art) {
  if (!cfg.evaluate.drqn_checkpoint.empty()) {
    RecurrentNet net = RecurrentNet::load(cfg.evaluate.drqn_checkpoint);
    check_net(net, cfg.scenario, "q", cfg.evaluate.drqn_checkpoint);
    return net;
  }
  auto curve = art.open("curve_drqn.csv");
  curve << curve_csv_header(slice_names(cfg.scenario));
  DrqnResult r = train_drqn(cfg.scenario, cfg.drqn, seeds.drqn, [&](const CurveRow& row) {
    curve << curve_csv_row(row);
    curve.flush();
  });
  if (r.diverged) {
    r.net.save(art.path("checkpoint_drqn_diverged.json"));
    art.note("checkpoint_drqn_diverged.json");
    throw PartialRun("drqn training diverged: " + r.message);
  }
  r.net.save(art.path("checkpoint_drqn.json"));
  art.note("checkpoint_drqn.json");
  return std::move(r.net);
}

struct SchemePolicy {
  std::unique_ptr<Policy> policy;
  std::size_t history = 1;
};

struct Nets {
  std::optional<RecurrentNet> a2c, drqn;
};

SchemePolicy make_policy(const std::string& scheme, const ExperimentConfig& cfg, const Nets& nets,
                         const std::string& random_mode_name) {
  SchemePolicy p;
  if (scheme == "a2c") {
    p.policy = std::make_unique<ActorCriticPolicy>(*nets.a2c, cfg.evaluate.greedy);
    p.history = cfg.a2c.history;
  } else if (scheme == "drqn") {
    p.policy = std::make_unique<QPolicy>(*nets.drqn, 0.0);
    p.history = cfg.drqn.history;
  } else {
    p.policy = std::make_unique<RandomPolicy>(cfg.scenario.action_space().size(), random_mode(random_mode_name));
  }
  return p;
}

Nets prepare_nets(const std::vector<std::string>& schemes, const ExperimentConfig& cfg, const Seeds& seeds,
                  Artifacts& art) {
  Nets nets;
  for (const auto& s : schemes) {
    if (s == "a2c" && !nets.a2c) nets.a2c = obtain_a2c(cfg, seeds, art);
    if (s == "drqn" && !nets.drqn) nets.drqn = obtain_drqn(cfg, seeds, art);
  }
  return nets;
}

std::string epochs_header(const std::vector<std::string>& names) {
  std::string h = "scheme,episode,epoch,action,reward";
  for (const auto& n : names)
    h += fmt::format(",vues_{0},occupancy_{0},pdr_{0},delay_{0},packets_{0}", n);
  return h + "\n";
}

void run_evaluate(const ExperimentConfig& cfg, const Seeds& seeds, Artifacts& art) {
  std::vector<std::string> schemes = cfg.evaluate.schemes;
  if (std::find(schemes.begin(), schemes.end(), "random") == schemes.end()) schemes.push_back("random");
  const Nets nets = prepare_nets(schemes, cfg, seeds, art);
  const auto names = slice_names(cfg.scenario);
  const std::string fp = fingerprint(cfg.scenario, seeds.evaluate, cfg.evaluate.episodes);

  std::ofstream epochs, packets, transmissions;
  if (cfg.evaluate.epoch_csv) {
    epochs = art.open("epochs.csv");
    epochs << epochs_header(names);
  }
  if (cfg.traces.packets) {
    packets = art.open("packets.csv");
    packets << "scheme,episode,vue,slice,seq,arrival,service,delay,lost,dropped\n";
  }
  if (cfg.traces.transmissions) {
    transmissions = art.open("transmissions.csv");
    transmissions << "scheme,episode,slot,slice,subchannel,vue,sinr,bits\n";
  }

  std::vector<SchemeResults> results;
  Environment env(cfg.scenario);
  for (const auto& scheme : schemes) {
    SchemePolicy sp = make_policy(scheme, cfg, nets, cfg.evaluate.random_mode);
    SchemeResults res{scheme, fp, names, {}};
    for (int e = 0; e < cfg.evaluate.episodes; ++e) {
      SimHooks hooks;
      if (cfg.traces.packets)
        hooks.on_packet = [&, e](const PacketRecord& p) {
          packets << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", scheme, e, p.vue, p.slice, p.seq, p.arrival,
                                 p.service, p.delay, p.lost ? 1 : 0, p.dropped ? 1 : 0);
        };
      if (cfg.traces.transmissions)
        hooks.on_transmission = [&, e](Slot t, int slice, int m, VueId v, double sinr, double bits) {
          transmissions << fmt::format("{},{},{},{},{},{},{},{}\n", scheme, e, t, slice, m, v, num(sinr), num(bits));
        };
      env.set_hooks(std::move(hooks));
      const auto ue = static_cast<std::uint64_t>(e);
      Engine rng = make_engine(derive_seed(seeds.evaluate, "eval.policy", {ue}));
      const Trajectory t = collect_episode(env, *sp.policy, sp.history, derive_seed(seeds.evaluate, "eval.episode", {ue}),
                                           rng, cfg.a2c.lambda);
      res.episodes.push_back(summarize(t, e));
      if (cfg.evaluate.epoch_csv)
        for (std::size_t k = 0; k < t.steps.size(); ++k) {
          const auto& st = t.steps[k];
          std::string line = fmt::format("{},{},{},{},{}", scheme, e, k + 1, st.action, num(st.reward));
          for (const auto& m : st.metrics.slices)
            line += fmt::format(",{},{},{},{},{}", m.vue_count, num(m.occupancy), num(m.avg_pdr), num(m.avg_delay),
                                m.packets);
          epochs << line << "\n";
        }
    }
    results.push_back(std::move(res));
  }
  env.set_hooks({});

  art.write("episodes.csv", episodes_csv(results));
  art.write("reward_cdf.csv", reward_cdf_csv(results));
  art.write("summary.csv", summary_csv(compare_schemes(results)));
}

struct SweepCell {
  int vue_count = 0;
  std::string scheme;
  int seed_index = 0;
  std::vector<EpisodeSummary> episodes;
  std::vector<double> packets;  // per slice, totals over the cell
};

void run_sweep(const ExperimentConfig& cfg, const Seeds& seeds, Artifacts& art) {
  const auto& sw = cfg.sweep;
  const Nets nets = prepare_nets(sw.schemes, cfg, seeds, art);
  const auto names = slice_names(cfg.scenario);

  std::vector<SweepCell> cells;
  for (int n : sw.vue_counts)
    for (const auto& scheme : sw.schemes)
      for (int s = 0; s < sw.seeds; ++s) cells.push_back({n, scheme, s, {}, {}});

  auto run_cell = [&](SweepCell& cell) {
    Scenario sc = cfg.scenario;
    sc.vue_count = cell.vue_count;
    sc.validate();
    Environment env(sc);
    SchemePolicy sp = make_policy(cell.scheme, cfg, nets, sw.random_mode);
    cell.packets.assign(names.size(), 0.0);
    for (int e = 0; e < sw.episodes; ++e) {
      const auto us = static_cast<std::uint64_t>(cell.seed_index), ue = static_cast<std::uint64_t>(e);
      // policy draws are shared across densities so only the load differs
      Engine rng = make_engine(derive_seed(seeds.sweep, "sweep.policy", {us, ue}));
      const Trajectory t =
          collect_episode(env, *sp.policy, sp.history,
                          derive_seed(seeds.sweep, "sweep.episode", {static_cast<std::uint64_t>(cell.vue_count), us, ue}),
                          rng, cfg.a2c.lambda);
      for (const auto& st : t.steps)
        for (std::size_t n = 0; n < names.size(); ++n)
          cell.packets[n] += static_cast<double>(st.metrics.slices[n].packets);
      cell.episodes.push_back(summarize(t, e));
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(cfg.workers, cells.size()));
  if (workers == 1) {
    for (auto& c : cells) run_cell(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cells.size(); i += workers) run_cell(cells[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::string rows = "vue_count,scheme,seed,episode,mean_reward";
  for (const auto& n : names) rows += fmt::format(",pdr_{0},delay_{0}", n);
  rows += "\n";
  for (const auto& c : cells)
    for (const auto& e : c.episodes) {
      rows += fmt::format("{},{},{},{},{}", c.vue_count, c.scheme, c.seed_index, e.episode, num(e.mean_reward));
      for (std::size_t n = 0; n < names.size(); ++n) rows += fmt::format(",{},{}", num(e.pdr[n]), num(e.delay[n]));
      rows += "\n";
    }
  art.write("density.csv", rows);

  std::string summary = "vue_count,scheme,slice,episodes,mean_pdr,mean_delay,mean_reward\n";
  for (int n : sw.vue_counts)
    for (const auto& scheme : sw.schemes)
      for (std::size_t s = 0; s < names.size(); ++s) {
        std::vector<double> pdr, delay, reward;
        for (const auto& c : cells)
          if (c.vue_count == n && c.scheme == scheme)
            for (const auto& e : c.episodes) {
              pdr.push_back(e.pdr[s]);
              delay.push_back(e.delay[s]);
              reward.push_back(e.mean_reward);
            }
        summary += fmt::format("{},{},{},{},{},{},{}\n", n, scheme, names[s], pdr.size(), num(stats::mean(pdr)),
                               num(stats::mean(delay)), num(stats::mean(reward)));
      }
  art.write("density_summary.csv", summary);

  std::string trend = "scheme,slice,metric,points,spearman_rho,p_greater\n";
  for (const auto& scheme : sw.schemes)
    for (std::size_t s = 0; s < names.size(); ++s)
      for (int metric = 0; metric < 2; ++metric) {
        std::vector<double> x, y;
        for (const auto& c : cells)
          if (c.scheme == scheme)
            for (const auto& e : c.episodes) {
              x.push_back(c.vue_count);
              y.push_back(metric == 0 ? e.pdr[s] : e.delay[s]);
            }
        stats::Spearman sp;
        if (x.size() >= 3) sp = stats::spearman(x, y);
        trend += fmt::format("{},{},{},{},{},{}\n", scheme, names[s], metric == 0 ? "pdr" : "delay", x.size(),
                             num(sp.rho), num(sp.p_greater));
      }
  art.write("density_trend.csv", trend);
}

void run_gradients(const ExperimentConfig& cfg, const Seeds& seeds, Artifacts& art) {
  const auto& g = cfg.gradients;
  json report;
  json nets = json::array();
  std::string csv = "net,input_dim,lstm_units,activation,components,failures,max_rel_error,worst\n";
  double worst = 0.0;
  std::size_t failures = 0;
  for (int i = 0; i < g.toy_nets; ++i) {
    const auto ui = static_cast<std::uint64_t>(i);
    const RecurrentNet net = random_toy_net(derive_seed(seeds.gradients, "toy.net", {ui}));
    const FdComparison c = check_network_gradient(net, g.window, derive_seed(seeds.gradients, "toy.check", {ui}));
    worst = std::max(worst, c.max_rel_error);
    failures += c.failures;
    nets.push_back({{"net", i},
                    {"input_dim", net.config().input_dim},
                    {"lstm_units", net.config().lstm_units},
                    {"activation", to_string(net.config().lstm_activation)},
                    {"components", c.components},
                    {"failures", c.failures},
                    {"max_rel_error", c.max_rel_error},
                    {"worst", c.worst}});
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", i, net.config().input_dim, net.config().lstm_units,
                       to_string(net.config().lstm_activation), c.components, c.failures, num(c.max_rel_error),
                       c.worst);
  }
  report["networks"] = nets;
  report["max_rel_error"] = worst;
  report["failures"] = failures;
  report["pass"] = failures == 0;

  if (g.pg_episodes > 0) {
    SyntheticPomdp m = default_synthetic_pomdp();
    Engine rng = make_engine(derive_seed(seeds.gradients, "pg.theta"));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec theta(m.observations * m.actions);
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = u(rng);
    auto pg_json = [&](const PolicyGradientReport& p) {
      return json{{"checked", p.checked},
                  {"max_rel_error", p.max_rel_error},
                  {"baseline_max_z", p.baseline_max_z},
                  {"var_advantage", p.var_advantage},
                  {"var_return", p.var_return},
                  {"fd", std::vector<double>(p.fd.begin(), p.fd.end())},
                  {"mc_mean", std::vector<double>(p.mc_mean.begin(), p.mc_mean.end())},
                  {"mc_se", std::vector<double>(p.mc_se.begin(), p.mc_se.end())}};
    };
    report["policy_gradient"] =
        pg_json(policy_gradient_check(m, theta, g.pg_episodes, derive_seed(seeds.gradients, "pg.check")));
    m.reward_offset = 100.0;
    report["policy_gradient_offset"] =
        pg_json(policy_gradient_check(m, theta, g.pg_episodes, derive_seed(seeds.gradients, "pg.offset")));
  }
  art.write("gradients.json", report.dump(2) + "\n");
  art.write("gradients.csv", csv);
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  ObjectReader r(j, "");
  r.string_choice("experiment", c.experiment, {std::begin(kExperiments), std::end(kExperiments)});
  r.seed("seed", c.seed);
  r.integer("workers", c.workers, 1, 256);
  if (r.has("scenario") && r.has("scenario_file")) r.fail("scenario_file", "give either scenario or scenario_file");
  if (const auto* s = r.raw("scenario")) c.scenario = scenario_from_json(*s, default_scenario(), r.child("scenario"));
  std::string scenario_file;
  r.string("scenario_file", scenario_file);
  if (!scenario_file.empty()) {
    const fs::path path = resolve(scenario_file, base_dir);
    const std::string text = read_text_file(path);
    const json sj = parse_json_text(text, path.string());
    try {
      c.scenario = scenario_from_json(sj);
    } catch (const SchemaError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path.string(), line_of_pointer(text, e.pointer()), e.what()));
    }
  }
  r.object("a2c", [&](ObjectReader& o) { read_a2c(o, c.a2c); });
  r.object("drqn", [&](ObjectReader& o) { read_drqn(o, c.drqn); });
  r.object("evaluate", [&](ObjectReader& o) {
    o.integer("episodes", c.evaluate.episodes, 2);
    string_list(o, "schemes", c.evaluate.schemes, kSchemes);
    o.string("a2c_checkpoint", c.evaluate.a2c_checkpoint);
    o.string("drqn_checkpoint", c.evaluate.drqn_checkpoint);
    o.boolean("greedy", c.evaluate.greedy);
    o.string_choice("random_mode", c.evaluate.random_mode, kRandomModes);
    o.boolean("epoch_csv", c.evaluate.epoch_csv);
  });
  r.object("density_sweep", [&](ObjectReader& o) {
    std::vector<std::int64_t> counts(c.sweep.vue_counts.begin(), c.sweep.vue_counts.end());
    o.int_list("vue_counts", counts, 0);
    c.sweep.vue_counts = to_ints(counts);
    string_list(o, "schemes", c.sweep.schemes, kSchemes);
    o.integer("seeds", c.sweep.seeds, 1);
    o.integer("episodes", c.sweep.episodes, 1);
    o.string_choice("random_mode", c.sweep.random_mode, kRandomModes);
  });
  r.object("gradients", [&](ObjectReader& o) {
    o.integer("toy_nets", c.gradients.toy_nets, 0);
    o.size("window", c.gradients.window, 1);
    o.integer("pg_episodes", c.gradients.pg_episodes, 0);
  });
  r.object("traces", [&](ObjectReader& o) {
    o.boolean("packets", c.traces.packets);
    o.boolean("transmissions", c.traces.transmissions);
  });
  r.finish();
  c.evaluate.a2c_checkpoint = resolve(c.evaluate.a2c_checkpoint, base_dir);
  c.evaluate.drqn_checkpoint = resolve(c.evaluate.drqn_checkpoint, base_dir);
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment},
          {"seed", c.seed},
          {"workers", c.workers},
          {"scenario", to_json(c.scenario)},
          {"a2c", a2c_json(c.a2c)},
          {"drqn", drqn_json(c.drqn)},
          {"evaluate",
           {{"episodes", c.evaluate.episodes},
            {"schemes", c.evaluate.schemes},
            {"a2c_checkpoint", c.evaluate.a2c_checkpoint},
            {"drqn_checkpoint", c.evaluate.drqn_checkpoint},
            {"greedy", c.evaluate.greedy},
            {"random_mode", c.evaluate.random_mode},
            {"epoch_csv", c.evaluate.epoch_csv}}},
          {"density_sweep",
           {{"vue_counts", c.sweep.vue_counts},
            {"schemes", c.sweep.schemes},
            {"seeds", c.sweep.seeds},
            {"episodes", c.sweep.episodes},
            {"random_mode", c.sweep.random_mode}}},
          {"gradients",
           {{"toy_nets", c.gradients.toy_nets}, {"window", c.gradients.window}, {"pg_episodes", c.gradients.pg_episodes}}},
          {"traces", {{"packets", c.traces.packets}, {"transmissions", c.traces.transmissions}}}};
}

ExperimentConfig load_experiment(const fs::path& path) {
  const std::string text = read_text_file(path);
  const json j = parse_json_text(text, path.string());
  try {
    return experiment_from_json(j, path.parent_path());
  } catch (const SchemaError& e) {
    throw ConfigError(fmt::format("{}:{}: {}", path.string(), line_of_pointer(text, e.pointer()), e.what()));
  }
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.scenario.validate();
  Artifacts art(out_dir);
  const Seeds seeds(cfg.seed);
  RunOutcome outcome;
  try {
    if (cfg.experiment == "train-a2c") {
      ExperimentConfig c = cfg;
      c.evaluate.a2c_checkpoint.clear();
      obtain_a2c(c, seeds, art);
    } else if (cfg.experiment == "train-drqn") {
      ExperimentConfig c = cfg;
      c.evaluate.drqn_checkpoint.clear();
      obtain_drqn(c, seeds, art);
    } else if (cfg.experiment == "evaluate") {
      run_evaluate(cfg, seeds, art);
    } else if (cfg.experiment == "density-sweep") {
      run_sweep(cfg, seeds, art);
    } else if (cfg.experiment == "validate-gradients") {
      run_gradients(cfg, seeds, art);
    } else {
      throw ConfigError(fmt::format("unknown experiment '{}'", cfg.experiment));
    }
  } catch (const std::exception& e) {
    outcome.partial = true;
    outcome.exit_code = 3;
    outcome.error = e.what();
  }
  json manifest{{"experiment", cfg.experiment},
                {"status", outcome.partial ? "partial" : "complete"},
                {"config", to_json(cfg)},
                {"seeds", seeds.to_json()},
                {"files", art.files()}};
  if (outcome.partial) manifest["error"] = outcome.error;
  art.write("manifest.json", manifest.dump(2) + "\n");
  outcome.files = art.files();
  return outcome;
}

std::string fingerprint(const Scenario& scenario, std::uint64_t eval_seed, int episodes) {
  const std::string text = fmt::format("{}|{}|{}", to_json(scenario).dump(), eval_seed, episodes);
  return fmt::format("{:016x}", mix64(fnv1a(text)));
}

std::vector<SchemeSummary> compare_schemes(const std::vector<SchemeResults>& results) {
  const SchemeResults* random = nullptr;
  const SchemeResults* drqn = nullptr;
  for (const auto& r : results) {
    if (r.fingerprint != results.front().fingerprint)
      throw ConfigError(fmt::format("refusing to compare: '{}' has fingerprint {}, '{}' has {}", r.scheme,
                                    r.fingerprint, results.front().scheme, results.front().fingerprint));
    if (r.slice_names != results.front().slice_names)
      throw ConfigError(fmt::format("refusing to compare: '{}' has different slices", r.scheme));
    if (r.episodes.size() < 2) throw ConfigError(fmt::format("'{}' needs at least two episodes", r.scheme));
    if (r.scheme == "random") random = &r;
    if (r.scheme == "drqn") drqn = &r;
  }
  if (!random) throw ConfigError("comparison requires a 'random' control scheme");

  auto rewards = [](const SchemeResults& r) {
    std::vector<double> v;
    for (const auto& e : r.episodes) v.push_back(e.mean_reward);
    return v;
  };
  const auto rr = rewards(*random);
  const double random_mean = stats::mean(rr);
  const double drqn_mean = drqn ? stats::mean(rewards(*drqn)) : std::numeric_limits<double>::quiet_NaN();

  std::vector<SchemeSummary> out;
  for (const auto& r : results) {
    SchemeSummary s;
    s.scheme = r.scheme;
    s.slice_names = r.slice_names;
    s.episodes = r.episodes.size();
    const auto v = rewards(r);
    s.mean_reward = stats::mean(v);
    s.std_reward = std::sqrt(stats::variance(v));
    const std::size_t slices = r.slice_names.size();
    s.pdr.assign(slices, 0.0);
    s.delay.assign(slices, 0.0);
    for (const auto& e : r.episodes)
      for (std::size_t n = 0; n < slices; ++n) {
        s.pdr[n] += e.pdr[n] / static_cast<double>(s.episodes);
        s.delay[n] += e.delay[n] / static_cast<double>(s.episodes);
      }
    s.improvement_vs_random = 100.0 * (s.mean_reward - random_mean) / std::abs(random_mean);
    s.improvement_vs_drqn = drqn ? 100.0 * (s.mean_reward - drqn_mean) / std::abs(drqn_mean)
                                 : std::numeric_limits<double>::quiet_NaN();
    s.p_vs_random = stats::welch(v, rr).p_greater;
    out.push_back(std::move(s));
  }
  return out;
}

std::string episodes_csv(const std::vector<SchemeResults>& results) {
  if (results.empty()) return "scheme,fingerprint,episode,mean_reward\n";
  std::string out = "scheme,fingerprint,episode,mean_reward";
  for (const auto& n : results.front().slice_names) out += ",pdr_" + n;
  for (const auto& n : results.front().slice_names) out += ",delay_" + n;
  out += "\n";
  for (const auto& r : results)
    for (const auto& e : r.episodes) {
      out += fmt::format("{},{},{},{}", r.scheme, r.fingerprint, e.episode, num(e.mean_reward));
      for (double x : e.pdr) out += "," + num(x);
      for (double x : e.delay) out += "," + num(x);
      out += "\n";
    }
  return out;
}

std::vector<SchemeResults> parse_episodes_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("episodes CSV is empty");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "scheme" || header[1] != "fingerprint" || header[2] != "episode" ||
      header[3] != "mean_reward")
    throw ConfigError("episodes CSV: unexpected header");
  std::vector<std::string> names;
  for (std::size_t i = 4; i < header.size(); ++i) {
    if (header[i].rfind("pdr_", 0) != 0) break;
    names.push_back(header[i].substr(4));
  }
  if (header.size() != 4 + 2 * names.size()) throw ConfigError("episodes CSV: unexpected header");
  for (std::size_t n = 0; n < names.size(); ++n)
    if (header[4 + names.size() + n] != "delay_" + names[n]) throw ConfigError("episodes CSV: unexpected header");

  std::vector<SchemeResults> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw ConfigError(fmt::format("episodes CSV line {}: wrong field count", lineno));
    try {
      EpisodeSummary e;
      e.episode = std::stoi(f[2]);
      e.mean_reward = parse_double(f[3]);
      for (std::size_t n = 0; n < names.size(); ++n) {
        e.pdr.push_back(parse_double(f[4 + n]));
        e.delay.push_back(parse_double(f[4 + names.size() + n]));
      }
      auto it = std::find_if(out.begin(), out.end(), [&](const SchemeResults& r) { return r.scheme == f[0]; });
      if (it == out.end()) {
        out.push_back({f[0], f[1], names, {}});
        it = out.end() - 1;
      } else if (it->fingerprint != f[1]) {
        throw ConfigError(fmt::format("episodes CSV line {}: scheme '{}' mixes fingerprints", lineno, f[0]));
      }
      it->episodes.push_back(std::move(e));
    } catch (const std::invalid_argument&) {
      throw ConfigError(fmt::format("episodes CSV line {}: malformed number", lineno));
    } catch (const std::out_of_range&) {
      throw ConfigError(fmt::format("episodes CSV line {}: number out of range", lineno));
    }
  }
  return out;
}

std::string summary_csv(const std::vector<SchemeSummary>& rows) {
  std::string out = "scheme,episodes,mean_reward,std_reward";
  if (!rows.empty()) {
    for (const auto& n : rows.front().slice_names) out += ",pdr_" + n;
    for (const auto& n : rows.front().slice_names) out += ",delay_" + n;
  }
  out += ",improvement_vs_random_pct,improvement_vs_drqn_pct,p_vs_random\n";
  for (const auto& s : rows) {
    out += fmt::format("{},{},{},{}", s.scheme, s.episodes, num(s.mean_reward), num(s.std_reward));
    for (double x : s.pdr) out += "," + num(x);
    for (double x : s.delay) out += "," + num(x);
    out += fmt::format(",{},{},{}\n", num(s.improvement_vs_random), num(s.improvement_vs_drqn), num(s.p_vs_random));
  }
  return out;
}

std::string reward_cdf_csv(const std::vector<SchemeResults>& results) {
  std::string out = "scheme,value,cumulative_fraction\n";
  for (const auto& r : results) {
    std::vector<double> v;
    for (const auto& e : r.episodes) v.push_back(e.mean_reward);
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i + 1 < v.size() && v[i + 1] == v[i]) continue;  // one row per distinct value
      out += fmt::format("{},{},{}\n", r.scheme, num(v[i]),
                         num(static_cast<double>(i + 1) / static_cast<double>(v.size())));
    }
  }
  return out;
}

std::string curve_csv_header(const std::vector<std::string>& names) {
  std::string out = "iteration,critic_loss,actor_loss,mean_reward";
  for (const auto& n : names) out += ",pdr_" + n;
  for (const auto& n : names) out += ",delay_" + n;
  return out + "\n";
}

std::string curve_csv_row(const CurveRow& row) {
  std::string out = fmt::format("{},{},{},{}", row.iteration, num(row.critic_loss), num(row.actor_loss),
                                num(row.mean_reward));
  for (double x : row.pdr) out += "," + num(x);
  for (double x : row.delay) out += "," + num(x);
  return out + "\n";
}

}  // namespace v2xslice
