// Acceptance checks. Run with --criterion N (1-8) or without arguments for all.
// Each criterion prints detail lines followed by exactly one PASS/FAIL line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "v2xslice/drl.hpp"
#include "v2xslice/env.hpp"
#include "v2xslice/experiment.hpp"
#include "v2xslice/simulator.hpp"
#include "v2xslice/validation.hpp"

namespace fs = std::filesystem;
using namespace v2xslice;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void detail(const std::string& s) { std::cout << "  " << s << "\n"; }

bool verdict(int id, const std::string& name, bool ok, const std::string& summary) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << summary << std::endl;
  return ok;
}

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("v2xslice_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing CSV column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

Csv read_csv(const fs::path& p) {
  Csv csv;
  std::istringstream in(slurp(p));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (first) {
      csv.header = f;
      first = false;
    } else {
      csv.rows.push_back(f);
    }
  }
  return csv;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// ---------------------------------------------------------------- 1

bool criterion_gradient() {
  const auto t0 = Clock::now();
  const int nets = 25;
  std::size_t components = 0, failures = 0;
  double worst = 0.0;
  for (int n = 0; n < nets; ++n) {
    RecurrentNet net = random_toy_net(derive_seed(2024, "acceptance.toy", {static_cast<std::uint64_t>(n)}));
    const auto& cfg = net.config();
    Engine rng = make_engine(derive_seed(2024, "acceptance.window", {static_cast<std::uint64_t>(n)}));
    Mat x(5, cfg.input_dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * uniform01(rng) - 1.0;
    std::vector<Vec> proj;
    for (const auto& h : cfg.heads) {
      Vec c(h.outputs);
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = 2.0 * uniform01(rng) - 1.0;
      proj.push_back(c);
    }
    auto loss = [&] {
      const auto f = net.forward(x);
      double l = 0.0;
      for (std::size_t h = 0; h < proj.size(); ++h) l += proj[h].dot(f.outputs[h]);
      return l;
    };
    Vec g = Vec::Zero(net.params().values.size());
    net.backward(net.forward(x), proj, g);
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      double& p = net.params().values[i];
      const double keep = p;
      p = keep + step;
      const double up = loss();
      p = keep - step;
      const double down = loss();
      p = keep;
      const double fd = (up - down) / (2.0 * step);
      const double scale = std::max(std::abs(fd), std::abs(g[i]));
      ++components;
      if (std::abs(fd - g[i]) > std::max(1e-4 * scale, 1e-7)) ++failures;
      if (scale > 1e-7) worst = std::max(worst, std::abs(fd - g[i]) / scale);
    }
    if (n < 3)
      detail(fmt::format("net {}: input {}, lstm {}, {} activation, {} params", n, cfg.input_dim, cfg.lstm_units,
                         to_string(cfg.lstm_activation), g.size()));
  }
  const double secs = seconds_since(t0);
  detail(fmt::format("{} networks, {} components, {} failures, max relative error {:.3g}, {:.1f} s", nets, components,
                     failures, worst, secs));
  return verdict(1, "gradient_correctness", failures == 0 && secs < 60.0,
                 fmt::format("{} / {} components outside tolerance, {:.1f} s", failures, components, secs));
}

// ---------------------------------------------------------------- 2

bool criterion_delay_law() {
  const auto t0 = Clock::now();
  const int slices = 10;
  const Slot sw = 20;
  Scenario sc = default_scenario();
  sc.name = "delay-law";
  sc.vue_count = slices;  // one VUE per slice: each senses only noise
  sc.churn = 0.0;
  sc.epoch_slots = 1000;
  sc.mac.counter_min = 1;
  sc.mac.counter_max = 1;
  sc.mac.p_res = 1.0;
  sc.total_bandwidth = 0;
  SliceScenario base = sc.slices.front();
  sc.slices.clear();
  for (int n = 0; n < slices; ++n) {
    SliceScenario s = base;
    s.spec.name = fmt::format("s{}", n);
    s.spec.packet_period = 20;
    s.share = 1.0 / slices;
    s.grid = SliceGrid{{2}, {1'000'000}, {sw}};
    sc.total_bandwidth += 2'000'000;
    sc.slices.push_back(s);
  }
  sc.default_action = 0;
  sc.validate();

  std::vector<std::int64_t> counts(static_cast<std::size_t>(sw), 0);
  std::int64_t out_of_range = 0, dropped = 0, packets = 0;
  Simulator sim(sc, 99);
  SimHooks hooks;
  hooks.on_packet = [&](const PacketRecord& r) {
    ++packets;
    if (r.dropped) {
      ++dropped;
    } else if (r.delay < 1 || r.delay > sw) {
      ++out_of_range;
    } else {
      ++counts[static_cast<std::size_t>(r.delay - 1)];
    }
  };
  sim.set_hooks(hooks);
  const SliceConfig cfg = sc.action_space().at(0);
  while (packets < 12000) {
    sim.begin_epoch(cfg);
    for (Slot t = 0; t < sc.epoch_slots; ++t) sim.step_slot();
    sim.end_epoch();
  }

  std::int64_t n = 0;
  for (auto c : counts) n += c;
  const double expected = static_cast<double>(n) / static_cast<double>(sw);
  double chi2 = 0.0;
  for (auto c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  const boost::math::chi_squared dist(static_cast<double>(sw - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  const double secs = seconds_since(t0);
  std::string hist;
  for (auto c : counts) hist += fmt::format(" {}", c);
  detail(fmt::format("delay counts for 1..{}:{}", sw, hist));
  detail(fmt::format("{} scored packets, {} dropped, {} outside [1, {}], chi2 {:.2f} on {} df, {:.1f} s", n, dropped,
                     out_of_range, sw, chi2, sw - 1, secs));
  const bool ok = n >= 10000 && out_of_range == 0 && p > 0.01 && secs < 120.0;
  return verdict(2, "delay_law", ok, fmt::format("chi-square p = {:.4f} over {} packets", p, n));
}

// ---------------------------------------------------------------- 3

bool criterion_occupancy() {
  Scenario sc = default_scenario();
  sc.epoch_slots = 400;
  const ActionSpace space = sc.action_space();
  Simulator sim(sc, 5);

  std::map<std::pair<Slot, int>, std::pair<double, int>> reported;  // (slot, slice) -> (x, F)
  std::map<std::pair<Slot, int>, std::set<int>> used;
  SimHooks hooks;
  hooks.on_slot = [&](Slot t, int slice, int f, std::span<const SubchannelUse>, double x) {
    reported[{t, slice}] = {x, f};
  };
  hooks.on_transmission = [&](Slot t, int slice, int sub, VueId, double, double) { used[{t, slice}].insert(sub); };
  sim.set_hooks(hooks);
  Engine rng = make_engine(17);
  for (int e = 0; e < 6; ++e) {
    sim.begin_epoch(space.at(static_cast<std::size_t>(uniform_index(rng, space.size()))));
    for (Slot t = 0; t < sc.epoch_slots; ++t) sim.step_slot();
    sim.end_epoch();
  }

  std::vector<std::pair<Slot, int>> keys;
  for (const auto& [k, v] : reported) keys.push_back(k);
  int mismatches = 0, busy = 0;
  const int samples = 1000;
  for (int i = 0; i < samples; ++i) {
    const auto key = keys[static_cast<std::size_t>(uniform_index(rng, keys.size()))];
    const auto [x, f] = reported[key];
    const auto it = used.find(key);
    const std::size_t distinct = it == used.end() ? 0 : it->second.size();
    const double brute = static_cast<double>(distinct) / static_cast<double>(f);
    if (distinct > 0) ++busy;
    if (x != brute) {
      if (mismatches < 5) detail(fmt::format("slot {} slice {}: incremental {} vs recount {}", key.first, key.second, x, brute));
      ++mismatches;
    }
  }
  detail(fmt::format("{} (slot, slice) cells recorded, {} sampled, {} with transmissions", keys.size(), samples, busy));
  return verdict(3, "occupancy_oracle", mismatches == 0 && busy > 0,
                 fmt::format("{} mismatches on {} random slots", mismatches, samples));
}

// ---------------------------------------------------------------- 4

double closed_form(double x, double lo, double hi) {
  if (x < lo) return 1.0;
  if (x >= hi) return 0.0;
  return (hi - x) / (hi - lo);
}

bool criterion_utility() {
  int mismatches = 0, low = 0, high = 0, mid = 0;
  const SliceSpec spec = default_scenario().slices.front().spec;
  struct Case {
    const char* name;
    double lo, hi, span_lo, span_hi;
    std::function<double(double)> f;
  };
  const std::vector<Case> cases{
      {"utility_pdr", spec.pdr_min, spec.pdr_max, 0.0, 1.0,
       [&](double x) { return utility_pdr(x, spec.pdr_min, spec.pdr_max); }},
      {"utility_delay", spec.delay_min, spec.delay_max, 0.0, 2.0 * spec.delay_max,
       [&](double x) { return utility_delay(x, spec.delay_min, spec.delay_max); }},
  };
  for (const auto& c : cases) {
    for (int i = 0; i < 1000; ++i) {
      const double x = c.span_lo + (c.span_hi - c.span_lo) * i / 999.0;
      const double want = closed_form(x, c.lo, c.hi);
      if (x < c.lo) ++low;
      else if (x >= c.hi) ++high;
      else ++mid;
      if (c.f(x) != want) {
        if (mismatches < 5) detail(fmt::format("{}({}) = {} expected {}", c.name, x, c.f(x), want));
        ++mismatches;
      }
    }
    // the breakpoints themselves
    for (double x : {c.lo, c.hi, std::nextafter(c.lo, -1.0), std::nextafter(c.hi, -1.0)})
      if (c.f(x) != closed_form(x, c.lo, c.hi)) ++mismatches;
  }
  detail(fmt::format("grid points: {} below the lower threshold, {} on the slope, {} saturated at 0", low, mid, high));
  return verdict(4, "utility_functions", mismatches == 0 && low > 0 && high > 0 && mid > 0,
                 fmt::format("{} mismatches over 2000 grid points and 8 breakpoints", mismatches));
}

// ---------------------------------------------------------------- 5

Vec policy_probs(const Vec& theta, int o, int actions) {
  Vec l = theta.segment(o * actions, actions);
  l.array() -= l.maxCoeff();
  Vec e = l.array().exp();
  return e / e.sum();
}

double enumerate_objective(const SyntheticPomdp& m, const Vec& theta) {
  double j = 0.0;
  std::function<void(int, int, double, double)> walk = [&](int k, int s, double prob, double ret) {
    // state s at step k has already been drawn with probability `prob`
    for (int o = 0; o < m.observations; ++o) {
      const Vec pi = policy_probs(theta, o, m.actions);
      for (int a = 0; a < m.actions; ++a) {
        const double p = prob * m.O(s, o) * pi[a];
        const double r = ret + std::pow(m.lambda, k) * m.R(s, a);
        if (k + 1 == m.horizon) {
          j += p * r;
        } else {
          for (int s2 = 0; s2 < m.states; ++s2) walk(k + 1, s2, p * m.T(s, a, s2), r);
        }
      }
    }
  };
  for (int s = 0; s < m.states; ++s) walk(0, s, m.initial[static_cast<std::size_t>(s)], 0.0);
  return j;
}

bool criterion_policy_gradient() {
  const auto t0 = Clock::now();
  SyntheticPomdp m = default_synthetic_pomdp();
  Engine trng = make_engine(derive_seed(31, "acceptance.theta"));
  Vec theta(m.observations * m.actions);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = 2.0 * uniform01(trng) - 1.0;

  Vec fd(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vec up = theta, down = theta;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    fd[i] = (enumerate_objective(m, up) - enumerate_objective(m, down)) / 2e-5;
  }

  const int episodes = 10000;
  auto run = [&](const SyntheticPomdp& model, std::uint64_t seed) {
    const auto baseline = exact_observation_baseline(model, theta);
    Engine rng = make_engine(seed);
    std::vector<Vec> adv, raw, base;
    for (int e = 0; e < episodes; ++e) {
      const SyntheticEpisode ep = sample_synthetic_episode(model, theta, rng);
      adv.push_back(episode_gradient(model, theta, ep, baseline));
      raw.push_back(episode_gradient(model, theta, ep, {}));
      // baseline term sum_k lambda^k b_k(o_k) grad log pi(a_k | o_k), computed here
      Vec b = Vec::Zero(theta.size());
      for (std::size_t k = 0; k < ep.actions.size(); ++k) {
        const int o = ep.observations[k], a = ep.actions[k];
        const Vec pi = policy_probs(theta, o, model.actions);
        const double w = std::pow(model.lambda, static_cast<double>(k)) * baseline[k][static_cast<std::size_t>(o)];
        for (int j = 0; j < model.actions; ++j) b[o * model.actions + j] += w * ((j == a ? 1.0 : 0.0) - pi[j]);
      }
      base.push_back(b);
    }
    return std::make_tuple(adv, raw, base);
  };
  auto moments = [&](const std::vector<Vec>& xs) {
    Vec mean = Vec::Zero(theta.size()), var = Vec::Zero(theta.size());
    for (const auto& x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    for (const auto& x : xs) var.array() += (x - mean).array().square();
    var /= static_cast<double>(xs.size() - 1);
    return std::make_pair(mean, var);
  };

  const auto [adv, raw, base] = run(m, derive_seed(31, "acceptance.pg"));
  const auto [mc, mc_var] = moments(adv);
  const auto [bm, b_var] = moments(base);
  int checked = 0, bad = 0;
  double worst_rel = 0.0, worst_z = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double se = std::sqrt(mc_var[i] / episodes);
    const double bse = std::sqrt(b_var[i] / episodes);
    if (bse > 0.0) worst_z = std::max(worst_z, std::abs(bm[i]) / bse);
    detail(fmt::format("theta[{}]: fd {:+.5f}  mc {:+.5f} (se {:.5f})  baseline term {:+.5f} (se {:.5f})", i, fd[i],
                       mc[i], se, bm[i], bse));
    if (std::abs(fd[i]) <= 3.0 * se) continue;
    ++checked;
    const double rel = std::abs(mc[i] - fd[i]) / std::abs(fd[i]);
    worst_rel = std::max(worst_rel, rel);
    if (rel > 0.10) ++bad;
  }

  SyntheticPomdp offset = m;
  offset.reward_offset = 100.0;
  const auto [adv_o, raw_o, base_o] = run(offset, derive_seed(31, "acceptance.pg.offset"));
  const double var_adv = moments(adv_o).second.sum(), var_raw = moments(raw_o).second.sum();
  const double secs = seconds_since(t0);
  detail(fmt::format("{} components above the noise floor, worst relative error {:.4f}", checked, worst_rel));
  detail(fmt::format("baseline term: largest |mean| / se = {:.2f}", worst_z));
  detail(fmt::format("reward offset +100: total variance {:.4g} with advantages vs {:.4g} with raw returns", var_adv,
                     var_raw));
  const bool ok = checked > 0 && bad == 0 && worst_z <= 3.0 && var_adv < var_raw && secs < 300.0;
  return verdict(5, "policy_gradient_validity", ok,
                 fmt::format("max rel err {:.4f} on {} components, baseline z {:.2f}, variance {:.3g} < {:.3g}, {:.1f} s",
                             worst_rel, checked, worst_z, var_adv, var_raw, secs));
}

// ---------------------------------------------------------------- 6

std::map<std::string, std::vector<double>> rewards_by_scheme(const fs::path& episodes_csv) {
  const Csv csv = read_csv(episodes_csv);
  std::map<std::string, std::vector<double>> out;
  const std::size_t s = csv.col("scheme"), r = csv.col("mean_reward");
  for (const auto& row : csv.rows) out[row[s]].push_back(std::stod(row[r]));
  return out;
}

double welch_p_greater(const std::vector<double>& a, const std::vector<double>& b) {
  const double va = var_of(a) / a.size(), vb = var_of(b) / b.size();
  const double t = (mean_of(a) - mean_of(b)) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) / (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));
  return boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
}

bool criterion_learning() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = load_experiment(fs::path(V2XSLICE_SOURCE_DIR) / "configs" / "desk.json");
  cfg.experiment = "evaluate";
  cfg.evaluate.schemes = {"a2c", "drqn", "random"};
  cfg.evaluate.random_mode = "fixed";
  cfg.evaluate.a2c_checkpoint.clear();
  cfg.evaluate.drqn_checkpoint.clear();
  detail(fmt::format("scenario {}: {} VUEs, {} slices, LSTM {}, {} iterations x {} episodes, {} evaluation episodes",
                     cfg.scenario.name, cfg.scenario.vue_count, cfg.scenario.slices.size(), cfg.a2c.lstm_units,
                     cfg.a2c.iterations, cfg.a2c.batch, cfg.evaluate.episodes));
  const fs::path dir = work_dir("learning");
  const RunOutcome run = run_experiment(cfg, dir);
  if (run.exit_code != 0) return verdict(6, "learning_beats_control", false, "run failed: " + run.error);

  const Csv curve = read_csv(dir / "curve.csv");
  std::vector<double> loss;
  for (const auto& row : curve.rows) loss.push_back(std::stod(row[curve.col("critic_loss")]));
  const std::size_t tenth = std::max<std::size_t>(1, loss.size() / 10);
  const double first = mean_of({loss.begin(), loss.begin() + static_cast<std::ptrdiff_t>(tenth)});
  const double last = mean_of({loss.end() - static_cast<std::ptrdiff_t>(tenth), loss.end()});
  const bool a_ok = cfg.a2c.iterations >= 300 && loss.size() >= 300 && last < first;
  detail(fmt::format("(a) critic loss: first 10% mean {:.5g}, final 10% mean {:.5g} over {} iterations", first, last,
                     loss.size()));

  auto r = rewards_by_scheme(dir / "episodes.csv");
  const auto& a2c = r["a2c"];
  const auto& drqn = r["drqn"];
  const auto& rnd = r["random"];
  const double p = welch_p_greater(a2c, rnd);
  const bool b_ok = a2c.size() >= 100 && rnd.size() >= 100 && mean_of(a2c) > mean_of(rnd) && p < 0.01;
  detail(fmt::format("(b) mean episode reward: a2c {:.4f}, drqn {:.4f}, random {:.4f}; Welch p(a2c > random) = {:.3g}",
                     mean_of(a2c), mean_of(drqn), mean_of(rnd), p));
  const bool order_ok = mean_of(a2c) >= mean_of(drqn) && mean_of(drqn) >= mean_of(rnd);
  detail(fmt::format("ordering a2c >= drqn >= random on matched seeds: {}", order_ok ? "holds" : "violated"));
  detail(fmt::format("{:.0f} s", seconds_since(t0)));
  return verdict(6, "learning_beats_control", a_ok && b_ok && order_ok,
                 fmt::format("loss trend {}, a2c > random {} (p = {:.3g}), ordering {}", a_ok ? "ok" : "not decreasing",
                             b_ok ? "significant" : "not significant", p, order_ok ? "ok" : "violated"));
}

// ---------------------------------------------------------------- 7

struct RankTest {
  double rho = 0.0;
  double p_greater = 1.0;
};

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

RankTest rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  RankTest out;
  if (sxx == 0.0 || syy == 0.0) return out;
  out.rho = sxy / std::sqrt(sxx * syy);
  const double n = static_cast<double>(x.size());
  if (std::abs(out.rho) >= 1.0) {
    out.p_greater = out.rho > 0 ? 0.0 : 1.0;
    return out;
  }
  const double t = out.rho * std::sqrt((n - 2.0) / (1.0 - out.rho * out.rho));
  out.p_greater = boost::math::cdf(boost::math::complement(boost::math::students_t(n - 2.0), t));
  return out;
}

bool criterion_density() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = load_experiment(fs::path(V2XSLICE_SOURCE_DIR) / "configs" / "desk.json");
  cfg.experiment = "density-sweep";
  cfg.sweep.vue_counts = {10, 20, 40};
  cfg.sweep.schemes = {"random"};
  cfg.sweep.random_mode = "fixed";
  const fs::path dir = work_dir("density");
  const RunOutcome run = run_experiment(cfg, dir);
  if (run.exit_code != 0) return verdict(7, "density_trend", false, "run failed: " + run.error);

  const Csv csv = read_csv(dir / "density.csv");
  std::vector<std::string> names;
  for (const auto& sl : cfg.scenario.slices) names.push_back(sl.spec.name);
  bool ok = true;
  std::string summary;
  for (const auto& name : names)
    for (const std::string metric : {"pdr", "delay"}) {
      std::vector<double> x, y;
      std::map<int, std::vector<double>> by_density;
      for (const auto& row : csv.rows) {
        const int n = std::stoi(row[csv.col("vue_count")]);
        const double v = std::stod(row[csv.col(metric + "_" + name)]);
        x.push_back(n);
        y.push_back(v);
        by_density[n].push_back(v);
      }
      const RankTest t = rank_correlation(x, y);
      std::string means;
      for (const auto& [n, v] : by_density) means += fmt::format(" {}:{:.4g}", n, mean_of(v));
      const bool good = t.rho > 0.0 && t.p_greater < 0.05;
      ok = ok && good;
      detail(fmt::format("{} {}: means by VUE count{}; Spearman rho {:+.3f}, one-sided p {:.3g} over {} points -> {}",
                         name, metric, means, t.rho, t.p_greater, x.size(), good ? "ok" : "no increasing trend"));
      summary += fmt::format("{}/{} rho {:+.2f} ", name, metric, t.rho);
    }
  detail(fmt::format("{:.0f} s", seconds_since(t0)));
  return verdict(7, "density_trend", ok, summary);
}

// ---------------------------------------------------------------- 8

bool criterion_determinism() {
  ExperimentConfig base = load_experiment(fs::path(V2XSLICE_SOURCE_DIR) / "configs" / "desk.json");
  base.seed = 11;
  base.scenario.vue_count = 12;
  base.scenario.episode_epochs = 4;
  base.a2c.iterations = 4;
  base.a2c.batch = 3;
  base.drqn.episodes = 4;
  base.evaluate.episodes = 6;
  base.sweep.vue_counts = {6, 12};
  base.sweep.seeds = 2;
  base.gradients.toy_nets = 3;
  base.gradients.pg_episodes = 500;
  base.traces.packets = true;
  base.traces.transmissions = true;

  bool ok = true;
  std::size_t compared = 0;
  for (const char* experiment : kExperiments) {
    ExperimentConfig cfg = base;
    cfg.experiment = experiment;
    const fs::path a = work_dir(std::string("determinism_a_") + experiment);
    const fs::path b = work_dir(std::string("determinism_b_") + experiment);
    const RunOutcome ra = run_experiment(cfg, a);
    const RunOutcome rb = run_experiment(cfg, b);
    bool same = ra.exit_code == 0 && rb.exit_code == 0 && ra.files == rb.files;
    std::size_t bytes = 0;
    for (const auto& f : ra.files) {
      const std::string x = slurp(a / f), y = slurp(b / f);
      bytes += x.size();
      ++compared;
      if (x != y) {
        same = false;
        detail(fmt::format("{}: {} differs", experiment, f));
      }
    }
    detail(fmt::format("{}: {} files, {} bytes, {}", experiment, ra.files.size(), bytes,
                       same ? "byte-identical" : "DIFFERENT"));
    ok = ok && same;
  }
  return verdict(8, "determinism", ok, fmt::format("{} output files compared across reruns", compared));
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: " << argv[0] << " [--criterion N]...\n";
      return 2;
    }
  }
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};
  const std::map<int, std::function<bool()>> criteria{
      {1, criterion_gradient},   {2, criterion_delay_law},       {3, criterion_occupancy},
      {4, criterion_utility},    {5, criterion_policy_gradient}, {6, criterion_learning},
      {7, criterion_density},    {8, criterion_determinism}};
  bool all = true;
  for (int id : which) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    try {
      all = it->second() && all;
    } catch (const std::exception& e) {
      verdict(id, "error", false, e.what());
      all = false;
    }
  }
  return all ? 0 : 1;
}
