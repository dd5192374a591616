#include "v2xslice/drl.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace v2xslice {

namespace {

int sample_categorical(const Vec& p, Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

int argmax(const Vec& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

void require_finite(const Vec& params, const char* what, int iteration) {
  if (!params.allFinite())
    throw DivergenceError(fmt::format("{}: non-finite parameters after iteration {}", what, iteration));
}

}  // namespace

Mat window_matrix(const HistoryWindow& w) {
  Mat m(static_cast<Eigen::Index>(w.length()), static_cast<Eigen::Index>(w.dim()));
  for (std::size_t i = 0; i < w.length(); ++i) {
    const auto row = w.row(i);
    for (std::size_t j = 0; j < w.dim(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

ActorCriticPolicy::ActorCriticPolicy(const RecurrentNet& net, bool greedy)
    : net_(net), actor_(net.head_index("actor")), critic_(net.head_index("critic")), greedy_(greedy) {}

Decision ActorCriticPolicy::act(const Mat& window, Engine& rng) {
  const auto f = net_.forward(window);
  const Vec p = softmax(f.outputs[actor_]);
  const int a = greedy_ ? argmax(p) : sample_categorical(p, rng);
  return Decision{a, std::log(p[a]), f.outputs[critic_][0]};
}

void RandomPolicy::begin_episode(Engine& rng) { fixed_ = static_cast<std::size_t>(uniform_index(rng, actions_)); }

Decision RandomPolicy::act(const Mat&, Engine& rng) {
  const std::size_t a = mode_ == Mode::kFixedPerEpisode ? fixed_ : static_cast<std::size_t>(uniform_index(rng, actions_));
  const double lp = mode_ == Mode::kFixedPerEpisode ? 0.0 : -std::log(static_cast<double>(actions_));
  return Decision{static_cast<int>(a), lp, 0.0};
}

Decision QPolicy::act(const Mat& window, Engine& rng) {
  const Vec q = net_.head_output(window, "q");
  const auto n = static_cast<std::uint64_t>(q.size());
  const bool explore = uniform01(rng) < epsilon_;
  const int a = explore ? static_cast<int>(uniform_index(rng, n)) : argmax(q);
  const double greedy_p = 1.0 - epsilon_ + epsilon_ / static_cast<double>(n);
  const double p = a == argmax(q) ? greedy_p : epsilon_ / static_cast<double>(n);
  return Decision{a, std::log(p), q[a]};
}

double Trajectory::mean_reward() const {
  if (steps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& st : steps) s += st.reward;
  return s / static_cast<double>(steps.size());
}

void finish_trajectory(Trajectory& traj, double lambda) {
  std::vector<double> r;
  r.reserve(traj.steps.size());
  for (const auto& s : traj.steps) r.push_back(s.reward);
  const auto g = discounted_returns(r, lambda);
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    traj.steps[k].ret = g[k];
    traj.steps[k].advantage = g[k] - traj.steps[k].value;
  }
}

Trajectory collect_episode(Environment& env, Policy& policy, std::size_t history, std::uint64_t env_seed, Engine& rng,
                           double lambda) {
  Trajectory traj;
  HistoryWindow hw(history, env.observation_dim());
  hw.push(env.vectorize(env.reset(env_seed)).values);
  policy.begin_episode(rng);
  while (!env.done()) {
    TrajectoryStep s;
    s.window = window_matrix(hw);
    const Decision d = policy.act(s.window, rng);
    EpochStep st = env.step(static_cast<std::size_t>(d.action));
    s.action = d.action;
    s.log_prob = d.log_prob;
    s.value = d.value;
    s.reward = st.reward;
    s.metrics = std::move(st.metrics);
    hw.push(env.vectorize(st.observation).values);
    traj.steps.push_back(std::move(s));
  }
  finish_trajectory(traj, lambda);
  return traj;
}

std::vector<double> policy_gradient_weights(const Trajectory& traj, double lambda, bool discount_weight) {
  std::vector<double> w;
  double scale = 1.0;
  for (const auto& s : traj.steps) {
    w.push_back((discount_weight ? scale : 1.0) * s.advantage);
    scale *= lambda;
  }
  return w;
}

void normalize_advantages(std::vector<Trajectory>& batch) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& t : batch)
    for (const auto& s : t.steps) {
      sum += s.advantage;
      sq += s.advantage * s.advantage;
      ++n;
    }
  if (n < 2) return;
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
  for (auto& t : batch)
    for (auto& s : t.steps) s.advantage = (s.advantage - mean) / (sd + 1e-8);
}

double critic_loss_grad(const RecurrentNet& net, const std::vector<Trajectory>& batch, Vec* grad) {
  const std::size_t critic = net.head_index("critic");
  std::size_t n = 0;
  for (const auto& t : batch) n += t.steps.size();
  if (n == 0) throw ContractViolation("critic update on an empty batch");
  double loss = 0.0;
  std::vector<Vec> d(net.config().heads.size());
  for (const auto& t : batch)
    for (const auto& s : t.steps) {
      const auto f = net.forward(s.window);
      const double err = f.outputs[critic][0] - s.ret;
      loss += 0.5 * err * err;
      if (grad) {
        d[critic] = Vec::Constant(1, err / static_cast<double>(n));
        net.backward(f, d, *grad);
      }
    }
  return loss / static_cast<double>(n);
}

double actor_loss_grad(const RecurrentNet& net, const std::vector<Trajectory>& batch, double lambda,
                       bool discount_weight, Vec* grad) {
  if (batch.empty()) throw ContractViolation("actor update on an empty batch");
  const std::size_t actor = net.head_index("actor");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  std::vector<Vec> d(net.config().heads.size());
  for (const auto& t : batch) {
    const auto w = policy_gradient_weights(t, lambda, discount_weight);
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      const auto& s = t.steps[k];
      const auto f = net.forward(s.window);
      const Vec& logits = f.outputs[actor];
      const double lp = std::log(softmax(logits)[s.action]);
      loss -= inv_b * w[k] * lp;
      if (grad && w[k] != 0.0) {
        d[actor] = -inv_b * w[k] * log_softmax_grad(logits, s.action);
        net.backward(f, d, *grad);
      }
    }
  }
  return loss;
}

double critic_update(RecurrentNet& net, const std::vector<Trajectory>& batch, Optimizer& opt) {
  Vec g = Vec::Zero(net.params().values.size());
  const double loss = critic_loss_grad(net, batch, &g);
  if (!std::isfinite(loss) || !g.allFinite())
    throw DivergenceError(fmt::format("critic loss or gradient is not finite (loss {})", loss));
  opt.descend(net.params().values, g);
  return loss;
}

double actor_update(RecurrentNet& net, const std::vector<Trajectory>& batch, Optimizer& opt, double lambda,
                    bool discount_weight) {
  Vec g = Vec::Zero(net.params().values.size());
  const double loss = actor_loss_grad(net, batch, lambda, discount_weight, &g);
  if (!std::isfinite(loss) || !g.allFinite())
    throw DivergenceError(fmt::format("actor pseudo-loss or gradient is not finite (loss {})", loss));
  opt.descend(net.params().values, g);
  return loss;
}

EpisodeSummary summarize(const Trajectory& traj, int episode) {
  EpisodeSummary e;
  e.episode = episode;
  e.mean_reward = traj.mean_reward();
  if (traj.steps.empty()) return e;
  const std::size_t slices = traj.steps.front().metrics.slices.size();
  std::vector<double> lost(slices, 0.0), delay(slices, 0.0), packets(slices, 0.0);
  for (const auto& s : traj.steps)
    for (std::size_t n = 0; n < slices; ++n) {
      const auto& m = s.metrics.slices[n];
      lost[n] += static_cast<double>(m.lost);
      delay[n] += m.avg_delay * static_cast<double>(m.packets);
      packets[n] += static_cast<double>(m.packets);
    }
  for (std::size_t n = 0; n < slices; ++n) {
    e.pdr.push_back(packets[n] > 0 ? lost[n] / packets[n] : 0.0);
    e.delay.push_back(packets[n] > 0 ? delay[n] / packets[n] : 0.0);
  }
  return e;
}

namespace {

CurveRow curve_row(int iteration, double lw, double lt, const std::vector<Trajectory>& batch) {
  CurveRow row{iteration, lw, lt, 0.0, {}, {}};
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto s = summarize(batch[b], 0);
    row.mean_reward += s.mean_reward / static_cast<double>(batch.size());
    if (row.pdr.empty()) {
      row.pdr.assign(s.pdr.size(), 0.0);
      row.delay.assign(s.delay.size(), 0.0);
    }
    for (std::size_t n = 0; n < s.pdr.size(); ++n) {
      row.pdr[n] += s.pdr[n] / static_cast<double>(batch.size());
      row.delay[n] += s.delay[n] / static_cast<double>(batch.size());
    }
  }
  return row;
}

}  // namespace

TrainResult train_a2c(const Scenario& scenario, const A2CConfig& cfg, std::uint64_t seed, const CurveSink& sink) {
  if (cfg.iterations < 0 || cfg.batch < 1 || cfg.history < 1 || cfg.workers < 1)
    throw ConfigError("a2c: need iterations >= 0, batch >= 1, history >= 1, workers >= 1");
  const ActionSpace space = scenario.action_space();
  const int dim = static_cast<int>(2 * scenario.slices.size());
  TrainResult result;
  result.net = RecurrentNet(
      actor_critic_config(dim, static_cast<int>(space.size()), cfg.lstm_units, cfg.hidden, cfg.activation));
  RecurrentNet& net = result.net;
  net.initialize(derive_seed(seed, "a2c.init"));
  Adam critic_opt(cfg.lr_critic, net.params().mask({"lstm", "critic"}));
  Adam actor_opt(cfg.lr_actor, net.params().mask({"lstm", "actor"}));

  const int workers = std::min(cfg.workers, cfg.batch);
  std::vector<Environment> envs;
  for (int w = 0; w < workers; ++w) envs.emplace_back(scenario);

  for (int it = 0; it < cfg.iterations; ++it) {
    const RecurrentNet frozen = net;
    std::vector<Trajectory> batch(static_cast<std::size_t>(cfg.batch));
    auto collect = [&](int w) {
      ActorCriticPolicy policy(frozen);
      for (int b = w; b < cfg.batch; b += workers) {
        const auto ub = static_cast<std::uint64_t>(b);
        const auto uit = static_cast<std::uint64_t>(it);
        Engine rng = make_engine(derive_seed(seed, "a2c.policy", {uit, ub}));
        batch[static_cast<std::size_t>(b)] = collect_episode(envs[static_cast<std::size_t>(w)], policy, cfg.history,
                                                             derive_seed(seed, "a2c.episode", {uit, ub}), rng,
                                                             cfg.lambda);
      }
    };
    if (workers == 1) {
      collect(0);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            collect(w);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    if (cfg.normalize_advantages) normalize_advantages(batch);

    CurveRow row;
    try {
      const double lw = critic_update(net, batch, critic_opt);
      const double lt = actor_update(net, batch, actor_opt, cfg.lambda, cfg.discount_weight);
      require_finite(net.params().values, "a2c", it);
      row = curve_row(it, lw, lt, batch);
      if (std::abs(lw) > cfg.divergence_bound)
        throw DivergenceError(
            fmt::format("critic loss {} exceeded the divergence bound {} at iteration {}", lw, cfg.divergence_bound, it));
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.message = e.what();
      return result;
    }
    result.curve.push_back(row);
    if (sink) sink(row);
  }
  return result;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
}

void ReplayBuffer::add(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Engine& rng) const {
  if (items_.empty()) throw ContractViolation("sampling from an empty replay buffer");
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[uniform_index(rng, items_.size())]);
  return out;
}

double td_target(const RecurrentNet& target, const Transition& t, double lambda) {
  if (t.done) return t.reward;
  return t.reward + lambda * target.head_output(t.next_window, "q").maxCoeff();
}

DrqnResult train_drqn(const Scenario& scenario, const DrqnConfig& cfg, std::uint64_t seed, const CurveSink& sink,
                      const SyncObserver& on_sync) {
  if (cfg.episodes < 0 || cfg.history < 1 || cfg.minibatch < 1 || cfg.target_sync < 1)
    throw ConfigError("drqn: need episodes >= 0, history >= 1, minibatch >= 1, target_sync >= 1");
  const ActionSpace space = scenario.action_space();
  const int dim = static_cast<int>(2 * scenario.slices.size());
  DrqnResult result;
  result.net =
      RecurrentNet(drqn_config(dim, static_cast<int>(space.size()), cfg.lstm_units, cfg.hidden, cfg.activation));
  RecurrentNet& net = result.net;
  net.initialize(derive_seed(seed, "drqn.init"));
  RecurrentNet target = net;
  Adam opt(cfg.lr, Vec::Ones(net.params().values.size()));
  ReplayBuffer replay(cfg.replay_capacity);
  Engine replay_rng = make_engine(derive_seed(seed, "drqn.replay"));
  Environment env(scenario);
  const std::size_t q = net.head_index("q");
  double epsilon = cfg.epsilon_start;
  std::int64_t learn_steps = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Engine rng = make_engine(derive_seed(seed, "drqn.policy", {static_cast<std::uint64_t>(ep)}));
    QPolicy policy(net, epsilon);
    HistoryWindow hw(cfg.history, env.observation_dim());
    hw.push(env.vectorize(env.reset(derive_seed(seed, "drqn.episode", {static_cast<std::uint64_t>(ep)}))).values);
    Trajectory traj;
    double td_sum = 0.0;
    int td_count = 0;
    try {
      while (!env.done()) {
        TrajectoryStep s;
        s.window = window_matrix(hw);
        const Decision d = policy.act(s.window, rng);
        EpochStep st = env.step(static_cast<std::size_t>(d.action));
        hw.push(env.vectorize(st.observation).values);
        s.action = d.action;
        s.value = d.value;
        s.reward = st.reward;
        s.metrics = std::move(st.metrics);
        replay.add(Transition{s.window, s.action, s.reward, window_matrix(hw), st.done});
        traj.steps.push_back(std::move(s));

        if (replay.size() >= cfg.minibatch) {
          const auto mb = replay.sample(cfg.minibatch, replay_rng);
          Vec g = Vec::Zero(net.params().values.size());
          std::vector<Vec> dout(net.config().heads.size());
          double loss = 0.0;
          for (const Transition* t : mb) {
            const double y = td_target(target, *t, cfg.lambda);
            const auto f = net.forward(t->window);
            const double err = f.outputs[q][t->action] - y;
            loss += 0.5 * err * err / static_cast<double>(mb.size());
            dout[q] = Vec::Zero(f.outputs[q].size());
            dout[q][t->action] = err / static_cast<double>(mb.size());
            net.backward(f, dout, g);
          }
          if (!std::isfinite(loss) || !g.allFinite())
            throw DivergenceError(fmt::format("drqn TD loss or gradient not finite in episode {}", ep));
          opt.descend(net.params().values, g);
          require_finite(net.params().values, "drqn", ep);
          if (std::abs(loss) > cfg.divergence_bound)
            throw DivergenceError(
                fmt::format("TD loss {} exceeded the divergence bound {} in episode {}", loss, cfg.divergence_bound, ep));
          td_sum += loss;
          ++td_count;
          if (++learn_steps % cfg.target_sync == 0) {
            target = net;
            ++result.target_syncs;
            if (on_sync) on_sync(net, target);
          }
        }
      }
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.message = e.what();
      return result;
    }
    finish_trajectory(traj, cfg.lambda);
    CurveRow row = curve_row(ep, td_count > 0 ? td_sum / td_count : 0.0, 0.0, {traj});
    result.curve.push_back(row);
    if (sink) sink(row);
    epsilon = std::max(cfg.epsilon_min, epsilon - cfg.epsilon_decay);
  }
  return result;
}

std::vector<EpisodeSummary> evaluate_policy(const Scenario& scenario, Policy& policy, std::size_t history,
                                            int episodes, std::uint64_t seed, double lambda) {
  Environment env(scenario);
  std::vector<EpisodeSummary> out;
  for (int e = 0; e < episodes; ++e) {
    const auto ue = static_cast<std::uint64_t>(e);
    Engine rng = make_engine(derive_seed(seed, "eval.policy", {ue}));
    const Trajectory t = collect_episode(env, policy, history, derive_seed(seed, "eval.episode", {ue}), rng, lambda);
    out.push_back(summarize(t, e));
  }
  return out;
}

}  // namespace v2xslice
