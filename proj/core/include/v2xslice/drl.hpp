#ifndef V2XSLICE_DRL_HPP_
#define V2XSLICE_DRL_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "v2xslice/env.hpp"
#include "v2xslice/nn.hpp"
#include "v2xslice/rng.hpp"

namespace v2xslice {

/// Row-major K x dim window matrix from a history window.
Mat window_matrix(const HistoryWindow& w);

struct Decision {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;  // critic estimate, 0 when the policy has none
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(Engine& /*rng*/) {}
  virtual Decision act(const Mat& window, Engine& rng) = 0;
};

/// Samples from the actor head (or takes its argmax when greedy).
class ActorCriticPolicy : public Policy {
 public:
  explicit ActorCriticPolicy(const RecurrentNet& net, bool greedy = false);
  Decision act(const Mat& window, Engine& rng) override;

 private:
  const RecurrentNet& net_;
  std::size_t actor_, critic_;
  bool greedy_;
};

/// Control policy. kFixedPerEpisode draws one configuration uniformly at the
/// start of each episode and keeps it; kPerEpoch redraws every epoch.
class RandomPolicy : public Policy {
 public:
  enum class Mode { kFixedPerEpisode, kPerEpoch };
  RandomPolicy(std::size_t actions, Mode mode) : actions_(actions), mode_(mode) {}
  void begin_episode(Engine& rng) override;
  Decision act(const Mat& window, Engine& rng) override;

 private:
  std::size_t actions_;
  Mode mode_;
  std::size_t fixed_ = 0;
};

/// Epsilon-greedy over a Q head.
class QPolicy : public Policy {
 public:
  QPolicy(const RecurrentNet& net, double epsilon) : net_(net), epsilon_(epsilon) {}
  void set_epsilon(double e) { epsilon_ = e; }
  Decision act(const Mat& window, Engine& rng) override;

 private:
  const RecurrentNet& net_;
  double epsilon_;
};

struct TrajectoryStep {
  Mat window;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double ret = 0.0;
  double value = 0.0;
  double advantage = 0.0;
  EpochMetrics metrics;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double mean_reward() const;
};

/// Resets env with env_seed, then runs one episode with history length K.
/// Returns and advantages (G - V) are filled in with discount lambda.
Trajectory collect_episode(Environment& env, Policy& policy, std::size_t history, std::uint64_t env_seed,
                           Engine& rng, double lambda);

/// Fills ret and advantage from rewards and values.
void finish_trajectory(Trajectory& traj, double lambda);

/// Per-step weights of grad log pi in the policy-gradient estimate:
/// lambda^(k-1) * A_k (or A_k alone when discount_weight is false).
std::vector<double> policy_gradient_weights(const Trajectory& traj, double lambda, bool discount_weight);

/// Rescales the advantages of a batch to zero mean and unit variance.
void normalize_advantages(std::vector<Trajectory>& batch);

/// L(w) = 1/2 * mean over every step of (V(H_k) - G_k)^2 and its gradient.
double critic_loss_grad(const RecurrentNet& net, const std::vector<Trajectory>& batch, Vec* grad);

/// Pseudo-loss L(theta) = -(1/B) sum_b sum_k weight_k * log pi(C_k | H_k);
/// descending it ascends the objective.
double actor_loss_grad(const RecurrentNet& net, const std::vector<Trajectory>& batch, double lambda,
                       bool discount_weight, Vec* grad);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One optimizer step on the critic (critic head + shared LSTM). Returns the loss before the step.
double critic_update(RecurrentNet& net, const std::vector<Trajectory>& batch, Optimizer& opt);
/// One optimizer step on the actor (actor head + shared LSTM). Returns the pseudo-loss before the step.
double actor_update(RecurrentNet& net, const std::vector<Trajectory>& batch, Optimizer& opt, double lambda,
                    bool discount_weight);

struct CurveRow {
  int iteration = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_reward = 0.0;
  std::vector<double> pdr;    // per slice, mean over the iteration's episodes
  std::vector<double> delay;  // per slice
};

struct A2CConfig {
  int iterations = 300;
  int batch = 10;
  std::size_t history = 10;
  int lstm_units = 256;
  std::vector<int> hidden{64};
  Activation activation = Activation::kRelu;
  double lr_actor = 1e-4;
  double lr_critic = 1e-4;
  double lambda = 0.9;
  bool discount_weight = true;
  bool normalize_advantages = false;
  double divergence_bound = 1e8;
  int workers = 1;
};

struct TrainResult {
  RecurrentNet net;
  std::vector<CurveRow> curve;
  bool diverged = false;
  std::string message;
};

using CurveSink = std::function<void(const CurveRow&)>;

/// Collect `batch` episodes with frozen parameters, then one critic and one
/// actor step, `iterations` times.
TrainResult train_a2c(const Scenario& scenario, const A2CConfig& cfg, std::uint64_t seed, const CurveSink& sink = {});

struct Transition {
  Mat window;
  int action = 0;
  double reward = 0.0;
  Mat next_window;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void add(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// `n` indices drawn uniformly with replacement.
  std::vector<const Transition*> sample(std::size_t n, Engine& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

/// y = r for terminal transitions, r + lambda * max_a Q_target(s', a) otherwise.
double td_target(const RecurrentNet& target, const Transition& t, double lambda);

struct DrqnConfig {
  int episodes = 300;
  std::size_t history = 10;
  int lstm_units = 256;
  std::vector<int> hidden{128, 128};
  Activation activation = Activation::kRelu;
  double lr = 1e-4;
  double lambda = 0.9;
  double epsilon_start = 1.0;
  double epsilon_min = 0.01;
  double epsilon_decay = 0.01;  // subtracted once per episode
  int target_sync = 200;        // learning steps between target copies
  std::size_t replay_capacity = 10000;
  std::size_t minibatch = 32;
  double divergence_bound = 1e8;
};

struct DrqnResult {
  RecurrentNet net;
  std::vector<CurveRow> curve;
  int target_syncs = 0;
  bool diverged = false;
  std::string message;
};

/// Called right after each target copy with (online, target).
using SyncObserver = std::function<void(const RecurrentNet&, const RecurrentNet&)>;

DrqnResult train_drqn(const Scenario& scenario, const DrqnConfig& cfg, std::uint64_t seed, const CurveSink& sink = {},
                      const SyncObserver& on_sync = {});

struct EpisodeSummary {
  int episode = 0;
  double mean_reward = 0.0;
  std::vector<double> pdr;
  std::vector<double> delay;
};

/// Runs `episodes` episodes; episode e resets the environment with
/// derive_seed(seed, "eval.episode", {e}) so every scheme sees the same worlds.
std::vector<EpisodeSummary> evaluate_policy(const Scenario& scenario, Policy& policy, std::size_t history,
                                            int episodes, std::uint64_t seed, double lambda);

EpisodeSummary summarize(const Trajectory& traj, int episode);

}  // namespace v2xslice

#endif  // V2XSLICE_DRL_HPP_
