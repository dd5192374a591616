#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "support.hpp"
#include "v2xslice/drl.hpp"
#include "v2xslice/stats.hpp"

namespace v2xslice {
namespace {

RecurrentNet tiny_actor_critic(int actions = 3) {
  RecurrentNet net(actor_critic_config(2, actions, 3, {}));
  return net;
}

Trajectory constant_trajectory(std::size_t steps, double reward, double value, int action = 0) {
  Trajectory t;
  for (std::size_t k = 0; k < steps; ++k) {
    TrajectoryStep s;
    s.window = Mat::Constant(2, 2, 0.1 * static_cast<double>(k));
    s.action = action;
    s.reward = reward;
    s.value = value;
    t.steps.push_back(s);
  }
  return t;
}

A2CConfig tiny_a2c() {
  A2CConfig c;
  c.iterations = 3;
  c.batch = 4;
  c.history = 3;
  c.lstm_units = 6;
  c.hidden = {5};
  c.lr_actor = c.lr_critic = 1e-3;
  return c;
}

TEST(Trajectories, GreedyPolicyIsDeterministic) {
  const Scenario sc = testing::small_scenario();
  RecurrentNet net(actor_critic_config(4, static_cast<int>(sc.action_space().size()), 6, {5}));
  net.initialize(3);
  ActorCriticPolicy policy(net, true);
  Environment env(sc);
  Engine r1 = make_engine(1), r2 = make_engine(999);
  const Trajectory a = collect_episode(env, policy, 3, 42, r1, 0.9);
  const Trajectory b = collect_episode(env, policy, 3, 42, r2, 0.9);
  ASSERT_EQ(a.steps.size(), static_cast<std::size_t>(sc.episode_epochs));
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    EXPECT_EQ(a.steps[k].action, b.steps[k].action);
    EXPECT_EQ(a.steps[k].reward, b.steps[k].reward);
    EXPECT_EQ(a.steps[k].window, b.steps[k].window);
  }
}

TEST(Trajectories, ReturnsAndAdvantages) {
  Trajectory t = constant_trajectory(3, 1.0, 0.5);
  finish_trajectory(t, 0.5);
  EXPECT_DOUBLE_EQ(t.steps[0].ret, 1.75);
  EXPECT_DOUBLE_EQ(t.steps[1].ret, 1.5);
  EXPECT_DOUBLE_EQ(t.steps[2].ret, 1.0);
  EXPECT_DOUBLE_EQ(t.steps[0].advantage, 1.25);
  EXPECT_DOUBLE_EQ(t.steps[2].advantage, 0.5);
}

TEST(Trajectories, ValueEqualToReturnGivesZeroAdvantage) {
  Trajectory t = constant_trajectory(4, 2.0, 0.0);
  finish_trajectory(t, 0.9);
  for (auto& s : t.steps) s.value = s.ret;
  finish_trajectory(t, 0.9);
  for (const auto& s : t.steps) EXPECT_EQ(s.advantage, 0.0);
}

TEST(Trajectories, PolicyGradientWeightsAreDiscounted) {
  Trajectory t = constant_trajectory(3, 0.0, 0.0);
  t.steps[0].advantage = 2.0;
  t.steps[1].advantage = -1.0;
  t.steps[2].advantage = 4.0;
  const auto w = policy_gradient_weights(t, 0.5, true);
  EXPECT_EQ(w, (std::vector<double>{2.0, -0.5, 1.0}));
  EXPECT_EQ(policy_gradient_weights(t, 0.5, false), (std::vector<double>{2.0, -1.0, 4.0}));
}

TEST(Trajectories, NormalizedAdvantagesHaveUnitSpread) {
  std::vector<Trajectory> batch{constant_trajectory(3, 0, 0), constant_trajectory(2, 0, 0)};
  const double a[] = {1.0, 4.0, -2.0, 0.5, 3.0};
  batch[0].steps[0].advantage = a[0];
  batch[0].steps[1].advantage = a[1];
  batch[0].steps[2].advantage = a[2];
  batch[1].steps[0].advantage = a[3];
  batch[1].steps[1].advantage = a[4];
  normalize_advantages(batch);
  std::vector<double> out;
  for (const auto& t : batch)
    for (const auto& s : t.steps) out.push_back(s.advantage);
  EXPECT_NEAR(stats::mean(out), 0.0, 1e-12);
  EXPECT_NEAR(stats::variance(out) * 4.0 / 5.0, 1.0, 1e-6);
}

TEST(Critic, LossIsHalfMeanSquaredError) {
  RecurrentNet net = tiny_actor_critic();
  net.params().view("critic.0.b")(0, 0) = 1.0;  // zero weights: V = bias everywhere
  Trajectory t = constant_trajectory(4, 0.0, 0.0);
  for (auto& s : t.steps) s.ret = 3.0;
  EXPECT_DOUBLE_EQ(critic_loss_grad(net, {t}, nullptr), 2.0);
  net.params().view("critic.0.b")(0, 0) = 3.0;
  EXPECT_DOUBLE_EQ(critic_loss_grad(net, {t}, nullptr), 0.0);
}

TEST(Critic, GradientOnBiasIsMeanError) {
  RecurrentNet net = tiny_actor_critic();
  net.params().view("critic.0.b")(0, 0) = 1.0;
  Trajectory t = constant_trajectory(2, 0.0, 0.0);
  t.steps[0].ret = 3.0;
  t.steps[1].ret = 0.0;
  Vec g = Vec::Zero(net.params().values.size());
  critic_loss_grad(net, {t}, &g);
  const auto& sl = net.params().slice("critic.0.b");
  EXPECT_DOUBLE_EQ(g[sl.offset], ((1.0 - 3.0) + (1.0 - 0.0)) / 2.0);
}

TEST(Critic, LossDecreasesUnderRepeatedSteps) {
  const Scenario sc = testing::small_scenario();
  RecurrentNet net(actor_critic_config(4, static_cast<int>(sc.action_space().size()), 6, {5}));
  net.initialize(8);
  RandomPolicy policy(sc.action_space().size(), RandomPolicy::Mode::kPerEpoch);
  Environment env(sc);
  std::vector<Trajectory> batch;
  for (int b = 0; b < 3; ++b) {
    Engine rng = make_engine(static_cast<std::uint64_t>(b));
    batch.push_back(collect_episode(env, policy, 3, 100 + static_cast<std::uint64_t>(b), rng, 0.9));
  }
  Adam opt(1e-2, net.params().mask({"lstm", "critic"}));
  const double first = critic_update(net, batch, opt);
  double last = first;
  for (int i = 0; i < 100; ++i) last = critic_update(net, batch, opt);
  EXPECT_LT(last, first);
}

TEST(Actor, ZeroAdvantagesGiveZeroGradient) {
  RecurrentNet net = tiny_actor_critic();
  net.initialize(2);
  Trajectory t = constant_trajectory(3, 0.0, 0.0, 1);
  Vec g = Vec::Zero(net.params().values.size());
  EXPECT_EQ(actor_loss_grad(net, {t}, 0.9, true, &g), 0.0);
  EXPECT_EQ(g, Vec::Zero(g.size()));
}

TEST(Actor, SingleStepScoreFunction) {
  RecurrentNet net = tiny_actor_critic(3);
  auto bias = net.params().view("actor.0.b");
  bias << 0.2, -0.1, 0.7;
  Trajectory t = constant_trajectory(1, 0.0, 0.0, 2);
  t.steps[0].advantage = 1.5;
  Vec g = Vec::Zero(net.params().values.size());
  const double loss = actor_loss_grad(net, {t, t}, 0.9, true, &g);
  const double z = std::exp(0.2) + std::exp(-0.1) + std::exp(0.7);
  const double p[] = {std::exp(0.2) / z, std::exp(-0.1) / z, std::exp(0.7) / z};
  // mean over two identical episodes equals one episode
  EXPECT_NEAR(loss, -1.5 * std::log(p[2]), 1e-14);
  const auto& sl = net.params().slice("actor.0.b");
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(g[sl.offset + a], -1.5 * ((a == 2 ? 1.0 : 0.0) - p[a]), 1e-14);
}

TEST(Actor, UpdateLeavesCriticUntouched) {
  RecurrentNet net = tiny_actor_critic();
  net.initialize(4);
  Trajectory t = constant_trajectory(2, 0.0, 0.0, 1);
  t.steps[0].advantage = 1.0;
  const Vec before = net.params().values;
  Adam opt(1e-2, net.params().mask({"lstm", "actor"}));
  actor_update(net, {t}, opt, 0.9, true);
  const auto& c = net.params().slice("critic.0.W");
  EXPECT_EQ(net.params().values.segment(c.offset, c.size()), before.segment(c.offset, c.size()));
  const auto& a = net.params().slice("actor.0.b");
  EXPECT_NE(net.params().values.segment(a.offset, a.size()), before.segment(a.offset, a.size()));
}

TEST(RandomControl, FixedModeKeepsOneActionPerEpisode) {
  RandomPolicy p(7, RandomPolicy::Mode::kFixedPerEpisode);
  Engine rng = make_engine(5);
  std::vector<std::int64_t> counts(7, 0);
  for (int e = 0; e < 7000; ++e) {
    p.begin_episode(rng);
    const int a = p.act(Mat(), rng).action;
    for (int k = 0; k < 5; ++k) EXPECT_EQ(p.act(Mat(), rng).action, a);
    ++counts[static_cast<std::size_t>(a)];
  }
  EXPECT_GT(stats::chi_square_uniform(counts).p, 1e-4);
}

TEST(RandomControl, PerEpochModeRedraws) {
  RandomPolicy p(50, RandomPolicy::Mode::kPerEpoch);
  Engine rng = make_engine(5);
  p.begin_episode(rng);
  std::map<int, int> seen;
  for (int k = 0; k < 20; ++k) ++seen[p.act(Mat(), rng).action];
  EXPECT_GT(seen.size(), 5u);
}

TEST(Drqn, EpsilonOneIsUniform) {
  RecurrentNet net(drqn_config(2, 5, 3, {4}));
  net.initialize(1);
  QPolicy p(net, 1.0);
  Engine rng = make_engine(11);
  std::vector<std::int64_t> counts(5, 0);
  const Mat w = Mat::Constant(2, 2, 0.3);
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(p.act(w, rng).action)];
  EXPECT_GT(stats::chi_square_uniform(counts).p, 1e-4);
}

TEST(Drqn, EpsilonZeroIsGreedy) {
  RecurrentNet net(drqn_config(2, 4, 3, {}));
  net.params().view("q.0.b") << 0.1, 0.9, -0.3, 0.2;
  QPolicy p(net, 0.0);
  Engine rng = make_engine(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(p.act(Mat::Zero(2, 2), rng).action, 1);
}

TEST(Drqn, TdTarget) {
  RecurrentNet target(drqn_config(2, 3, 3, {}));
  target.params().view("q.0.b") << 0.5, 2.0, -1.0;
  Transition t{Mat::Zero(2, 2), 0, 1.5, Mat::Zero(2, 2), true};
  EXPECT_EQ(td_target(target, t, 0.9), 1.5);
  t.done = false;
  EXPECT_DOUBLE_EQ(td_target(target, t, 0.9), 1.5 + 0.9 * 2.0);
}

TEST(Drqn, ReplayBufferOverwritesOldest) {
  ReplayBuffer rb(3);
  for (int i = 0; i < 5; ++i) rb.add(Transition{Mat(), i, 0.0, Mat(), false});
  EXPECT_EQ(rb.size(), 3u);
  Engine rng = make_engine(2);
  std::map<int, int> seen;
  for (const Transition* t : rb.sample(3000, rng)) ++seen[t->action];
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen.count(0) + seen.count(1), 0u);
  for (const auto& [a, n] : seen) EXPECT_NEAR(n, 1000, 150);
}

TEST(Drqn, EmptyReplayCannotBeSampled) {
  ReplayBuffer rb(2);
  Engine rng = make_engine(1);
  EXPECT_THROW(rb.sample(1, rng), ContractViolation);
}

TEST(Drqn, TargetEqualsOnlineAtEverySync) {
  DrqnConfig c;
  c.episodes = 4;
  c.history = 2;
  c.lstm_units = 4;
  c.hidden = {4};
  c.minibatch = 2;
  c.target_sync = 3;
  int syncs = 0;
  const auto r = train_drqn(testing::small_scenario(8, 4, 100), c, 5, {}, [&](const RecurrentNet& a, const RecurrentNet& b) {
    ++syncs;
    EXPECT_EQ(a.params().values, b.params().values);
  });
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(r.curve.size(), 4u);
  EXPECT_EQ(syncs, r.target_syncs);
  // learning starts once two transitions exist: 4 episodes x 4 epochs gives 15 steps
  EXPECT_EQ(syncs, 5);
}

TEST(A2C, ZeroIterationsReturnsTheInitialNetwork) {
  A2CConfig c = tiny_a2c();
  c.iterations = 0;
  const Scenario sc = testing::small_scenario();
  const auto r = train_a2c(sc, c, 13);
  EXPECT_TRUE(r.curve.empty());
  RecurrentNet init(actor_critic_config(4, static_cast<int>(sc.action_space().size()), 6, {5}));
  init.initialize(derive_seed(13, "a2c.init"));
  EXPECT_EQ(r.net.params().values, init.params().values);
}

TEST(A2C, SameSeedSameCurveForAnyWorkerCount) {
  const Scenario sc = testing::small_scenario();
  A2CConfig c = tiny_a2c();
  const auto a = train_a2c(sc, c, 21);
  c.workers = 2;
  std::vector<CurveRow> streamed;
  const auto b = train_a2c(sc, c, 21, [&](const CurveRow& row) { streamed.push_back(row); });
  ASSERT_EQ(a.curve.size(), 3u);
  ASSERT_EQ(b.curve.size(), 3u);
  ASSERT_EQ(streamed.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.curve[i].critic_loss, b.curve[i].critic_loss);
    EXPECT_EQ(a.curve[i].actor_loss, b.curve[i].actor_loss);
    EXPECT_EQ(a.curve[i].mean_reward, b.curve[i].mean_reward);
    EXPECT_EQ(streamed[i].critic_loss, b.curve[i].critic_loss);
  }
  EXPECT_EQ(a.net.params().values, b.net.params().values);
}

TEST(A2C, DivergenceIsReported) {
  A2CConfig c = tiny_a2c();
  c.divergence_bound = 1e-12;
  const auto r = train_a2c(testing::small_scenario(), c, 1);
  EXPECT_TRUE(r.diverged);
  EXPECT_NE(r.message.find("divergence bound"), std::string::npos);
}

TEST(A2C, RejectsBadSettings) {
  A2CConfig c = tiny_a2c();
  c.batch = 0;
  EXPECT_THROW(train_a2c(testing::small_scenario(), c, 1), ConfigError);
}

TEST(Evaluation, SchemesShareEpisodeWorlds) {
  const Scenario sc = testing::small_scenario();
  RandomPolicy a(sc.action_space().size(), RandomPolicy::Mode::kFixedPerEpisode);
  RandomPolicy b(sc.action_space().size(), RandomPolicy::Mode::kFixedPerEpisode);
  const auto ra = evaluate_policy(sc, a, 3, 3, 77, 0.9);
  const auto rb = evaluate_policy(sc, b, 3, 3, 77, 0.9);
  ASSERT_EQ(ra.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(ra[e].mean_reward, rb[e].mean_reward);
    EXPECT_EQ(ra[e].pdr, rb[e].pdr);
    EXPECT_EQ(ra[e].episode, static_cast<int>(e));
  }
}

TEST(Evaluation, SummaryWeightsByPackets) {
  Trajectory t = constant_trajectory(2, 1.0, 0.0);
  t.steps[0].metrics.slices = {SliceMetrics{}};
  t.steps[1].metrics.slices = {SliceMetrics{}};
  t.steps[0].metrics.slices[0].packets = 10;
  t.steps[0].metrics.slices[0].lost = 1;
  t.steps[0].metrics.slices[0].avg_delay = 2.0;
  t.steps[1].metrics.slices[0].packets = 30;
  t.steps[1].metrics.slices[0].lost = 9;
  t.steps[1].metrics.slices[0].avg_delay = 6.0;
  const auto s = summarize(t, 4);
  EXPECT_EQ(s.episode, 4);
  EXPECT_DOUBLE_EQ(s.pdr[0], 10.0 / 40.0);
  EXPECT_DOUBLE_EQ(s.delay[0], (20.0 + 180.0) / 40.0);
  EXPECT_DOUBLE_EQ(s.mean_reward, 1.0);
}

}  // namespace
}  // namespace v2xslice
