#include "v2xslice/validation.hpp"

#include <cmath>

#include <fmt/format.h>

namespace v2xslice {

namespace {

double projected_loss(const RecurrentNet& net, const Mat& window, const std::vector<Vec>& proj) {
  const auto f = net.forward(window);
  double s = 0.0;
  for (std::size_t i = 0; i < proj.size(); ++i) s += proj[i].dot(f.outputs[i]);
  return s;
}

int draw(Engine& rng, int lo, int hi) { return static_cast<int>(uniform_int(rng, lo, hi)); }

int sample_from(const Vec& p, Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace

FdComparison check_network_gradient(const RecurrentNet& net, std::size_t window_len, std::uint64_t seed, double h,
                                    double rel_tol, double abs_floor) {
  Engine rng = make_engine(seed);
  Mat window(static_cast<Eigen::Index>(window_len), net.config().input_dim);
  for (Eigen::Index i = 0; i < window.size(); ++i) window.data()[i] = 2.0 * uniform01(rng) - 1.0;
  std::vector<Vec> proj;
  for (const auto& head : net.config().heads) {
    Vec c(head.outputs);
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = 2.0 * uniform01(rng) - 1.0;
    proj.push_back(c);
  }

  Vec analytic = Vec::Zero(net.params().values.size());
  net.backward(net.forward(window), proj, analytic);

  RecurrentNet probe = net;
  Vec& theta = probe.params().values;
  FdComparison out;
  for (const auto& s : net.params().slices) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const Eigen::Index k = s.offset + i;
      const double saved = theta[k];
      theta[k] = saved + h;
      const double up = projected_loss(probe, window, proj);
      theta[k] = saved - h;
      const double down = projected_loss(probe, window, proj);
      theta[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic[k];
      const double diff = std::abs(a - fd);
      const double scale = std::max(std::abs(a), std::abs(fd));
      ++out.components;
      if (diff > std::max(rel_tol * scale, abs_floor)) ++out.failures;
      if (scale > abs_floor && diff / scale > out.max_rel_error) {
        out.max_rel_error = diff / scale;
        out.worst = fmt::format("{}[{}]", s.name, i);
      }
    }
  }
  return out;
}

RecurrentNet random_toy_net(std::uint64_t seed) {
  Engine rng = make_engine(derive_seed(seed, "toy.shape"));
  const int input = draw(rng, 2, 6);
  const int lstm = draw(rng, 4, 16);
  const int actions = draw(rng, 2, 6);
  std::vector<int> hidden;
  const int layers = draw(rng, 1, 2);
  for (int i = 0; i < layers; ++i) hidden.push_back(draw(rng, 4, 16));
  const Activation act = bernoulli(rng, 0.5) ? Activation::kRelu : Activation::kTanh;
  RecurrentNet net(actor_critic_config(input, actions, lstm, hidden, act));
  net.initialize(derive_seed(seed, "toy.init"));
  // Random biases too, so no gate sits at its initial symmetric point.
  Engine bias_rng = make_engine(derive_seed(seed, "toy.bias"));
  for (const auto& s : net.params().slices)
    if (s.name.ends_with(".b"))
      for (Eigen::Index i = 0; i < s.size(); ++i) net.params().values[s.offset + i] = 0.5 * (2.0 * uniform01(bias_rng) - 1.0);
  return net;
}

SyntheticPomdp default_synthetic_pomdp() {
  SyntheticPomdp m;
  m.initial = {0.6, 0.4};
  m.transition = {0.8, 0.2, 0.3, 0.7,   // s0: a0, a1
                  0.4, 0.6, 0.9, 0.1};  // s1: a0, a1
  m.emission = {0.7, 0.2, 0.1,          // s0
                0.1, 0.3, 0.6};         // s1
  m.reward = {1.0, 0.0,                 // s0
              0.0, 2.0};                // s1
  return m;
}

Vec tabular_policy(const SyntheticPomdp& m, const Vec& theta, int observation) {
  return softmax(theta.segment(observation * m.actions, m.actions));
}

namespace {

struct Exact {
  std::vector<std::vector<double>> state_marginal;  // [k][s]
  std::vector<std::vector<double>> value;           // [k][s], undiscounted-from-k expected return
  std::vector<std::vector<std::vector<double>>> w;  // [k][s][o] = E[G_k | s_k, o_k]
};

Exact solve(const SyntheticPomdp& m, const Vec& theta) {
  const int H = m.horizon;
  Exact e;
  e.value.assign(static_cast<std::size_t>(H + 1), std::vector<double>(static_cast<std::size_t>(m.states), 0.0));
  e.w.assign(static_cast<std::size_t>(H),
             std::vector<std::vector<double>>(static_cast<std::size_t>(m.states),
                                              std::vector<double>(static_cast<std::size_t>(m.observations), 0.0)));
  for (int k = H - 1; k >= 0; --k)
    for (int s = 0; s < m.states; ++s) {
      double v = 0.0;
      for (int o = 0; o < m.observations; ++o) {
        const Vec pi = tabular_policy(m, theta, o);
        double w = 0.0;
        for (int a = 0; a < m.actions; ++a) {
          double next = 0.0;
          for (int s2 = 0; s2 < m.states; ++s2) next += m.T(s, a, s2) * e.value[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(s2)];
          w += pi[a] * (m.R(s, a) + m.lambda * next);
        }
        e.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)][static_cast<std::size_t>(o)] = w;
        v += m.O(s, o) * w;
      }
      e.value[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] = v;
    }
  e.state_marginal.push_back(m.initial);
  for (int k = 0; k + 1 < H; ++k) {
    std::vector<double> next(static_cast<std::size_t>(m.states), 0.0);
    for (int s = 0; s < m.states; ++s)
      for (int o = 0; o < m.observations; ++o) {
        const Vec pi = tabular_policy(m, theta, o);
        for (int a = 0; a < m.actions; ++a)
          for (int s2 = 0; s2 < m.states; ++s2)
            next[static_cast<std::size_t>(s2)] += e.state_marginal.back()[static_cast<std::size_t>(s)] * m.O(s, o) * pi[a] * m.T(s, a, s2);
      }
    e.state_marginal.push_back(next);
  }
  return e;
}

}  // namespace

double exact_objective(const SyntheticPomdp& m, const Vec& theta) {
  const Exact e = solve(m, theta);
  double j = 0.0;
  for (int s = 0; s < m.states; ++s) j += m.initial[static_cast<std::size_t>(s)] * e.value[0][static_cast<std::size_t>(s)];
  return j;
}

Vec finite_difference_objective_gradient(const SyntheticPomdp& m, const Vec& theta, double h) {
  Vec g(theta.size());
  Vec t = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    t[i] = theta[i] + h;
    const double up = exact_objective(m, t);
    t[i] = theta[i] - h;
    const double down = exact_objective(m, t);
    t[i] = theta[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<std::vector<double>> exact_observation_baseline(const SyntheticPomdp& m, const Vec& theta) {
  const Exact e = solve(m, theta);
  std::vector<std::vector<double>> b(static_cast<std::size_t>(m.horizon),
                                     std::vector<double>(static_cast<std::size_t>(m.observations), 0.0));
  for (int k = 0; k < m.horizon; ++k)
    for (int o = 0; o < m.observations; ++o) {
      double num = 0.0, den = 0.0;
      for (int s = 0; s < m.states; ++s) {
        const double p = e.state_marginal[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] * m.O(s, o);
        num += p * e.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)][static_cast<std::size_t>(o)];
        den += p;
      }
      b[static_cast<std::size_t>(k)][static_cast<std::size_t>(o)] = den > 0.0 ? num / den : 0.0;
    }
  return b;
}

SyntheticEpisode sample_synthetic_episode(const SyntheticPomdp& m, const Vec& theta, Engine& rng) {
  SyntheticEpisode ep;
  int s = sample_from(Eigen::Map<const Vec>(m.initial.data(), m.states), rng);
  for (int k = 0; k < m.horizon; ++k) {
    Vec po(m.observations);
    for (int o = 0; o < m.observations; ++o) po[o] = m.O(s, o);
    const int o = sample_from(po, rng);
    const int a = sample_from(tabular_policy(m, theta, o), rng);
    ep.observations.push_back(o);
    ep.actions.push_back(a);
    ep.rewards.push_back(m.R(s, a));
    Vec ps(m.states);
    for (int s2 = 0; s2 < m.states; ++s2) ps[s2] = m.T(s, a, s2);
    s = sample_from(ps, rng);
  }
  return ep;
}

Vec episode_gradient(const SyntheticPomdp& m, const Vec& theta, const SyntheticEpisode& ep,
                     const std::vector<std::vector<double>>& baseline) {
  Trajectory traj;
  for (std::size_t k = 0; k < ep.rewards.size(); ++k) {
    TrajectoryStep s;
    s.action = ep.actions[k];
    s.reward = ep.rewards[k];
    s.value = baseline.empty() ? 0.0 : baseline[k][static_cast<std::size_t>(ep.observations[k])];
    traj.steps.push_back(std::move(s));
  }
  finish_trajectory(traj, m.lambda);
  const auto w = policy_gradient_weights(traj, m.lambda, true);
  Vec g = Vec::Zero(theta.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const int o = ep.observations[k];
    const Vec logits = theta.segment(o * m.actions, m.actions);
    g.segment(o * m.actions, m.actions) += w[k] * log_softmax_grad(logits, ep.actions[k]);
  }
  return g;
}

PolicyGradientReport policy_gradient_check(const SyntheticPomdp& m, const Vec& theta, int episodes, std::uint64_t seed,
                                           double noise_sigmas) {
  if (episodes < 2) throw ContractViolation("policy-gradient check needs at least two episodes");
  const auto baseline = exact_observation_baseline(m, theta);
  const Eigen::Index n = theta.size();
  Vec sum_adv = Vec::Zero(n), sq_adv = Vec::Zero(n);
  Vec sum_ret = Vec::Zero(n), sq_ret = Vec::Zero(n);
  Vec sum_base = Vec::Zero(n), sq_base = Vec::Zero(n);
  Engine rng = make_engine(seed);
  for (int e = 0; e < episodes; ++e) {
    const auto ep = sample_synthetic_episode(m, theta, rng);
    const Vec adv = episode_gradient(m, theta, ep, baseline);
    const Vec ret = episode_gradient(m, theta, ep, {});
    const Vec base = ret - adv;
    sum_adv += adv;
    sq_adv += adv.cwiseProduct(adv);
    sum_ret += ret;
    sq_ret += ret.cwiseProduct(ret);
    sum_base += base;
    sq_base += base.cwiseProduct(base);
  }
  const double N = episodes;
  auto var = [&](const Vec& s, const Vec& q) { return Vec(((q - s.cwiseProduct(s) / N) / (N - 1.0)).cwiseMax(0.0)); };

  PolicyGradientReport r;
  r.fd = finite_difference_objective_gradient(m, theta);
  r.mc_mean = sum_adv / N;
  const Vec va = var(sum_adv, sq_adv);
  r.mc_se = (va / N).cwiseSqrt();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(r.fd[i]) <= noise_sigmas * r.mc_se[i]) continue;
    ++r.checked;
    r.max_rel_error = std::max(r.max_rel_error, std::abs(r.mc_mean[i] - r.fd[i]) / std::abs(r.fd[i]));
  }
  r.baseline_mean = sum_base / N;
  r.baseline_se = (var(sum_base, sq_base) / N).cwiseSqrt();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r.baseline_se[i] > 0.0) r.baseline_max_z = std::max(r.baseline_max_z, std::abs(r.baseline_mean[i]) / r.baseline_se[i]);
  r.var_advantage = va.sum();
  r.var_return = var(sum_ret, sq_ret).sum();
  return r;
}

}  // namespace v2xslice
