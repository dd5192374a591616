#ifndef V2XSLICE_VALIDATION_HPP_
#define V2XSLICE_VALIDATION_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "v2xslice/drl.hpp"
#include "v2xslice/nn.hpp"

namespace v2xslice {

struct FdComparison {
  std::size_t components = 0;
  std::size_t failures = 0;        // |a - b| > max(rel_tol * max(|a|, |b|), abs_floor)
  double max_rel_error = 0.0;      // over components with max(|a|, |b|) > abs_floor
  std::string worst;               // slice name and index of the worst component
};

/// Compares backprop against central differences (step h) for the scalar
/// loss sum_h <c_h, output_h> with random projections c_h and a random window.
FdComparison check_network_gradient(const RecurrentNet& net, std::size_t window_len, std::uint64_t seed,
                                    double h = 1e-5, double rel_tol = 1e-4, double abs_floor = 1e-7);

/// A random toy net drawn from the acceptance ranges (LSTM 4-16, dense 4-16).
RecurrentNet random_toy_net(std::uint64_t seed);

/// Tiny PoMDP with hidden states, noisy observations and a fixed horizon,
/// small enough that every trajectory can be enumerated.
struct SyntheticPomdp {
  int states = 2;
  int observations = 3;
  int actions = 2;
  int horizon = 3;
  double lambda = 0.9;
  std::vector<double> initial;                       // [s]
  std::vector<double> transition;                    // [s][a][s']
  std::vector<double> emission;                      // [s][o]
  std::vector<double> reward;                        // [s][a]
  double reward_offset = 0.0;                        // added to every reward

  double T(int s, int a, int s2) const { return transition[static_cast<std::size_t>((s * actions + a) * states + s2)]; }
  double O(int s, int o) const { return emission[static_cast<std::size_t>(s * observations + o)]; }
  double R(int s, int a) const { return reward[static_cast<std::size_t>(s * actions + a)] + reward_offset; }
};

SyntheticPomdp default_synthetic_pomdp();

/// Reactive softmax policy: logits theta[o * actions + a].
Vec tabular_policy(const SyntheticPomdp& m, const Vec& theta, int observation);

/// J(theta) = E[sum_k lambda^(k-1) r_k] by full enumeration.
double exact_objective(const SyntheticPomdp& m, const Vec& theta);
Vec finite_difference_objective_gradient(const SyntheticPomdp& m, const Vec& theta, double h = 1e-5);
/// b[k][o] = E[G_k | o_k = o], exact; a valid baseline since it ignores C_k.
std::vector<std::vector<double>> exact_observation_baseline(const SyntheticPomdp& m, const Vec& theta);

struct SyntheticEpisode {
  std::vector<int> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
};

SyntheticEpisode sample_synthetic_episode(const SyntheticPomdp& m, const Vec& theta, Engine& rng);

/// Score-function estimate for one episode, built with the same trajectory
/// and weighting code the actor update uses. `baseline` may be empty (b = 0).
Vec episode_gradient(const SyntheticPomdp& m, const Vec& theta, const SyntheticEpisode& ep,
                     const std::vector<std::vector<double>>& baseline);

struct PolicyGradientReport {
  Vec fd;                 // gradient of the enumerated objective
  Vec mc_mean;            // Monte-Carlo mean of the advantage estimator
  Vec mc_se;              // its standard error
  int checked = 0;        // components with |fd| above the noise floor
  double max_rel_error = 0.0;
  Vec baseline_mean;      // mean of the baseline term sum_k lambda^(k-1) b grad log pi
  Vec baseline_se;
  double baseline_max_z = 0.0;
  double var_advantage = 0.0;  // summed per-component variance, advantage estimator
  double var_return = 0.0;     // same, raw-return estimator on the same episodes
};

/// Runs `episodes` sampled episodes and compares against enumeration.
/// A component counts as above the noise floor when |fd| > noise_sigmas * se.
PolicyGradientReport policy_gradient_check(const SyntheticPomdp& m, const Vec& theta, int episodes,
                                           std::uint64_t seed, double noise_sigmas = 3.0);

}  // namespace v2xslice

#endif  // V2XSLICE_VALIDATION_HPP_
