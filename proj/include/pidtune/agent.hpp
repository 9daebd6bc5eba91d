#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pidtune/env.hpp"
#include "pidtune/mlp.hpp"
#include "pidtune/replay.hpp"

namespace pidtune {

/// Twin Q approximators with their lagged targets. Inputs are the
/// concatenated state and normalized action; the output is a scalar.
struct TwinCritics {
  Mlp q1, q2;
  Mlp q1_target, q2_target;
};

/// Targets start as exact copies of the online nets.
TwinCritics make_twin_critics(int state_dim, int action_dim,
                              const std::vector<int>& hidden, Rng& rng);

/// Squashed-Gaussian actor: the net emits 3 means followed by 3 log
/// standard deviations; log stds are clamped before exponentiation and
/// actions are tanh-squashed into (-1, 1).
struct StochasticPolicy {
  Mlp net;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

/// Deterministic actor with tanh outputs in [-1, 1], plus its target.
struct DeterministicPolicy {
  Mlp net;
  Mlp net_target;
};

struct SampledAction {
  Action a;
  double logp = 0.0;  // squash-corrected log density of a
};

/// Reparameterized draw: z ~ Normal(mean(s), std(s)), a = tanh(z), with
/// logp = sum_d [ logNormal(z_d) - log(1 - tanh^2(z_d)) ].
SampledAction sample_stochastic(const StochasticPolicy& policy, const EnvState& s,
                                Rng& rng);

/// Temperature and exploration-noise schedules plus the stage controls.
struct Schedules {
  double inv_beta = 0.5;             // 1/beta; beta starts at 2
  double inv_beta_increment = 0.005;  // added to 1/beta per warm-up interaction
  double sigma2 = 0.05;              // exploration-noise variance
  double noise_decay = 0.005;        // per-interaction decay after warm-up
  bool multiplicative_decay = true;  // false: subtract noise_decay instead
  double target_noise_sigma = 0.1;   // target-action smoothing noise
  double target_noise_clip = 0.25;
  int warmup = 70;       // interactions in the stochastic stage
  int policy_delay = 2;  // deterministic actor update period d

  double beta() const { return 1.0 / inv_beta; }
};

enum class Stage { Warmup, Exploit };

struct AgentConfig {
  double gamma = 0.99;
  int batch_size = 40;
  double actor_lr = 0.02;
  double critic_lr = 0.0005;
  double rho_new = 0.006;  // blend weight toward the online parameters
  std::size_t buffer_capacity = 1000;
  int budget = 200;  // environment interactions
  std::vector<int> hidden{64, 64};
};

enum class Algorithm { Emtd3, Td3 };

/// Fixed scaling applied to states and rewards before they reach the
/// function approximators, derived once from the episode configuration.
/// Keeps net inputs and regression targets O(1) regardless of the process
/// units; everything logged or stored outside the agent stays raw.
struct NormalizationMap {
  std::vector<double> state_scale;  // per-entry multipliers
  double reward_scale = 1.0;

  EnvState state(const EnvState& raw) const;
};

NormalizationMap make_normalization(const EpisodeConfig& cfg);

/// Thrown when training produces a non-finite quantity; carries the
/// interaction index for diagnostics.
struct NumericalError : std::runtime_error {
  int interaction;
  NumericalError(int k, const std::string& what)
      : std::runtime_error(what + " at interaction " + std::to_string(k)),
        interaction(k) {}
};

// TD-target formulas, split out so the arithmetic is testable in isolation.
double soft_target_value(double r, double gamma, double min_q, double beta, double logp);
double td3_target_value(double r, double gamma, double min_q);

/// Per-sample soft targets y = r + gamma * (min_i Q_i'(s', a') - beta*logp),
/// a' freshly sampled from the stochastic policy. Verifies twin-min
/// dominance on every sample.
std::vector<double> soft_td_target(const std::vector<Experience>& batch,
                                   const TwinCritics& critics,
                                   const StochasticPolicy& policy, double gamma,
                                   double beta, Rng& rng);

/// Per-sample targets y = r + gamma * min_i Q_i'(s', a') with the target
/// action mu'(s') perturbed by clipped Gaussian noise and clipped to the
/// action bounds. Verifies twin-min dominance on every sample.
std::vector<double> td3_td_target(const std::vector<Experience>& batch,
                                  const TwinCritics& critics,
                                  const DeterministicPolicy& policy, double gamma,
                                  double noise_sigma, double noise_clip, Rng& rng);

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
};

/// One mean-squared-error gradient step per critic against fixed targets.
/// Returns the pre-update batch losses.
CriticLosses critic_update(TwinCritics& critics, const std::vector<Experience>& batch,
                           const std::vector<double>& targets, OptimizerState& opt1,
                           OptimizerState& opt2);

/// One ascent step on mean[min_i Q_i(s, a(s)) - beta * log pi(a(s)|s)] with
/// reparameterized actions; gradients reach the critic inputs but never the
/// critic parameters. Returns the objective value.
double stochastic_actor_update(StochasticPolicy& policy, const TwinCritics& critics,
                               const std::vector<Experience>& batch, double beta,
                               OptimizerState& opt, Rng& rng);

/// One ascent step on mean Q1(s, mu(s)). Returns the objective value.
double deterministic_actor_update(DeterministicPolicy& policy, const TwinCritics& critics,
                                  const std::vector<Experience>& batch,
                                  OptimizerState& opt);

/// Warm-up: sample from the stochastic policy. Exploitation: the
/// deterministic action plus Gaussian exploration noise, clipped to [-1, 1].
/// The noise variance sigma2 is expressed in physical action units, so the
/// per-dimension normalized deviation is sqrt(sigma2) over the box
/// half-width.
Action act(Stage stage, const EnvState& s, const std::optional<StochasticPolicy>& sto,
           const DeterministicPolicy& det, const Schedules& sch, const ActionBox& box,
           Rng& rng);

/// Warm-up interactions raise 1/beta; later interactions decay sigma2.
void advance_schedules(Schedules& sch, Stage stage);

struct TrainRecord {
  int interaction = 0;
  PidParams params;  // action in PID units
  double reward = 0.0;
  double critic_loss_1 = 0.0;
  double critic_loss_2 = 0.0;
  double actor_objective = 0.0;
  double beta = 0.0;
  double sigma2 = 0.0;
  Stage stage = Stage::Warmup;
};

/// Owns every piece of mutable state for one seeded training run and
/// executes one interaction per step() call: act, run the closed loop,
/// store the transition, then update critics, the stage-appropriate actor
/// and the target nets. The TD3 baseline is the same path with the warm-up
/// stage disabled and no stochastic actor.
class Trainer {
 public:
  Trainer(Algorithm algo, const EpisodeConfig& episode, const AgentConfig& agent,
          const Schedules& schedules, const PlantModel& plant, std::uint64_t seed);

  TrainRecord step();

  int interactions_done() const { return interaction_; }
  const Trajectory& last_trajectory() const { return last_trajectory_; }
  const PidParams& last_params() const { return last_params_; }
  const TwinCritics& critics() const { return critics_; }
  const std::optional<StochasticPolicy>& stochastic_policy() const { return stochastic_; }
  const DeterministicPolicy& deterministic_policy() const { return deterministic_; }
  const Schedules& schedules() const { return schedules_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  EpisodeConfig episode_;
  AgentConfig agent_;
  Schedules schedules_;
  DiscreteSS plant_;
  NormalizationMap norm_;
  ReplayBuffer buffer_;
  Rng rng_;
  TwinCritics critics_;
  std::optional<StochasticPolicy> stochastic_;
  DeterministicPolicy deterministic_;
  OptimizerState opt_q1_, opt_q2_, opt_mu_;
  std::optional<OptimizerState> opt_pi_;
  EnvState state_;
  int interaction_ = 0;
  int effective_warmup_ = 0;
  Trajectory last_trajectory_;
  PidParams last_params_;
};

}  // namespace pidtune
