#include "pidtune/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace pidtune {
namespace {

constexpr int kActionDim = 3;
const double kHalfLn2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// ln(1 - tanh(z)^2), stable for large |z|.
double log1m_tanh_sq(double z) {
  return 2.0 * (std::numbers::ln2 - z - softplus(-2.0 * z));
}

std::vector<double> concat(const EnvState& s, const Action& a) {
  std::vector<double> x;
  x.reserve(s.size() + a.size());
  x.insert(x.end(), s.begin(), s.end());
  x.insert(x.end(), a.begin(), a.end());
  return x;
}

// Everything produced by one reparameterized draw, kept so the actor update
// can push gradients back through the sample.
struct SquashedDraw {
  Action a{};
  std::array<double, kActionDim> z{}, zeta{}, stds{};
  std::array<bool, kActionDim> clamped{};  // log-std hit its clamp bound
  double logp = 0.0;
};

SquashedDraw draw_squashed(const StochasticPolicy& policy, const std::vector<double>& out,
                           Rng& rng) {
  SquashedDraw d;
  for (int i = 0; i < kActionDim; ++i) {
    const double mean = out[i];
    const double raw = out[kActionDim + i];
    const double t = std::clamp(raw, policy.log_std_min, policy.log_std_max);
    d.clamped[i] = raw <= policy.log_std_min || raw >= policy.log_std_max;
    d.stds[i] = std::exp(t);
    d.zeta[i] = rng.normal();
    d.z[i] = mean + d.stds[i] * d.zeta[i];
    d.a[i] = std::tanh(d.z[i]);
    d.logp += -kHalfLn2Pi - t - 0.5 * d.zeta[i] * d.zeta[i] - log1m_tanh_sq(d.z[i]);
  }
  return d;
}

double min_target_q(const TwinCritics& critics, const std::vector<double>& x) {
  const double q1 = forward(critics.q1_target, x)[0];
  const double q2 = forward(critics.q2_target, x)[0];
  const double m = std::min(q1, q2);
  // Twin-min dominance, checked on every evaluated sample.
  if (!(m <= q1 && m <= q2))
    throw std::logic_error("agent: twin-min dominance violated");
  return m;
}

}  // namespace

EnvState NormalizationMap::state(const EnvState& raw) const {
  EnvState out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] * state_scale[i];
  return out;
}

NormalizationMap make_normalization(const EpisodeConfig& cfg) {
  NormalizationMap norm;
  const double y_scale = 1.0 / std::max(1e-9, 600.0 * std::abs(cfg.setpoint));
  const double u_scale =
      1.0 / std::max({1e-9, 300.0 * std::abs(cfg.limits.u_min), 300.0 * std::abs(cfg.limits.u_max)});
  norm.state_scale.assign(cfg.state_dim(), y_scale);
  for (int i = 0; i < cfg.state_points; ++i)
    norm.state_scale[cfg.state_points + i] = u_scale;  // the u block
  norm.reward_scale = 1.0 / std::max(1.0, 0.05 * std::abs(cfg.do_nothing_floor()));
  return norm;
}

TwinCritics make_twin_critics(int state_dim, int action_dim,
                              const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> dims{state_dim + action_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  TwinCritics c;
  c.q1 = make_mlp(dims, OutputActivation::Identity, rng);
  c.q2 = make_mlp(dims, OutputActivation::Identity, rng);
  c.q1_target = c.q1;
  c.q2_target = c.q2;
  return c;
}

SampledAction sample_stochastic(const StochasticPolicy& policy, const EnvState& s,
                                Rng& rng) {
  const auto out = forward(policy.net, s);
  const SquashedDraw d = draw_squashed(policy, out, rng);
  return SampledAction{d.a, d.logp};
}

double soft_target_value(double r, double gamma, double min_q, double beta, double logp) {
  return r + gamma * (min_q - beta * logp);
}

double td3_target_value(double r, double gamma, double min_q) {
  return r + gamma * min_q;
}

std::vector<double> soft_td_target(const std::vector<Experience>& batch,
                                   const TwinCritics& critics,
                                   const StochasticPolicy& policy, double gamma,
                                   double beta, Rng& rng) {
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const Experience& ex : batch) {
    const SampledAction next = sample_stochastic(policy, ex.s_next, rng);
    const double min_q = min_target_q(critics, concat(ex.s_next, next.a));
    targets.push_back(soft_target_value(ex.r, gamma, min_q, beta, next.logp));
  }
  return targets;
}

std::vector<double> td3_td_target(const std::vector<Experience>& batch,
                                  const TwinCritics& critics,
                                  const DeterministicPolicy& policy, double gamma,
                                  double noise_sigma, double noise_clip, Rng& rng) {
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const Experience& ex : batch) {
    const auto mu = forward(policy.net_target, ex.s_next);
    Action a_next{};
    for (int i = 0; i < kActionDim; ++i) {
      const double eps =
          std::clamp(rng.normal(0.0, noise_sigma), -noise_clip, noise_clip);
      a_next[i] = std::clamp(mu[i] + eps, -1.0, 1.0);
    }
    const double min_q = min_target_q(critics, concat(ex.s_next, a_next));
    targets.push_back(td3_target_value(ex.r, gamma, min_q));
  }
  return targets;
}

CriticLosses critic_update(TwinCritics& critics, const std::vector<Experience>& batch,
                           const std::vector<double>& targets, OptimizerState& opt1,
                           OptimizerState& opt2) {
  if (batch.empty() || targets.size() != batch.size())
    throw std::invalid_argument("agent: batch/target size mismatch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  const auto update_one = [&](Mlp& q, OptimizerState& opt) {
    Gradients grads = make_gradients(q);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto x = concat(batch[i].s, batch[i].a);
      const double pred = forward(q, x)[0];
      const double err = pred - targets[i];
      loss += err * err;
      backward_into(q, x, {2.0 * err}, grads);
    }
    grads.scale(inv_b);
    optimize_step(opt, q, grads);
    return loss * inv_b;
  };

  CriticLosses losses;
  losses.q1 = update_one(critics.q1, opt1);
  losses.q2 = update_one(critics.q2, opt2);
  return losses;
}

double stochastic_actor_update(StochasticPolicy& policy, const TwinCritics& critics,
                               const std::vector<Experience>& batch, double beta,
                               OptimizerState& opt, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("agent: empty batch");
  Gradients grads = make_gradients(policy.net);
  double objective = 0.0;
  for (const Experience& ex : batch) {
    const auto out = forward(policy.net, ex.s);
    const SquashedDraw d = draw_squashed(policy, out, rng);

    const auto x = concat(ex.s, d.a);
    const double q1 = forward(critics.q1, x)[0];
    const double q2 = forward(critics.q2, x)[0];
    const Mlp& q_min = q1 <= q2 ? critics.q1 : critics.q2;
    // Gradient w.r.t. the critic INPUT only; critic parameters stay fixed.
    const Gradients qg = backward(q_min, x, {1.0});
    const std::size_t state_dim = ex.s.size();

    std::vector<double> upstream(2 * kActionDim, 0.0);
    for (int i = 0; i < kActionDim; ++i) {
      const double dq_da = qg.input[state_dim + i];
      // d logp / dz = 2 tanh(z); the Gaussian part is constant in z once
      // expressed through the fixed noise zeta.
      const double df_dz = dq_da * (1.0 - d.a[i] * d.a[i]) - beta * 2.0 * d.a[i];
      upstream[i] = df_dz;
      upstream[kActionDim + i] =
          d.clamped[i] ? 0.0 : df_dz * d.stds[i] * d.zeta[i] + beta;
    }
    backward_into(policy.net, ex.s, upstream, grads);
    objective += std::min(q1, q2) - beta * d.logp;
  }
  // Ascend: feed the negated mean gradient to the descent optimizer.
  grads.scale(-1.0 / static_cast<double>(batch.size()));
  optimize_step(opt, policy.net, grads);
  return objective / static_cast<double>(batch.size());
}

double deterministic_actor_update(DeterministicPolicy& policy, const TwinCritics& critics,
                                  const std::vector<Experience>& batch,
                                  OptimizerState& opt) {
  if (batch.empty()) throw std::invalid_argument("agent: empty batch");
  Gradients grads = make_gradients(policy.net);
  double objective = 0.0;
  for (const Experience& ex : batch) {
    const auto mu = forward(policy.net, ex.s);
    Action a{};
    std::copy_n(mu.begin(), kActionDim, a.begin());
    const auto x = concat(ex.s, a);
    objective += forward(critics.q1, x)[0];
    const Gradients qg = backward(critics.q1, x, {1.0});
    const std::size_t state_dim = ex.s.size();
    std::vector<double> upstream(kActionDim);
    for (int i = 0; i < kActionDim; ++i) upstream[i] = qg.input[state_dim + i];
    backward_into(policy.net, ex.s, upstream, grads);
  }
  grads.scale(-1.0 / static_cast<double>(batch.size()));
  optimize_step(opt, policy.net, grads);
  return objective / static_cast<double>(batch.size());
}

Action act(Stage stage, const EnvState& s, const std::optional<StochasticPolicy>& sto,
           const DeterministicPolicy& det, const Schedules& sch, const ActionBox& box,
           Rng& rng) {
  if (stage == Stage::Warmup) {
    if (!sto) throw std::logic_error("agent: warm-up stage without a stochastic actor");
    return sample_stochastic(*sto, s, rng).a;
  }
  const auto mu = forward(det.net, s);
  (void)box;
  const double stddev = std::sqrt(sch.sigma2);
  Action a{};
  for (int i = 0; i < kActionDim; ++i)
    a[i] = std::clamp(mu[i] + stddev * rng.normal(), -1.0, 1.0);
  return a;
}

void advance_schedules(Schedules& sch, Stage stage) {
  if (stage == Stage::Warmup) {
    sch.inv_beta += sch.inv_beta_increment;
  } else if (sch.multiplicative_decay) {
    sch.sigma2 *= 1.0 - sch.noise_decay;
  } else {
    sch.sigma2 = std::max(0.0, sch.sigma2 - sch.noise_decay);
  }
}

Trainer::Trainer(Algorithm algo, const EpisodeConfig& episode, const AgentConfig& agent,
                 const Schedules& schedules, const PlantModel& plant, std::uint64_t seed)
    : episode_(episode),
      agent_(agent),
      schedules_(schedules),
      plant_(discretize(plant)),
      norm_(make_normalization(episode)),
      buffer_(agent.buffer_capacity),
      rng_(seed),
      state_(norm_.state(initial_state(episode))) {
  const int state_dim = episode_.state_dim();
  critics_ = make_twin_critics(state_dim, kActionDim, agent_.hidden, rng_);

  std::vector<int> actor_dims{state_dim};
  actor_dims.insert(actor_dims.end(), agent_.hidden.begin(), agent_.hidden.end());

  if (algo == Algorithm::Emtd3) {
    auto dims = actor_dims;
    dims.push_back(2 * kActionDim);
    stochastic_ = StochasticPolicy{make_mlp(dims, OutputActivation::Identity, rng_)};
    opt_pi_ = make_optimizer(stochastic_->net, agent_.actor_lr);
  }
  auto det_dims = actor_dims;
  det_dims.push_back(kActionDim);
  deterministic_.net = make_mlp(det_dims, OutputActivation::Tanh, rng_);
  deterministic_.net_target = deterministic_.net;

  opt_q1_ = make_optimizer(critics_.q1, agent_.critic_lr);
  opt_q2_ = make_optimizer(critics_.q2, agent_.critic_lr);
  opt_mu_ = make_optimizer(deterministic_.net, agent_.actor_lr);
  effective_warmup_ = algo == Algorithm::Td3 ? 0 : schedules_.warmup;
}

TrainRecord Trainer::step() {
  const int k = interaction_;
  const Stage stage = k < effective_warmup_ ? Stage::Warmup : Stage::Exploit;
  const double beta_now = schedules_.beta();
  const double sigma2_now = schedules_.sigma2;

  const Action a = act(stage, state_, stochastic_, deterministic_, schedules_, episode_.action_box, rng_);
  const PidParams params = scale_action(a, episode_.action_box, episode_.tau_i_floor);
  Trajectory traj = run_episode(plant_, params, episode_);
  const double r = episode_reward(traj, episode_);
  // The buffer holds the agent-side view: scaled states, scaled reward.
  EnvState next = norm_.state(make_state(traj, episode_));
  buffer_.push(Experience{state_, a, r * norm_.reward_scale, next});

  const double nan = std::nan("");
  double loss1 = nan, loss2 = nan, actor_obj = nan;
  if (buffer_.size() >= static_cast<std::size_t>(agent_.batch_size)) {
    try {
      const auto batch = buffer_.sample(agent_.batch_size, rng_);
      const std::vector<double> targets =
          stage == Stage::Warmup
              ? soft_td_target(batch, critics_, *stochastic_, agent_.gamma, beta_now,
                               rng_)
              : td3_td_target(batch, critics_, deterministic_, agent_.gamma,
                              schedules_.target_noise_sigma,
                              schedules_.target_noise_clip, rng_);
      const CriticLosses losses = critic_update(critics_, batch, targets, opt_q1_, opt_q2_);
      loss1 = losses.q1;
      loss2 = losses.q2;
      if (!std::isfinite(loss1) || !std::isfinite(loss2))
        throw std::domain_error("non-finite critic loss");

      if (stage == Stage::Warmup) {
        actor_obj =
            stochastic_actor_update(*stochastic_, critics_, batch, beta_now, *opt_pi_, rng_);
        polyak_blend(critics_.q1_target, critics_.q1, agent_.rho_new);
        polyak_blend(critics_.q2_target, critics_.q2, agent_.rho_new);
      } else if (k % schedules_.policy_delay == 0) {
        actor_obj = deterministic_actor_update(deterministic_, critics_, batch, opt_mu_);
        polyak_blend(critics_.q1_target, critics_.q1, agent_.rho_new);
        polyak_blend(critics_.q2_target, critics_.q2, agent_.rho_new);
        polyak_blend(deterministic_.net_target, deterministic_.net, agent_.rho_new);
      }
    } catch (const std::domain_error& e) {
      throw NumericalError(k, e.what());
    }
  }

  last_trajectory_ = std::move(traj);
  last_params_ = params;
  state_ = std::move(next);
  advance_schedules(schedules_, stage);
  ++interaction_;

  TrainRecord rec;
  rec.interaction = k;
  rec.params = params;
  rec.reward = r;
  rec.critic_loss_1 = loss1;
  rec.critic_loss_2 = loss2;
  rec.actor_objective = actor_obj;
  rec.beta = beta_now;
  rec.sigma2 = sigma2_now;
  rec.stage = stage;
  return rec;
}

}  // namespace pidtune
