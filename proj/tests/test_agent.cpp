#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "pidtune/agent.hpp"

using namespace pidtune;

namespace {

EnvState random_state(Rng& rng, int dim = 30) {
  EnvState s(dim);
  for (double& v : s) v = rng.uniform(-1.0, 1.0);
  return s;
}

Experience random_experience(Rng& rng, double r) {
  return Experience{random_state(rng), {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                    r, random_state(rng)};
}

// Critic that ignores its input: zero weights, fixed output bias.
Mlp constant_critic(double value, int input_dim) {
  Mlp net;
  net.layer_dims = {input_dim, 1};
  net.weights = {std::vector<double>(input_dim, 0.0)};
  net.biases = {{value}};
  return net;
}

// Policy net with zero weights: means and log stds come from the bias alone.
StochasticPolicy constant_policy(const std::array<double, 3>& means,
                                 const std::array<double, 3>& log_stds, int state_dim = 30) {
  Mlp net;
  net.layer_dims = {state_dim, 6};
  net.weights = {std::vector<double>(static_cast<std::size_t>(state_dim) * 6, 0.0)};
  net.biases = {{means[0], means[1], means[2], log_stds[0], log_stds[1], log_stds[2]}};
  return StochasticPolicy{net};
}

TwinCritics constant_twins(double v1, double v2, int input_dim = 33) {
  TwinCritics c;
  c.q1 = constant_critic(v1, input_dim);
  c.q2 = constant_critic(v2, input_dim);
  c.q1_target = c.q1;
  c.q2_target = c.q2;
  return c;
}

EpisodeConfig small_episode() {
  EpisodeConfig cfg;
  cfg.horizon = 20;
  cfg.state_points = 10;
  return cfg;
}

AgentConfig small_agent() {
  AgentConfig cfg;
  cfg.batch_size = 2;
  cfg.hidden = {8, 8};
  return cfg;
}

}  // namespace

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buf(3);
  Rng rng(1);
  for (int k = 0; k < 5; ++k) buf.push(random_experience(rng, k));
  REQUIRE(buf.size() == 3);
  CHECK(buf.items()[0].r == 2.0);
  CHECK(buf.items()[1].r == 3.0);
  CHECK(buf.items()[2].r == 4.0);
}

TEST_CASE("replay batches sample without replacement") {
  ReplayBuffer buf(50);
  Rng rng(2);
  for (int k = 0; k < 50; ++k) buf.push(random_experience(rng, k));
  for (int trial = 0; trial < 200; ++trial) {
    auto batch = buf.sample(20, rng);
    std::vector<double> ids;
    for (const auto& e : batch) ids.push_back(e.r);
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  }
  CHECK_THROWS_AS(buf.sample(51, rng), std::invalid_argument);
}

TEST_CASE("replay sampling is uniform over 1e5 draws") {
  ReplayBuffer buf(100);
  Rng rng(940);
  for (int k = 0; k < 100; ++k) buf.push(random_experience(rng, k));
  std::vector<int> counts(100, 0);
  const int draws = 100000;
  for (int trial = 0; trial < draws; ++trial)
    for (const auto& e : buf.sample(40, rng)) ++counts[static_cast<int>(e.r)];
  // Each element appears with probability 0.4 per batch.
  const double expected = draws * 0.4;
  const double sigma = std::sqrt(draws * 0.4 * 0.6);
  for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * sigma);
}

TEST_CASE("sample_stochastic becomes deterministic as std vanishes") {
  const StochasticPolicy policy = constant_policy({0.5, -1.2, 2.0}, {-40.0, -40.0, -40.0});
  Rng rng(3);
  const EnvState s = random_state(rng);
  const SampledAction out = sample_stochastic(policy, s, rng);
  CHECK(out.a[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-7));
  CHECK(out.a[1] == doctest::Approx(std::tanh(-1.2)).epsilon(1e-7));
  CHECK(out.a[2] == doctest::Approx(std::tanh(2.0)).epsilon(1e-7));
}

TEST_CASE("sample_stochastic log density matches the analytic form") {
  // Independent derivation: recover z = atanh(a) and evaluate
  // logN(z; m, s) - sum log(1 - a^2) directly.
  const std::array<double, 3> means{0.3, -0.7, 0.0};
  const std::array<double, 3> log_stds{0.0, -0.5, 0.25};
  const StochasticPolicy policy = constant_policy(means, log_stds);
  Rng rng(17);
  const EnvState s = random_state(rng);
  for (int trial = 0; trial < 200; ++trial) {
    const SampledAction out = sample_stochastic(policy, s, rng);
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double z = std::atanh(out.a[i]);
      const double sd = std::exp(log_stds[i]);
      const double logn = -0.5 * std::log(2.0 * std::numbers::pi) - log_stds[i] -
                          0.5 * (z - means[i]) * (z - means[i]) / (sd * sd);
      expected += logn - std::log(1.0 - out.a[i] * out.a[i]);
    }
    CHECK(out.logp == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("sampled actions match the analytic density histogram") {
  // Marginal of one dimension with mean 0, std 1: p(a) = N(atanh a) / (1 - a^2).
  const StochasticPolicy policy = constant_policy({0, 0, 0}, {0, 0, 0});
  Rng rng(19);
  const EnvState s = EnvState(30, 0.0);
  const int n = 100000;
  const int bins = 20;
  std::vector<int> counts(bins, 0);
  for (int k = 0; k < n; ++k) {
    const SampledAction out = sample_stochastic(policy, s, rng);
    const int b = std::clamp(static_cast<int>((out.a[0] + 1.0) / 2.0 * bins), 0, bins - 1);
    ++counts[b];
  }
  for (int b = 0; b < bins; ++b) {
    // Integrate the analytic density over the bin with a fine midpoint rule.
    const double lo = -1.0 + 2.0 * b / bins, hi = lo + 2.0 / bins;
    double mass = 0.0;
    const int steps = 200;
    for (int i = 0; i < steps; ++i) {
      const double a = lo + (hi - lo) * (i + 0.5) / steps;
      const double z = std::atanh(a);
      const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) /
                         (1.0 - a * a);
      mass += pdf * (hi - lo) / steps;
    }
    const double expected = n * mass;
    const double sigma = std::sqrt(n * mass * (1.0 - mass));
    CHECK(std::abs(counts[b] - expected) <= 4.0 * sigma);
  }
}

TEST_CASE("target value formulas") {
  CHECK(soft_target_value(-2.0, 0.99, -10.0, 2.0, -1.0) ==
        doctest::Approx(-9.92).epsilon(1e-12));
  CHECK(td3_target_value(0.0, 0.5, std::min(2.0, 4.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(soft_target_value(-2.0, 0.99, -10.0, 0.0, -1.0) ==
        doctest::Approx(td3_target_value(-2.0, 0.99, -10.0)).epsilon(1e-12));
}

TEST_CASE("soft targets with gamma zero reduce to rewards") {
  Rng rng(5);
  TwinCritics critics = constant_twins(-3.0, -7.0);
  const StochasticPolicy policy = constant_policy({0, 0, 0}, {0, 0, 0});
  std::vector<Experience> batch;
  for (int k = 0; k < 8; ++k) batch.push_back(random_experience(rng, -k * 1.5));
  const auto targets = soft_td_target(batch, critics, policy, 0.0, 2.0, rng);
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK(targets[i] == batch[i].r);
}

TEST_CASE("soft targets use the twin minimum") {
  Rng rng(6);
  TwinCritics critics = constant_twins(-3.0, -7.0);  // min is -7
  const StochasticPolicy policy = constant_policy({0, 0, 0}, {-40, -40, -40});
  std::vector<Experience> batch{random_experience(rng, -1.0)};
  // With beta = 0 the entropy term vanishes and y = r + gamma * min.
  const auto targets = soft_td_target(batch, critics, policy, 0.9, 0.0, rng);
  CHECK(targets[0] == doctest::Approx(-1.0 + 0.9 * -7.0).epsilon(1e-12));
}

TEST_CASE("td3 targets: clipped noise and twin minimum") {
  Rng rng(7);
  TwinCritics critics = constant_twins(2.0, 4.0);
  DeterministicPolicy policy;
  Mlp net;
  net.layer_dims = {30, 3};
  net.weights = {std::vector<double>(90, 0.0)};
  net.biases = {{0.1, -0.2, 0.3}};
  net.output_activation = OutputActivation::Tanh;
  policy.net = net;
  policy.net_target = net;

  std::vector<Experience> batch{random_experience(rng, 0.0)};
  // Noise clip c = 0: the target action is exactly mu'(s'), and
  // y = r + gamma * min(2, 4) = 0 + 0.5 * 2 = 1.
  const auto targets = td3_td_target(batch, critics, policy, 0.5, 0.1, 0.0, rng);
  CHECK(targets[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("critic update leaves parameters alone when targets equal predictions") {
  Rng rng(8);
  TwinCritics critics = make_twin_critics(30, 3, {8, 8}, rng);
  OptimizerState o1 = make_optimizer(critics.q1, 0.01);
  OptimizerState o2 = make_optimizer(critics.q2, 0.01);
  std::vector<Experience> batch;
  for (int k = 0; k < 5; ++k) batch.push_back(random_experience(rng, -1.0));

  std::vector<double> targets;
  for (const auto& ex : batch) {
    std::vector<double> x(ex.s);
    x.insert(x.end(), ex.a.begin(), ex.a.end());
    targets.push_back(forward(critics.q1, x)[0]);
  }
  const std::uint64_t before = params_checksum(critics.q1);
  // q2's targets are off, so only q1 must stay frozen.
  critic_update(critics, batch, targets, o1, o2);
  CHECK(params_checksum(critics.q1) == before);
  CHECK(params_checksum(critics.q2) != params_checksum(critics.q2_target));
}

TEST_CASE("critic loss matches a straight-line evaluation") {
  Rng rng(9);
  TwinCritics critics = make_twin_critics(30, 3, {8, 8}, rng);
  OptimizerState o1 = make_optimizer(critics.q1, 0.001);
  OptimizerState o2 = make_optimizer(critics.q2, 0.001);
  std::vector<Experience> batch;
  std::vector<double> targets;
  for (int k = 0; k < 6; ++k) {
    batch.push_back(random_experience(rng, -k));
    targets.push_back(rng.uniform(-5.0, 0.0));
  }
  double expected1 = 0.0, expected2 = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<double> x(batch[i].s);
    x.insert(x.end(), batch[i].a.begin(), batch[i].a.end());
    const double e1 = forward(critics.q1, x)[0] - targets[i];
    const double e2 = forward(critics.q2, x)[0] - targets[i];
    expected1 += e1 * e1;
    expected2 += e2 * e2;
  }
  expected1 /= batch.size();
  expected2 /= batch.size();
  const CriticLosses losses = critic_update(critics, batch, targets, o1, o2);
  CHECK(losses.q1 == doctest::Approx(expected1).epsilon(1e-10));
  CHECK(losses.q2 == doctest::Approx(expected2).epsilon(1e-10));
}

TEST_CASE("one critic step shrinks the error on a single sample") {
  Rng rng(10);
  TwinCritics critics = make_twin_critics(4, 3, {6}, rng);
  OptimizerState o1 = make_optimizer(critics.q1, 0.001);
  OptimizerState o2 = make_optimizer(critics.q2, 0.001);
  Experience ex;
  ex.s = {0.5, -0.5, 1.0, 0.3};
  ex.a = {0.2, -0.2, 0.1};
  ex.r = -2.0;
  ex.s_next = ex.s;
  std::vector<double> x(ex.s);
  x.insert(x.end(), ex.a.begin(), ex.a.end());
  const double target = -3.0;

  const double before = std::abs(forward(critics.q1, x)[0] - target);
  critic_update(critics, {ex}, {target}, o1, o2);
  const double after = std::abs(forward(critics.q1, x)[0] - target);
  CHECK(after < before);
}

TEST_CASE("stochastic actor update is a no-op for constant critics at beta zero") {
  Rng rng(11);
  StochasticPolicy policy{make_mlp({30, 8, 8, 6}, OutputActivation::Identity, rng)};
  const TwinCritics critics = constant_twins(-4.0, -4.0);
  OptimizerState opt = make_optimizer(policy.net, 0.02);
  std::vector<Experience> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(random_experience(rng, -1.0));
  const std::uint64_t before = params_checksum(policy.net);
  const double obj = stochastic_actor_update(policy, critics, batch, 0.0, opt, rng);
  CHECK(params_checksum(policy.net) == before);
  CHECK(obj == doctest::Approx(-4.0));
}

TEST_CASE("entropy pressure: frozen critics raise policy entropy") {
  Rng rng(12);
  StochasticPolicy policy{make_mlp({30, 8, 8, 6}, OutputActivation::Identity, rng)};
  // Start clearly below the maximum-entropy spread.
  for (int i = 3; i < 6; ++i) policy.net.biases.back()[i] = -1.0;
  const TwinCritics critics = constant_twins(0.0, 0.0);
  OptimizerState opt = make_optimizer(policy.net, 0.02);
  std::vector<Experience> batch;
  for (int k = 0; k < 8; ++k) batch.push_back(random_experience(rng, -1.0));

  const auto mean_neg_logp = [&](Rng& probe_rng) {
    double sum = 0.0;
    for (const auto& ex : batch) sum += -sample_stochastic(policy, ex.s, probe_rng).logp;
    return sum / batch.size();
  };
  Rng probe_before(99);
  const double before = mean_neg_logp(probe_before);
  for (int k = 0; k < 60; ++k)
    stochastic_actor_update(policy, critics, batch, 5.0, opt, rng);
  Rng probe_after(99);
  const double after = mean_neg_logp(probe_after);
  CHECK(after > before);
}

TEST_CASE("stochastic actor objective matches a straight-line evaluation") {
  Rng rng(13);
  StochasticPolicy policy{make_mlp({30, 8, 8, 6}, OutputActivation::Identity, rng)};
  TwinCritics critics = make_twin_critics(30, 3, {8}, rng);
  std::vector<Experience> batch;
  for (int k = 0; k < 5; ++k) batch.push_back(random_experience(rng, -2.0));
  const double beta = 1.7;

  // Replicate the update's draws with an identical rng, composing the
  // objective from forward passes only.
  const StochasticPolicy frozen = policy;
  Rng replay(555);
  double expected = 0.0;
  for (const auto& ex : batch) {
    const auto out = forward(frozen.net, ex.s);
    double logp = 0.0;
    std::array<double, 3> a{};
    for (int i = 0; i < 3; ++i) {
      const double t = std::clamp(out[3 + i], -20.0, 2.0);
      const double sd = std::exp(t);
      const double zeta = replay.normal();
      const double z = out[i] + sd * zeta;
      a[i] = std::tanh(z);
      logp += -0.5 * std::log(2.0 * std::numbers::pi) - t - 0.5 * zeta * zeta -
              std::log1p(-a[i] * a[i]);
    }
    std::vector<double> x(ex.s);
    x.insert(x.end(), a.begin(), a.end());
    expected += std::min(forward(critics.q1, x)[0], forward(critics.q2, x)[0]) - beta * logp;
  }
  expected /= batch.size();

  OptimizerState opt = make_optimizer(policy.net, 0.02);
  Rng update_rng(555);
  const double obj = stochastic_actor_update(policy, critics, batch, beta, opt, update_rng);
  CHECK(obj == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("deterministic actor climbs a critic that rewards larger actions") {
  Rng rng(14);
  DeterministicPolicy policy;
  policy.net = make_mlp({30, 8, 3}, OutputActivation::Tanh, rng);
  policy.net_target = policy.net;

  TwinCritics critics;
  Mlp q;
  q.layer_dims = {33, 1};
  q.weights = {std::vector<double>(33, 0.0)};
  for (int i = 30; i < 33; ++i) q.weights[0][i] = 2.0;  // positive action coefficients
  q.biases = {{0.0}};
  critics.q1 = critics.q2 = critics.q1_target = critics.q2_target = q;

  std::vector<Experience> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(random_experience(rng, 0.0));
  OptimizerState opt = make_optimizer(policy.net, 0.02);

  std::vector<std::vector<double>> before;
  for (const auto& ex : batch) before.push_back(forward(policy.net, ex.s));
  for (int k = 0; k < 5; ++k) deterministic_actor_update(policy, critics, batch, opt);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto after = forward(policy.net, batch[i].s);
    for (int d = 0; d < 3; ++d) CHECK(after[d] > before[i][d]);
  }
}

TEST_CASE("deterministic actor update is a no-op under a constant critic") {
  Rng rng(15);
  DeterministicPolicy policy;
  policy.net = make_mlp({30, 8, 3}, OutputActivation::Tanh, rng);
  policy.net_target = policy.net;
  const TwinCritics critics = constant_twins(-5.0, -5.0);
  OptimizerState opt = make_optimizer(policy.net, 0.02);
  std::vector<Experience> batch{random_experience(rng, 0.0)};
  const std::uint64_t before = params_checksum(policy.net);
  const double obj = deterministic_actor_update(policy, critics, batch, opt);
  CHECK(params_checksum(policy.net) == before);
  CHECK(obj == doctest::Approx(-5.0));
}

TEST_CASE("act with zero exploration noise returns the deterministic action") {
  Rng rng(16);
  DeterministicPolicy policy;
  policy.net = make_mlp({30, 8, 3}, OutputActivation::Tanh, rng);
  policy.net_target = policy.net;
  Schedules sch;
  sch.sigma2 = 0.0;
  const EnvState s = random_state(rng);
  const Action a = act(Stage::Exploit, s, std::nullopt, policy, sch, ActionBox{}, rng);
  const auto mu = forward(policy.net, s);
  for (int d = 0; d < 3; ++d) CHECK(a[d] == mu[d]);
}

TEST_CASE("actions stay in bounds over 1e4 draws") {
  Rng rng(18);
  DeterministicPolicy det;
  det.net = make_mlp({30, 8, 3}, OutputActivation::Tanh, rng);
  det.net_target = det.net;
  const std::optional<StochasticPolicy> sto{
      StochasticPolicy{make_mlp({30, 8, 6}, OutputActivation::Identity, rng)}};
  Schedules sch;
  sch.sigma2 = 1.0;  // deliberately large
  for (int k = 0; k < 10000; ++k) {
    const EnvState s = random_state(rng);
    const Action a = k % 2 ? act(Stage::Exploit, s, sto, det, sch, ActionBox{}, rng)
                           : act(Stage::Warmup, s, sto, det, sch, ActionBox{}, rng);
    for (double v : a) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("schedule arithmetic") {
  Schedules sch;  // beta0 = 2, increment 0.005, sigma2 0.05, decay 0.005
  CHECK(sch.beta() == doctest::Approx(2.0));
  advance_schedules(sch, Stage::Warmup);
  CHECK(sch.beta() == doctest::Approx(1.0 / 0.505).epsilon(1e-12));
  CHECK(sch.sigma2 == 0.05);  // untouched during warm-up

  advance_schedules(sch, Stage::Exploit);
  CHECK(sch.sigma2 == doctest::Approx(0.04975).epsilon(1e-12));

  Schedules sub;
  sub.multiplicative_decay = false;
  advance_schedules(sub, Stage::Exploit);
  CHECK(sub.sigma2 == doctest::Approx(0.045).epsilon(1e-12));
}

TEST_CASE("beta decreases monotonically and stays positive") {
  Schedules sch;
  double prev = sch.beta();
  for (int k = 0; k < 10000; ++k) {
    advance_schedules(sch, Stage::Warmup);
    CHECK(sch.beta() > 0.0);
    CHECK(sch.beta() < prev);
    prev = sch.beta();
  }
}

TEST_CASE("trainer skips updates until the buffer holds one batch") {
  AgentConfig agent;  // batch_size 40
  agent.budget = 45;
  Trainer trainer(Algorithm::Emtd3, EpisodeConfig{}, agent, Schedules{}, PlantModel{}, 4);
  for (int k = 0; k < 45; ++k) {
    const TrainRecord rec = trainer.step();
    if (k < 39) {
      CHECK(std::isnan(rec.critic_loss_1));
      CHECK(std::isnan(rec.critic_loss_2));
      CHECK(std::isnan(rec.actor_objective));
    } else {
      CHECK(std::isfinite(rec.critic_loss_1));
      CHECK(std::isfinite(rec.critic_loss_2));
    }
  }
}

TEST_CASE("equal seeds give identical runs") {
  const auto run_some = [](std::uint64_t seed) {
    EpisodeConfig episode = small_episode();
    AgentConfig agent = small_agent();
    Schedules sch;
    sch.warmup = 5;
    Trainer trainer(Algorithm::Emtd3, episode, agent, sch, PlantModel{}, seed);
    std::vector<TrainRecord> records;
    for (int k = 0; k < 20; ++k) records.push_back(trainer.step());
    return records;
  };
  const auto a = run_some(12), b = run_some(12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].params.kp == b[k].params.kp);
    CHECK(a[k].reward == b[k].reward);
    if (std::isfinite(a[k].critic_loss_1) || std::isfinite(b[k].critic_loss_1))
      CHECK(a[k].critic_loss_1 == b[k].critic_loss_1);
  }
}

TEST_CASE("stage boundary: last warm-up and first exploitation interaction") {
  EpisodeConfig episode = small_episode();
  AgentConfig agent = small_agent();
  agent.batch_size = 50;  // no updates interfere
  Schedules sch;
  sch.warmup = 2;
  Trainer trainer(Algorithm::Emtd3, episode, agent, sch, PlantModel{}, 5);
  CHECK(trainer.step().stage == Stage::Warmup);   // interaction 0
  CHECK(trainer.step().stage == Stage::Warmup);   // interaction warmup-1
  CHECK(trainer.step().stage == Stage::Exploit);  // interaction warmup
}

TEST_CASE("stage separation: each actor is touched only in its own stage") {
  EpisodeConfig episode = small_episode();
  AgentConfig agent = small_agent();
  Schedules sch;
  sch.warmup = 5;
  Trainer trainer(Algorithm::Emtd3, episode, agent, sch, PlantModel{}, 6);

  const std::uint64_t det_init = params_checksum(trainer.deterministic_policy().net);
  const std::uint64_t det_target_init =
      params_checksum(trainer.deterministic_policy().net_target);
  std::uint64_t sto_at_warmup_end = 0;
  for (int k = 0; k < 14; ++k) {
    trainer.step();
    if (k < 5) {
      CHECK(params_checksum(trainer.deterministic_policy().net) == det_init);
      CHECK(params_checksum(trainer.deterministic_policy().net_target) == det_target_init);
    }
    if (k == 4) sto_at_warmup_end = params_checksum(trainer.stochastic_policy()->net);
    if (k >= 5)
      CHECK(params_checksum(trainer.stochastic_policy()->net) == sto_at_warmup_end);
  }
  // the deterministic actor did move after the switch
  CHECK(params_checksum(trainer.deterministic_policy().net) != det_init);
}

TEST_CASE("deterministic actor honors the update period") {
  EpisodeConfig episode = small_episode();
  AgentConfig agent = small_agent();
  agent.batch_size = 1;
  Schedules sch;
  sch.policy_delay = 2;
  Trainer trainer(Algorithm::Td3, episode, agent, sch, PlantModel{}, 7);

  std::uint64_t prev = params_checksum(trainer.deterministic_policy().net);
  for (int k = 0; k < 10; ++k) {
    trainer.step();
    const std::uint64_t now = params_checksum(trainer.deterministic_policy().net);
    if (k % 2 == 0)
      CHECK(now != prev);
    else
      CHECK(now == prev);
    prev = now;
  }
}

TEST_CASE("td3 runs never construct the stochastic actor") {
  Trainer trainer(Algorithm::Td3, small_episode(), small_agent(), Schedules{}, PlantModel{}, 8);
  CHECK_FALSE(trainer.stochastic_policy().has_value());
  trainer.step();
  CHECK(trainer.step().stage == Stage::Exploit);
}

TEST_CASE("critic targets start as exact copies") {
  Rng rng(20);
  const TwinCritics critics = make_twin_critics(30, 3, {8, 8}, rng);
  CHECK(params_checksum(critics.q1) == params_checksum(critics.q1_target));
  CHECK(params_checksum(critics.q2) == params_checksum(critics.q2_target));
  CHECK(params_checksum(critics.q1) != params_checksum(critics.q2));
}

TEST_CASE("numerical failures carry the interaction index") {
  AgentConfig agent = small_agent();
  agent.batch_size = 1;
  agent.critic_lr = 1e300;  // drives critic outputs non-finite immediately
  Trainer trainer(Algorithm::Td3, small_episode(), agent, Schedules{}, PlantModel{}, 9);
  try {
    for (int k = 0; k < 5; ++k) trainer.step();
    FAIL("expected a NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.interaction >= 0);
  }
}
