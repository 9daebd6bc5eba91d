#include <cmath>

#include "doctest.h"
#include "pidtune/config.hpp"
#include "pidtune/env.hpp"
#include "pidtune/rng.hpp"

using namespace pidtune;

namespace {
EpisodeConfig case1_episode() { return EpisodeConfig{}; }
ActionBox case2_box() { return ActionBox{{0, 20}, {0, 20}, {0, 20}}; }
}  // namespace

TEST_CASE("scale_action midpoint and corners") {
  const EpisodeConfig cfg = case1_episode();
  const PidParams mid = scale_action({0.0, 0.0, 0.0}, cfg.action_box, cfg.tau_i_floor);
  CHECK(mid.kp == doctest::Approx(7.5));
  CHECK(mid.tau_i == doctest::Approx(7.5));
  CHECK(mid.tau_d == doctest::Approx(5.0));

  const PidParams lo = scale_action({-1.0, -1.0, -1.0}, cfg.action_box, cfg.tau_i_floor);
  CHECK(lo.kp == 0.0);
  CHECK(lo.tau_i == 0.05);  // tau_i floor
  CHECK(lo.tau_d == 0.0);

  const PidParams hi = scale_action({1.0, 1.0, 1.0}, case2_box(), cfg.tau_i_floor);
  CHECK(hi.kp == 20.0);
  CHECK(hi.tau_i == 20.0);
  CHECK(hi.tau_d == 20.0);
}

TEST_CASE("scale_action clips out-of-range input") {
  const EpisodeConfig cfg = case1_episode();
  const PidParams p = scale_action({1.5, -2.0, 0.0}, cfg.action_box, cfg.tau_i_floor);
  CHECK(p.kp == 15.0);
  CHECK(p.tau_i == 0.05);
}

TEST_CASE("scale_action is monotone and invertible off the floor") {
  ActionBox box{{0, 15}, {1, 15}, {0, 10}};  // tau_i low end above the floor
  Rng rng(17);
  double prev = -1.0;
  for (double a = -1.0; a <= 1.0; a += 0.125) {
    const PidParams p = scale_action({a, a, a}, box, 0.05);
    if (a > -1.0) CHECK(p.kp > prev);
    prev = p.kp;
    // invert the affine map and recover the normalized coordinate
    const double back = 2.0 * (p.tau_i - box.tau_i.lo) / (box.tau_i.hi - box.tau_i.lo) - 1.0;
    CHECK(back == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("run_episode shape contract and zero-gain behavior") {
  const EpisodeConfig cfg = case1_episode();
  const DiscreteSS plant = discretize(PlantModel{});
  const Trajectory traj = run_episode(plant, PidParams{0.0, 1.0, 0.0}, cfg);
  CHECK(traj.y.size() == 200);
  CHECK(traj.u.size() == 200);
  CHECK(traj.y_sp.size() == 200);
  CHECK_FALSE(traj.diverged);
  for (double u : traj.u) CHECK(u == 0.0);
  for (double y : traj.y) CHECK(y == 0.0);  // open-loop zero response
  CHECK(reward(traj) == doctest::Approx(-11250.0));
}

TEST_CASE("run_episode saturates u within limits") {
  const EpisodeConfig cfg = case1_episode();
  const DiscreteSS plant = discretize(PlantModel{});
  const Trajectory traj = run_episode(plant, PidParams{15.0, 0.05, 10.0}, cfg);
  for (double u : traj.u) {
    CHECK(u >= cfg.limits.u_min);
    CHECK(u <= cfg.limits.u_max);
  }
}

TEST_CASE("run_episode is deterministic") {
  const EpisodeConfig cfg = case1_episode();
  const DiscreteSS plant = discretize(PlantModel{});
  const PidParams p{2.0, 10.0, 3.0};
  const Trajectory t1 = run_episode(plant, p, cfg);
  const Trajectory t2 = run_episode(plant, p, cfg);
  CHECK(t1.y == t2.y);
  CHECK(t1.u == t2.u);
}

TEST_CASE("diverging plant aborts the episode at the failure floor") {
  // Hand-built unstable recursion; not reachable through discretize.
  DiscreteSS unstable;
  unstable.a = {2.0, 0.0, 0.0, 2.0};
  unstable.b = {1.0, 1.0};
  unstable.c = {1e300, 0.0};
  unstable.delay_steps = 0;
  unstable.dt = 1.0;
  const EpisodeConfig cfg = case1_episode();
  const Trajectory traj = run_episode(unstable, PidParams{15.0, 0.05, 0.0}, cfg);
  CHECK(traj.diverged);
  CHECK(traj.y.size() == traj.u.size());
  CHECK(traj.y.size() == traj.y_sp.size());
  CHECK(episode_reward(traj, cfg) == doctest::Approx(-22500.0));
}

TEST_CASE("make_state subsamples at the uniform stride") {
  const EpisodeConfig cfg = case1_episode();  // horizon 200, 10 points, stride 20
  Trajectory traj;
  for (int k = 0; k < 200; ++k) {
    traj.y.push_back(k);          // y sample = its index
    traj.u.push_back(1000 + k);
    traj.y_sp.push_back(7.5);
  }
  const EnvState s = make_state(traj, cfg);
  REQUIRE(s.size() == 30);
  for (int i = 0; i < 10; ++i) {
    CHECK(s[i] == 20.0 * i);            // y block: indices 0, 20, ..., 180
    CHECK(s[10 + i] == 1000.0 + 20 * i);  // u block
    CHECK(s[20 + i] == 7.5);            // setpoint block
  }
}

TEST_CASE("make_state of an all-zero trajectory is zero in y and u") {
  const EpisodeConfig cfg = case1_episode();
  const DiscreteSS plant = discretize(PlantModel{});
  const EnvState s = make_state(run_episode(plant, PidParams{0.0, 1.0, 0.0}, cfg), cfg);
  for (int i = 0; i < 20; ++i) CHECK(s[i] == 0.0);
  for (int i = 20; i < 30; ++i) CHECK(s[i] == 7.5);
}

TEST_CASE("initial state is all zeros") {
  const EnvState s = initial_state(case1_episode());
  REQUIRE(s.size() == 30);
  for (double v : s) CHECK(v == 0.0);
}

TEST_CASE("reward arithmetic") {
  Trajectory traj;
  traj.y = {0.0, 0.0, 0.0};
  traj.u = {0.0, 0.0, 0.0};
  traj.y_sp = {1.0, 2.0, 3.0};
  CHECK(reward(traj) == -14.0);  // errors 1, 2, 3

  Trajectory perfect;
  perfect.y = {7.5, 7.5};
  perfect.u = {25.0, 25.0};
  perfect.y_sp = {7.5, 7.5};
  CHECK(reward(perfect) == 0.0);
}

TEST_CASE("reward is translation-consistent") {
  Rng rng(13);
  Trajectory traj;
  for (int k = 0; k < 50; ++k) {
    traj.y.push_back(rng.uniform(-5.0, 5.0));
    traj.u.push_back(0.0);
    traj.y_sp.push_back(rng.uniform(-5.0, 5.0));
  }
  Trajectory shifted = traj;
  for (int k = 0; k < 50; ++k) {
    shifted.y[k] += 3.25;
    shifted.y_sp[k] += 3.25;
  }
  CHECK(reward(shifted) == doctest::Approx(reward(traj)).epsilon(1e-12));
}

TEST_CASE("do-nothing floor anchors the reward scale") {
  const EpisodeConfig cfg = case1_episode();
  CHECK(cfg.do_nothing_floor() == -11250.0);
  CHECK(cfg.failure_floor() == -22500.0);
}
