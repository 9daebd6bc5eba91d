#include "pidtune/env.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace pidtune {
namespace {

double affine(double v, const Bounds& b) { return b.lo + (v + 1.0) * 0.5 * (b.hi - b.lo); }

double clip_with_warning(double v) {
  if (v < -1.0 || v > 1.0) {
    std::cerr << "pidtune: warning: normalized action component " << v
              << " outside [-1,1], clipping\n";
    return std::clamp(v, -1.0, 1.0);
  }
  return v;
}

}  // namespace

PidParams scale_action(const Action& a_norm, const ActionBox& box, double tau_i_floor) {
  const double a0 = clip_with_warning(a_norm[0]);
  const double a1 = clip_with_warning(a_norm[1]);
  const double a2 = clip_with_warning(a_norm[2]);
  PidParams p;
  p.kp = affine(a0, box.kp);
  p.tau_i = std::max(affine(a1, box.tau_i), tau_i_floor);
  p.tau_d = affine(a2, box.tau_d);
  return p;
}

Trajectory run_episode(const DiscreteSS& plant, const PidParams& params,
                       const EpisodeConfig& cfg) {
  if (cfg.horizon < 1) throw std::invalid_argument("env: horizon must be >= 1");
  Trajectory traj;
  traj.y.reserve(cfg.horizon);
  traj.u.reserve(cfg.horizon);
  traj.y_sp.reserve(cfg.horizon);

  PlantState plant_state = reset(plant);
  PidState pid_state = pid_reset();
  double y = 0.0;
  for (int k = 0; k < cfg.horizon; ++k) {
    if (!std::isfinite(y)) {
      traj.diverged = true;
      break;
    }
    const double error = cfg.setpoint - y;
    const double u = pid_step(params, pid_state, error, cfg.dt, cfg.limits);
    traj.y.push_back(y);
    traj.u.push_back(u);
    traj.y_sp.push_back(cfg.setpoint);
    y = step(plant, plant_state, u);
  }
  return traj;
}

EnvState make_state(const Trajectory& traj, const EpisodeConfig& cfg) {
  if (cfg.state_points < 1 || cfg.horizon < cfg.state_points ||
      cfg.horizon % cfg.state_points != 0)
    throw std::invalid_argument("env: horizon must be a positive multiple of state_points");

  EnvState s;
  s.reserve(cfg.state_dim());
  const int stride = cfg.stride();
  const auto sample = [&](const std::vector<double>& channel) {
    for (int i = 0; i < cfg.state_points; ++i) {
      if (channel.empty()) {
        s.push_back(0.0);
        continue;
      }
      const std::size_t idx =
          std::min(static_cast<std::size_t>(i) * stride, channel.size() - 1);
      s.push_back(channel[idx]);
    }
  };
  sample(traj.y);
  sample(traj.u);
  sample(traj.y_sp);
  return s;
}

EnvState initial_state(const EpisodeConfig& cfg) {
  return EnvState(static_cast<std::size_t>(cfg.state_dim()), 0.0);
}

double reward(const Trajectory& traj) {
  double sum = 0.0;
  for (std::size_t i = 0; i < traj.y.size(); ++i) {
    const double e = traj.y_sp[i] - traj.y[i];
    sum += e * e;
  }
  return -sum;
}

double episode_reward(const Trajectory& traj, const EpisodeConfig& cfg) {
  return traj.diverged ? cfg.failure_floor() : reward(traj);
}

}  // namespace pidtune
