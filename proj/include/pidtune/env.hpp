#pragma once

#include <array>
#include <vector>

#include "pidtune/pid.hpp"
#include "pidtune/plant.hpp"

namespace pidtune {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

/// Per-dimension action bounds for (kp, tau_i, tau_d).
struct ActionBox {
  Bounds kp{0.0, 15.0};
  Bounds tau_i{0.0, 15.0};
  Bounds tau_d{0.0, 10.0};
};

/// One closed-loop run per agent-environment interaction.
struct EpisodeConfig {
  int horizon = 200;      // control steps per closed-loop run
  double dt = 1.0;
  double setpoint = 7.5;
  Limits limits{-20.0, 100.0};
  ActionBox action_box{};
  int state_points = 10;  // samples kept per trajectory channel
  double tau_i_floor = 0.05;

  int stride() const { return horizon / state_points; }
  int state_dim() const { return 3 * state_points; }
  /// Reward of a zero-gain controller; the scale anchor for learning curves.
  double do_nothing_floor() const {
    return -static_cast<double>(horizon) * setpoint * setpoint;
  }
  /// Reward assigned to an episode that produced a non-finite output.
  double failure_floor() const { return 2.0 * do_nothing_floor(); }
};

/// Full record of one closed-loop run. All channels have equal length;
/// every u is inside the limits. diverged marks an aborted episode.
struct Trajectory {
  std::vector<double> y;
  std::vector<double> u;
  std::vector<double> y_sp;
  bool diverged = false;
};

/// Subsampled trajectory summary: y block, then u block, then y_sp block.
using EnvState = std::vector<double>;

/// Normalized action, componentwise in [-1, 1].
using Action = std::array<double, 3>;

struct Experience {
  EnvState s;
  Action a;
  double r = 0.0;
  EnvState s_next;
};

/// Affine map from the normalized action onto the box, followed by the
/// tau_i floor. Out-of-range components are clipped with a warning on
/// stderr; agents clip upstream, this is a safety net.
PidParams scale_action(const Action& a_norm, const ActionBox& box, double tau_i_floor);

/// Runs one episode from fresh plant and controller state. Deterministic.
/// A non-finite output aborts the episode and sets diverged.
Trajectory run_episode(const DiscreteSS& plant, const PidParams& params,
                       const EpisodeConfig& cfg);

/// Uniform subsample at indices 0, stride, 2*stride, ... of each channel.
EnvState make_state(const Trajectory& traj, const EpisodeConfig& cfg);

/// The state observed before any episode has run: all zeros.
EnvState initial_state(const EpisodeConfig& cfg);

/// Negated sum of squared tracking errors over the recorded samples.
double reward(const Trajectory& traj);

/// reward(), or the failure floor when the episode diverged.
double episode_reward(const Trajectory& traj, const EpisodeConfig& cfg);

}  // namespace pidtune
