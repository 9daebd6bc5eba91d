#pragma once

namespace pidtune {

/// The three tuning parameters. tau_i may be +infinity to disable the
/// integral term; it must never be zero or negative.
struct PidParams {
  double kp = 0.0;
  double tau_i = 1.0;
  double tau_d = 0.0;
};

/// Controller memory between samples.
struct PidState {
  double integral_sum = 0.0;  // accumulated error * dt
  double prev_error = 0.0;
};

/// Manipulated-variable bounds.
struct Limits {
  double u_min = -20.0;
  double u_max = 100.0;
};

PidState pid_reset();

/// One sample of the positional PID law with output saturation and
/// conditional integration: when the raw output falls outside the limits
/// and the current error would push it further out, the integral
/// accumulation for this step is discarded. Throws std::domain_error on a
/// non-finite error (a diverged loop upstream) and std::invalid_argument
/// when tau_i is not positive.
double pid_step(const PidParams& params, PidState& state, double error, double dt,
                const Limits& limits);

}  // namespace pidtune
