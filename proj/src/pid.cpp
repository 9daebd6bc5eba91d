#include "pidtune/pid.hpp"

#include <cmath>
#include <stdexcept>

namespace pidtune {

PidState pid_reset() { return PidState{}; }

double pid_step(const PidParams& params, PidState& state, double error, double dt,
                const Limits& limits) {
  if (!std::isfinite(error)) throw std::domain_error("pid: non-finite error");
  if (!(params.tau_i > 0.0)) throw std::invalid_argument("pid: tau_i must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("pid: dt must be positive");

  const double provisional = state.integral_sum + error * dt;
  const double integral_term =
      std::isfinite(params.tau_i) ? provisional / params.tau_i : 0.0;
  const double derivative_term = params.tau_d * (error - state.prev_error) / dt;
  const double u_raw = params.kp * (error + integral_term + derivative_term);

  double u = u_raw;
  bool freeze_integral = false;
  if (u_raw > limits.u_max) {
    u = limits.u_max;
    freeze_integral = error > 0.0;
  } else if (u_raw < limits.u_min) {
    u = limits.u_min;
    freeze_integral = error < 0.0;
  }
  if (!freeze_integral) state.integral_sum = provisional;
  state.prev_error = error;
  return u;
}

}  // namespace pidtune
