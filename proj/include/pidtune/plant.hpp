#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pidtune {

/// Continuous second-order-plus-dead-time process
///   G(s) = gain / (a2 s^2 + a1 s + a0) * exp(-dead_time * s)
/// sampled every dt seconds. dead_time must be an integer multiple of dt.
struct PlantModel {
  double gain = 0.3;
  double a2 = 25.0;
  double a1 = 10.0;
  double a0 = 1.0;
  double dead_time = 10.0;
  double dt = 1.0;
};

/// Exact zero-order-hold discretization of the delay-free part of the plant,
/// x_{k+1} = A x_k + B u_k, y = C x. The dead time is realized separately as
/// a pure input delay of delay_steps samples.
struct DiscreteSS {
  std::array<double, 4> a{};  // 2x2, row-major
  std::array<double, 2> b{};
  std::array<double, 2> c{};
  double d = 0.0;  // strictly proper, stays 0
  int delay_steps = 0;
  double dt = 1.0;
};

/// Simulation state: internal 2-vector plus the ring buffer holding the last
/// delay_steps inputs. A fresh state is all-zero (plant at rest).
struct PlantState {
  std::array<double, 2> x{};
  std::vector<double> delay_line;
  std::size_t head = 0;
};

/// Zero-order-hold discretization via the matrix exponential of the
/// augmented [A B; 0 0] system. Throws std::invalid_argument on a
/// non-positive dt, non-positive a2/a0, or a dead time that is not an
/// integer multiple of dt.
DiscreteSS discretize(const PlantModel& model);

/// All-zero state sized for the given system.
PlantState reset(const DiscreteSS& ss);

/// Pushes u into the delay line, pops the delayed input u_d, advances
/// x <- A x + B u_d and returns the new output C x. Pure function of
/// (state, u); all state lives in PlantState.
double step(const DiscreteSS& ss, PlantState& state, double u);

}  // namespace pidtune
