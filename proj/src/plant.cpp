#include "pidtune/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pidtune {
namespace {

// 3x3 helpers for the augmented ZOH exponential. Small and fixed-size, so a
// scaled-and-squared Taylor series reaches machine precision in a few terms.
using Mat3 = std::array<double, 9>;

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      const double aik = a[3 * i + k];
      for (int j = 0; j < 3; ++j) out[3 * i + j] += aik * b[3 * k + j];
    }
  return out;
}

double inf_norm(const Mat3& m) {
  double best = 0.0;
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 3; ++j) row += std::abs(m[3 * i + j]);
    best = std::max(best, row);
  }
  return best;
}

Mat3 expm(Mat3 m) {
  int squarings = 0;
  for (double norm = inf_norm(m); norm > 0.5; norm *= 0.5, ++squarings)
    for (double& v : m) v *= 0.5;

  Mat3 sum{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Mat3 term = sum;
  for (int k = 1; k <= 40; ++k) {
    term = mat_mul(term, m);
    for (double& v : term) v /= k;
    for (int i = 0; i < 9; ++i) sum[i] += term[i];
    if (inf_norm(term) < 1e-18) break;
  }
  for (int i = 0; i < squarings; ++i) sum = mat_mul(sum, sum);
  return sum;
}

}  // namespace

DiscreteSS discretize(const PlantModel& model) {
  if (!(model.dt > 0.0)) throw std::invalid_argument("plant: dt must be positive");
  if (!(model.a2 > 0.0) || !(model.a0 > 0.0))
    throw std::invalid_argument("plant: a2 and a0 must be positive");
  if (!(model.dead_time >= 0.0))
    throw std::invalid_argument("plant: dead_time must be non-negative");

  const double ratio = model.dead_time / model.dt;
  const long long steps = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("plant: dead_time must be an integer multiple of dt");

  // Controllable canonical form of gain / (a2 s^2 + a1 s + a0):
  //   x1' = x2, x2' = (-a0 x1 - a1 x2 + gain u) / a2, y = x1.
  const double a21 = -model.a0 / model.a2;
  const double a22 = -model.a1 / model.a2;
  const double b2 = model.gain / model.a2;

  Mat3 aug{0.0, 1.0, 0.0, a21, a22, b2, 0.0, 0.0, 0.0};
  for (double& v : aug) v *= model.dt;
  const Mat3 e = expm(aug);

  DiscreteSS ss;
  ss.a = {e[0], e[1], e[3], e[4]};
  ss.b = {e[2], e[5]};
  ss.c = {1.0, 0.0};
  ss.d = 0.0;
  ss.delay_steps = static_cast<int>(steps);
  ss.dt = model.dt;
  return ss;
}

PlantState reset(const DiscreteSS& ss) {
  PlantState state;
  state.delay_line.assign(static_cast<std::size_t>(ss.delay_steps), 0.0);
  return state;
}

double step(const DiscreteSS& ss, PlantState& state, double u) {
  double delayed = u;
  if (!state.delay_line.empty()) {
    delayed = state.delay_line[state.head];
    state.delay_line[state.head] = u;
    state.head = (state.head + 1) % state.delay_line.size();
  }
  const double x0 = state.x[0];
  const double x1 = state.x[1];
  state.x[0] = ss.a[0] * x0 + ss.a[1] * x1 + ss.b[0] * delayed;
  state.x[1] = ss.a[2] * x0 + ss.a[3] * x1 + ss.b[1] * delayed;
  return ss.c[0] * state.x[0] + ss.c[1] * state.x[1];
}

}  // namespace pidtune
