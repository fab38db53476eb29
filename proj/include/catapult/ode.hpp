#pragma once

// Adaptive Dormand-Prince 5(4) for Eigen-valued states. The integrator
// lands exactly on every requested output time; no dense output.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "catapult/error.hpp"

namespace catapult::ode {

struct Options {
  double rtol = 1e-8;
  double atol = 1e-10;
  double first_step = 0.0;  // 0: guess from the span
  double min_step = 0.0;    // 0: relative to the time scale
  long max_steps = 5'000'000;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

/// Integrates y' = f(t, y) from times.front() and calls observe(t, y) at each
/// entry of `times` (including the first). times must be non-decreasing.
template <class State, class Rhs, class Observer>
Stats integrate(Rhs&& f, State y, const std::vector<double>& times, Observer&& observe, const Options& opt = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats stats;
  if (times.empty()) return stats;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) throw Error(ErrorCode::invalid_argument, "output times must be non-decreasing");
  }
  double t = times.front();
  const double span = times.back() - times.front();
  double h = opt.first_step > 0.0 ? opt.first_step : (span > 0.0 ? span * 1e-4 : 1.0);
  const double h_min = opt.min_step > 0.0 ? opt.min_step : std::max(std::abs(span), std::abs(t)) * 1e-14;

  observe(t, y);
  State k1 = f(t, y);
  ++stats.evaluations;
  for (std::size_t out = 1; out < times.size(); ++out) {
    const double t_target = times[out];
    while (t < t_target) {
      if (stats.accepted + stats.rejected > opt.max_steps) {
        throw Error(ErrorCode::step_underflow, "integrator exceeded the maximum number of steps");
      }
      const double h_proposed = h;
      bool last = false;
      if (t + h >= t_target) {
        h = t_target - t;
        last = true;
      }
      const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
      const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
      const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
      const State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
      const State k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
      State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = f(t + h, y_new);
      stats.evaluations += 6;
      const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      const double scale = opt.atol + opt.rtol * std::max(y.cwiseAbs().maxCoeff(), y_new.cwiseAbs().maxCoeff());
      const double en = err.cwiseAbs().maxCoeff() / scale;
      if (!std::isfinite(en)) throw Error(ErrorCode::step_underflow, "integrator produced non-finite values");
      if (en <= 1.0) {
        t = last ? t_target : t + h;
        y = std::move(y_new);
        k1 = k7;  // first-same-as-last
        ++stats.accepted;
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = last ? std::max(h_proposed, h * fac) : h * fac;
      } else {
        ++stats.rejected;
        h *= std::clamp(0.9 * std::pow(en, -0.25), 0.1, 0.9);
        if (h < h_min) throw Error(ErrorCode::step_underflow, "integrator step size underflow");
      }
    }
    observe(t, y);
  }
  return stats;
}

}  // namespace catapult::ode
