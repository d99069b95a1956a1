#pragma once

#include "ratunnel/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace ratunnel::ode {

template <class T, std::size_t K> using State = std::array<T, K>;

struct Options {
  double rtol = 1e-11;
  double atol = 1e-13;
  double h_init = 1e-3;
  double h_max = 0.05;
  double h_min = 1e-14;
  long max_steps = 20'000'000;
};

template <class T, std::size_t K>
State<T, K> axpy(const State<T, K>& y, double h, const State<T, K>& k) {
  State<T, K> out;
  for (std::size_t i = 0; i < K; ++i) {
    out[i] = y[i] + h * k[i];
  }
  return out;
}

/// Dormand-Prince 5(4) step; writes the embedded error estimate to `err`.
template <class T, std::size_t K, class F>
State<T, K> dopri_step(F& f, double s, const State<T, K>& y, double h, State<T, K>& err) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  State<T, K> k1 = f(s, y);
  State<T, K> tmp;
  for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + h * (a21 * k1[i]);
  const State<T, K> k2 = f(s + c2 * h, tmp);
  for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  const State<T, K> k3 = f(s + c3 * h, tmp);
  for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  const State<T, K> k4 = f(s + c4 * h, tmp);
  for (std::size_t i = 0; i < K; ++i)
    tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  const State<T, K> k5 = f(s + c5 * h, tmp);
  for (std::size_t i = 0; i < K; ++i)
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  const State<T, K> k6 = f(s + h, tmp);
  State<T, K> out;
  for (std::size_t i = 0; i < K; ++i)
    out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  const State<T, K> k7 = f(s + h, out);
  for (std::size_t i = 0; i < K; ++i)
    err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  return out;
}

/// Single step without error control, for event refinement inside an accepted step.
template <class T, std::size_t K, class F>
State<T, K> advance(F& f, double s, const State<T, K>& y, double h) {
  State<T, K> err;
  return dopri_step<T, K>(f, s, y, h, err);
}

template <class T, std::size_t K>
double error_norm(const State<T, K>& y0, const State<T, K>& y1, const State<T, K>& err,
                  const Options& opt) {
  double worst = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double scale = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

/// Adaptive integration from s0 towards s_end. The observer is called after
/// every accepted step as observer(s_prev, y_prev, s, y) and returns false to
/// stop. Returns the final (s, y).
template <class T, std::size_t K, class F, class Observer>
std::pair<double, State<T, K>> integrate(F&& f, double s0, State<T, K> y0, double s_end,
                                         const Options& opt, Observer&& observer) {
  double s = s0;
  State<T, K> y = y0;
  double h = std::min(opt.h_init, opt.h_max);
  long steps = 0;
  while (s < s_end) {
    if (++steps > opt.max_steps) {
      throw StepFailure("step budget exhausted");
    }
    h = std::min({h, opt.h_max, s_end - s});
    State<T, K> err;
    const State<T, K> trial = dopri_step<T, K>(f, s, y, h, err);
    double en = error_norm<T, K>(y, trial, err, opt);
    if (!std::isfinite(en)) {
      en = 1e10;
    }
    if (en <= 1.0) {
      const double s_prev = s;
      const State<T, K> y_prev = y;
      s = (s_end - s <= h) ? s_end : s + h;
      y = trial;
      const double grow = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h *= grow;
      if (!observer(s_prev, y_prev, s, y)) {
        break;
      }
    } else {
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      if (h < opt.h_min) {
        throw StepFailure("step size underflow at s = " + std::to_string(s));
      }
    }
  }
  return {s, y};
}

} // namespace ratunnel::ode
