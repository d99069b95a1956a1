#include "ratunnel/classical.hpp"

#include "ratunnel/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace ratunnel {

const char* to_string(Branch b) { return b == Branch::Inner ? "inner" : "outer"; }

namespace {

using RealState = ode::State<double, 2>;

struct RealFlow {
  const ModelParams* params;
  RealState operator()(double, const RealState& y) const {
    const auto g = grad_H(y[0], y[1], *params);
    return {-g.dq, g.dp};
  }
};

double polar_angle(double p, double q) { return std::atan2(q - kHalfPi, p - kHalfPi); }

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

} // namespace

Orbit integrate_orbit(PhasePoint start, const ModelParams& params, const StopCondition& until,
                      const ode::Options& opt) {
  RealFlow flow{&params};
  Orbit orbit;
  orbit.samples.push_back({0.0, start.p, start.q});
  const double E = eval_H(start.p, start.q, params);
  const auto g0 = grad_H(start.p, start.q, params);
  if (std::hypot(g0.dp, g0.dq) < 1e-13) {
    if (until.kind == StopCondition::Kind::Duration) {
      orbit.samples.push_back({until.duration, start.p, start.q});
      orbit.duration = until.duration;
    }
    return orbit;
  }

  const auto track = [&](double s, const RealState& y) {
    orbit.samples.push_back({s, y[0], y[1]});
    orbit.max_energy_drift = std::max(orbit.max_energy_drift, std::abs(eval_H(y[0], y[1], params) - E));
  };

  if (until.kind == StopCondition::Kind::Duration) {
    ode::integrate<double, 2>(flow, 0.0, RealState{start.p, start.q}, until.duration, opt,
                              [&](double, const RealState&, double s, const RealState& y) {
                                track(s, y);
                                return true;
                              });
    orbit.duration = until.duration;
    return orbit;
  }

  // FirstReturn: unwrap the polar angle about the island centre.
  double unwrapped = 0.0;
  bool returned = false;
  double farthest = 0.0;
  const auto angle_increment = [&](const RealState& a, const RealState& b) {
    return wrap_angle(polar_angle(b[0], b[1]) - polar_angle(a[0], a[1]));
  };
  ode::integrate<double, 2>(
      flow, 0.0, RealState{start.p, start.q}, until.max_time, opt,
      [&](double s_prev, const RealState& y_prev, double s, const RealState& y) {
        const double next = unwrapped + angle_increment(y_prev, y);
        if (std::abs(next) >= 2.0 * kPi) {
          const double target = std::copysign(2.0 * kPi, next);
          double lo = 0.0;
          double hi = s - s_prev;
          for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, s); ++it) {
            const double mid = 0.5 * (lo + hi);
            const RealState ym = ode::advance<double, 2>(flow, s_prev, y_prev, mid);
            const double am = unwrapped + angle_increment(y_prev, ym);
            if (std::abs(am) >= std::abs(target)) {
              hi = mid;
            } else {
              lo = mid;
            }
          }
          const double h = 0.5 * (lo + hi);
          track(s_prev + h, ode::advance<double, 2>(flow, s_prev, y_prev, h));
          orbit.duration = s_prev + h;
          orbit.winding = next > 0 ? 1 : -1;
          returned = true;
          return false;
        }
        unwrapped = next;
        track(s, y);
        const double dist = std::hypot(y[0] - start.p, y[1] - start.q);
        const double stride = std::hypot(y[0] - y_prev[0], y[1] - y_prev[1]);
        farthest = std::max(farthest, dist);
        const double near = 2.0 * stride + 1e-3;
        if (farthest > 4.0 * near && dist < near && std::abs(unwrapped) < kPi) {
          throw NoReturn("closed orbit does not wind around the island centre");
        }
        return true;
      });
  if (!returned) {
    throw NoReturn("no first return within t = " + std::to_string(until.max_time));
  }
  return orbit;
}

EnergyLandscape energy_landscape(const ModelParams& params) {
  EnergyLandscape out;
  out.separatrix = main_saddle(params).energy;
  out.chain = chain_saddle(params).energy;
  out.crown = crown_energy(params);
  return out;
}

RayCrossings ray_crossings(double E, double alpha, const ModelParams& params,
                           double separatrix_energy) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const auto f = [&](double r) { return eval_H(kHalfPi + r * c, kHalfPi + r * s, params) - E; };
  constexpr double dr = 2e-3;
  constexpr double r_max = 2.5;
  const int count = static_cast<int>(r_max / dr);
  std::vector<double> values(count + 1);
  for (int i = 0; i <= count; ++i) {
    values[i] = f(i * dr);
  }
  int end = count;
  for (int i = 1; i < count; ++i) {
    const bool below = values[i] + E < separatrix_energy;
    const bool local_min = values[i] < values[i - 1] && values[i] <= values[i + 1];
    if (below || local_min) {
      end = i;
      break;
    }
  }
  std::vector<std::pair<double, bool>> roots; // radius, rising
  for (int i = 0; i < end; ++i) {
    const double a = values[i];
    const double b = values[i + 1];
    if (a == 0.0 && i > 0) {
      roots.emplace_back(i * dr, b > a);
      continue;
    }
    if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) {
      boost::uintmax_t iters = 100;
      const auto tol = [](double x, double y) { return std::abs(x - y) < 1e-15; };
      const auto [lo, hi] = boost::math::tools::toms748_solve(f, i * dr, (i + 1) * dr, a, b, tol, iters);
      roots.emplace_back(0.5 * (lo + hi), b > a);
    }
  }
  RayCrossings out;
  if (!roots.empty() && roots.front().second) {
    out.inner = roots.front().first;
  }
  if (roots.size() >= 2 && !roots.back().second) {
    out.outer = roots.back().first;
  }
  return out;
}

namespace {

std::vector<OrbitSample> uniform_samples(PhasePoint start, double period, int count,
                                         const ModelParams& params, const ode::Options& opt) {
  RealFlow flow{&params};
  std::vector<OrbitSample> out;
  out.reserve(count + 1);
  out.push_back({0.0, start.p, start.q});
  int next = 1;
  ode::integrate<double, 2>(flow, 0.0, RealState{start.p, start.q}, period, opt,
                            [&](double s_prev, const RealState& y_prev, double s, const RealState& y) {
                              while (next <= count) {
                                const double t = next == count ? period : period * next / count;
                                if (t > s) {
                                  break;
                                }
                                const RealState yt = t == s ? y : ode::advance<double, 2>(flow, s_prev, y_prev, t - s_prev);
                                out.push_back({t, yt[0], yt[1]});
                                ++next;
                              }
                              return true;
                            });
  return out;
}

} // namespace

RealTorus find_torus(double E, Branch branch, const ModelParams& params, const TorusOptions& opt) {
  return find_torus(E, branch, params, energy_landscape(params), opt);
}

RealTorus find_torus(double E, Branch branch, const ModelParams& params,
                     const EnergyLandscape& land, const TorusOptions& opt) {
  const double lower = branch == Branch::Inner ? 0.0 : land.separatrix;
  if (!(E > lower && E < land.chain)) {
    throw NoTorus(std::string("no ") + to_string(branch) + " torus at E = " + std::to_string(E));
  }
  bool hit_cap = false;
  for (int k = 0; k < opt.rays; ++k) {
    const double alpha = 2.0 * kPi * k / opt.rays + 0.0137;
    const auto cross = ray_crossings(E, alpha, params, land.separatrix);
    const auto r = branch == Branch::Inner ? cross.inner : cross.outer;
    if (!r) {
      continue;
    }
    const PhasePoint launch{kHalfPi + *r * std::cos(alpha), kHalfPi + *r * std::sin(alpha)};
    Orbit orbit;
    try {
      orbit = integrate_orbit(launch, params, StopCondition::first_return(opt.period_cap), opt.ode);
    } catch (const NoReturn& e) {
      if (std::string(e.what()).rfind("no first return", 0) == 0) {
        hit_cap = true;
      }
      continue;
    }
    RealTorus torus;
    torus.energy = E;
    torus.branch = branch;
    torus.launch = launch;
    torus.period = orbit.duration;
    torus.frequency = 2.0 * kPi / orbit.duration;
    torus.winding = orbit.winding;
    torus.samples = uniform_samples(launch, orbit.duration, opt.samples, params, opt.ode);
    const auto& last = torus.samples.back();
    torus.closure_error = std::hypot(last.p - launch.p, last.q - launch.q);
    for (const auto& smp : torus.samples) {
      torus.max_energy_drift = std::max(torus.max_energy_drift, std::abs(eval_H(smp.p, smp.q, params) - E));
    }
    const auto act = contour_action(torus.samples);
    torus.action = act.value;
    torus.action_error = act.error;
    return torus;
  }
  if (hit_cap) {
    throw SeparatrixProximity("period exceeds cap near E = " + std::to_string(E));
  }
  throw NoTorus(std::string("no ") + to_string(branch) + " torus found at E = " + std::to_string(E));
}

double contour_integral(const std::vector<OrbitSample>& samples) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    sum += 0.5 * (samples[i].p + samples[i + 1].p) * (samples[i + 1].q - samples[i].q);
  }
  return sum;
}

namespace {

std::vector<OrbitSample> every_other(const std::vector<OrbitSample>& samples) {
  std::vector<OrbitSample> out;
  for (std::size_t i = 0; i < samples.size(); i += 2) {
    out.push_back(samples[i]);
  }
  return out;
}

} // namespace

ActionEstimate contour_action(const std::vector<OrbitSample>& samples) {
  if (samples.size() < 9) {
    throw OpenContour("too few samples for a contour integral");
  }
  const auto& a = samples.front();
  const auto& b = samples.back();
  if (std::hypot(a.p - b.p, a.q - b.q) > 1e-8) {
    throw OpenContour("contour does not close");
  }
  if ((samples.size() - 1) % 4 != 0) {
    return {std::abs(contour_integral(samples)), std::numeric_limits<double>::infinity()};
  }
  const auto half = every_other(samples);
  const auto quarter = every_other(half);
  const double a1 = contour_integral(samples);
  const double a2 = contour_integral(half);
  const double a4 = contour_integral(quarter);
  const double fine = (4.0 * a1 - a2) / 3.0;
  const double coarse = (4.0 * a2 - a4) / 3.0;
  return {std::abs(fine), std::abs(fine - coarse)};
}

double torus_action(const RealTorus& torus) { return contour_action(torus.samples).value; }

double ebk_energy(int n, double hbar, Branch branch, const ModelParams& params,
                  const TorusOptions& opt) {
  if (n < 0 || !(hbar > 0.0)) {
    throw OutOfRange("EBK needs n >= 0 and hbar > 0");
  }
  const auto land = energy_landscape(params);
  const double target = 2.0 * kPi * hbar * (n + 0.5);
  const auto action = [&](double E) { return find_torus(E, branch, params, land, opt).action; };

  const double top_gap = 1e-9 * std::max(1.0, std::abs(land.chain));
  double hi = land.chain - top_gap;
  double s_hi = 0.0;
  for (int attempt = 0;; ++attempt) {
    try {
      s_hi = action(hi);
      break;
    } catch (const Error&) {
      if (attempt > 8) {
        throw OutOfRange("cannot resolve the torus family below the chain energy");
      }
      hi = land.chain - (land.chain - hi) * 10.0;
    }
  }

  double lo = 0.0;
  double s_lo = 0.0;
  if (branch == Branch::Inner) {
    if (target >= s_hi) {
      throw OutOfRange("inner action " + std::to_string(target) + " exceeds the chain area");
    }
    lo = std::min(0.5 * target / (2.0 * kPi) * std::max(params.a1, 1e-3), 0.5 * hi);
    s_lo = action(lo);
    while (s_lo > target) {
      lo *= 0.5;
      s_lo = action(lo);
    }
  } else {
    lo = land.separatrix + top_gap;
    for (int attempt = 0;; ++attempt) {
      try {
        s_lo = action(lo);
        break;
      } catch (const Error&) {
        if (attempt > 8) {
          throw OutOfRange("cannot resolve outer tori near the separatrix");
        }
        lo = land.separatrix + (lo - land.separatrix) * 10.0;
      }
    }
    if (target > s_lo || target < s_hi) {
      throw OutOfRange("outer action " + std::to_string(target) + " outside the attainable range");
    }
  }

  const auto f = [&](double E) { return action(E) - target; };
  boost::uintmax_t iters = 100;
  const auto tol = [](double a, double b) { return std::abs(a - b) < 1e-14; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, s_lo - target, s_hi - target, tol, iters);
  return 0.5 * (a + b);
}

void write_torus_csv(std::ostream& os, const RealTorus& torus) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "s,p,q\n" << std::scientific << std::setprecision(12);
  for (const auto& smp : torus.samples) {
    os << smp.s << ',' << smp.p << ',' << smp.q << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

} // namespace ratunnel
