#include "ratunnel/complexpath.hpp"

#include "ratunnel/errors.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace ratunnel {

TimePath& TimePath::real(double duration) {
  segments.push_back({Leg::RealForward, duration});
  return *this;
}

TimePath& TimePath::imag(double duration) {
  segments.push_back({Leg::ImagForward, duration});
  return *this;
}

double TimePath::total_real() const {
  double t = 0.0;
  for (const auto& seg : segments) {
    if (seg.direction == Leg::RealForward) t += seg.duration;
  }
  return t;
}

double TimePath::total_imag() const {
  double t = 0.0;
  for (const auto& seg : segments) {
    if (seg.direction == Leg::ImagForward) t += seg.duration;
  }
  return t;
}

namespace {

// p, q, integral of p dq, integral of Re p d(Re q)
using CState = ode::State<cplx, 4>;

struct ComplexFlow {
  const ModelParams* params;
  cplx dt_ds;
  CState operator()(double, const CState& y) const {
    const auto g = grad_H(y[0], y[1], *params);
    const cplx dp = -g.dq * dt_ds;
    const cplx dq = g.dp * dt_ds;
    return {dp, dq, y[0] * dq, cplx(y[0].real() * dq.real(), 0.0)};
  }
};

double imag_norm(const CState& y) { return std::hypot(y[0].imag(), y[1].imag()); }

} // namespace

ComplexTrajectory integrate_complex(cplx p0, cplx q0, const TimePath& path,
                                    const ModelParams& params, const ComplexOptions& opt) {
  ComplexTrajectory traj;
  traj.energy = eval_H(p0, q0, params);
  traj.samples.push_back({0.0, p0, q0});
  CState y{p0, q0, 0.0, 0.0};
  double s = 0.0;
  for (const auto& seg : path.segments) {
    if (!(seg.duration > 0.0)) {
      throw ConfigError("time path legs need a positive duration");
    }
    ComplexFlow flow{&params, seg.direction == Leg::RealForward ? cplx(1.0, 0.0) : opt.imag_step};
    const double s0 = s;
    auto [s_end, y_end] = ode::integrate<cplx, 4>(
        flow, 0.0, y, seg.duration, opt.ode, [&](double, const CState&, double sl, const CState& yl) {
          if (imag_norm(yl) > opt.escape_bound) {
            throw EscapeDetected("imaginary part exceeded " + std::to_string(opt.escape_bound) +
                                 " at s = " + std::to_string(s0 + sl));
          }
          traj.samples.push_back({s0 + sl, yl[0], yl[1]});
          traj.max_energy_error =
              std::max(traj.max_energy_error, std::abs(eval_H(yl[0], yl[1], params) - traj.energy));
          return true;
        });
    s = s0 + s_end;
    y = y_end;
  }
  traj.action = y[2];
  traj.sigma_accum = y[2].imag();
  traj.s_real_accum = y[3].real();
  return traj;
}

namespace {

struct CellIndex {
  long k = 0;
  long j = 0;
};

CellIndex cell_of(double p, double q) {
  return {std::lround((p - kHalfPi) / kPi), std::lround((q - kHalfPi) / kPi)};
}

CellOffset offset_between(CellIndex a, CellIndex b) {
  const bool dk = ((b.k - a.k) % 2) != 0;
  const bool dj = ((b.j - a.j) % 2) != 0;
  if (dk && dj) return CellOffset::Diagonal;
  if (dk || dj) return CellOffset::Neighbor;
  return CellOffset::Same;
}

// Symmetry image in the cell around (pi/2, pi/2); H is even and 2 pi periodic.
PhasePoint fold(double p, double q) {
  return {std::abs(std::remainder(p, 2.0 * kPi)), std::abs(std::remainder(q, 2.0 * kPi))};
}

Branch classify_branch(PhasePoint pt, double E, const ModelParams& params, const EnergyLandscape& land) {
  const PhasePoint f = fold(pt.p, pt.q);
  const double u = f.p - kHalfPi;
  const double v = f.q - kHalfPi;
  const double r = std::hypot(u, v);
  const auto cross = ray_crossings(E, std::atan2(v, u), params, land.separatrix);
  const double d_in = cross.inner ? std::abs(r - *cross.inner) : 1e300;
  const double d_out = cross.outer ? std::abs(r - *cross.outer) : 1e300;
  return d_in <= d_out ? Branch::Inner : Branch::Outer;
}

PhasePoint torus_point(const RealTorus& torus, double phase, const ModelParams& params,
                       const ode::Options& opt) {
  if (phase == 0.0) {
    return torus.launch;
  }
  const auto orbit = integrate_orbit(torus.launch, params, StopCondition::for_duration(phase), opt);
  return {orbit.samples.back().p, orbit.samples.back().q};
}

} // namespace

std::vector<Landing> imaginary_landings(const RealTorus& torus, double launch_phase,
                                        const ModelParams& params, const EnergyLandscape& land,
                                        double tau_max, const ComplexOptions& opt) {
  const PhasePoint start = torus_point(torus, launch_phase, params, opt.ode);
  const CellIndex home = cell_of(start.p, start.q);
  ComplexFlow flow{&params, opt.imag_step};

  const auto inner_product = [&](const CState& y) {
    const CState d = flow(0.0, y);
    return y[0].imag() * d[0].imag() + y[1].imag() * d[1].imag();
  };

  std::vector<Landing> out;
  double prev_ip = 0.0;
  bool have_prev = false;
  try {
    ode::integrate<cplx, 4>(
        flow, 0.0, CState{start.p, start.q, 0.0, 0.0}, tau_max, opt.ode,
        [&](double s_prev, const CState& y_prev, double s, const CState& y) {
          if (imag_norm(y) > opt.escape_bound) {
            return false;
          }
          const double ip = inner_product(y);
          if (have_prev && prev_ip < 0.0 && ip >= 0.0) {
            // |Im z|^2 has a local minimum inside this step: Gauss-Newton on tau.
            double tau = s;
            CState z = y;
            std::vector<double> history;
            for (int it = 0; it < 30; ++it) {
              const CState d = flow(0.0, z);
              const double num = z[0].imag() * d[0].imag() + z[1].imag() * d[1].imag();
              const double den = d[0].imag() * d[0].imag() + d[1].imag() * d[1].imag();
              history.push_back(imag_norm(z));
              if (den == 0.0) break;
              const double step = -num / den;
              tau += step;
              z = ode::advance<cplx, 4>(flow, s_prev, y_prev, tau - s_prev);
              if (std::abs(step) < 1e-15 * std::max(1.0, tau)) {
                break;
              }
            }
            history.push_back(imag_norm(z));
            const double residual = imag_norm(z);
            if (residual < 1e-8) {
              Landing l;
              l.launch_phase = launch_phase;
              l.launch_point = start;
              l.tau = tau;
              l.action = z[2];
              l.point = {z[0].real(), z[1].real()};
              l.residual = residual;
              l.residual_history = std::move(history);
              l.cell = offset_between(home, cell_of(l.point.p, l.point.q));
              l.branch = classify_branch(l.point, torus.energy, params, land);
              out.push_back(std::move(l));
            }
          }
          prev_ip = ip;
          have_prev = true;
          return true;
        });
  } catch (const StepFailure&) {
    // the leg ran into a singularity of the complexified flow; keep what landed
  }
  return out;
}

namespace {

std::vector<double> seed_phases(const RealTorus& torus, int extra) {
  std::vector<double> seeds;
  const auto& smp = torus.samples;
  const auto arg = [&](auto key) {
    return std::max_element(smp.begin(), smp.end() - 1,
                            [&](const OrbitSample& a, const OrbitSample& b) { return key(a) < key(b); })
        ->s;
  };
  seeds.push_back(arg([](const OrbitSample& o) { return o.p; }));
  seeds.push_back(arg([](const OrbitSample& o) { return -o.p; }));
  seeds.push_back(arg([](const OrbitSample& o) { return o.q; }));
  seeds.push_back(arg([](const OrbitSample& o) { return -o.q; }));
  for (int i = 0; i < extra; ++i) {
    seeds.push_back(torus.period * i / extra);
  }
  return seeds;
}

ImaginaryActionResult shoot(double E, Branch from, Branch to, CellOffset cell, const ModelParams& params,
                            const ShootingOptions& opt) {
  const auto land = energy_landscape(params);
  const RealTorus torus = find_torus(E, from, params, land, opt.torus);
  std::vector<Landing> hits;
  bool wrong_branch = false;
  for (double phase : seed_phases(torus, opt.extra_seeds)) {
    for (auto& l : imaginary_landings(torus, phase, params, land, opt.tau_max, opt.complex)) {
      if (l.cell != cell) {
        continue;
      }
      if (l.branch != to) {
        wrong_branch = true;
        continue;
      }
      hits.push_back(std::move(l));
      break;
    }
  }
  if (hits.empty()) {
    if (wrong_branch) {
      throw WrongBranch("landings found only on the wrong torus branch");
    }
    throw NoConvergence("no refined landing on the target torus at E = " + std::to_string(E));
  }
  std::sort(hits.begin(), hits.end(), [](const Landing& a, const Landing& b) {
    return std::abs(a.action.imag()) < std::abs(b.action.imag());
  });
  const Landing& best = hits.front();
  ImaginaryActionResult out;
  out.sigma = 2.0 * std::abs(best.action.imag());
  out.half_period_imag = best.tau;
  out.landing_residual = best.residual;
  out.landing_point = best.point;
  out.launch_point = best.launch_point;
  out.launch_phase = best.launch_phase;
  out.residual_history = best.residual_history;
  double last = out.sigma;
  for (const auto& h : hits) {
    const double sig = 2.0 * std::abs(h.action.imag());
    if (std::abs(sig - last) > opt.family_tolerance * std::max(1.0, last)) {
      out.other_families.push_back(sig);
      last = sig;
    }
  }
  return out;
}

} // namespace

ImaginaryActionResult shoot_chain_crossing(double E, const ModelParams& params, const ShootingOptions& opt) {
  return shoot(E, Branch::Inner, Branch::Outer, CellOffset::Same, params, opt);
}

ImaginaryActionResult shoot_separatrix_crossing(double E, const ModelParams& params,
                                                const ShootingOptions& opt) {
  return shoot(E, Branch::Outer, Branch::Outer, CellOffset::Neighbor, params, opt);
}

ImaginaryActionResult shoot_direct(double E, const ModelParams& params, const ShootingOptions& opt) {
  return shoot(E, Branch::Inner, Branch::Inner, CellOffset::Neighbor, params, opt);
}

ComplexTrajectory trace_shot(double, Branch, const ImaginaryActionResult& shot, const ModelParams& params,
                             const ComplexOptions& opt) {
  TimePath path;
  path.imag(shot.half_period_imag);
  return integrate_complex(shot.launch_point.p, shot.launch_point.q, path, params, opt);
}

double sigma_pendulum(double E, const PendulumParams& pend, int ell) {
  const double m = pend.mass;
  const double b_mod = 0.5 * pend.v_coeff;
  const double Ir = pend.I_res;
  const double D0 = 2.0 * m * (E - pend.K0);
  if (!(D0 > 0.0) || b_mod == 0.0) {
    throw BranchCollision("pendulum branches do not separate at E = " + std::to_string(E));
  }
  // Along theta = theta0 + i y with cos(ell theta0 + phi) = sign(m), the
  // quadratic (1 + kappa) I^2 - 2 Ir I + Ir^2 - D0 = 0 has real coefficients,
  // kappa = 8 |m| |b| cosh(ell y).
  const double kappa_star = D0 / (Ir * Ir - D0);
  const double ch = kappa_star / (8.0 * std::abs(m) * b_mod);
  if (!(Ir * Ir > D0) || ch <= 1.0) {
    throw BranchCollision("inner and outer pendulum roots merge on the real plane at E = " +
                          std::to_string(E));
  }
  const double y_star = std::acosh(ch) / ell;
  const auto gap = [&](double y) {
    const double kappa = 8.0 * std::abs(m) * b_mod * std::cosh(ell * y);
    const double disc = std::max(0.0, D0 - kappa * (Ir * Ir - D0));
    return 2.0 * std::sqrt(disc) / (1.0 + kappa);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return 2.0 * integrator.integrate(gap, 0.0, y_star);
}

double sigma_unperturbed(double E, const ModelParams& params) {
  const double disc = 0.25 * params.a1 * params.a1 + 4.0 * params.a2 * E;
  if (!(params.a2 < 0.0) || !(disc > 0.0) || !(E > 0.0)) {
    throw OutOfRange("no pair of unperturbed tori at E = " + std::to_string(E));
  }
  const double w = (-0.5 * params.a1 + std::sqrt(disc)) / (2.0 * params.a2);
  if (w >= 1.0) {
    throw OutOfRange("inner torus beyond the cell boundary");
  }
  return sigma_unperturbed_w(w);
}

double sigma_unperturbed_w(double w) {
  if (!(w > 0.0 && w < 1.0)) {
    throw OutOfRange("torus label w = " + std::to_string(w) + " outside (0, 1)");
  }
  const auto integrand = [w](double q) {
    const double c = std::cos(q);
    return std::asinh(std::sqrt(std::max(0.0, c * c - w)));
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return 4.0 * integrator.integrate(integrand, 0.0, std::acos(std::sqrt(w)));
}

void write_trajectory_csv(std::ostream& os, const ComplexTrajectory& traj) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "s,Re_p,Im_p,Re_q,Im_q\n" << std::scientific << std::setprecision(12);
  for (const auto& smp : traj.samples) {
    os << smp.s << ',' << smp.p.real() << ',' << smp.p.imag() << ',' << smp.q.real() << ','
       << smp.q.imag() << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

} // namespace ratunnel
