#include "ratunnel/complexpath.hpp"
#include "ratunnel/errors.hpp"

#include "approx.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace ratunnel;

namespace {
constexpr double kE20 = 0.035239382335; // inner EBK level 0 at N = 20
}

TEST_SUITE("complexpath") {

TEST_CASE("time path bookkeeping") {
  TimePath path;
  path.imag(1.5).real(2.0).imag(0.5);
  CHECK(path.segments.size() == 3);
  CHECK(path.total_imag() == rel(2.0));
  CHECK(path.total_real() == rel(2.0));
}

TEST_CASE("frozen imaginary actions at defaults") {
  const ModelParams d;
  const auto chain = shoot_chain_crossing(kE20, d);
  const auto sep = shoot_separatrix_crossing(kE20, d);
  const auto direct = shoot_direct(kE20, d);
  CHECK(chain.sigma == rel(0.54973675).epsilon(1e-6));
  CHECK(sep.sigma == rel(0.17487411).epsilon(1e-6));
  CHECK(direct.sigma == rel(3.99815470).epsilon(1e-6));
  for (const auto* s : {&chain, &sep, &direct}) {
    CHECK(s->landing_residual < 1e-9);
    CHECK(s->sigma > 0.0);
  }
  const double sep_energy = energy_landscape(d).separatrix;
  CHECK(eval_H(chain.landing_point.p, chain.landing_point.q, d) == rel(kE20).epsilon(1e-9));
  CHECK(eval_H(sep.landing_point.p, sep.landing_point.q, d) > sep_energy);
}

TEST_CASE("imaginary action does not depend on the time path") {
  const ModelParams d;
  const auto shot = shoot_chain_crossing(kE20, d);
  const auto torus = find_torus(kE20, Branch::Inner, d);
  const cplx p0 = shot.launch_point.p, q0 = shot.launch_point.q;
  const double tau = shot.half_period_imag;

  const auto a = integrate_complex(p0, q0, TimePath{}.imag(tau), d);
  const auto b = integrate_complex(p0, q0, TimePath{}.real(torus.period).imag(tau), d);
  const auto c = integrate_complex(p0, q0, TimePath{}.imag(tau / 2).real(torus.period).imag(tau / 2), d);
  for (const auto* t : {&a, &b, &c}) CHECK(t->max_energy_error < 1e-8);
  CHECK(std::abs(b.samples.back().q - a.samples.back().q) < 1e-7);
  CHECK(std::abs(c.samples.back().q - a.samples.back().q) < 1e-7);
  CHECK(std::abs(b.samples.back().p - a.samples.back().p) < 1e-7);
  CHECK(b.action.imag() == rel(a.action.imag()).epsilon(1e-8));
  CHECK(c.action.imag() == rel(a.action.imag()).epsilon(1e-8));
  CHECK(2 * a.action.imag() == rel(shot.sigma).epsilon(1e-8));
}

TEST_CASE("b = 0 direct crossing") {
  const ModelParams b0 = ModelParams{}.unperturbed();
  for (double E : {0.02, kE20, 0.06}) {
    CHECK(shoot_direct(E, b0).sigma == rel(sigma_unperturbed(E, b0)).epsilon(1e-6));
  }
  CHECK(sigma_unperturbed_w(0.3) > sigma_unperturbed_w(0.5));
  CHECK_THROWS_AS(sigma_unperturbed_w(1.5), OutOfRange);
}

TEST_CASE("small resonance") {
  const ModelParams small = ModelParams{}.with_b(0.001);
  SUBCASE("chain crossing against the local pendulum") {
    const auto pend = pendulum_params(small);
    const double E = 0.035;
    const double ref = sigma_pendulum(E, pend);
    CHECK(shoot_chain_crossing(E, small).sigma == rel(ref).epsilon(0.05));
  }
  SUBCASE("direct crossing approaches the b = 0 loop") {
    const double E = kE20;
    CHECK(shoot_direct(E, small).sigma == rel(sigma_unperturbed(E, small.unperturbed())).epsilon(0.01));
  }
}

TEST_CASE("pendulum crossing") {
  const auto pend = pendulum_params(ModelParams{});
  CHECK_THROWS_AS(sigma_pendulum(pend.K0, pend), BranchCollision);
  CHECK_THROWS_AS(sigma_pendulum(0.05, pendulum_params(ModelParams{}.unperturbed())), BranchCollision);
  CHECK(sigma_pendulum(0.09, pend) < sigma_pendulum(0.05, pend));
}

TEST_CASE("separatrix crossing under phi -> 2 pi - phi") {
  const ModelParams d;
  for (double phi : {kPi / 4, 2.0}) {
    const double a = shoot_separatrix_crossing(kE20, d.with_phi(phi)).sigma;
    const double b = shoot_separatrix_crossing(kE20, d.with_phi(2 * kPi - phi)).sigma;
    CHECK(a == rel(b).epsilon(1e-7));
  }
  double prev = 0.0;
  for (double phi : {0.0, kPi / 4, kHalfPi, 3 * kPi / 4}) {
    const double s = shoot_separatrix_crossing(kE20, d.with_phi(phi)).sigma;
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("trajectory dump") {
  const ModelParams d;
  const auto shot = shoot_chain_crossing(kE20, d);
  const auto traj = trace_shot(kE20, Branch::Inner, shot, d);
  CHECK(traj.max_energy_error < 1e-8);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  CHECK(os.str().rfind("s,", 0) == 0);
}

}
