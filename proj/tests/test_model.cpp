#include "ratunnel/errors.hpp"
#include "ratunnel/model.hpp"

#include "approx.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

using namespace ratunnel;

namespace {

// Closed form of h(cos p, cos q) written out independently of the library.
double reference_H(double p, double q, double a1, double a2, double b, double phi) {
  const double x = std::cos(p);
  const double y = std::cos(q);
  const double r2 = x * x + y * y;
  const std::complex<double> z(x, y);
  return a1 / 2 * r2 + a2 * r2 * r2 + std::real(std::polar(b, phi) * z * z * z * z);
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("normal form at special points") {
  const ModelParams d;
  CHECK(std::abs(eval_normal_form(0.0, 0.0, d)) < 1e-15);
  CHECK(eval_normal_form(1.0, 0.0, d.unperturbed()) == rel(-0.05).epsilon(1e-14));
  CHECK(std::abs(eval_normal_form(1.0, 0.0, d)) < 1e-15);
  CHECK(std::abs(eval_H(kHalfPi, kHalfPi, d.with_phi(1.3))) < 1e-15);
  CHECK(eval_H(0.0, 0.0, d) == rel(-1.4).epsilon(1e-14));
}

TEST_CASE("H matches the closed form, is even and periodic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  const ModelParams m{1.0, -0.55, 0.05, 0.7, 4};
  for (int k = 0; k < 100; ++k) {
    const double p = u(rng), q = u(rng);
    const double h = eval_H(p, q, m);
    CHECK(h == rel(reference_H(p, q, 1.0, -0.55, 0.05, 0.7)).epsilon(1e-13));
    CHECK(std::abs(eval_H(-p, q, m) - h) < 1e-14);
    CHECK(std::abs(eval_H(p, -q, m) - h) < 1e-14);
    CHECK(std::abs(eval_H(p + 2 * kPi, q, m) - h) < 1e-14);
    CHECK(std::abs(eval_H(p, q + 2 * kPi, m) - h) < 1e-14);
  }
}

TEST_CASE("complex H continues the real one analytically") {
  const ModelParams m{1.0, -0.55, 0.05, 0.9, 4};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    const double p = u(rng), q = u(rng);
    CHECK(std::abs(eval_H(cplx(p, 0.0), cplx(q, 0.0), m) - eval_H(p, q, m)) < 1e-14);
    const cplx zp(u(rng), 0.3 * u(rng));
    const cplx zq(u(rng), 0.3 * u(rng));
    const double h = 1e-5;
    // Cauchy-Riemann in each argument: df/dx = -i df/dy.
    const cplx dxp = (eval_H(zp + h, zq, m) - eval_H(zp - h, zq, m)) / (2 * h);
    const cplx dyp = (eval_H(zp + cplx(0, h), zq, m) - eval_H(zp - cplx(0, h), zq, m)) / (2 * h);
    CHECK(std::abs(dxp + cplx(0, 1) * dyp) < 1e-6);
    const cplx dxq = (eval_H(zp, zq + h, m) - eval_H(zp, zq - h, m)) / (2 * h);
    const cplx dyq = (eval_H(zp, zq + cplx(0, h), m) - eval_H(zp, zq - cplx(0, h), m)) / (2 * h);
    CHECK(std::abs(dxq + cplx(0, 1) * dyq) < 1e-6);
    const auto g = grad_H(zp, zq, m);
    CHECK(std::abs(g.dp - dxp) < 1e-7);
    CHECK(std::abs(g.dq - dxq) < 1e-7);
  }
}

TEST_CASE("monomial expansion") {
  const auto find = [](const std::vector<Monomial>& t, int m, int n) {
    for (const auto& x : t) {
      if (x.m == m && x.n == n) return x.coeff;
    }
    return std::nan("");
  };
  const ModelParams d;
  const auto t0 = monomials(d);
  CHECK(t0.size() == 5);
  CHECK(find(t0, 2, 2) == rel(-1.4));
  CHECK(find(t0, 2, 0) == rel(0.5));
  CHECK(find(t0, 4, 0) == rel(-0.5));

  const auto t1 = monomials(d.with_phi(kHalfPi));
  CHECK(t1.size() == 7);
  CHECK(find(t1, 4, 0) == rel(-0.55));
  CHECK(find(t1, 2, 2) == rel(-1.1));
  CHECK(find(t1, 3, 1) == rel(-0.2));
  CHECK(find(t1, 1, 3) == rel(0.2));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (double phi : {0.0, 0.4, kHalfPi, 2.5, kPi}) {
    const auto m = d.with_phi(phi);
    const auto terms = monomials(m);
    for (int k = 0; k < 100; ++k) {
      const double p = u(rng), q = u(rng);
      CHECK(std::abs(eval_monomials(terms, p, q) - eval_H(p, q, m)) < 1e-12);
    }
  }
  ModelParams cubic = d;
  cubic.ell = 3;
  CHECK_THROWS_AS(monomials(cubic), UnsupportedOrder);
}

TEST_CASE("general order is evaluated classically") {
  ModelParams m{1.0, -0.55, 0.05, 0.2, 6};
  m.validate();
  const double x = 0.3, y = -0.4;
  const double r2 = x * x + y * y;
  const double expect = 0.5 * r2 - 0.55 * r2 * r2 + std::real(std::polar(0.05, 0.2) * std::pow(std::complex<double>(x, y), 6));
  CHECK(eval_normal_form(x, y, m) == rel(expect).epsilon(1e-14));
  CHECK_THROWS_AS(m.require_quartic(), UnsupportedOrder);
}

TEST_CASE("pendulum parameters") {
  const auto pp = pendulum_params(ModelParams{});
  CHECK(pp.K0 == rel(1.0 / 8.8).epsilon(1e-14));
  CHECK(pp.I_res == rel(0.2272727272727).epsilon(1e-12));
  CHECK(pp.mass == rel(-0.2272727272727).epsilon(1e-12));
  CHECK(pp.V(pp.I_res) == rel(0.0051653).epsilon(1e-4));
  CHECK(pendulum_params(ModelParams{}.with_phi(2.1)).phi_res == 2.1);
  CHECK_THROWS_AS(pendulum_params(ModelParams{1.0, 0.0, 0.05, 0.0, 4}), DegenerateModel);
}

TEST_CASE("crown and critical energies") {
  const ModelParams d;
  CHECK(crown_energy(d.unperturbed()) == rel(0.1136363636363).epsilon(1e-12));
  CHECK(crown_energy(d) > 0.035);
  CHECK(crown_energy(d) == rel(0.1239669).epsilon(1e-6));
  CHECK_THROWS_AS(crown_energy(ModelParams{1.0, 0.1, 0.0, 0.0, 4}), DegenerateModel);

  // On the boundary q = 0 at p = pi/2 the saddle energy is -0.05 + |b| cos(phi).
  CHECK(std::abs(main_saddle(d).energy) < 1e-12);
  CHECK(main_saddle(d.with_phi(kPi)).energy == rel(-0.1).epsilon(1e-10));
  CHECK(main_saddle(d.unperturbed()).energy == rel(-0.05).epsilon(1e-12));
  CHECK(main_saddle(d.with_phi(kPi / 4)).energy == rel(-0.008605).epsilon(1e-3));
  CHECK(main_saddle(d.with_phi(kHalfPi)).energy == rel(-0.034453).epsilon(1e-4));

  const auto cs = chain_saddle(d);
  CHECK(cs.energy == rel(0.1041667).epsilon(1e-6));
  const auto g = grad_H(cs.p, cs.q, d);
  CHECK(std::hypot(g.dp, g.dq) < 1e-10);
  CHECK(chain_saddle(d.unperturbed()).energy == rel(crown_energy(d.unperturbed())));
}

TEST_CASE("parameter files") {
  const auto m = parse_params("# comment\na1 = 1.5\nb = 0.02\nphi=0.25\n\nell = 4\n");
  CHECK(m.a1 == 1.5);
  CHECK(m.a2 == -0.55);
  CHECK(m.b_mod == 0.02);
  CHECK(m.phi == 0.25);
  std::ostringstream os;
  write_params(os, m);
  CHECK(parse_params(os.str()) == m);
  CHECK_THROWS_AS(parse_params("gamma = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_params("a1 = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_params("b_mod = -1\n"), ConfigError);
  CHECK_THROWS_AS(read_params_file("/nonexistent/params.cfg"), ConfigError);
}

}
