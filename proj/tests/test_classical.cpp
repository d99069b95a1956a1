#include "ratunnel/classical.hpp"
#include "ratunnel/errors.hpp"

#include "approx.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace ratunnel;

TEST_SUITE("classical") {

TEST_CASE("stationary start at the island centre") {
  const auto orbit = integrate_orbit({kHalfPi, kHalfPi}, ModelParams{}, StopCondition::first_return());
  CHECK(orbit.samples.size() == 1);
  CHECK(orbit.duration == 0.0);
  CHECK(orbit.winding == 0);
}

TEST_CASE("orbit integration conserves energy") {
  const ModelParams b0 = ModelParams{}.unperturbed();
  const auto torus = find_torus(0.035, Branch::Inner, b0);
  const auto orbit = integrate_orbit(torus.launch, b0, StopCondition::for_duration(5 * torus.period));
  CHECK(orbit.max_energy_drift < 1e-10);
  CHECK(orbit.samples.back().s == rel(5 * torus.period));
}

TEST_CASE("orbit stalls at the chain saddle") {
  const ModelParams d;
  const auto cs = chain_saddle(d);
  CHECK_THROWS_AS(integrate_orbit({cs.p + 1e-9, cs.q}, d, StopCondition::first_return(200.0)), NoReturn);
}

TEST_CASE("frozen tori at E = 0.035") {
  const ModelParams d;
  const auto in = find_torus(0.035, Branch::Inner, d);
  const auto out = find_torus(0.035, Branch::Outer, d);
  CHECK(in.action == rel(0.244857141320).epsilon(1e-9));
  CHECK(in.period == rel(7.8587307).epsilon(1e-6));
  CHECK(out.action == rel(3.638562960917).epsilon(1e-9));
  CHECK(out.period == rel(16.9717).epsilon(1e-4));
  CHECK(in.action < out.action);
  for (const auto* t : {&in, &out}) {
    CHECK(t->frequency * t->period == rel(2 * kPi).epsilon(1e-12));
    CHECK(t->closure_error < 1e-8);
    CHECK(t->action_error < 1e-8 * t->action);
    for (const auto& s : t->samples) {
      CHECK(std::abs(eval_H(s.p, s.q, d) - 0.035) < 1e-9);
    }
  }
}

TEST_CASE("tori exist only below the crown") {
  const ModelParams d;
  CHECK_THROWS_AS(find_torus(1.1 * crown_energy(d), Branch::Inner, d), NoTorus);
  CHECK_THROWS_AS(find_torus(1.1 * crown_energy(d), Branch::Outer, d), NoTorus);
}

TEST_CASE("b = 0 annulus area by stratified sampling") {
  const ModelParams b0 = ModelParams{}.unperturbed();
  const double E = 0.035;
  const double in = find_torus(E, Branch::Inner, b0).action;
  const double out = find_torus(E, Branch::Outer, b0).action;
  CHECK(in == rel(0.244835225821).epsilon(1e-9));
  CHECK(out == rel(3.535904564563).epsilon(1e-9));
  // h(w) = E has roots w-, w+; the annulus is w- < cos^2 p + cos^2 q < w+.
  const double disc = std::sqrt(0.25 + 4 * -0.55 * E);
  const double w_lo = (-0.5 + disc) / (2 * -0.55);
  const double w_hi = (-0.5 - disc) / (2 * -0.55);
  constexpr int K = 3163;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long hits = 0;
  const double h = kPi / K;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const double p = (i + u(rng)) * h;
      const double q = (j + u(rng)) * h;
      const double w = std::cos(p) * std::cos(p) + std::cos(q) * std::cos(q);
      hits += (w > w_lo && w < w_hi) ? 1 : 0;
    }
  }
  CHECK(hits * h * h == rel(out - in).epsilon(1e-3));
}

TEST_CASE("action identities") {
  const ModelParams d;
  SUBCASE("dS/dE equals the period on both branches") {
    for (auto br : {Branch::Inner, Branch::Outer}) {
      for (double E : {0.03, 0.06}) {
        const double dE = 1e-4;
        const double slope = (find_torus(E + dE, br, d).action - find_torus(E - dE, br, d).action) / (2 * dE);
        const double T = find_torus(E, br, d).period;
        // S_out shrinks as E grows towards the crown
        CHECK(std::abs(slope) == rel(T).epsilon(1e-5));
      }
    }
  }
  SUBCASE("harmonic limit near the centre") {
    const double E = 1e-4;
    CHECK(find_torus(E, Branch::Inner, d).action == rel(2 * kPi * E).epsilon(1e-3));
  }
  SUBCASE("monotone in E on each branch") {
    double prev_in = 0.0, prev_out = 1e9;
    for (int k = 1; k <= 20; ++k) {
      const double E = 0.1 * k / 21.0;
      const double a_in = find_torus(E, Branch::Inner, d).action;
      const double a_out = find_torus(E, Branch::Outer, d).action;
      CHECK(a_in > prev_in);
      CHECK(a_out < prev_out);
      CHECK(a_in < a_out);
      prev_in = a_in;
      prev_out = a_out;
    }
  }
}

TEST_CASE("contour orientation") {
  std::vector<OrbitSample> circle;
  const int M = 4000;
  for (int k = 0; k <= M; ++k) {
    const double t = 2 * kPi * k / M;
    circle.push_back({t, 0.3 * std::cos(t), 0.3 * std::sin(t)});
  }
  const double raw = contour_integral(circle);
  CHECK(std::abs(raw) == rel(kPi * 0.09).epsilon(1e-5));
  auto reversed = circle;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(contour_integral(reversed) == rel(-raw));
  CHECK(contour_action(reversed).value == rel(contour_action(circle).value));
  circle.back().p += 1e-3;
  CHECK_THROWS_AS(contour_action(circle), OpenContour);
}

TEST_CASE("EBK quantization") {
  const ModelParams d;
  const double hbar = kPi / 40;
  const double E0 = ebk_energy(0, hbar, Branch::Inner, d);
  CHECK(E0 == rel(0.035239382335).epsilon(1e-10));
  CHECK(std::abs(find_torus(E0, Branch::Inner, d).action - 2 * kPi * hbar * 0.5) < 1e-10);
  const auto deviation = [&](double h) { return ebk_energy(0, h, Branch::Inner, d) / (h / 2) - 1.0; };
  const double small = kPi / 128;
  CHECK(std::abs(deviation(small)) < 0.05);
  CHECK(deviation(small) / deviation(small / 2) == rel(2.0).epsilon(0.05));
  CHECK_THROWS_AS(ebk_energy(40, hbar, Branch::Inner, d), OutOfRange);
}

TEST_CASE("torus dump") {
  const auto t = find_torus(0.035, Branch::Inner, ModelParams{});
  std::ostringstream os;
  write_torus_csv(os, t);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "s,p,q");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(t.samples.size()));
}

}
