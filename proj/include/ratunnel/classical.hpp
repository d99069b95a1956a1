#pragma once

#include "ratunnel/model.hpp"
#include "ratunnel/ode.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ratunnel {

enum class Branch { Inner, Outer };

const char* to_string(Branch b);

struct PhasePoint {
  double p = 0.0;
  double q = 0.0;
};

struct OrbitSample {
  double s = 0.0;
  double p = 0.0;
  double q = 0.0;
};

/// Stop rule for real-time integration. FirstReturn stops when the orbit has
/// wound once around the island centre (pi/2, pi/2), i.e. when it crosses the
/// launch ray again in the launch direction.
struct StopCondition {
  enum class Kind { Duration, FirstReturn };
  Kind kind = Kind::FirstReturn;
  double duration = 0.0;
  double max_time = 1e4 * 2.0 * kPi;

  static StopCondition for_duration(double t) { return {Kind::Duration, t, t}; }
  static StopCondition first_return(double max_time = 1e4 * 2.0 * kPi) {
    return {Kind::FirstReturn, 0.0, max_time};
  }
};

struct Orbit {
  std::vector<OrbitSample> samples; // accepted integrator steps, endpoints included
  double duration = 0.0;            // return time for FirstReturn
  int winding = 0;                  // +1 counter-clockwise, -1 clockwise, 0 if stationary
  double max_energy_drift = 0.0;
};

/// Real-time Hamilton flow dq/dt = dH/dp, dp/dt = -dH/dq.
/// Throws NoReturn when FirstReturn does not trigger within max_time.
Orbit integrate_orbit(PhasePoint start, const ModelParams& params, const StopCondition& until,
                      const ode::Options& opt = {});

struct RealTorus {
  double energy = 0.0;
  Branch branch = Branch::Inner;
  double action = 0.0;
  double action_error = 0.0;
  double period = 0.0;
  double frequency = 0.0;
  std::vector<OrbitSample> samples; // uniform in time over one period, first point repeated at the end
  PhasePoint launch;
  int winding = 0;
  double closure_error = 0.0;
  double max_energy_drift = 0.0;
};

struct TorusOptions {
  int rays = 16;
  int samples = 2048;
  double period_cap = 1e4 * 2.0 * kPi;
  ode::Options ode{};
};

/// Energies bounding the torus families of the cell around (pi/2, pi/2):
/// inner tori live in (0, chain), outer tori in (separatrix, chain).
struct EnergyLandscape {
  double separatrix = 0.0;
  double chain = 0.0;
  double crown = 0.0;
};
EnergyLandscape energy_landscape(const ModelParams& params);

/// Radii of the H = E crossings along the ray at angle alpha from the island
/// centre: the first (inner) and last (outer) crossing inside the cell.
struct RayCrossings {
  std::optional<double> inner;
  std::optional<double> outer;
};
RayCrossings ray_crossings(double E, double alpha, const ModelParams& params,
                           double separatrix_energy);

/// Throws NoTorus or SeparatrixProximity.
RealTorus find_torus(double E, Branch branch, const ModelParams& params,
                     const TorusOptions& opt = {});
RealTorus find_torus(double E, Branch branch, const ModelParams& params,
                     const EnergyLandscape& land, const TorusOptions& opt = {});

/// Signed trapezoid value of the closed polygon integral of p dq.
double contour_integral(const std::vector<OrbitSample>& samples);

struct ActionEstimate {
  double value = 0.0;
  double error = 0.0;
};
/// Positive action of a closed sample loop, Richardson-refined against the
/// half-resolution loop. Throws OpenContour if the loop does not close.
ActionEstimate contour_action(const std::vector<OrbitSample>& samples);
double torus_action(const RealTorus& torus);

/// Energy of the torus with action 2 pi hbar (n + 1/2) on the given branch.
/// Throws OutOfRange when the action is not attained below the separatrix.
double ebk_energy(int n, double hbar, Branch branch, const ModelParams& params,
                  const TorusOptions& opt = {});

void write_torus_csv(std::ostream& os, const RealTorus& torus);

} // namespace ratunnel
