#pragma once

#include "ratunnel/classical.hpp"
#include "ratunnel/model.hpp"
#include "ratunnel/ode.hpp"

#include <iosfwd>
#include <vector>

namespace ratunnel {

/// dt/ds on imaginary legs. With this choice the imaginary actions of the
/// barrier crossings come out positive.
inline constexpr cplx kImagStep{0.0, -1.0};

enum class Leg { RealForward, ImagForward };

struct PathSegment {
  Leg direction = Leg::RealForward;
  double duration = 0.0;
};

/// Staircase in complex time, stored as a list of legs of positive duration.
struct TimePath {
  std::vector<PathSegment> segments;

  TimePath& real(double duration);
  TimePath& imag(double duration);
  double total_real() const;
  double total_imag() const;
};

struct ComplexSample {
  double s = 0.0;
  cplx p;
  cplx q;
};

struct ComplexTrajectory {
  std::vector<ComplexSample> samples;
  cplx energy;
  cplx action;               // integral of p dq
  double sigma_accum = 0.0;  // integral of Re p d(Im q) + Im p d(Re q)
  double s_real_accum = 0.0; // integral of Re p d(Re q)
  double max_energy_error = 0.0;
};

struct ComplexOptions {
  ode::Options ode{1e-11, 1e-13, 1e-3, 0.02, 1e-14, 20'000'000};
  double escape_bound = 5.0;
  cplx imag_step = kImagStep;
};

/// Throws EscapeDetected when |Im(p, q)| exceeds the escape bound and
/// StepFailure when the step size underflows.
ComplexTrajectory integrate_complex(cplx p0, cplx q0, const TimePath& path,
                                    const ModelParams& params, const ComplexOptions& opt = {});

/// Where a landing point sits relative to the launch cell. Cells are counted
/// modulo the 2 pi period, so p- and q-neighbours are both Neighbor.
enum class CellOffset { Same, Neighbor, Diagonal };

struct Landing {
  double launch_phase = 0.0; // time along the launch torus
  PhasePoint launch_point;
  double tau = 0.0;          // imaginary duration of the leg
  cplx action;               // integral of p dq over the leg
  PhasePoint point;
  double residual = 0.0;
  std::vector<double> residual_history;
  CellOffset cell = CellOffset::Same;
  Branch branch = Branch::Inner;
};

/// Every refined landing on the real plane of one imaginary-time leg launched
/// from the torus sample at time `launch_phase`.
std::vector<Landing> imaginary_landings(const RealTorus& torus, double launch_phase,
                                        const ModelParams& params, const EnergyLandscape& land,
                                        double tau_max, const ComplexOptions& opt = {});

struct ImaginaryActionResult {
  double sigma = 0.0;            // full-loop imaginary action
  double half_period_imag = 0.0; // imaginary duration of one leg
  double landing_residual = 0.0;
  PhasePoint landing_point;
  PhasePoint launch_point;
  double launch_phase = 0.0;
  std::vector<double> residual_history;
  std::vector<double> other_families; // sigma of converged families not selected
};

struct ShootingOptions {
  ComplexOptions complex{};
  TorusOptions torus{};
  double tau_max = 14.0;
  int extra_seeds = 48;
  double family_tolerance = 1e-5;
};

/// Inner torus to outer torus of the same cell across the resonance chain.
ImaginaryActionResult shoot_chain_crossing(double E, const ModelParams& params,
                                           const ShootingOptions& opt = {});
/// Outer torus to the outer torus of a neighbouring cell across the main separatrix.
ImaginaryActionResult shoot_separatrix_crossing(double E, const ModelParams& params,
                                                const ShootingOptions& opt = {});
/// Inner torus to the inner torus of a neighbouring cell in a single leg.
ImaginaryActionResult shoot_direct(double E, const ModelParams& params,
                                   const ShootingOptions& opt = {});

/// Leg of the selected shot, for dumps.
ComplexTrajectory trace_shot(double E, Branch launch_branch, const ImaginaryActionResult& shot,
                             const ModelParams& params, const ComplexOptions& opt = {});

/// Chain-crossing imaginary action of the local pendulum, by quadrature of the
/// gap between its two action roots along the imaginary angle direction.
/// Throws BranchCollision when E is at or above the pendulum saddle.
double sigma_pendulum(double E, const PendulumParams& pend, int ell = 4);

/// Full-loop imaginary action between the two b = 0 tori of one cell, where
/// cos^2 p + cos^2 q = w. Reference for the direct crossing at b = 0.
double sigma_unperturbed(double E, const ModelParams& params);
/// Same loop for the b = 0 torus labelled by w in (0, 1), either branch.
double sigma_unperturbed_w(double w);

void write_trajectory_csv(std::ostream& os, const ComplexTrajectory& traj);

} // namespace ratunnel
