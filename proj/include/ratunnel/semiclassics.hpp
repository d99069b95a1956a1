#pragma once

#include "ratunnel/classical.hpp"
#include "ratunnel/complexpath.hpp"
#include "ratunnel/model.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ratunnel {

/// Prefactor of the unperturbed splitting: 2 hbar omega / pi for the periodic
/// array of wells, hbar omega for an isolated double well.
enum class Prefactor { PeriodicArray, DoubleWell };

/// Torus of the b = 0 Hamiltonian, where H depends on w = cos^2 p + cos^2 q only.
struct UnperturbedLevel {
  int m = 0;
  double hbar = 0.0;
  double w = 0.0;
  double energy = 0.0;
  double action = 0.0;
  double omega = 0.0;
  double sigma = 0.0; // full-loop imaginary action to the neighbouring cell
  Branch branch = Branch::Inner;
};

/// Area of the cell region w < w0 and its derivative in w0.
double unperturbed_action(double w);
double unperturbed_action_slope(double w);

/// EBK level m of the b = 0 Hamiltonian, on whichever branch carries the
/// action 2 pi hbar (m + 1/2). Throws OutOfRange past the separatrix.
UnperturbedLevel unperturbed_level(int m, double hbar, const ModelParams& params);

double unperturbed_splitting(const UnperturbedLevel& level, Prefactor prefactor = Prefactor::PeriodicArray);
double unperturbed_splitting(int n, double hbar, const ModelParams& params,
                             Prefactor prefactor = Prefactor::PeriodicArray);

struct SemiclassicalOptions {
  ShootingOptions shooting{};
  double peak_tolerance = 1e-8;
  double near_peak = 1e-3;
  int ell = 4;
};

struct CouplingAmplitude {
  double amplitude = 0.0;
  double denominator = 0.0; // 2 sin((S_in - S_out) / (2 ell hbar))
  double sigma_c = 0.0;
  double S_in = 0.0;
  double S_out = 0.0;
};

double coupling_amplitude(double sigma_c, double S_in, double S_out, double hbar, int ell = 4);
double coupling_denominator(double S_in, double S_out, double hbar, int ell = 4);

/// Throws PeakSingularity when the denominator is below the peak tolerance.
CouplingAmplitude coupling_amplitude(double E, double hbar, const ModelParams& params,
                                     const SemiclassicalOptions& opt = {});

double outer_splitting(double sigma_tilde, double omega_out, double hbar);
double outer_splitting(double E, double hbar, const ModelParams& params,
                       const SemiclassicalOptions& opt = {});

struct SplittingRecord {
  int N = 0;
  double hbar = 0.0;
  int n = 0;
  double phi = 0.0;
  double b_mod = 0.0;
  double E_n = std::numeric_limits<double>::quiet_NaN();
  double dE_exact = std::numeric_limits<double>::quiet_NaN();
  double dE_complex_path = std::numeric_limits<double>::quiet_NaN();
  double dE_direct = std::numeric_limits<double>::quiet_NaN();
  double dE_rat = std::numeric_limits<double>::quiet_NaN();
  double dE_unpert = std::numeric_limits<double>::quiet_NaN();
  double sigma_c = std::numeric_limits<double>::quiet_NaN();
  double sigma_tilde = std::numeric_limits<double>::quiet_NaN();
  double Sigma = std::numeric_limits<double>::quiet_NaN();
  double S_in = std::numeric_limits<double>::quiet_NaN();
  double S_out = std::numeric_limits<double>::quiet_NaN();
  double omega_in = std::numeric_limits<double>::quiet_NaN();
  double omega_out = std::numeric_limits<double>::quiet_NaN();
  double denominator = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> flags;

  bool flagged() const { return !flags.empty(); }
  bool has_flag(const std::string& f) const;
  std::string flag_string() const;
};

/// |A_T|^2 delta E from the stored diagnostics.
double complex_path_from_diagnostics(const SplittingRecord& r, int ell = 4);

/// Chain crossing plus separatrix crossing at the inner EBK energy of level n.
/// A vanishing denominator is flagged, not thrown.
SplittingRecord resonance_assisted_splitting(int n, double hbar, const ModelParams& params,
                                             const SemiclassicalOptions& opt = {});

double direct_splitting(double Sigma, double omega_in, double hbar);
double direct_splitting(int n, double hbar, const ModelParams& params,
                        const SemiclassicalOptions& opt = {});

/// Area of the regular region of one cell: the connected component of
/// H > E_sep around the island centre, by midpoint quadrature.
double island_area(const ModelParams& params, int grid = 1024);

int rat_cutoff(double area, int n, double hbar, int ell = 4);

struct RatTerm {
  int k = 0;
  double coupling = 0.0;    // |B_{n, k ell}|^2
  double level_splitting = 0.0;
  UnperturbedLevel level;
};

struct RatResult {
  double splitting = 0.0;
  int cutoff = 0;
  bool truncated = false; // a level below the cutoff left the b = 0 cell
  std::vector<RatTerm> terms; // k = 0 first
};

/// Perturbative resonance-assisted splitting with the single harmonic
/// 2|b| e^{i phi} hbar^{ell/2}. Throws ResonantDenominator on degenerate
/// unperturbed levels.
RatResult rat_splitting(int n, double hbar, const ModelParams& params, double area, int ell = 4);
RatResult rat_splitting(int n, double hbar, const ModelParams& params, int ell = 4);

struct PeakLocation {
  double hbar = 0.0;
  double N = 0.0;
  double energy = 0.0;
};

/// hbar at which S_out - S_in = 2 pi hbar ell nu on the inner EBK ladder of level n.
PeakLocation hbar_peak(int n, const ModelParams& params, int nu = 1, int ell = 4,
                       const TorusOptions& opt = {});

struct CriterionResult {
  double hbar_res = 0.0;
  double N_res = 0.0;
  double hbar_peak = 0.0;
  double chain_area = 0.0;  // 16 sqrt(2 |m V|)
  double island_area = 0.0; // 2 pi I_res
  bool monotone = true;
};

double criterion_lhs(double hbar, int n, const ModelParams& params, double hbar_peak, int ell = 4);

/// Root of the crossover criterion in (hbar_peak, 10 hbar_peak), cut at the
/// hbar where level n + ell leaves the cell. Throws NoRoot.
CriterionResult hbar_res(int n, const ModelParams& params, int ell = 4);

struct Methods {
  bool exact = true;
  bool cpath = true;
  bool direct = true;
  bool rat = true;
  bool unpert = true;
};

/// One row of a scan. Failures of individual methods become flags.
SplittingRecord evaluate_point(int N, int n, const ModelParams& params, const Methods& methods = {},
                               const SemiclassicalOptions& opt = {},
                               std::optional<double> area = std::nullopt);

} // namespace ratunnel
