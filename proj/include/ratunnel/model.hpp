#pragma once

#include <complex>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

namespace ratunnel {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2;

/// Parameters of the periodic resonance-chain Hamiltonian
///   H(p,q) = h(cos p, cos q),
///   h(x,y) = a1/2 (x^2+y^2) + a2 (x^2+y^2)^2 + Re[b (x+iy)^ell],  b = b_mod e^{i phi}.
struct ModelParams {
  double a1 = 1.0;
  double a2 = -0.55;
  double b_mod = 0.05;
  double phi = 0.0;
  int ell = 4;

  /// Throws ConfigError on out-of-domain values (ell < 3, b_mod < 0).
  void validate() const;
  /// a1 > 0 and a2 < 0: four volcano-shaped wells per torus.
  bool has_volcano_profile() const { return a1 > 0.0 && a2 < 0.0; }
  /// Throws UnsupportedOrder unless ell == 4.
  void require_quartic() const;

  ModelParams with_b(double b) const {
    ModelParams m = *this;
    m.b_mod = b;
    return m;
  }
  ModelParams with_phi(double angle) const {
    ModelParams m = *this;
    m.phi = angle;
    return m;
  }
  ModelParams unperturbed() const { return with_b(0.0); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Flat `key = value` text with keys a1, a2, b_mod, phi, ell. Blank lines and
/// `#` comments are ignored; unknown keys are a ConfigError.
ModelParams parse_params(const std::string& text, ModelParams base = {});
ModelParams read_params_file(const std::string& path, ModelParams base = {});
void write_params(std::ostream& os, const ModelParams& params);

struct Monomial {
  int m = 0; // power of cos p
  int n = 0; // power of cos q
  double coeff = 0.0;
};

/// Local pendulum around the resonance chain, in the harmonic action I about
/// the island centre.
struct PendulumParams {
  double K0 = 0.0;
  double I_res = 0.0;
  double phi_res = 0.0;
  double mass = 0.0;
  double v_coeff = 0.0; // V(I) = v_coeff * I^2

  double V(double I) const { return v_coeff * I * I; }
};

template <class T> struct Gradient {
  T dp;
  T dq;
};

// Normal form h(x, y). The complex overload is the entire continuation in
// which the conjugate variable x - iy is treated as independent of x + iy.
double eval_normal_form(double x, double y, const ModelParams& params);
cplx eval_normal_form(cplx x, cplx y, const ModelParams& params);
Gradient<double> normal_form_gradient(double x, double y, const ModelParams& params);
Gradient<cplx> normal_form_gradient(cplx x, cplx y, const ModelParams& params);

double eval_H(double p, double q, const ModelParams& params);
cplx eval_H(cplx p, cplx q, const ModelParams& params);
Gradient<double> grad_H(double p, double q, const ModelParams& params);
Gradient<cplx> grad_H(cplx p, cplx q, const ModelParams& params);

/// Seven-term expansion of the quartic model in powers of cos p and cos q;
/// zero coefficients are dropped. Throws UnsupportedOrder unless ell == 4.
std::vector<Monomial> monomials(const ModelParams& params);
double eval_monomials(const std::vector<Monomial>& terms, double p, double q);

/// Throws DegenerateModel if a2 == 0.
PendulumParams pendulum_params(const ModelParams& params);

/// Maximum of H along the crown of the volcano (the circle
/// cos^2 p + cos^2 q = -a1/(4 a2)). Throws DegenerateModel if a2 >= 0.
double crown_energy(const ModelParams& params);

struct CriticalPoint {
  double p = 0.0;
  double q = 0.0;
  double energy = 0.0;
};

/// Saddle on the boundary between the cell centred at (pi/2, pi/2) and its
/// neighbour across q = 0 (or pi). Below this energy the four cells' regular
/// regions are separated.
CriticalPoint main_saddle(const ModelParams& params);

/// Lowest saddle of the resonance chain around (pi/2, pi/2). Inner tori exist
/// for 0 < E < energy. For b_mod == 0 this is the crown energy itself.
CriticalPoint chain_saddle(const ModelParams& params);

/// Newton polish of a critical point of H from a nearby starting point.
CriticalPoint refine_critical_point(double p, double q, const ModelParams& params);

} // namespace ratunnel
