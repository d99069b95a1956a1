#include "ratunnel/semiclassics.hpp"

#include "ratunnel/errors.hpp"
#include "ratunnel/quantum.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

namespace ratunnel {

namespace {

constexpr double kCellAction = kPi * kPi / 2.0;

template <class F> double half_line_integral(F f) {
  // integrand is even in t
  return 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, kHalfPi, 15, 1e-13);
}

template <class F> std::pair<double, double> bracket_root(F f, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return r;
}

double level_splitting(double hbar, double omega, double sigma) {
  return 2.0 * hbar * omega / kPi * std::exp(-sigma / (2.0 * hbar));
}

} // namespace

double unperturbed_action(double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw OutOfRange("torus label w = " + std::to_string(w) + " outside [0, 1]");
  }
  const double sw = std::sqrt(w);
  return 2.0 * half_line_integral([sw, w](double t) {
    const double c = std::cos(t);
    const double s = std::sin(t);
    return std::asin(sw * c) * sw * c / std::sqrt(1.0 - w * s * s);
  });
}

double unperturbed_action_slope(double w) {
  if (!(w >= 0.0 && w < 1.0)) {
    throw OutOfRange("torus label w = " + std::to_string(w) + " outside [0, 1)");
  }
  return half_line_integral([w](double t) {
    const double c = std::cos(t);
    const double s = std::sin(t);
    return 1.0 / std::sqrt((1.0 - w * s * s) * (1.0 - w * c * c));
  });
}

UnperturbedLevel unperturbed_level(int m, double hbar, const ModelParams& params) {
  if (m < 0 || !(hbar > 0.0)) {
    throw ConfigError("level index and hbar must be non-negative and positive");
  }
  UnperturbedLevel lv;
  lv.m = m;
  lv.hbar = hbar;
  lv.action = 2.0 * kPi * hbar * (m + 0.5);
  if (lv.action >= kCellAction * (1.0 - 1e-12)) {
    throw OutOfRange("unperturbed level " + std::to_string(m) + " lies beyond the separatrix");
  }
  const double target = lv.action;
  lv.w = bracket_root([target](double w) { return unperturbed_action(w) - target; }, 0.0, 1.0).first;
  const double slope = params.a1 / 2.0 + 2.0 * params.a2 * lv.w;
  lv.energy = params.a1 / 2.0 * lv.w + params.a2 * lv.w * lv.w;
  lv.omega = 2.0 * kPi * std::abs(slope) / unperturbed_action_slope(lv.w);
  lv.branch = slope > 0.0 ? Branch::Inner : Branch::Outer;
  lv.sigma = sigma_unperturbed_w(lv.w);
  return lv;
}

double unperturbed_splitting(const UnperturbedLevel& level, Prefactor prefactor) {
  const double suppression = std::exp(-level.sigma / (2.0 * level.hbar));
  if (prefactor == Prefactor::DoubleWell) {
    return level.hbar * level.omega * suppression;
  }
  return 2.0 * level.hbar * level.omega / kPi * suppression;
}

double unperturbed_splitting(int n, double hbar, const ModelParams& params, Prefactor prefactor) {
  return unperturbed_splitting(unperturbed_level(n, hbar, params), prefactor);
}

double coupling_denominator(double S_in, double S_out, double hbar, int ell) {
  return 2.0 * std::sin((S_in - S_out) / (2.0 * ell * hbar));
}

double coupling_amplitude(double sigma_c, double S_in, double S_out, double hbar, int ell) {
  return std::exp(-sigma_c / (2.0 * hbar)) / coupling_denominator(S_in, S_out, hbar, ell);
}

CouplingAmplitude coupling_amplitude(double E, double hbar, const ModelParams& params,
                                     const SemiclassicalOptions& opt) {
  const auto land = energy_landscape(params);
  CouplingAmplitude out;
  out.S_in = find_torus(E, Branch::Inner, params, land, opt.shooting.torus).action;
  out.S_out = find_torus(E, Branch::Outer, params, land, opt.shooting.torus).action;
  out.denominator = coupling_denominator(out.S_in, out.S_out, hbar, opt.ell);
  if (std::abs(out.denominator) < opt.peak_tolerance) {
    throw PeakSingularity("coupling denominator vanishes at E = " + std::to_string(E));
  }
  out.sigma_c = shoot_chain_crossing(E, params, opt.shooting).sigma;
  out.amplitude = coupling_amplitude(out.sigma_c, out.S_in, out.S_out, hbar, opt.ell);
  return out;
}

double outer_splitting(double sigma_tilde, double omega_out, double hbar) {
  return level_splitting(hbar, omega_out, sigma_tilde);
}

double outer_splitting(double E, double hbar, const ModelParams& params, const SemiclassicalOptions& opt) {
  const auto outer = find_torus(E, Branch::Outer, params, opt.shooting.torus);
  const double sigma = shoot_separatrix_crossing(E, params, opt.shooting).sigma;
  return outer_splitting(sigma, outer.frequency, hbar);
}

bool SplittingRecord::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::string SplittingRecord::flag_string() const {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += '|';
    out += f;
  }
  return out;
}

double complex_path_from_diagnostics(const SplittingRecord& r, int ell) {
  const double a = coupling_amplitude(r.sigma_c, r.S_in, r.S_out, r.hbar, ell);
  return a * a * outer_splitting(r.sigma_tilde, r.omega_out, r.hbar);
}

namespace {

SplittingRecord blank_record(int n, double hbar, const ModelParams& params) {
  SplittingRecord r;
  r.hbar = hbar;
  r.N = static_cast<int>(std::lround(kPi / (2.0 * hbar)));
  r.n = n;
  r.phi = params.phi;
  r.b_mod = params.b_mod;
  return r;
}

// Needs r.E_n, r.S_in and r.omega_in.
void fill_complex_path(SplittingRecord& r, const ModelParams& params, const EnergyLandscape& land,
                       const SemiclassicalOptions& opt) {
  const auto outer = find_torus(r.E_n, Branch::Outer, params, land, opt.shooting.torus);
  r.S_out = outer.action;
  r.omega_out = outer.frequency;
  r.denominator = coupling_denominator(r.S_in, r.S_out, r.hbar, opt.ell);
  r.sigma_c = shoot_chain_crossing(r.E_n, params, opt.shooting).sigma;
  r.sigma_tilde = shoot_separatrix_crossing(r.E_n, params, opt.shooting).sigma;
  if (std::abs(r.denominator) < opt.peak_tolerance) {
    r.flags.emplace_back("peak_singularity");
    r.dE_complex_path = std::numeric_limits<double>::infinity();
    return;
  }
  if (std::abs(r.denominator) < opt.near_peak) {
    r.flags.emplace_back("near_peak");
  }
  r.dE_complex_path = complex_path_from_diagnostics(r, opt.ell);
}

void fill_inner(SplittingRecord& r, const ModelParams& params, const EnergyLandscape& land,
                const SemiclassicalOptions& opt) {
  r.E_n = ebk_energy(r.n, r.hbar, Branch::Inner, params, opt.shooting.torus);
  const auto inner = find_torus(r.E_n, Branch::Inner, params, land, opt.shooting.torus);
  r.S_in = inner.action;
  r.omega_in = inner.frequency;
}

void fill_direct(SplittingRecord& r, const ModelParams& params, const SemiclassicalOptions& opt) {
  r.Sigma = shoot_direct(r.E_n, params, opt.shooting).sigma;
  r.dE_direct = direct_splitting(r.Sigma, r.omega_in, r.hbar);
}

std::string error_flag(const char* stage, const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return std::string(stage) + ":" + err->kind();
  }
  return std::string(stage) + ":error";
}

} // namespace

SplittingRecord resonance_assisted_splitting(int n, double hbar, const ModelParams& params,
                                             const SemiclassicalOptions& opt) {
  auto r = blank_record(n, hbar, params);
  const auto land = energy_landscape(params);
  fill_inner(r, params, land, opt);
  fill_complex_path(r, params, land, opt);
  return r;
}

double direct_splitting(double Sigma, double omega_in, double hbar) {
  return level_splitting(hbar, omega_in, Sigma);
}

double direct_splitting(int n, double hbar, const ModelParams& params, const SemiclassicalOptions& opt) {
  auto r = blank_record(n, hbar, params);
  fill_inner(r, params, energy_landscape(params), opt);
  fill_direct(r, params, opt);
  return r.dE_direct;
}

double island_area(const ModelParams& params, int grid) {
  if (grid < 2 || grid % 2 != 0) {
    throw ConfigError("island area grid must be even and at least 2");
  }
  const double E_sep = main_saddle(params).energy;
  const double h = kPi / grid;
  const auto idx = [grid](int i, int j) { return static_cast<std::size_t>(i) * grid + j; };
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(grid) * grid);
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      inside[idx(i, j)] = eval_H((i + 0.5) * h, (j + 0.5) * h, params) > E_sep ? 1 : 0;
    }
  }
  std::vector<std::uint8_t> seen(inside.size(), 0);
  std::vector<std::pair<int, int>> stack;
  const int c = grid / 2;
  for (int i : {c - 1, c}) {
    for (int j : {c - 1, c}) {
      if (inside[idx(i, j)]) {
        seen[idx(i, j)] = 1;
        stack.emplace_back(i, j);
      }
    }
  }
  std::size_t count = 0;
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    ++count;
    constexpr int di[] = {1, -1, 0, 0};
    constexpr int dj[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int a = i + di[k];
      const int b = j + dj[k];
      if (a < 0 || b < 0 || a >= grid || b >= grid) continue;
      if (inside[idx(a, b)] && !seen[idx(a, b)]) {
        seen[idx(a, b)] = 1;
        stack.emplace_back(a, b);
      }
    }
  }
  return static_cast<double>(count) * h * h;
}

int rat_cutoff(double area, int n, double hbar, int ell) {
  const double k = std::floor((area / (2.0 * kPi * hbar) - (2.0 * n + 1.0) / 2.0) / ell);
  return std::max(0, static_cast<int>(k));
}

RatResult rat_splitting(int n, double hbar, const ModelParams& params, double area, int ell) {
  const auto b0 = params.unperturbed();
  RatResult out;
  out.cutoff = rat_cutoff(area, n, hbar, ell);
  RatTerm base;
  base.level = unperturbed_level(n, hbar, b0);
  base.coupling = 1.0;
  base.level_splitting = unperturbed_splitting(base.level);
  out.terms.push_back(base);
  out.splitting = base.level_splitting;
  double B2 = 1.0;
  for (int k = 1; k <= out.cutoff; ++k) {
    RatTerm term;
    term.k = k;
    try {
      term.level = unperturbed_level(n + k * ell, hbar, b0);
    } catch (const OutOfRange&) {
      out.truncated = true;
      break;
    }
    const double gap = base.level.energy - term.level.energy;
    if (std::abs(gap) < 1e-12) {
      throw ResonantDenominator("unperturbed levels " + std::to_string(n) + " and " +
                                std::to_string(n + k * ell) + " are degenerate");
    }
    const double log_ratio = std::lgamma(n + k * ell + 1.0) - std::lgamma(n + (k - 1) * ell + 1.0);
    const double A = 2.0 * params.b_mod * std::pow(hbar, ell / 2.0) * std::exp(0.5 * log_ratio);
    B2 *= (A / gap) * (A / gap);
    term.coupling = B2;
    term.level_splitting = unperturbed_splitting(term.level);
    out.splitting += B2 * term.level_splitting;
    out.terms.push_back(term);
  }
  return out;
}

RatResult rat_splitting(int n, double hbar, const ModelParams& params, int ell) {
  return rat_splitting(n, hbar, params, island_area(params), ell);
}

PeakLocation hbar_peak(int n, const ModelParams& params, int nu, int ell, const TorusOptions& opt) {
  const auto land = energy_landscape(params);
  const double ratio = 1.0 + ell * nu / (n + 0.5);
  const auto f = [&](double E) {
    const double s_in = find_torus(E, Branch::Inner, params, land, opt).action;
    const double s_out = find_torus(E, Branch::Outer, params, land, opt).action;
    return s_out - ratio * s_in;
  };
  const double lo = std::max(land.separatrix, 0.0);
  const double hi = land.chain;
  constexpr int kSamples = 48;
  std::vector<std::pair<double, double>> samples;
  for (int k = 0; k < kSamples; ++k) {
    const double E = lo + (hi - lo) * (k + 0.5) / kSamples;
    try {
      samples.emplace_back(E, f(E));
    } catch (const Error&) {
    }
  }
  // f falls with E; the largest-E sign change is the largest hbar.
  for (std::size_t k = samples.size(); k-- > 1;) {
    const auto& [e0, f0] = samples[k - 1];
    const auto& [e1, f1] = samples[k];
    if (f0 > 0.0 && f1 <= 0.0) {
      const auto r = bracket_root(f, e0, e1);
      PeakLocation out;
      out.energy = 0.5 * (r.first + r.second);
      out.hbar = find_torus(out.energy, Branch::Inner, params, land, opt).action / (2.0 * kPi * (n + 0.5));
      out.N = kPi / (2.0 * out.hbar);
      return out;
    }
  }
  throw NoRoot("coupling denominator has no zero for level " + std::to_string(n));
}

double criterion_lhs(double hbar, int n, const ModelParams& params, double hbar_peak, int ell) {
  const auto pend = pendulum_params(params);
  const double chain_area = 16.0 * std::sqrt(2.0 * std::abs(pend.mass * pend.V(pend.I_res)));
  const double ls_area = 2.0 * kPi * pend.I_res;
  const auto b0 = params.unperturbed();
  const double low = unperturbed_splitting(n, hbar, b0);
  const double high = unperturbed_splitting(n + ell, hbar, b0);
  return chain_area * chain_area / (ell * hbar * ls_area) * std::sqrt(high / low) / (hbar / hbar_peak - 1.0);
}

CriterionResult hbar_res(int n, const ModelParams& params, int ell) {
  const auto pend = pendulum_params(params);
  CriterionResult out;
  out.hbar_peak = hbar_peak(n, params, 1, ell).hbar;
  out.chain_area = 16.0 * std::sqrt(2.0 * std::abs(pend.mass * pend.V(pend.I_res)));
  out.island_area = 2.0 * kPi * pend.I_res;
  const double top = std::min(10.0 * out.hbar_peak, kCellAction / (2.0 * kPi * (n + ell + 0.5)) * (1.0 - 1e-9));
  if (!(top > out.hbar_peak)) {
    throw NoRoot("empty bracket for the crossover criterion");
  }
  const double target = 256.0 / kPi;
  const auto g = [&](double hbar) { return criterion_lhs(hbar, n, params, out.hbar_peak, ell) - target; };
  constexpr int kSamples = 64;
  std::vector<std::pair<double, double>> samples;
  for (int k = 1; k <= kSamples; ++k) {
    const double hbar = out.hbar_peak + (top - out.hbar_peak) * k / kSamples;
    samples.emplace_back(hbar, g(hbar));
  }
  for (std::size_t k = 1; k < samples.size(); ++k) {
    if (samples[k].second > samples[k - 1].second) {
      out.monotone = false;
    }
  }
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const auto& [h0, g0] = samples[k - 1];
    const auto& [h1, g1] = samples[k];
    if ((g0 > 0.0) != (g1 > 0.0)) {
      const auto r = bracket_root(g, h0, h1);
      out.hbar_res = 0.5 * (r.first + r.second);
      out.N_res = kPi / (2.0 * out.hbar_res);
      return out;
    }
  }
  if (samples.front().second <= 0.0) {
    const auto r = bracket_root(g, out.hbar_peak * (1.0 + 1e-9), samples.front().first);
    out.hbar_res = 0.5 * (r.first + r.second);
    out.N_res = kPi / (2.0 * out.hbar_res);
    return out;
  }
  throw NoRoot("crossover criterion does not cross in (hbar_peak, " + std::to_string(top) + ")");
}

SplittingRecord evaluate_point(int N, int n, const ModelParams& params, const Methods& methods,
                               const SemiclassicalOptions& opt, std::optional<double> area) {
  const TorusGrid grid(N);
  auto r = blank_record(n, grid.hbar(), params);
  r.N = N;

  if (methods.exact) {
    try {
      const auto spectrum = diagonalize(build_hamiltonian(params, grid), grid);
      const auto s = exact_splitting(n, spectrum, grid);
      r.dE_exact = s.splitting;
      if (r.dE_exact < kClusterTolerance * spectrum.h_norm) {
        r.flags.emplace_back("exact_roundoff");
      }
      if (s.low_confidence) r.flags.emplace_back("exact_low_overlap");
      if (s.ambiguous) r.flags.emplace_back("exact_ambiguous");
    } catch (const std::exception& e) {
      r.flags.push_back(error_flag("exact", e));
    }
  }
  if (methods.unpert) {
    try {
      r.dE_unpert = unperturbed_splitting(n, r.hbar, params.unperturbed());
    } catch (const std::exception& e) {
      r.flags.push_back(error_flag("unpert", e));
    }
  }
  if (methods.rat) {
    try {
      const auto rat = area ? rat_splitting(n, r.hbar, params, *area, opt.ell)
                            : rat_splitting(n, r.hbar, params, opt.ell);
      r.dE_rat = rat.splitting;
      if (rat.truncated) r.flags.emplace_back("rat_truncated");
    } catch (const std::exception& e) {
      r.flags.push_back(error_flag("rat", e));
    }
  }
  if (methods.cpath || methods.direct) {
    const auto land = energy_landscape(params);
    bool have_inner = false;
    try {
      fill_inner(r, params, land, opt);
      have_inner = true;
    } catch (const std::exception& e) {
      r.flags.push_back(error_flag("ebk", e));
    }
    if (have_inner && methods.cpath) {
      try {
        fill_complex_path(r, params, land, opt);
      } catch (const std::exception& e) {
        r.flags.push_back(error_flag("cpath", e));
      }
    }
    if (have_inner && methods.direct) {
      try {
        fill_direct(r, params, opt);
      } catch (const std::exception& e) {
        r.flags.push_back(error_flag("direct", e));
      }
    }
  }
  return r;
}

} // namespace ratunnel
