#include "ratunnel/model.hpp"

#include "ratunnel/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ratunnel {

void ModelParams::validate() const {
  if (ell < 3) {
    throw ConfigError("resonance order ell must be >= 3, got " + std::to_string(ell));
  }
  if (!(b_mod >= 0.0)) {
    throw ConfigError("b_mod must be non-negative");
  }
  if (!std::isfinite(a1) || !std::isfinite(a2) || !std::isfinite(phi)) {
    throw ConfigError("model parameters must be finite");
  }
}

void ModelParams::require_quartic() const {
  if (ell != 4) {
    throw UnsupportedOrder("only the ell = 4 model is quantized, got ell = " + std::to_string(ell));
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse value of '" + key + "': " + value);
  }
  if (used != value.size()) {
    throw ConfigError("trailing characters in value of '" + key + "': " + value);
  }
  return out;
}

// z^k for small non-negative k by repeated multiplication.
template <class T> T ipow(T z, int k) {
  T out = T(1.0);
  for (int i = 0; i < k; ++i) {
    out *= z;
  }
  return out;
}

template <class T> cplx as_complex(T v) { return cplx(v); }

template <class T> T from_complex(cplx v);
template <> double from_complex<double>(cplx v) { return v.real(); }
template <> cplx from_complex<cplx>(cplx v) { return v; }

template <class T> T normal_form_impl(T x, T y, const ModelParams& prm) {
  const T r = x * x + y * y;
  const cplx b = std::polar(prm.b_mod, prm.phi);
  const cplx z = as_complex(x) + cplx(0.0, 1.0) * as_complex(y);
  const cplx zt = as_complex(x) - cplx(0.0, 1.0) * as_complex(y);
  const cplx resonant = 0.5 * (b * ipow(z, prm.ell) + std::conj(b) * ipow(zt, prm.ell));
  return T(0.5 * prm.a1) * r + T(prm.a2) * r * r + from_complex<T>(resonant);
}

template <class T> Gradient<T> normal_form_gradient_impl(T x, T y, const ModelParams& prm) {
  const T r = x * x + y * y;
  const cplx b = std::polar(prm.b_mod, prm.phi);
  const cplx I(0.0, 1.0);
  const cplx z = as_complex(x) + I * as_complex(y);
  const cplx zt = as_complex(x) - I * as_complex(y);
  const cplx bz = b * ipow(z, prm.ell - 1);
  const cplx bzt = std::conj(b) * ipow(zt, prm.ell - 1);
  const double half_ell = 0.5 * prm.ell;
  const T radial = T(prm.a1) + T(4.0 * prm.a2) * r;
  return {radial * x + from_complex<T>(half_ell * (bz + bzt)),
          radial * y + from_complex<T>(half_ell * I * (bz - bzt))};
}

template <class T> Gradient<T> grad_H_impl(T p, T q, const ModelParams& prm) {
  using std::cos;
  using std::sin;
  const auto g = normal_form_gradient_impl<T>(cos(p), cos(q), prm);
  return {-sin(p) * g.dp, -sin(q) * g.dq};
}

} // namespace

ModelParams parse_params(const std::string& text, ModelParams base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "a1") {
      base.a1 = parse_double(key, value);
    } else if (key == "a2") {
      base.a2 = parse_double(key, value);
    } else if (key == "b_mod" || key == "b") {
      base.b_mod = parse_double(key, value);
    } else if (key == "phi") {
      base.phi = parse_double(key, value);
    } else if (key == "ell") {
      const double v = parse_double(key, value);
      if (v != std::floor(v)) {
        throw ConfigError("ell must be an integer");
      }
      base.ell = static_cast<int>(v);
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

ModelParams read_params_file(const std::string& path, ModelParams base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open parameter file " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_params(buffer.str(), base);
}

void write_params(std::ostream& os, const ModelParams& params) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "a1 = " << params.a1 << '\n'
     << "a2 = " << params.a2 << '\n'
     << "b_mod = " << params.b_mod << '\n'
     << "phi = " << params.phi << '\n'
     << "ell = " << params.ell << '\n';
  os.flags(flags);
  os.precision(prec);
}

double eval_normal_form(double x, double y, const ModelParams& params) {
  return normal_form_impl<double>(x, y, params);
}
cplx eval_normal_form(cplx x, cplx y, const ModelParams& params) {
  return normal_form_impl<cplx>(x, y, params);
}
Gradient<double> normal_form_gradient(double x, double y, const ModelParams& params) {
  return normal_form_gradient_impl<double>(x, y, params);
}
Gradient<cplx> normal_form_gradient(cplx x, cplx y, const ModelParams& params) {
  return normal_form_gradient_impl<cplx>(x, y, params);
}

double eval_H(double p, double q, const ModelParams& params) {
  return normal_form_impl<double>(std::cos(p), std::cos(q), params);
}
cplx eval_H(cplx p, cplx q, const ModelParams& params) {
  return normal_form_impl<cplx>(std::cos(p), std::cos(q), params);
}
Gradient<double> grad_H(double p, double q, const ModelParams& params) {
  return grad_H_impl<double>(p, q, params);
}
Gradient<cplx> grad_H(cplx p, cplx q, const ModelParams& params) {
  return grad_H_impl<cplx>(p, q, params);
}

std::vector<Monomial> monomials(const ModelParams& params) {
  params.require_quartic();
  const double c = params.b_mod * std::cos(params.phi);
  const double s = params.b_mod * std::sin(params.phi);
  const std::array<Monomial, 7> all{{
      {2, 0, 0.5 * params.a1},
      {0, 2, 0.5 * params.a1},
      {4, 0, params.a2 + c},
      {0, 4, params.a2 + c},
      {2, 2, 2.0 * params.a2 - 6.0 * c},
      {3, 1, -4.0 * s},
      {1, 3, 4.0 * s},
  }};
  std::vector<Monomial> out;
  for (const auto& term : all) {
    if (term.coeff != 0.0) {
      out.push_back(term);
    }
  }
  return out;
}

double eval_monomials(const std::vector<Monomial>& terms, double p, double q) {
  const double x = std::cos(p);
  const double y = std::cos(q);
  double sum = 0.0;
  for (const auto& t : terms) {
    sum += t.coeff * ipow(x, t.m) * ipow(y, t.n);
  }
  return sum;
}

PendulumParams pendulum_params(const ModelParams& params) {
  if (params.a2 == 0.0) {
    throw DegenerateModel("pendulum reduction needs a2 != 0");
  }
  PendulumParams out;
  out.K0 = -params.a1 * params.a1 / (16.0 * params.a2);
  out.I_res = -params.a1 / (8.0 * params.a2);
  out.phi_res = params.phi;
  out.mass = 1.0 / (8.0 * params.a2);
  out.v_coeff = 2.0 * params.b_mod;
  return out;
}

namespace {

// Golden-section maximisation of f on [lo, hi].
template <class F> double golden_max(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

double crown_energy(const ModelParams& params) {
  if (params.a2 >= 0.0) {
    throw DegenerateModel("crown energy needs a2 < 0");
  }
  const double rho = -params.a1 / (4.0 * params.a2);
  if (params.b_mod == 0.0) {
    // radial profile f(w) = a1/2 w + a2 w^2 on w in [0, 2]
    const auto f = [&](double w) { return 0.5 * params.a1 * w + params.a2 * w * w; };
    if (rho >= 0.0 && rho <= 2.0) {
      return -params.a1 * params.a1 / (16.0 * params.a2);
    }
    return std::max(f(0.0), f(2.0));
  }
  const double radius = std::sqrt(std::max(rho, 0.0));
  const auto on_circle = [&](double theta) {
    return eval_normal_form(radius * std::cos(theta), radius * std::sin(theta), params);
  };
  constexpr int samples = 512;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double v = on_circle(2.0 * kPi * i / samples);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double h = 2.0 * kPi / samples;
  const double theta = golden_max(on_circle, (best - 1) * h, (best + 1) * h, 1e-10);
  return std::max(best_val, on_circle(theta));
}

CriticalPoint refine_critical_point(double p, double q, const ModelParams& params) {
  constexpr double fd = 1e-6;
  for (int it = 0; it < 60; ++it) {
    const auto g = grad_H(p, q, params);
    const auto gp_plus = grad_H(p + fd, q, params);
    const auto gp_minus = grad_H(p - fd, q, params);
    const auto gq_plus = grad_H(p, q + fd, params);
    const auto gq_minus = grad_H(p, q - fd, params);
    const double hpp = (gp_plus.dp - gp_minus.dp) / (2 * fd);
    const double hpq = 0.5 * ((gp_plus.dq - gp_minus.dq) + (gq_plus.dp - gq_minus.dp)) / (2 * fd);
    const double hqq = (gq_plus.dq - gq_minus.dq) / (2 * fd);
    const double det = hpp * hqq - hpq * hpq;
    if (det == 0.0) {
      break;
    }
    const double dp = -(hqq * g.dp - hpq * g.dq) / det;
    const double dq = -(-hpq * g.dp + hpp * g.dq) / det;
    p += dp;
    q += dq;
    if (std::hypot(dp, dq) < 1e-15) {
      break;
    }
  }
  return {p, q, eval_H(p, q, params)};
}

CriticalPoint main_saddle(const ModelParams& params) {
  return refine_critical_point(kHalfPi, 0.0, params);
}

namespace {

// Largest H along a ray from the island centre, searched out to radius rmax.
std::pair<double, double> ray_maximum(double alpha, double rmax, const ModelParams& params) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const auto h = [&](double r) { return eval_H(kHalfPi + r * c, kHalfPi + r * s, params); };
  constexpr int samples = 200;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double v = h(rmax * i / samples);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double dr = rmax / samples;
  const double r = golden_max(h, std::max(0.0, (best - 1) * dr), std::min(rmax, (best + 1) * dr), 1e-12);
  return {r, h(r)};
}

} // namespace

CriticalPoint chain_saddle(const ModelParams& params) {
  if (params.a2 >= 0.0) {
    throw DegenerateModel("resonance chain needs a2 < 0");
  }
  if (params.b_mod == 0.0) {
    const double rho = -params.a1 / (4.0 * params.a2);
    const double u = std::asin(std::sqrt(std::min(rho, 1.0)));
    return {kHalfPi + u, kHalfPi, crown_energy(params)};
  }
  constexpr double rmax = 1.2;
  constexpr int angles = 360;
  double best_alpha = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < angles; ++i) {
    const double alpha = 2.0 * kPi * i / angles;
    const double v = ray_maximum(alpha, rmax, params).second;
    if (v < best_val) {
      best_val = v;
      best_alpha = alpha;
    }
  }
  const double h = 2.0 * kPi / angles;
  const double a = golden_max([&](double a) { return -ray_maximum(a, rmax, params).second; },
                              best_alpha - h, best_alpha + h, 1e-10);
  const double r = ray_maximum(a, rmax, params).first;
  return refine_critical_point(kHalfPi + r * std::cos(a), kHalfPi + r * std::sin(a), params);
}

} // namespace ratunnel
