#include "ratunnel/quantum.hpp"

#include "ratunnel/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace ratunnel {

TorusGrid::TorusGrid(int N) : N_(N) {
  if (N < 2) {
    throw ConfigError("torus grid needs N >= 2, got " + std::to_string(N));
  }
}

Eigen::MatrixXd cos_p_matrix(const TorusGrid& grid) {
  const int D = grid.D();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(D, D);
  for (int j = 0; j < D; ++j) {
    C(j, (j + 1) % D) += 0.5;
    C(j, (j + D - 1) % D) += 0.5;
  }
  return C;
}

Eigen::MatrixXd reflection_matrix(const TorusGrid& grid) {
  const int D = grid.D();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(D, D);
  for (int j = 0; j < D; ++j) {
    R(grid.reflect(j), j) = 1.0;
  }
  return R;
}

namespace {

struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  void add(double x) {
    const double s = hi + x;
    const double bb = s - hi;
    lo += (hi - (s - bb)) + (x - bb);
    hi = s;
  }
  void add_product(double a, double b) {
    const double p = a * b;
    add(p);
    lo += std::fma(a, b, -p);
  }
  void normalize() {
    const double s = hi + lo;
    lo = lo - (s - hi);
    hi = s;
  }
};

// v^T H v / v^T v with compensated sums throughout.
DoubleDouble rayleigh_quotient(const Eigen::MatrixXd& H, const Eigen::VectorXd& v) {
  const int D = static_cast<int>(v.size());
  DoubleDouble num, den;
  for (int i = 0; i < D; ++i) {
    DoubleDouble row;
    for (int j = 0; j < D; ++j) {
      row.add_product(H(i, j), v(j));
    }
    row.normalize();
    num.add_product(v(i), row.hi);
    num.add_product(v(i), row.lo);
    den.add_product(v(i), v(i));
  }
  num.normalize();
  den.normalize();
  DoubleDouble q{num.hi / den.hi, 0.0};
  DoubleDouble r = num;
  r.add_product(-q.hi, den.hi);
  r.add_product(-q.hi, den.lo);
  r.normalize();
  q.lo = r.hi / den.hi;
  q.normalize();
  return q;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (int i = 0; i < k; ++i) {
    out = out * A;
  }
  return out;
}

} // namespace

Eigen::MatrixXd build_hamiltonian(const ModelParams& params, const TorusGrid& grid) {
  const auto terms = monomials(params);
  const int D = grid.D();
  const Eigen::MatrixXd Cp = cos_p_matrix(grid);
  Eigen::VectorXd cq(D);
  for (int j = 0; j < D; ++j) {
    cq(j) = std::cos(grid.q(j));
  }
  std::array<Eigen::MatrixXd, 5> cp_pow;
  for (int k = 0; k <= 4; ++k) {
    cp_pow[k] = matrix_power(Cp, k);
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
  for (const auto& t : terms) {
    const Eigen::VectorXd cqn = cq.array().pow(t.n);
    // C_p^m C_q^n scales columns, C_q^n C_p^m scales rows.
    const Eigen::MatrixXd left = cp_pow[t.m] * cqn.asDiagonal();
    const Eigen::MatrixXd right = cqn.asDiagonal() * cp_pow[t.m];
    H += 0.5 * t.coeff * (left + right);
  }
  return H;
}

SpectrumResult diagonalize(const Eigen::MatrixXd& H, const TorusGrid& grid) {
  const int D = grid.D();
  if (H.rows() != D || H.cols() != D) {
    throw SolverFailure("matrix size does not match the grid");
  }
  std::vector<int> fixed;
  std::vector<int> paired;
  for (int j = 0; j < D; ++j) {
    const int r = grid.reflect(j);
    if (r == j) {
      fixed.push_back(j);
    } else if (j < r) {
      paired.push_back(j);
    }
  }
  const int n_even = static_cast<int>(fixed.size() + paired.size());
  const int n_odd = static_cast<int>(paired.size());
  Eigen::MatrixXd Pe = Eigen::MatrixXd::Zero(D, n_even);
  Eigen::MatrixXd Po = Eigen::MatrixXd::Zero(D, n_odd);
  const double s = std::sqrt(0.5);
  int col = 0;
  for (int j : fixed) {
    Pe(j, col++) = 1.0;
  }
  for (std::size_t i = 0; i < paired.size(); ++i) {
    const int j = paired[i];
    Pe(j, col) = s;
    Pe(grid.reflect(j), col) = s;
    ++col;
    Po(j, static_cast<int>(i)) = s;
    Po(grid.reflect(j), static_cast<int>(i)) = -s;
  }

  struct Level {
    double energy;
    double tail;
    int parity;
    Eigen::VectorXd state;
  };
  std::vector<Level> levels;
  levels.reserve(D);
  for (int sector = 0; sector < 2; ++sector) {
    const Eigen::MatrixXd& P = sector == 0 ? Pe : Po;
    const Eigen::MatrixXd block = P.transpose() * H * P;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (block + block.transpose()));
    if (solver.info() != Eigen::Success) {
      throw SolverFailure("symmetric eigensolver did not converge");
    }
    const Eigen::MatrixXd vecs = P * solver.eigenvectors();
    for (int i = 0; i < block.rows(); ++i) {
      const auto rq = rayleigh_quotient(H, vecs.col(i));
      levels.push_back({rq.hi, rq.lo, sector == 0 ? 1 : -1, vecs.col(i)});
    }
  }
  std::stable_sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) {
    return a.energy < b.energy || (a.energy == b.energy && a.tail < b.tail);
  });

  SpectrumResult out;
  out.N = grid.N();
  out.hbar = grid.hbar();
  out.energies.resize(D);
  out.energy_tails.resize(D);
  out.states.resize(D, D);
  out.parity.resize(D);
  for (int i = 0; i < D; ++i) {
    out.energies(i) = levels[i].energy;
    out.energy_tails(i) = levels[i].tail;
    out.states.col(i) = levels[i].state;
    out.parity[i] = levels[i].parity;
  }
  out.h_norm = std::max(std::abs(out.energies(0)), std::abs(out.energies(D - 1)));
  out.max_residual = ((H * out.states) - out.states * out.energies.asDiagonal()).colwise().norm().maxCoeff();
  return out;
}

Eigen::VectorXcd local_state(int n, double q0, double p0, const TorusGrid& grid) {
  if (n < 0) {
    throw ConfigError("oscillator level must be non-negative");
  }
  const double hbar = grid.hbar();
  const double width = std::sqrt(hbar * (n + 0.5));
  if (width > kPi / 4.0) {
    throw PoorLocalization("oscillator level " + std::to_string(n) + " does not fit a quarter cell at N = " +
                           std::to_string(grid.N()));
  }
  const int D = grid.D();
  const double scale = std::sqrt(hbar);
  const auto hermite_function = [n](double x) {
    double h0 = 1.0;
    double h1 = 2.0 * x;
    if (n == 0) return h0 * std::exp(-0.5 * x * x);
    for (int k = 1; k < n; ++k) {
      const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
      h0 = h1;
      h1 = h2;
    }
    return h1 * std::exp(-0.5 * x * x);
  };
  Eigen::VectorXcd psi(D);
  for (int j = 0; j < D; ++j) {
    const double q = grid.q(j);
    double amp = 0.0;
    for (int m = -1; m <= 1; ++m) {
      amp += hermite_function((q - q0 + 2.0 * kPi * m) / scale);
    }
    psi(j) = amp * std::polar(1.0, p0 * q / hbar);
  }
  return psi / psi.norm();
}

namespace {

Eigen::VectorXcd reflected(const Eigen::VectorXcd& v, const TorusGrid& grid) {
  Eigen::VectorXcd out(v.size());
  for (int j = 0; j < grid.D(); ++j) {
    out(grid.reflect(j)) = v(j);
  }
  return out;
}

} // namespace

Eigen::VectorXcd local_state(int n, Well well, const TorusGrid& grid) {
  switch (well) {
  case Well::RU:
    return local_state(n, kHalfPi, kHalfPi, grid);
  case Well::RD:
    return local_state(n, kHalfPi, -kHalfPi, grid);
  case Well::LD:
    return reflected(local_state(n, Well::RU, grid), grid);
  case Well::LU:
    return reflected(local_state(n, Well::RD, grid), grid);
  }
  throw ConfigError("unknown well");
}

const char* to_string(Quartet s) {
  switch (s) {
  case Quartet::PP:
    return "++";
  case Quartet::MP:
    return "-+";
  case Quartet::PM:
    return "+-";
  case Quartet::MM:
    return "--";
  }
  return "?";
}

QuartetStates quartet_states(int n, const TorusGrid& grid) {
  QuartetStates out;
  out.n = n;
  out.local = {local_state(n, Well::RU, grid), local_state(n, Well::LU, grid),
               local_state(n, Well::LD, grid), local_state(n, Well::RD, grid)};
  const auto& [ru, lu, ld, rd] = out.local;
  const cplx I(0.0, 1.0);
  std::array<Eigen::VectorXcd, 4> raw = {
      0.5 * (ru + lu + ld + rd),
      0.5 * (ru - lu - ld + rd),
      0.5 * I * (ru + lu - ld - rd),
      0.5 * I * (ru - lu + ld - rd),
  };
  for (int i = 0; i < 4; ++i) {
    out.raw_norms[i] = raw[i].norm();
    Eigen::VectorXcd v = raw[i];
    for (int k = 0; k < i; ++k) {
      v -= out.combined[k].dot(v) * out.combined[k];
    }
    out.combined[i] = v / v.norm();
  }
  return out;
}

SplittingResult exact_splitting(int n, const SpectrumResult& spectrum, const TorusGrid& grid, double threshold) {
  const auto quartet = quartet_states(n, grid);
  const int D = grid.D();
  const double cluster_tol = kClusterTolerance * spectrum.h_norm;

  // Degenerate clusters within each parity sector.
  std::vector<int> cluster(D, -1);
  int next_cluster = 0;
  for (int i = 0; i < D; ++i) {
    if (cluster[i] >= 0) continue;
    cluster[i] = next_cluster;
    for (int k = i + 1; k < D && spectrum.energies(k) - spectrum.energies(i) < cluster_tol; ++k) {
      if (spectrum.parity[k] == spectrum.parity[i] && cluster[k] < 0) {
        cluster[k] = next_cluster;
      }
    }
    ++next_cluster;
  }

  SplittingResult out;
  out.n = n;
  for (int s = 0; s < 4; ++s) {
    const Eigen::VectorXcd& target = quartet.combined[s];
    const Eigen::VectorXcd ov = spectrum.states.cast<cplx>().adjoint() * target;
    std::vector<double> single(D);
    std::vector<double> summed(next_cluster, 0.0);
    std::vector<double> energy_sum(next_cluster, 0.0);
    std::vector<double> offset_sum(next_cluster, 0.0);
    std::vector<int> members(next_cluster, 0);
    for (int i = 0; i < D; ++i) {
      single[i] = std::norm(ov(i));
      summed[cluster[i]] += single[i];
      energy_sum[cluster[i]] += spectrum.energies(i);
      ++members[cluster[i]];
    }
    QuartetPick pick;
    pick.index = static_cast<int>(std::max_element(single.begin(), single.end()) - single.begin());
    pick.overlap = single[pick.index];
    const double ref = spectrum.energies(pick.index);
    for (int i = 0; i < D; ++i) {
      offset_sum[cluster[i]] += (spectrum.energies(i) - ref) + spectrum.energy_tails(i);
    }
    std::vector<int> order(next_cluster);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + std::min(2, next_cluster), order.end(),
                      [&](int a, int b) { return summed[a] > summed[b]; });
    const int best = order[0];
    pick.cluster_overlap = summed[best];
    pick.cluster_energy = energy_sum[best] / members[best];
    pick.cluster_offset = offset_sum[best] / members[best];
    pick.ambiguous = next_cluster > 1 && std::abs(summed[order[0]] - summed[order[1]]) < 1e-6;
    out.picks[s] = pick;
    if (pick.cluster_overlap < threshold) {
      out.low_confidence = true;
    }
    if (pick.ambiguous) {
      out.ambiguous = true;
    }
  }
  const auto& pp = out.picks[static_cast<int>(Quartet::PP)];
  const auto& mp = out.picks[static_cast<int>(Quartet::MP)];
  out.splitting = std::abs((spectrum.energies(pp.index) - spectrum.energies(mp.index)) +
                           (pp.cluster_offset - mp.cluster_offset));
  return out;
}

SplittingResult exact_splitting(int n, const ModelParams& params, const TorusGrid& grid, double threshold) {
  const auto spectrum = diagonalize(build_hamiltonian(params, grid), grid);
  return exact_splitting(n, spectrum, grid, threshold);
}

void write_spectrum_json(std::ostream& os, const SpectrumResult& spectrum, const ModelParams& params,
                         const std::vector<SplittingResult>& tracked) {
  nlohmann::json j;
  j["N"] = spectrum.N;
  j["hbar"] = spectrum.hbar;
  j["params"] = {{"a1", params.a1}, {"a2", params.a2}, {"b_mod", params.b_mod}, {"phi", params.phi},
                 {"ell", params.ell}};
  j["energies"] = std::vector<double>(spectrum.energies.data(), spectrum.energies.data() + spectrum.energies.size());
  j["parities"] = spectrum.parity;
  nlohmann::json quartets = nlohmann::json::array();
  for (const auto& t : tracked) {
    nlohmann::json q;
    q["n"] = t.n;
    q["dE_exact"] = t.splitting;
    q["low_confidence"] = t.low_confidence;
    q["ambiguous"] = t.ambiguous;
    for (int s = 0; s < 4; ++s) {
      const auto& pick = t.picks[s];
      q["assignment"][to_string(static_cast<Quartet>(s))] = {{"index", pick.index},
                                                            {"energy", spectrum.energies(pick.index)},
                                                            {"overlap", pick.overlap},
                                                            {"cluster_energy", pick.cluster_energy},
                                                            {"cluster_overlap", pick.cluster_overlap}};
    }
    quartets.push_back(q);
  }
  j["quartets"] = quartets;
  os << j.dump(2) << '\n';
}

} // namespace ratunnel
