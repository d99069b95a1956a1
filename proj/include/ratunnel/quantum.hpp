#pragma once

#include "ratunnel/classical.hpp"
#include "ratunnel/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace ratunnel {

/// Periodic Hilbert space of dimension D = 4N on the 2 pi torus, hbar = pi / (2N).
class TorusGrid {
public:
  explicit TorusGrid(int N);

  int N() const { return N_; }
  int D() const { return 4 * N_; }
  double hbar() const { return kPi / (2.0 * N_); }
  double q(int j) const { return -kPi + 2.0 * kPi * j / D(); }
  double p(int k) const { return q(k); }
  /// Index of -q_j, i.e. j -> (D - j) mod D.
  int reflect(int j) const { return (D() - j) % D(); }

private:
  int N_;
};

/// cos(p) on the position grid: half the sum of the two unit shifts.
Eigen::MatrixXd cos_p_matrix(const TorusGrid& grid);
Eigen::MatrixXd reflection_matrix(const TorusGrid& grid);

/// Weyl-symmetrized quantization of the monomial expansion,
/// sum coeff (C_p^m C_q^n + C_q^n C_p^m) / 2. Real symmetric.
Eigen::MatrixXd build_hamiltonian(const ModelParams& params, const TorusGrid& grid);

struct SpectrumResult {
  int N = 0;
  double hbar = 0.0;
  Eigen::VectorXd energies; // ascending
  Eigen::VectorXd energy_tails; // low parts of the compensated Rayleigh quotients
  Eigen::MatrixXd states;   // columns, real and orthonormal
  std::vector<int> parity;  // +1 / -1 under q -> -q
  double h_norm = 0.0;      // spectral norm of H
  double max_residual = 0.0;
};

/// Dense eigensolution, done separately in the even and odd sectors of the
/// reflection so that every eigenvector has definite parity. Each energy is the
/// Rayleigh quotient of its eigenvector in double-double arithmetic, so that
/// differences of nearby levels keep their relative accuracy.
SpectrumResult diagonalize(const Eigen::MatrixXd& H, const TorusGrid& grid);

/// Which of the four local states of the quartet.
enum class Well { RU, LU, LD, RD };

/// Periodized n-th harmonic-oscillator state of width sqrt(hbar) centred at
/// position q0 with momentum p0. Throws PoorLocalization if it does not fit a
/// quarter cell.
Eigen::VectorXcd local_state(int n, double q0, double p0, const TorusGrid& grid);
Eigen::VectorXcd local_state(int n, Well well, const TorusGrid& grid);

enum class Quartet { PP = 0, MP = 1, PM = 2, MM = 3 }; // ++, -+, +-, --

const char* to_string(Quartet s);

struct QuartetStates {
  int n = 0;
  std::array<Eigen::VectorXcd, 4> local;    // RU, LU, LD, RD
  std::array<Eigen::VectorXcd, 4> combined; // ++, -+, +-, -- (orthonormalized)
  std::array<double, 4> raw_norms{};        // norms before normalization
};

QuartetStates quartet_states(int n, const TorusGrid& grid);

/// Relative gap below which same-parity levels form one degenerate cluster.
/// Splittings under this fraction of the spectral norm are not resolved.
inline constexpr double kClusterTolerance = 1e3 * std::numeric_limits<double>::epsilon();

struct QuartetPick {
  int index = -1;             // eigenvector with the largest single overlap
  double overlap = 0.0;       // |<v|s>|^2 for that eigenvector
  double cluster_energy = 0.0;  // mean over the cluster
  double cluster_offset = 0.0;  // same mean relative to energies(index), tails included
  double cluster_overlap = 0.0; // overlap summed over its degenerate cluster
  bool ambiguous = false;
};

struct SplittingResult {
  int n = 0;
  double splitting = 0.0; // |E(++) - E(-+)|
  std::array<QuartetPick, 4> picks;
  bool low_confidence = false;
  bool ambiguous = false;
};

/// Assigns the quartet of level n and extracts the ++ / -+ splitting.
SplittingResult exact_splitting(int n, const SpectrumResult& spectrum, const TorusGrid& grid,
                                double threshold = 0.25);

/// Convenience: build, diagonalize and assign.
SplittingResult exact_splitting(int n, const ModelParams& params, const TorusGrid& grid,
                                double threshold = 0.25);

void write_spectrum_json(std::ostream& os, const SpectrumResult& spectrum, const ModelParams& params,
                         const std::vector<SplittingResult>& tracked);

} // namespace ratunnel
