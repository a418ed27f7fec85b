#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "gresnet/matrix.hpp"
#include "gresnet/param.hpp"

namespace gresnet {

// The block LMI of a residual block. Coordinates are ordered
// [x, w_1, ..., w_n]; block_offsets[0] = 0 is the x block and
// block_offsets[l] the start of w_l.
struct LmiMatrix {
  Matrix values;
  std::vector<std::size_t> block_offsets;
};

// 0/1 matrix of size (d_{l-1} + d_l) x D picking the (input, output)
// coordinates of layer `layer` (1-based) out of the stacked difference vector.
Matrix selection_matrix(std::size_t layer, const BlockShape& shape);

// Assembles
//   [x,x]       A^T A - Lip^2 I - 2 P_1 C_1^T L_1 C_1
//   [w_l,w_l]   -2 P_{l+1} C_{l+1}^T L_{l+1} C_{l+1} - 2 L_l     (l < n)
//   [w_n,w_n]   B^T B - 2 L_n
//   [w_l,w_{l-1}] S_l L_l C_l,  [w_n, x] += B^T A,
// mirrored into the upper triangle. Symmetric by construction.
LmiMatrix assemble_lmi(const MaterializedBlock& block);

struct GershgorinDisc {
  double center = 0.0;
  double radius = 0.0;
  std::size_t row = 0;

  double upper() const noexcept { return center + radius; }
  double lower() const noexcept { return center - radius; }
};

std::vector<GershgorinDisc> gershgorin_discs(const Matrix& m);

struct EigenResult {
  std::vector<double> values;  // ascending
  int sweeps = 0;
  bool converged = false;
  double off_norm = 0.0;  // final off-diagonal Frobenius norm
};

// Cyclic Jacobi. Stops once the off-diagonal Frobenius norm is at most
// rel_tol * ||M||_F or after max_sweeps sweeps (converged = false).
EigenResult eigenvalues_symmetric(const Matrix& m, double rel_tol = 1e-14, int max_sweeps = 100);

struct ConstraintCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;  // max over checks of (lhs - bound) / max(1, |bound|)

  bool pass() const noexcept { return violations == 0; }
};

// Direct evaluation of every parameter inequality the construction promises:
// a/b intervals, C row norms, the C_1 cycle-breaking row constraint, the C_1
// element bound, the inner element bound for P > 0, lambda lower bounds and
// lambda positivity. `rel_tol` absorbs rounding in bounds that hold with equality.
std::vector<ConstraintCheck> check_constraints(const MaterializedBlock& block,
                                               double rel_tol = 1e-12);

struct LmiTolerance {
  double disc = 1e-9;
  double eig = 1e-8;
};

struct LmiReport {
  std::size_t size = 0;
  double max_disc_upper = 0.0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  bool disc_pass = false;
  bool eig_pass = false;
  bool eig_converged = false;
  double nesting_fraction = 0.0;
  std::vector<ConstraintCheck> checks;
  std::vector<GershgorinDisc> discs;
  std::vector<double> eigenvalues;

  bool constraints_pass() const noexcept;
  bool pass() const noexcept { return disc_pass && eig_pass && constraints_pass(); }
};

LmiReport verify_block(const MaterializedBlock& block, const LmiTolerance& tol = {});

// Fraction of discs whose interval lies inside another disc's interval.
double disc_nesting_fraction(const std::vector<GershgorinDisc>& discs);

void write_discs_csv(std::ostream& out, const std::vector<GershgorinDisc>& discs,
                     std::size_t row_offset = 0, bool header = true);
void write_eigenvalues_csv(std::ostream& out, const std::vector<double>& eigenvalues,
                           std::size_t index_offset = 0, bool header = true);

}  // namespace gresnet
