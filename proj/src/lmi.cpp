#include "gresnet/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "gresnet/simd/kernels.hpp"

namespace gresnet {
namespace {

std::vector<std::size_t> offsets_of(const BlockShape& shape) {
  std::vector<std::size_t> off{0, shape.state_dim};
  for (std::size_t l = 0; l + 1 < shape.depth(); ++l) off.push_back(off.back() + shape.dims[l]);
  return off;
}

// Q = C^T diag(lambda) C, symmetric to the bit (upper triangle mirrored).
Matrix weighted_gram(const Matrix& c, std::span<const double> lambda) {
  const auto& k = simd::active();
  Matrix q(c.cols(), c.cols(), 0.0);
  for (std::size_t j = 0; j < c.rows(); ++j) {
    const auto row = c.row(j);
    for (std::size_t i = 0; i < c.cols(); ++i) {
      const double scale = lambda[j] * row[i];
      if (scale == 0.0) continue;
      k.axpy(scale, row.data() + i, q.row(i).data() + i, c.cols() - i);
    }
  }
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t z = 0; z < i; ++z) q(i, z) = q(z, i);
  }
  return q;
}

void add_block(Matrix& m, std::size_t r0, std::size_t c0, const Matrix& block, double scale) {
  for (std::size_t i = 0; i < block.rows(); ++i) {
    for (std::size_t j = 0; j < block.cols(); ++j) m(r0 + i, c0 + j) += scale * block(i, j);
  }
}

void check_block_shape(const MaterializedBlock& block) {
  block.shape.validate();
  const std::size_t n = block.shape.depth();
  if (block.weights.size() != n || block.lambdas.size() != n || block.activations.size() != n) {
    throw std::invalid_argument("materialized block: per-layer data missing");
  }
  if (block.a.size() != block.shape.state_dim || block.b.size() != block.shape.state_dim) {
    throw std::invalid_argument("materialized block: A/B size mismatch");
  }
  for (std::size_t l = 0; l < n; ++l) {
    if (block.weights[l].rows() != block.shape.output_dim(l) ||
        block.weights[l].cols() != block.shape.input_dim(l) ||
        block.lambdas[l].size() != block.shape.output_dim(l)) {
      throw std::invalid_argument("materialized block: layer " + std::to_string(l + 1) +
                                  " has the wrong shape");
    }
  }
}

struct CheckAccumulator {
  ConstraintCheck check;
  explicit CheckAccumulator(std::string name) { check.name = std::move(name); }

  // lhs <= bound (within rel_tol) or lhs < bound when strict.
  void upper(double lhs, double bound, bool strict, double rel_tol) {
    ++check.checked;
    const double scale = std::max(1.0, std::fabs(bound));
    const double excess = (lhs - bound) / scale;
    check.worst_excess = check.checked == 1 ? excess : std::max(check.worst_excess, excess);
    const bool ok = strict ? (lhs < bound) : (excess <= rel_tol);
    if (!ok || !std::isfinite(lhs) || std::isnan(bound)) ++check.violations;
  }
  void lower(double lhs, double bound, double rel_tol) { upper(-lhs, -bound, false, rel_tol); }
};

}  // namespace

Matrix selection_matrix(std::size_t layer, const BlockShape& shape) {
  shape.validate();
  if (layer < 1 || layer > shape.depth()) {
    throw std::out_of_range("selection_matrix: layer must lie in [1, n]");
  }
  const auto off = offsets_of(shape);
  const std::size_t rows = shape.input_dim(layer - 1) + shape.output_dim(layer - 1);
  Matrix e(rows, shape.lmi_size(), 0.0);
  // w_{l-1} and w_l are adjacent in the stacked vector.
  const std::size_t start = off[layer - 1];
  for (std::size_t i = 0; i < rows; ++i) e(i, start + i) = 1.0;
  return e;
}

LmiMatrix assemble_lmi(const MaterializedBlock& block) {
  check_block_shape(block);
  const BlockShape& shape = block.shape;
  const std::size_t n = shape.depth();
  const std::size_t dx = shape.state_dim;
  const double l2 = block.lipschitz * block.lipschitz;

  LmiMatrix out;
  out.block_offsets = offsets_of(shape);
  const auto& off = out.block_offsets;
  Matrix& m = out.values;
  m = Matrix(shape.lmi_size(), shape.lmi_size(), 0.0);

  for (std::size_t i = 0; i < dx; ++i) m(i, i) = block.a[i] * block.a[i] - l2;
  if (const double p1 = block.activations[0].P; p1 != 0.0) {
    add_block(m, 0, 0, weighted_gram(block.weights[0], block.lambdas[0]), -2.0 * p1);
  }

  for (std::size_t l = 0; l < n; ++l) {
    const std::size_t base = off[l + 1];
    if (l + 1 < n) {
      if (const double p = block.activations[l + 1].P; p != 0.0) {
        add_block(m, base, base, weighted_gram(block.weights[l + 1], block.lambdas[l + 1]), -2.0 * p);
      }
    } else {
      for (std::size_t i = 0; i < dx; ++i) m(base + i, base + i) += block.b[i] * block.b[i];
    }
    for (std::size_t i = 0; i < shape.output_dim(l); ++i) {
      m(base + i, base + i) -= 2.0 * block.lambdas[l][i];
    }
  }

  for (std::size_t l = 0; l < n; ++l) {
    const double s = block.activations[l].S;
    const Matrix& c = block.weights[l];
    const std::size_t r0 = off[l + 1];
    const std::size_t c0 = off[l];
    for (std::size_t i = 0; i < c.rows(); ++i) {
      for (std::size_t j = 0; j < c.cols(); ++j) {
        const double v = s * block.lambdas[l][i] * c(i, j);
        m(r0 + i, c0 + j) += v;
        m(c0 + j, r0 + i) += v;
      }
    }
  }

  const std::size_t last = off[n];
  for (std::size_t i = 0; i < dx; ++i) {
    const double v = block.a[i] * block.b[i];
    m(last + i, i) += v;
    m(i, last + i) += v;
  }
  return out;
}

std::vector<GershgorinDisc> gershgorin_discs(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("gershgorin_discs: matrix must be square");
  const auto& k = simd::active();
  std::vector<GershgorinDisc> discs;
  discs.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i).data();
    const double radius = k.abs_sum(row, i) + k.abs_sum(row + i + 1, m.cols() - i - 1);
    discs.push_back({m(i, i), radius, i});
  }
  return discs;
}

EigenResult eigenvalues_symmetric(const Matrix& input, double rel_tol, int max_sweeps) {
  if (input.rows() != input.cols()) {
    throw std::invalid_argument("eigenvalues_symmetric: matrix must be square");
  }
  const std::size_t n = input.rows();
  Matrix a = input;
  double frob = 0.0;
  for (double v : a.flat()) frob += v * v;
  frob = std::sqrt(frob);

  auto off_norm = [&a, n] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) acc += a(i, j) * a(i, j);
      }
    }
    return std::sqrt(acc);
  };

  EigenResult result;
  result.off_norm = off_norm();
  while (true) {
    if (result.off_norm <= rel_tol * frob) {
      result.converged = true;
      break;
    }
    if (result.sweeps >= max_sweeps) break;
    ++result.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::fabs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          const double new_rp = arp - s * (arq + tau * arp);
          const double new_rq = arq + s * (arp - tau * arq);
          a(r, p) = new_rp;
          a(p, r) = new_rp;
          a(r, q) = new_rq;
          a(q, r) = new_rq;
        }
      }
    }
    result.off_norm = off_norm();
  }

  result.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.values[i] = a(i, i);
  std::sort(result.values.begin(), result.values.end());
  return result;
}

std::vector<ConstraintCheck> check_constraints(const MaterializedBlock& block, double rel_tol) {
  check_block_shape(block);
  const BlockShape& shape = block.shape;
  const std::size_t n = shape.depth();
  const std::size_t dx = shape.state_dim;
  const double lip = block.lipschitz;
  const double l2 = lip * lip;
  const auto& acts = block.activations;

  CheckAccumulator a_interval("a_interval");
  CheckAccumulator b_interval("b_interval");
  for (std::size_t i = 0; i < dx; ++i) {
    const double abs_a = std::fabs(block.a[i]);
    a_interval.upper(-abs_a, 0.0, true, rel_tol);
    a_interval.upper(abs_a, lip, true, rel_tol);
    const double b_bound =
        abs_a > 0.0 ? (l2 - abs_a * abs_a) / abs_a : std::numeric_limits<double>::quiet_NaN();
    b_interval.upper(std::fabs(block.b[i]), b_bound, true, rel_tol);
  }

  std::vector<Vector> row_norms(n);
  for (std::size_t l = 0; l < n; ++l) {
    const Matrix& c = block.weights[l];
    for (std::size_t i = 0; i < c.rows(); ++i) row_norms[l].push_back(row_abs_sum(c.row(i)));
  }

  CheckAccumulator row_norm("c_row_norm");
  for (std::size_t l = 0; l < n; ++l) {
    const double s = std::fabs(acts[l].S);
    if (s == 0.0) continue;
    for (double norm : row_norms[l]) row_norm.upper(norm, 2.0 / s, true, rel_tol);
  }

  CheckAccumulator cycle_row("c1_cycle_row");
  for (double norm : row_norms[0]) cycle_row.upper(std::fabs(acts[0].S) * norm, 1.0, false, rel_tol);

  CheckAccumulator c1_element("c1_element");
  {
    const double s1 = std::fabs(acts[0].S);
    const double p1 = std::fabs(acts[0].P);
    const Matrix& c1 = block.weights[0];
    const double d1 = static_cast<double>(c1.rows());
    for (std::size_t j = 0; j < c1.rows(); ++j) {
      for (std::size_t i = 0; i < dx; ++i) {
        const double budget = l2 - block.a[i] * block.a[i] - std::fabs(block.a[i] * block.b[i]);
        const double bound = budget * s1 / (d1 * block.lambdas[0][j] * (s1 * s1 + 4.0 * p1));
        c1_element.upper(std::fabs(c1(j, i)), bound, false, rel_tol);
      }
    }
  }

  CheckAccumulator inner_element("c_inner_element");
  for (std::size_t l = 1; l < n; ++l) {
    const double s = acts[l].S;
    const double p = acts[l].P;
    if (p <= 0.0 || s == 0.0) continue;
    const double bound = (s * s + 4.0 * std::fabs(p)) / (2.0 * (std::fabs(p) + p) * std::fabs(s));
    for (double v : block.weights[l].flat()) inner_element.upper(std::fabs(v), bound, false, rel_tol);
  }

  CheckAccumulator lambda_last("lambda_last");
  {
    const double s = std::fabs(acts[n - 1].S);
    for (std::size_t i = 0; i < dx; ++i) {
      const double numer = block.b[i] * block.b[i] + std::fabs(block.a[i] * block.b[i]);
      const double denom = 2.0 - s * row_norms[n - 1][i];
      const double bound = denom > 0.0 ? numer / denom : std::numeric_limits<double>::infinity();
      lambda_last.lower(block.lambdas[n - 1][i], bound, rel_tol);
    }
  }

  CheckAccumulator lambda_inner("lambda_inner");
  for (std::size_t l = 0; l + 1 < n; ++l) {
    const auto g = compute_G<double>(block.lambdas[l + 1], block.weights[l + 1], acts[l + 1].S,
                                     acts[l + 1].P);
    const double s = std::fabs(acts[l].S);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double denom = 2.0 - s * row_norms[l][i];
      const double bound =
          denom > 0.0 ? g.values[i] / denom : std::numeric_limits<double>::infinity();
      lambda_inner.lower(block.lambdas[l][i], bound, rel_tol);
    }
  }

  CheckAccumulator lambda_positive("lambda_positive");
  for (const auto& lambda : block.lambdas) {
    for (double v : lambda) lambda_positive.upper(-v, 0.0, true, rel_tol);
  }

  return {a_interval.check,   b_interval.check,    row_norm.check,
          cycle_row.check,    c1_element.check,    inner_element.check,
          lambda_last.check,  lambda_inner.check,  lambda_positive.check};
}

bool LmiReport::constraints_pass() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.pass(); });
}

double disc_nesting_fraction(const std::vector<GershgorinDisc>& discs) {
  if (discs.empty()) return 0.0;
  std::size_t nested = 0;
  for (std::size_t i = 0; i < discs.size(); ++i) {
    for (std::size_t j = 0; j < discs.size(); ++j) {
      if (i == j) continue;
      if (discs[j].lower() <= discs[i].lower() && discs[i].upper() <= discs[j].upper()) {
        ++nested;
        break;
      }
    }
  }
  return static_cast<double>(nested) / static_cast<double>(discs.size());
}

LmiReport verify_block(const MaterializedBlock& block, const LmiTolerance& tol) {
  LmiReport report;
  const LmiMatrix lmi = assemble_lmi(block);
  report.size = lmi.values.rows();
  report.discs = gershgorin_discs(lmi.values);
  report.max_disc_upper = -std::numeric_limits<double>::infinity();
  for (const auto& d : report.discs) report.max_disc_upper = std::max(report.max_disc_upper, d.upper());
  report.disc_pass = report.max_disc_upper <= tol.disc;

  const EigenResult eig = eigenvalues_symmetric(lmi.values);
  report.eig_converged = eig.converged;
  report.eigenvalues = eig.values;
  report.min_eig = eig.values.front();
  report.max_eig = eig.values.back();
  report.eig_pass = eig.converged && report.max_eig <= tol.eig;

  report.checks = check_constraints(block);
  report.nesting_fraction = disc_nesting_fraction(report.discs);
  return report;
}

void write_discs_csv(std::ostream& out, const std::vector<GershgorinDisc>& discs,
                     std::size_t row_offset, bool header) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  if (header) out << "row,center,radius\n";
  for (const auto& d : discs) out << d.row + row_offset << ',' << d.center << ',' << d.radius << '\n';
  out.precision(old);
}

void write_eigenvalues_csv(std::ostream& out, const std::vector<double>& eigenvalues,
                           std::size_t index_offset, bool header) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  if (header) out << "index,eigenvalue\n";
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    out << i + index_offset << ',' << eigenvalues[i] << '\n';
  }
  out.precision(old);
}

}  // namespace gresnet
