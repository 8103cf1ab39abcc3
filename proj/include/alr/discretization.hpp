#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "alr/field.hpp"
#include "alr/geometry.hpp"
#include "alr/media.hpp"
#include "alr/oracle.hpp"

namespace alr {

// Right-hand side f, supported in B_R0 \ B_r3 unless explicitly allowed to
// enter the shell (resonance controls).
struct SourceSpec {
  enum class Kind : std::uint8_t { kRing, kBumpPair };

  Kind kind = Kind::kRing;
  // Ring: f = sum_m amplitude_m cos(n_m theta + phase_m) delta(|x| - ring_radius).
  double ring_radius = 5.0;
  std::vector<RingMode> modes;
  // Bump pair: f = amplitude (psi(x - c+) - w psi(x - c-)) with
  // psi(x) = exp(1 - 1/(1 - |x|^2/rho^2)) and w = 1 up to the discrete
  // correction that makes the assembled load sum to zero.
  std::array<Point2, 2> bump_centers{};
  double bump_radius = 0.0;
  double amplitude = 1.0;
  bool allow_shell = false;

  static SourceSpec ring(double radius, std::vector<RingMode> modes);
  static SourceSpec bump_pair(Point2 plus, Point2 minus, double radius, double amplitude = 1.0);

  // Support placement and, for k = 0, the zero-mean structure.
  void validate(const GeometryConfig& cfg, double k) const;
  // Curves and disks the mesh must resolve.
  void add_to_geometry(GeometryConfig& cfg) const;

  // Volume density of a bump pair (zero for rings).
  double density(Point2 p) const;
  // L2 norm of f; for a ring, the L2 norm of the line density on the circle.
  double l2_norm() const;
};

// Modal Dirichlet-to-Neumann map on |x| = R: -d_r u = sum_n lambda_n u_n e^{in theta}.
class DtNOperator {
 public:
  DtNOperator(double k, double radius, std::vector<cplx> impedance);

  double k() const { return k_; }
  double radius() const { return radius_; }
  int modes() const { return static_cast<int>(impedance_.size()) - 1; }
  cplx impedance(int n) const;

  struct Block {
    std::vector<int> nodes;           // outer-circle nodes, ordered by angle
    Eigen::MatrixXcd matrix;          // boundary form on those nodes
    Eigen::VectorXd mean_weights;     // mean of u over the circle = w . u
  };
  // Throws ConfigError if the mesh has no outer circle of this radius.
  Block boundary_block(const TriMesh& mesh) const;

 private:
  double k_;
  double radius_;
  std::vector<cplx> impedance_;
};

// lambda_n = n / R for k = 0 (lambda_0 = 0, gauge-fixed), else
// -k H_n'(kR) / H_n(kR). Throws DomainError for k < 0 or N < 8 and
// NumericalError when the Hankel quotient is not finite.
DtNOperator dtn_operator(double k, double radius, int modes);

using SparseRowMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct LinearSystem {
  std::shared_ptr<const TriMesh> mesh;
  SparseRowMatrix matrix;
  Eigen::VectorXcd rhs;
  std::size_t num_nodes = 0;
  // k = 0: the last unknown is the multiplier enforcing zero mean of u on
  // the outer circle.
  bool gauge = false;

  std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }
};

// A(delta) = positive + s(delta) * negative, with the same sparsity for every
// delta so the symbolic factorisation can be reused along a sweep.
class SystemFamily {
 public:
  // The delta stored in `med` is ignored.
  SystemFamily(std::shared_ptr<const TriMesh> mesh, const MediumSpec& med, const SourceSpec& src,
               const DtNOperator& dtn);

  LinearSystem at(double delta) const;
  const std::shared_ptr<const TriMesh>& mesh() const { return mesh_; }

 private:
  std::shared_ptr<const TriMesh> mesh_;
  SparseRowMatrix positive_;
  SparseRowMatrix negative_;
  Eigen::VectorXcd rhs_;
  std::size_t num_nodes_ = 0;
  bool gauge_ = false;
};

// Weak form: sum_e int s A grad phi_i . grad phi_j - k^2 s0 Sigma phi_i phi_j
// plus the DtN block; load -int f phi_i. Throws ConfigError when a mesh tag is
// undefined in `med` and NumericalError on non-finite coefficients.
LinearSystem assemble(std::shared_ptr<const TriMesh> mesh, const MediumSpec& med, const SourceSpec& src,
                      const DtNOperator& dtn);

// Element stiffness of int c grad phi_i . grad phi_j for a constant tensor.
Eigen::Matrix3cd element_stiffness(const std::array<Point2, 3>& v, const Mat2c& coefficient);

struct SolveStats {
  double residual = 0.0;
  int refinement_steps = 0;
  bool pattern_reused = false;
};

// Sparse LU (COLAMD ordering, partial pivoting) with iterative refinement to
// a relative residual of 1e-10. Reuses the symbolic analysis while the
// sparsity pattern stays the same.
class SparseSolver {
 public:
  Eigen::VectorXcd solve(const SparseRowMatrix& matrix, const Eigen::VectorXcd& rhs, SolveStats* stats = nullptr);
  DiscreteField solve(const LinearSystem& sys, SolveStats* stats = nullptr);

 private:
  using ColMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::optional<std::uint64_t> pattern_;
};

// Throws NumericalError with the pivot column on a singular factorisation.
DiscreteField solve_system(const LinearSystem& sys, SolveStats* stats = nullptr);

}  // namespace alr
