#include <cstdlib>
#include <string>

#include "alr/discretization.hpp"

namespace alr {

namespace {

constexpr double kResidualTarget = 1e-10;
constexpr int kMaxRefinements = 6;

std::uint64_t pattern_hash(const Eigen::SparseMatrix<cplx, Eigen::ColMajor>& a) {
  Fnv1a h;
  h.pod(a.rows());
  h.pod(a.cols());
  h.bytes(a.outerIndexPtr(), sizeof(int) * static_cast<std::size_t>(a.outerSize() + 1));
  h.bytes(a.innerIndexPtr(), sizeof(int) * static_cast<std::size_t>(a.nonZeros()));
  return h.value();
}

long trailing_index(const std::string& msg) {
  const auto pos = msg.find_last_not_of("0123456789");
  if (pos == std::string::npos || pos + 1 >= msg.size()) return -1;
  return std::strtol(msg.c_str() + pos + 1, nullptr, 10);
}

}  // namespace

Eigen::VectorXcd SparseSolver::solve(const SparseRowMatrix& matrix, const Eigen::VectorXcd& rhs, SolveStats* stats) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size()) throw DomainError("solve: dimension mismatch");
  ColMatrix a(matrix);
  a.makeCompressed();
  const std::uint64_t pattern = pattern_hash(a);
  const bool reuse = pattern_ && *pattern_ == pattern;
  if (!reuse) {
    lu_.analyzePattern(a);
    pattern_ = pattern;
  }
  lu_.factorize(a);
  if (lu_.info() != Eigen::Success) {
    pattern_.reset();
    const std::string msg = lu_.lastErrorMessage();
    const long pivot = trailing_index(msg);
    throw NumericalError("sparse LU failed: singular pivot at column " + std::to_string(pivot) + " (" + msg + ")",
                         pivot);
  }

  const double bnorm = rhs.norm();
  SolveStats local;
  local.pattern_reused = reuse;
  if (bnorm == 0.0) {
    if (stats) *stats = local;
    return Eigen::VectorXcd::Zero(rhs.size());
  }
  Eigen::VectorXcd x = lu_.solve(rhs);
  double res = (rhs - a * x).norm() / bnorm;
  int steps = 0;
  while (res > kResidualTarget && steps < kMaxRefinements) {
    x += lu_.solve(rhs - a * x);
    res = (rhs - a * x).norm() / bnorm;
    ++steps;
  }
  if (!x.allFinite() || !(res <= kResidualTarget))
    throw NumericalError("sparse LU: relative residual " + std::to_string(res) + " above 1e-10");
  local.residual = res;
  local.refinement_steps = steps;
  if (stats) *stats = local;
  return x;
}

DiscreteField SparseSolver::solve(const LinearSystem& sys, SolveStats* stats) {
  const Eigen::VectorXcd x = solve(sys.matrix, sys.rhs, stats);
  return DiscreteField(sys.mesh, x.head(static_cast<Eigen::Index>(sys.num_nodes)));
}

DiscreteField solve_system(const LinearSystem& sys, SolveStats* stats) {
  SparseSolver solver;
  return solver.solve(sys, stats);
}

}  // namespace alr
