#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alr/geometry.hpp"

namespace alr {

class Diffeomorphism;

// Element selection: tags, optionally restricted to barycentres with
// r_min < |x| < r_max.
struct Region {
  RegionSet tags = RegionSet::all();
  double r_min = 0.0;
  double r_max = std::numeric_limits<double>::infinity();

  static Region tags_only(RegionSet t) { return {t, 0.0, std::numeric_limits<double>::infinity()}; }
  static Region ring(double r_in, double r_out) { return {RegionSet::all(), r_in, r_out}; }
  bool contains(const TriMesh& mesh, std::size_t e) const;
};

enum class NormKind : std::uint8_t {
  kL2,
  kH1,
  kH1Semi,
  // Discrete trace surrogate on the boundary of the region: L2 of the trace,
  // of the tangential derivative and of the jump of the normal derivative.
  kBoundary,
};

using Grad = std::array<cplx, 2>;

// Complex P1 nodal field on a shared, immutable mesh.
class DiscreteField {
 public:
  DiscreteField(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXcd values);
  static DiscreteField zero(std::shared_ptr<const TriMesh> mesh);
  static DiscreteField interpolate(std::shared_ptr<const TriMesh> mesh, const std::function<cplx(Point2)>& f);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXcd& values() const { return values_; }

  // Throws DomainError for points outside the mesh.
  cplx evaluate(Point2 p) const;
  // With `precompose` = T the result at p is u(T^-1(p)).
  std::vector<cplx> evaluate(std::span<const Point2> pts, const Diffeomorphism* precompose = nullptr) const;
  Grad gradient(std::size_t element) const;
  Grad gradient_at(Point2 p) const;

  DiscreteField operator+(const DiscreteField& o) const;
  DiscreteField operator-(const DiscreteField& o) const;
  DiscreteField operator*(cplx s) const;
  DiscreteField plus_constant(cplx c) const;

  // VTK point data re, im, abs.
  void write_vtk(const std::string& path) const;
  // Binary: magic, mesh hash, node count, values.
  void save_checkpoint(const std::string& path) const;
  static DiscreteField load_checkpoint(const std::string& path, std::shared_ptr<const TriMesh> mesh);

 private:
  void require_same_mesh(const DiscreteField& o) const;

  std::shared_ptr<const TriMesh> mesh_;
  Eigen::VectorXcd values_;
};

// Throws DomainError when the region selects no elements.
double norm(const DiscreteField& u, const Region& region, NormKind kind);

// Distance to an exact field by 7-point quadrature (kL2, kH1 or kH1Semi).
double error_norm(const DiscreteField& u, const std::function<cplx(Point2)>& exact,
                  const std::function<Grad(Point2)>& exact_grad, const Region& region, NormKind kind);
// Norm of the exact field by the same quadrature.
double exact_norm(const TriMesh& mesh, const std::function<cplx(Point2)>& exact,
                  const std::function<Grad(Point2)>& exact_grad, const Region& region, NormKind kind);

}  // namespace alr
