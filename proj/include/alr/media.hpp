#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alr/geometry.hpp"

namespace alr {

using Mat2 = Eigen::Matrix2d;
using Mat2c = Eigen::Matrix2cd;

// Real symmetric tensor field on one material region. Region dispatch lives
// in MediumSpec.
class TensorField {
 public:
  using Fn = std::function<Mat2(Point2)>;

  TensorField() : constant_(Mat2::Identity()) {}
  static TensorField constant(const Mat2& m);
  static TensorField isotropic(double c) { return constant(c * Mat2::Identity()); }
  static TensorField from_function(Fn f);

  Mat2 operator()(Point2 p) const { return constant_ ? *constant_ : fn_(p); }
  bool is_constant() const { return constant_.has_value(); }

 private:
  std::optional<Mat2> constant_;
  Fn fn_;
};

class ScalarField {
 public:
  using Fn = std::function<double(Point2)>;

  ScalarField() : constant_(1.0) {}
  static ScalarField constant(double v);
  static ScalarField from_function(Fn f);

  double operator()(Point2 p) const { return constant_ ? *constant_ : fn_(p); }
  bool is_constant() const { return constant_.has_value(); }

 private:
  std::optional<double> constant_;
  Fn fn_;
};

// Invertible planar map with analytic Jacobian.
class Diffeomorphism {
 public:
  using Map = std::function<Point2(Point2)>;
  using Jac = std::function<Mat2(Point2)>;

  Diffeomorphism(std::string name, Map forward, Map inverse, Jac jacobian);

  Point2 forward(Point2 x) const { return fwd_(x); }
  Point2 inverse(Point2 y) const { return inv_(y); }
  // D(forward) at x.
  Mat2 jacobian(Point2 x) const { return jac_(x); }
  // D(inverse) at y, i.e. the inverse of jacobian(inverse(y)).
  Mat2 inverse_jacobian(Point2 y) const { return jac_(inv_(y)).inverse(); }
  Diffeomorphism inverted() const;
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Map fwd_;
  Map inv_;
  Jac jac_;
};

Diffeomorphism identity_map();
// y = c + R^2 (x - c)/|x - c|^2; involutive, fixes |x - c| = R.
Diffeomorphism kelvin_map(Point2 c, double R);
// z -> r^(1/m) e^(i theta/m), theta in (-pi, pi).
Diffeomorphism power_map(int m);
Diffeomorphism dilation(double factor);
// outer(inner(x)).
Diffeomorphism compose(const Diffeomorphism& outer, const Diffeomorphism& inner);

Mat2 finite_difference_jacobian(const Diffeomorphism& T, Point2 x, double step);

// (T_* a)(y) = DT a DT^T / |det DT| and (T_* s)(y) = s / |det DT| at x = T^-1(y).
TensorField push_forward(const Diffeomorphism& T, const TensorField& a);
ScalarField push_forward(const Diffeomorphism& T, const ScalarField& s);

// On a boundary fixed by T, the conormal derivatives of u and v = u o T^-1
// taken along the same normal are related by this sign:
//   (T_* a) grad v . n = kReflectedConormalSign * a grad u . n.
// Equivalently, weak fluxes measured with each side's outward normal agree.
inline constexpr int kReflectedConormalSign = -1;

enum class ScenarioKind : std::uint8_t {
  kQuasistaticCloak,
  kFreqCloak,
  kSuperlensFull,
  kSuperlensNoInnerLayer,
  kCmCloakModified,
  kCmCloakUnmodified,
  kSlabDc,
};
inline constexpr std::array<ScenarioKind, 7> kAllScenarios = {
    ScenarioKind::kQuasistaticCloak,      ScenarioKind::kFreqCloak,        ScenarioKind::kSuperlensFull,
    ScenarioKind::kSuperlensNoInnerLayer, ScenarioKind::kCmCloakModified,  ScenarioKind::kCmCloakUnmodified,
    ScenarioKind::kSlabDc};
std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_from_string(std::string_view name);

// Object material (a_c, sigma_c); real symmetric, uniformly elliptic.
struct ObjectSpec {
  Mat2 a = 10.0 * Mat2::Identity();
  double sigma = 10.0;
  double ellipticity = 1e4;  // declared bound Lambda

  static ObjectSpec isotropic(double c) { return {c * Mat2::Identity(), c, 1e4}; }
  void validate() const;
};

class MediumSpec {
 public:
  MediumSpec() = default;

  void set(RegionTag tag, TensorField a, ScalarField sigma);
  bool defines(RegionTag tag) const { return regions_[static_cast<std::size_t>(tag)].has_value(); }
  RegionSet defined_regions() const;

  Mat2 tensor(RegionTag tag, Point2 p) const;
  double sigma(RegionTag tag, Point2 p) const;
  bool is_constant(RegionTag tag) const;

  // s_delta: -1 - i delta on the negative region, 1 elsewhere.
  cplx s(RegionTag tag) const;
  // Loss-free sign s_0 multiplying the zeroth-order term.
  double s0(RegionTag tag) const { return negative_.contains(tag) ? -1.0 : 1.0; }
  // s_delta * A, formed only here.
  Mat2c total_coefficient(RegionTag tag, Point2 p) const;

  const RegionSet& negative_region() const { return negative_; }
  void set_negative_region(RegionSet r) { negative_ = r; }
  double delta() const { return delta_; }
  double k() const { return k_; }
  void set_delta(double d);
  void set_k(double k);
  MediumSpec with_delta(double d) const {
    MediumSpec m = *this;
    m.set_delta(d);
    return m;
  }

 private:
  struct Entry {
    TensorField a;
    ScalarField sigma;
  };
  std::array<std::optional<Entry>, kRegionCount> regions_;
  RegionSet negative_;
  double delta_ = 0.0;
  double k_ = 0.0;
};

// (I, 1) on every tag, no negative region.
MediumSpec homogeneous_medium(double k);

// Object placement and lens parameters that determine the scenario layout.
struct LayoutParams {
  // SUPERLENS_FULL: object disk inside B_tau0 with tau0 = r2 / M.
  Point2 lens_object_center{0.0, 0.0};
  double lens_object_radius = 0.0;
  // CM scenarios: object centre (x3 for the unmodified scheme).
  Point2 cm_object_center{0.0, 0.0};
  double cm_object_radius = 0.0;
  // SLAB_DC: half-width s of the slab, 0 < s < r1.
  double slab_half_width = 0.0;
};

double lens_magnification(const GeometryConfig& cfg);  // M = r3 / r1

// Adds the inclusions (and slab) the scenario needs to the geometry,
// including regions used only by alternative-hypothesis references.
GeometryConfig scenario_geometry(ScenarioKind kind, const GeometryConfig& base, const LayoutParams& layout);

MediumSpec build_medium(ScenarioKind kind, const GeometryConfig& cfg, const ObjectSpec& object, double delta, double k);

// Positive-coefficient medium containing the object as an observer would see
// it without cancellation: the object in free space for the cloak scenarios,
// the magnified object for the lens scenarios.
MediumSpec with_object_medium(ScenarioKind kind, const ObjectSpec& object, double k);

// Sampler of a region and its boundary, used to check the preconditions of
// the doubly complementary construction.
struct ComplementaryGeometry {
  std::function<bool(Point2)> in_omega1;
  std::function<bool(Point2)> in_omega2;
  std::function<bool(Point2)> in_omega3;
  std::function<Point2(double)> boundary2;  // parametrisation of the boundary of Omega_2 on [0, 1)
  std::function<Point2(double)> boundary3;
  // Region tag of a point, as assigned by meshes of this geometry.
  std::function<RegionTag(Point2)> tag_of;
  double outer_radius = 1.0;  // Omega_3 lies in B_outer_radius
  // Region tags carrying the three layers in meshes of this geometry.
  RegionSet outer_tags{RegionTag::kShell};
  RegionSet negative_tags{RegionTag::kAnnulus};
  RegionSet core_tags{RegionTag::kCore};

  // Omega_i = B_ri, tagged as in region_of for `cfg` (without inclusions).
  static ComplementaryGeometry concentric(const GeometryConfig& cfg);
};

// (A, Sigma) = (F^-1_* A_outer, F^-1_* Sigma_outer) on Omega_2 \ Omega_1 and
// (F^-1_* G^-1_* A_outer, ...) on Omega_1; A_outer itself on Omega_3 \ Omega_2
// and (I, 1) outside Omega_3. The returned medium has negative region
// `geom.negative_tags`.
MediumSpec build_doubly_complementary(const TensorField& a_outer, const ScalarField& sigma_outer,
                                      const Diffeomorphism& F, const Diffeomorphism& G,
                                      const ComplementaryGeometry& geom, double k);

struct VerificationReport {
  struct Identity {
    std::string name;
    double max_residual = 0.0;
    bool checked = true;
    bool pass = true;
  };
  std::vector<Identity> identities;
  std::size_t samples = 0;
  double tolerance = 1e-10;
  bool pass() const;
};

// Samples Omega_3 \ Omega_2 (deterministic RNG) and checks F_*A = A and
// G_*F_*A = A, the Sigma identities when k > 0, and the boundary fixed-point
// conditions of F and G (tolerance 1e-8).
VerificationReport verify_doubly_complementary(const MediumSpec& med, const Diffeomorphism& F, const Diffeomorphism& G,
                                               const ComplementaryGeometry& geom, std::size_t n_samples,
                                               double tolerance = 1e-10, std::uint64_t seed = 20240601);

// Experimental reference maps for the slab geometry: F is the Kelvin map
// about r2 composed with a radial stretch that takes the slab-cut region
// onto the annulus; G is the Kelvin map about r3. Not guaranteed to satisfy
// the fixed-point conditions; always verify before use.
struct SlabMaps {
  Diffeomorphism F;
  Diffeomorphism G;
};
SlabMaps experimental_slab_maps(const GeometryConfig& cfg);
ComplementaryGeometry slab_complementary_geometry(const GeometryConfig& cfg);

// Per-element coefficient dump as VTK cell data.
void write_medium_vtk(const TriMesh& mesh, const MediumSpec& med, const std::string& path);

}  // namespace alr
