#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "alr/media.hpp"

namespace alr {

namespace {

constexpr std::array<std::string_view, 7> kScenarioNames = {
    "quasistatic-cloak", "freq-cloak",          "superlens-full", "superlens-no-inner-layer",
    "cm-cloak-modified", "cm-cloak-unmodified", "slab-dc"};

// Kelvin image of the disk B(c, rho) about |x| = R (origin outside the disk).
Inclusion kelvin_image(Point2 c, double rho, double R, RegionTag tag, RegionTag host) {
  const double den = norm2(c) - rho * rho;
  if (!(den > 0.0)) throw GeometryError("geometry invariant violated: object disk must not contain the origin");
  return {(R * R / den) * c, rho * R * R / den, tag, host};
}

bool disk_inside_ring(Point2 c, double rho, double r_in, double r_out) {
  const double d = norm(c);
  return d - rho > r_in && d + rho < r_out;
}

// Positive layout shared by the cloak, lens and complementary scenarios:
// (I, 1) outside B_r2, (I, r2^4/|x|^4) on the annulus, (I, r3^2/r1^2) in the core.
MediumSpec base_layout(const GeometryConfig& cfg, double k) {
  MediumSpec m;
  m.set_k(k);
  const double r2_4 = std::pow(cfg.r2, 4);
  const double core_sigma = cfg.r3() * cfg.r3() / (cfg.r1 * cfg.r1);
  const ScalarField annulus_sigma = ScalarField::from_function([r2_4](Point2 x) {
    const double n2 = norm2(x);
    return r2_4 / (n2 * n2);
  });
  for (RegionTag t : {RegionTag::kExterior, RegionTag::kShell, RegionTag::kSourceSupport, RegionTag::kSlab,
                      RegionTag::kInclusionA, RegionTag::kInclusionB})
    m.set(t, TensorField(), ScalarField());
  m.set(RegionTag::kAnnulus, TensorField(), annulus_sigma);
  m.set(RegionTag::kCore, TensorField(), ScalarField::constant(core_sigma));
  m.set_negative_region({RegionTag::kAnnulus});
  return m;
}

void set_object(MediumSpec& m, RegionTag tag, const ObjectSpec& obj) {
  m.set(tag, TensorField::constant(obj.a), ScalarField::constant(obj.sigma));
}

}  // namespace

std::string_view to_string(ScenarioKind kind) { return kScenarioNames[static_cast<std::size_t>(kind)]; }

std::optional<ScenarioKind> scenario_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i)
    if (kScenarioNames[i] == name) return static_cast<ScenarioKind>(i);
  return std::nullopt;
}

void ObjectSpec::validate() const {
  if (!(ellipticity >= 1.0)) throw ConfigError("object: ellipticity bound Lambda >= 1");
  if (!a.allFinite() || !std::isfinite(sigma)) throw ConfigError("object: coefficients must be finite");
  if (std::abs(a(0, 1) - a(1, 0)) > 1e-14 * a.norm()) throw ConfigError("object: a_c must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat2> es(a);
  const double lo = 1.0 / ellipticity;
  if (es.eigenvalues()(0) < lo || es.eigenvalues()(1) > ellipticity)
    throw ConfigError("object: eigenvalues of a_c in [1/Lambda, Lambda]");
  if (sigma < lo || sigma > ellipticity) throw ConfigError("object: sigma_c in [1/Lambda, Lambda]");
}

void MediumSpec::set(RegionTag tag, TensorField a, ScalarField sigma) {
  regions_[static_cast<std::size_t>(tag)] = Entry{std::move(a), std::move(sigma)};
}

RegionSet MediumSpec::defined_regions() const {
  RegionSet s;
  for (std::size_t i = 0; i < kRegionCount; ++i)
    if (regions_[i]) s.insert(static_cast<RegionTag>(i));
  return s;
}

Mat2 MediumSpec::tensor(RegionTag tag, Point2 p) const {
  const auto& e = regions_[static_cast<std::size_t>(tag)];
  if (!e) throw DomainError("medium does not define region " + std::string(to_string(tag)));
  return e->a(p);
}

double MediumSpec::sigma(RegionTag tag, Point2 p) const {
  const auto& e = regions_[static_cast<std::size_t>(tag)];
  if (!e) throw DomainError("medium does not define region " + std::string(to_string(tag)));
  return e->sigma(p);
}

bool MediumSpec::is_constant(RegionTag tag) const {
  const auto& e = regions_[static_cast<std::size_t>(tag)];
  return e && e->a.is_constant() && e->sigma.is_constant();
}

cplx MediumSpec::s(RegionTag tag) const { return negative_.contains(tag) ? cplx(-1.0, -delta_) : cplx(1.0, 0.0); }

Mat2c MediumSpec::total_coefficient(RegionTag tag, Point2 p) const { return s(tag) * tensor(tag, p).cast<cplx>(); }

void MediumSpec::set_delta(double d) {
  if (!(d >= 0.0) || !std::isfinite(d)) throw ConfigError("delta >= 0");
  delta_ = d;
}

void MediumSpec::set_k(double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("k >= 0");
  k_ = k;
}

MediumSpec homogeneous_medium(double k) {
  MediumSpec m;
  m.set_k(k);
  for (std::size_t i = 0; i < kRegionCount; ++i) m.set(static_cast<RegionTag>(i), TensorField(), ScalarField());
  return m;
}

double lens_magnification(const GeometryConfig& cfg) { return cfg.r3() / cfg.r1; }

GeometryConfig scenario_geometry(ScenarioKind kind, const GeometryConfig& base, const LayoutParams& layout) {
  GeometryConfig cfg = base;
  cfg.inclusions.clear();
  cfg.slab.reset();
  const double M = lens_magnification(cfg);
  auto fail = [](const std::string& rule) { throw GeometryError("geometry invariant violated: " + rule); };

  switch (kind) {
    case ScenarioKind::kQuasistaticCloak:
    case ScenarioKind::kFreqCloak:
      cfg.add_cloak_objects();
      break;
    case ScenarioKind::kSuperlensNoInnerLayer:
      if (cfg.r0 > 0.0) {
        cfg.inclusions.push_back({cfg.x1, cfg.r0, RegionTag::kInclusionA, RegionTag::kCore});
        cfg.inclusions.push_back({M * cfg.x1, M * cfg.r0, RegionTag::kInclusionB, RegionTag::kShell});
      }
      break;
    case ScenarioKind::kSuperlensFull: {
      const double tau0 = cfg.r2 / M;
      Point2 c = layout.lens_object_center;
      double rho = layout.lens_object_radius;
      if (rho <= 0.0) {
        c = {0.75 * tau0, 0.0};
        rho = 0.1 * tau0;
      }
      if (norm(c) + rho >= tau0) fail("lens object inside B_tau0, tau0 = r2/M");
      if (!disk_inside_ring(M * c, M * rho, cfg.r1, cfg.r2)) fail("magnified lens object inside B_r2 \\ B_r1");
      cfg.inclusions.push_back({c, rho, RegionTag::kInclusionA, RegionTag::kCore});
      cfg.inclusions.push_back({M * c, M * rho, RegionTag::kInclusionB, RegionTag::kAnnulus});
      break;
    }
    case ScenarioKind::kCmCloakUnmodified:
    case ScenarioKind::kCmCloakModified: {
      Point2 c = layout.cm_object_center;
      double rho = layout.cm_object_radius;
      const bool modified = kind == ScenarioKind::kCmCloakModified;
      if (rho <= 0.0) {
        c = modified ? Point2{1.5 * cfg.r2, 0.0} : cfg.x3;
        rho = modified ? 0.2 * cfg.r2 : cfg.r0;
      }
      if (!(rho > 0.0)) fail("complementary-media object radius > 0");
      if (modified) {
        if (!(2.0 * cfg.r2 < cfg.r3())) fail("2 r2 < r3 for the modified complementary scheme");
        if (!disk_inside_ring(c, rho, cfg.r2, 2.0 * cfg.r2)) fail("object inside B_2r2 \\ B_r2");
      } else if (std::abs(norm(c) - cfg.r3()) > 1e-9 * cfg.r3()) {
        fail("|x3| = r3");
      }
      cfg.inclusions.push_back({c, rho, RegionTag::kInclusionA, RegionTag::kShell});
      cfg.inclusions.push_back(kelvin_image(c, rho, cfg.r2, RegionTag::kInclusionB, RegionTag::kAnnulus));
      break;
    }
    case ScenarioKind::kSlabDc: {
      const double s = layout.slab_half_width > 0.0 ? layout.slab_half_width : 0.2 * cfg.r1;
      if (!(6.0 * cfg.r1 < cfg.r2)) fail("6 r1 < r2");
      cfg.slab = SlabGeometry{s, 2.0 * cfg.r1, 3.0 * cfg.r1};
      break;
    }
  }
  cfg.validate();
  return cfg;
}

MediumSpec build_medium(ScenarioKind kind, const GeometryConfig& cfg, const ObjectSpec& object, double delta,
                        double k) {
  object.validate();
  MediumSpec m = base_layout(cfg, k);
  switch (kind) {
    case ScenarioKind::kQuasistaticCloak:
    case ScenarioKind::kFreqCloak:
      set_object(m, RegionTag::kInclusionA, object);
      set_object(m, RegionTag::kInclusionB, object);
      break;
    case ScenarioKind::kSuperlensNoInnerLayer:
      // INCLUSION_B is the magnified image used only by the alternative reference.
      set_object(m, RegionTag::kInclusionA, object);
      break;
    case ScenarioKind::kSuperlensFull:
      set_object(m, RegionTag::kInclusionA, object);
      m.set(RegionTag::kInclusionB, TensorField(), ScalarField::from_function([r2_4 = std::pow(cfg.r2, 4)](Point2 x) {
              const double n2 = norm2(x);
              return r2_4 / (n2 * n2);
            }));
      m.set_negative_region({RegionTag::kAnnulus, RegionTag::kInclusionB});
      break;
    case ScenarioKind::kCmCloakModified:
    case ScenarioKind::kCmCloakUnmodified: {
      const Diffeomorphism F_inv = kelvin_map({0.0, 0.0}, cfg.r2).inverted();
      set_object(m, RegionTag::kInclusionA, object);
      m.set(RegionTag::kInclusionB, push_forward(F_inv, TensorField::constant(object.a)),
            push_forward(F_inv, ScalarField::constant(object.sigma)));
      m.set_negative_region({RegionTag::kAnnulus, RegionTag::kInclusionB});
      break;
    }
    case ScenarioKind::kSlabDc: {
      const SlabMaps maps = experimental_slab_maps(cfg);
      const Diffeomorphism F_inv = maps.F.inverted();
      const Diffeomorphism GF_inv = compose(maps.G, maps.F).inverted();
      m.set(RegionTag::kAnnulus, push_forward(F_inv, TensorField()), push_forward(F_inv, ScalarField()));
      m.set(RegionTag::kCore, push_forward(GF_inv, TensorField()), push_forward(GF_inv, ScalarField()));
      set_object(m, RegionTag::kSlab, object);
      break;
    }
  }
  m.set_delta(delta);
  return m;
}

MediumSpec with_object_medium(ScenarioKind kind, const ObjectSpec& object, double k) {
  object.validate();
  MediumSpec m = homogeneous_medium(k);
  switch (kind) {
    case ScenarioKind::kQuasistaticCloak:
    case ScenarioKind::kFreqCloak:
      set_object(m, RegionTag::kInclusionA, object);
      set_object(m, RegionTag::kInclusionB, object);
      break;
    case ScenarioKind::kSuperlensNoInnerLayer:
    case ScenarioKind::kSuperlensFull:
      // Magnified object a(x/M): isotropic constants are invariant under dilation.
      set_object(m, RegionTag::kInclusionB, object);
      break;
    case ScenarioKind::kCmCloakModified:
    case ScenarioKind::kCmCloakUnmodified:
      set_object(m, RegionTag::kInclusionA, object);
      break;
    case ScenarioKind::kSlabDc:
      set_object(m, RegionTag::kSlab, object);
      break;
  }
  return m;
}

void write_medium_vtk(const TriMesh& mesh, const MediumSpec& med, const std::string& path) {
  const std::size_t ne = mesh.num_elements();
  std::vector<PointData> cells = {{"a11", {}}, {"a12", {}}, {"a22", {}}, {"sigma", {}}, {"s_re", {}}, {"s_im", {}}};
  for (auto& c : cells) c.values.reserve(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const RegionTag tag = mesh.tags()[e];
    const Point2 b = mesh.barycenter(e);
    const Mat2 a = med.tensor(tag, b);
    const cplx s = med.s(tag);
    cells[0].values.push_back(a(0, 0));
    cells[1].values.push_back(a(0, 1));
    cells[2].values.push_back(a(1, 1));
    cells[3].values.push_back(med.sigma(tag, b));
    cells[4].values.push_back(s.real());
    cells[5].values.push_back(s.imag());
  }
  write_vtk(mesh, path, {}, cells);
}

}  // namespace alr
