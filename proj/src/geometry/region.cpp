#include <algorithm>
#include <cmath>
#include <sstream>

#include "alr/geometry.hpp"

namespace alr {

namespace {

constexpr std::array<std::string_view, kRegionCount> kRegionNames = {
    "EXTERIOR", "SHELL_R3_R2", "ANNULUS_R2_R1", "CORE_R1",
    "INCLUSION_A", "INCLUSION_B", "SLAB", "SOURCE_SUPPORT"};

constexpr std::array<std::string_view, kCurveRoleCount> kRoleNames = {
    "r1", "r2", "r3", "outer", "inclusion", "extra", "slab", "source"};

// Angle between the two circles at an intersection point, in degrees.
double crossing_angle_deg(Point2 c1, double r1, Point2 c2, double r2) {
  const double d = dist(c1, c2);
  const double cosang = (r1 * r1 + r2 * r2 - d * d) / (2.0 * r1 * r2);
  const double ang = std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / kPi;
  return std::min(ang, 180.0 - ang);
}

}  // namespace

std::string_view to_string(RegionTag tag) { return kRegionNames[static_cast<std::size_t>(tag)]; }

std::optional<RegionTag> region_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kRegionCount; ++i)
    if (kRegionNames[i] == name) return static_cast<RegionTag>(i);
  return std::nullopt;
}

std::string_view to_string(CurveRole role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::string RegionSet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    if (!bits_.test(i)) continue;
    if (!out.empty()) out += '|';
    out += kRegionNames[i];
  }
  return out.empty() ? "{}" : out;
}

void GeometryConfig::validate() const {
  auto fail = [](const std::string& rule) { throw GeometryError("geometry invariant violated: " + rule); };
  for (double v : {r0, r1, r2, R0, R_out})
    if (!std::isfinite(v)) fail("radii must be finite");
  if (!(r0 >= 0.0)) fail("r0 >= 0");
  if (!(r1 > 0.0)) fail("0 < r1");
  if (r0 > 0.0 && !(r0 < r1)) fail("0 < r0 < r1");
  if (!(r1 < r2)) fail("r1 < r2");
  if (!(r3() < R0)) fail("r3 = r2^2/r1 < R0");
  if (!(R0 < R_out)) fail("R0 < R_out");
  if (r0 > 0.0 && !(r0 < std::min(r2 - r1, r1) / 2.0)) fail("r0 < min(r2 - r1, r1)/2");

  auto on_circle = [](Point2 p, double r) { return std::abs(norm(p) - r) <= 1e-9 * r; };
  if (!on_circle(x1, r1)) fail("|x1| = r1");
  if (!on_circle(x2, r2)) fail("|x2| = r2");
  if (!on_circle(x3, r3())) fail("|x3| = r3");

  const double interface_radii[] = {r1, r2, r3(), R_out};
  for (std::size_t i = 0; i < inclusions.size(); ++i) {
    const Inclusion& a = inclusions[i];
    if (!(a.radius > 0.0) || !is_finite(a.center)) fail("inclusion radius > 0");
    if (norm(a.center) + a.radius >= R_out) fail("inclusions inside B_R_out");
    if (a.tag != RegionTag::kInclusionA && a.tag != RegionTag::kInclusionB)
      fail("inclusion tag is INCLUSION_A or INCLUSION_B");
    for (std::size_t j = i + 1; j < inclusions.size(); ++j) {
      const Inclusion& b = inclusions[j];
      if (dist(a.center, b.center) <= a.radius + b.radius) fail("inclusions do not overlap");
    }
    for (double R : interface_radii) {
      const double d = norm(a.center);
      const bool crosses = d < R + a.radius && d > R - a.radius;
      if (crosses && crossing_angle_deg({0, 0}, R, a.center, a.radius) < 30.0)
        fail("inclusion circles cross interfaces at angles >= 30 degrees");
    }
  }
  if (slab) {
    const SlabGeometry& s = *slab;
    if (!(s.half_width > 0.0 && s.half_width < r1)) fail("0 < s < r1");
    if (!(s.bottom > r1 && s.bottom < s.top && s.top < r2 - s.half_width)) fail("r1 < t_bottom < t_top inside B_r2");
  }
  for (const SourceDisk& d : source_disks) {
    if (!(d.radius > 0.0)) fail("source disk radius > 0");
    if (norm(d.center) + d.radius >= R_out) fail("source disks inside B_R_out");
    if (norm(d.center) - d.radius <= r2) fail("source disks outside B_r2");
  }
  for (double r : extra_circles) {
    if (!(r > 0.0 && r < R_out)) fail("extra circles inside B_R_out");
    for (double R : {r1, r2, r3()})
      if (std::abs(r - R) < 1e-6 * R) fail("extra circles distinct from interfaces");
  }
}

void GeometryConfig::add_cloak_objects() {
  if (r0 <= 0.0) return;
  inclusions.push_back({x1, r0, RegionTag::kInclusionA, RegionTag::kCore});
  inclusions.push_back({x2, r0, RegionTag::kInclusionB, RegionTag::kShell});
}

RegionTag region_of(Point2 p, const GeometryConfig& cfg) {
  const double eps = cfg.eps_geo();
  const double r = norm(p);
  RegionTag base = RegionTag::kExterior;
  if (r <= cfg.r1 + eps) {
    base = RegionTag::kCore;
  } else if (r <= cfg.r2 + eps) {
    base = RegionTag::kAnnulus;
  } else if (r <= cfg.r3() + eps) {
    base = RegionTag::kShell;
  }

  if (cfg.slab && base == RegionTag::kAnnulus) {
    const SlabGeometry& s = *cfg.slab;
    if (std::abs(p.x) <= s.half_width + eps && p.y >= s.bottom - eps)
      return p.y <= s.top + eps ? RegionTag::kSlab : RegionTag::kShell;
  }
  for (const Inclusion& inc : cfg.inclusions)
    if (base == inc.host && dist(p, inc.center) <= inc.radius + eps) return inc.tag;
  if (base == RegionTag::kExterior || base == RegionTag::kShell)
    for (const SourceDisk& d : cfg.source_disks)
      if (dist(p, d.center) <= d.radius + eps) return RegionTag::kSourceSupport;
  return base;
}

Point2 Curve::at(double param) const {
  if (kind == Kind::kCircle) return {center.x + radius * std::cos(param), center.y + radius * std::sin(param)};
  return a + param * (b - a);
}

double Curve::param_of(Point2 p) const {
  if (kind == Kind::kCircle) {
    const double t = std::atan2(p.y - center.y, p.x - center.x);
    return t < 0.0 ? t + 2.0 * kPi : t;
  }
  const Point2 d = b - a;
  return std::clamp(dot(p - a, d) / norm2(d), 0.0, 1.0);
}

double Curve::distance(Point2 p) const {
  if (kind == Kind::kCircle) return std::abs(dist(p, center) - radius);
  return dist(p, at(param_of(p)));
}

double Curve::length() const { return kind == Kind::kCircle ? 2.0 * kPi * radius : dist(a, b); }

std::vector<Curve> geometry_curves(const GeometryConfig& cfg) {
  const Point2 o{0.0, 0.0};
  std::vector<Curve> curves = {
      Curve::circle(o, cfg.r1, CurveRole::kCoreInterface),
      Curve::circle(o, cfg.r2, CurveRole::kAnnulusInterface),
      Curve::circle(o, cfg.r3(), CurveRole::kShellInterface),
      Curve::circle(o, cfg.R_out, CurveRole::kOuter),
  };
  for (const Inclusion& inc : cfg.inclusions) curves.push_back(Curve::circle(inc.center, inc.radius, CurveRole::kInclusion));
  for (const SourceDisk& d : cfg.source_disks) curves.push_back(Curve::circle(d.center, d.radius, CurveRole::kSource));
  for (double r : cfg.extra_circles) curves.push_back(Curve::circle(o, r, CurveRole::kExtra));
  if (cfg.slab) {
    const SlabGeometry& s = *cfg.slab;
    const double w = s.half_width;
    const double y_top = std::sqrt(cfg.r2 * cfg.r2 - w * w);
    curves.push_back(Curve::segment({-w, s.bottom}, {w, s.bottom}, CurveRole::kSlab));
    curves.push_back(Curve::segment({-w, s.top}, {w, s.top}, CurveRole::kSlab));
    curves.push_back(Curve::segment({-w, s.bottom}, {-w, y_top}, CurveRole::kSlab));
    curves.push_back(Curve::segment({w, s.bottom}, {w, y_top}, CurveRole::kSlab));
  }
  return curves;
}

double MeshRecipe::feature_size(const Curve& c) const {
  const double fine = h_target / grading;
  double h = h_target;
  switch (c.role) {
    case CurveRole::kCoreInterface:
    case CurveRole::kAnnulusInterface:
    case CurveRole::kSlab:
      h = fine;
      break;
    case CurveRole::kShellInterface:
      h = h_target / std::sqrt(grading);
      break;
    case CurveRole::kInclusion:
      h = std::min(fine, c.radius / 4.0);
      break;
    case CurveRole::kSource:
      h = std::min(h_target, c.radius / 3.0);
      break;
    case CurveRole::kOuter:
    case CurveRole::kExtra:
      h = h_target;
      break;
  }
  return h / static_cast<double>(1 << near_levels[static_cast<std::size_t>(c.role)]);
}

double MeshRecipe::size_at(Point2 p, std::span<const Curve> curves) const {
  constexpr double kSlope = 0.5;
  double h = h_target;
  for (const Curve& c : curves) h = std::min(h, feature_size(c) + kSlope * c.distance(p));
  if (layer_size > 0.0) {
    const double r = norm(p);
    const double outside = std::max({0.0, cfg.r1 - r, r - cfg.r2});
    h = std::min(h, layer_size + kSlope * outside);
  }
  return scale * h;
}

}  // namespace alr
