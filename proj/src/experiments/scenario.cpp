#include <algorithm>
#include <cmath>
#include <string>

#include "alr/experiments.hpp"

namespace alr {

double h_rule(const GeometryConfig& cfg, double delta_min) {
  if (!(delta_min > 0.0)) throw ConfigError("h_rule: delta_min > 0");
  const double width = cfg.r2 - cfg.r1;
  const double h = width / 64.0 * std::max(1.0, std::pow(delta_min / 1e-4, 0.25));
  return std::min(h, width / 8.0);
}

std::vector<double> geometric_deltas(double from_exp, double to_exp, int per_decade) {
  if (per_decade < 1 || !(to_exp >= from_exp)) throw ConfigError("delta schedule: decreasing geometric list required");
  const int steps = static_cast<int>(std::lround((to_exp - from_exp) * per_decade));
  std::vector<double> d;
  for (int i = 0; i <= steps; ++i) d.push_back(std::pow(10.0, -(from_exp + static_cast<double>(i) / per_decade)));
  return d;
}

namespace {

SourceSpec default_bumps(double radius_center, double bump_radius, double angle_deg) {
  const double a = angle_deg * kPi / 180.0;
  return SourceSpec::bump_pair({radius_center * std::cos(a), radius_center * std::sin(a)},
                               {radius_center * std::cos(a), -radius_center * std::sin(a)}, bump_radius);
}

}  // namespace

MeshSchedule default_schedule(const GeometryConfig& g, double h_target, double delta_min) {
  const double hi = h_rule(g, delta_min);
  return {h_target, std::max(1.0, h_target / hi), 2.0 * hi, 1};
}

ScenarioConfig ScenarioConfig::defaults(ScenarioKind kind) {
  ScenarioConfig sc;
  sc.kind = kind;
  sc.deltas = geometric_deltas(1.0, 4.0, 2);
  GeometryConfig& g = sc.geometry;
  switch (kind) {
    case ScenarioKind::kQuasistaticCloak:
    case ScenarioKind::kFreqCloak:
    case ScenarioKind::kSuperlensNoInnerLayer:
    case ScenarioKind::kSuperlensFull:
      g.r1 = 1.0;
      g.r2 = 2.0;
      g.R0 = 6.0;
      g.R_out = 7.0;
      g.r0 = 0.02 * g.r1;
      g.x1 = {g.r1, 0.0};
      g.x2 = {g.r2, 0.0};
      g.x3 = {g.r3(), 0.0};
      sc.source = default_bumps(5.0, 0.5, 30.0);
      sc.object = ObjectSpec::isotropic(kind == ScenarioKind::kSuperlensNoInnerLayer ? 100.0 : 10.0);
      sc.k = kind == ScenarioKind::kFreqCloak ? 1.0 / g.r2 : 0.0;
      sc.mesh = default_schedule(g, 0.125 * g.r1, sc.delta_min());
      break;
    case ScenarioKind::kCmCloakModified:
    case ScenarioKind::kCmCloakUnmodified:
      g.r1 = 1.0;
      g.r2 = 2.5;
      g.R0 = 10.0;
      g.R_out = 11.0;
      g.r0 = 0.4;
      g.x1 = {g.r1, 0.0};
      g.x2 = {g.r2, 0.0};
      g.x3 = {g.r3(), 0.0};
      sc.source = default_bumps(8.0, 0.8, 30.0);
      sc.object = ObjectSpec::isotropic(10.0);
      sc.mesh = default_schedule(g, 0.35 * g.r1, sc.delta_min());
      break;
    case ScenarioKind::kSlabDc:
      g.r1 = 0.25;
      g.r2 = 1.75;
      g.R0 = 13.0;
      g.R_out = 14.0;
      g.r0 = 0.02;
      g.x1 = {0.0, g.r1};
      g.x2 = {0.0, g.r2};
      g.x3 = {0.0, g.r3()};
      sc.source = default_bumps(12.625, 0.25, 60.0);
      sc.object = ObjectSpec::isotropic(10.0);
      sc.mesh = default_schedule(g, 0.5, sc.delta_min());
      break;
  }
  sc.observation_radius = default_observation_radius(kind, g);
  return sc;
}

double ScenarioConfig::default_observation_radius(ScenarioKind, const GeometryConfig& g) {
  return 1.5 * g.r3() < g.R_out ? 1.5 * g.r3() : 0.5 * (g.R0 + g.R_out);
}

double ScenarioConfig::delta_min() const {
  if (deltas.empty()) throw ConfigError("delta schedule must not be empty");
  return *std::min_element(deltas.begin(), deltas.end());
}

void ScenarioConfig::validate() const {
  geometry.validate();
  object.validate();
  if (deltas.empty()) throw ConfigError("delta schedule must not be empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) throw ConfigError("delta values must be > 0");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ConfigError("delta schedule must be strictly decreasing");
  }
  if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("k >= 0");
  if (dtn_modes < 8) throw ConfigError("dtn modes >= 8");
  if (!(observation_radius > geometry.r3() && observation_radius < geometry.R_out))
    throw ConfigError("observation radius must lie in (r3, R_out)");
  if (!(mesh.h_target > 0.0) || !(mesh.grading >= 1.0) || !(mesh.layer_size >= 0.0) || mesh.refine_levels < 0)
    throw ConfigError("mesh schedule: h > 0, grading >= 1, layer >= 0, refine levels >= 0");
  const double interface_h = mesh.h_target / mesh.grading;
  const double rule = h_rule(geometry, delta_min());
  if (interface_h > rule * (1.0 + 1e-9))
    throw ConfigError("mesh violates the delta-floor rule: interface h " + std::to_string(interface_h) +
                      " > h_rule(delta_min) = " + std::to_string(rule));
  if (kind == ScenarioKind::kSlabDc && !accept_experimental_slab)
    throw ConfigError("slab-dc uses unverified experimental maps; accept them explicitly");
  source.validate(resolved_geometry(), k);
}

GeometryConfig ScenarioConfig::resolved_geometry() const {
  GeometryConfig g = scenario_geometry(kind, geometry, layout);
  source.add_to_geometry(g);
  if (std::none_of(g.extra_circles.begin(), g.extra_circles.end(),
                   [&](double r) { return std::abs(r - observation_radius) < 1e-12 * observation_radius; }))
    g.extra_circles.push_back(observation_radius);
  g.validate();
  return g;
}

std::shared_ptr<const TriMesh> ScenarioConfig::build_production_mesh() const {
  return std::make_shared<const TriMesh>(
      build_mesh(resolved_geometry(), mesh.h_target, mesh.grading, mesh.layer_size));
}

Region ScenarioConfig::observation_region() const { return Region::ring(geometry.r3(), observation_radius); }

ReferenceKind primary_reference(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kCmCloakUnmodified:
    case ScenarioKind::kSuperlensFull:
      return ReferenceKind::kWithObject;
    default:
      return ReferenceKind::kHomogeneous;
  }
}

ReferenceKind alternative_reference(ScenarioKind kind) {
  return primary_reference(kind) == ReferenceKind::kHomogeneous ? ReferenceKind::kWithObject
                                                                : ReferenceKind::kHomogeneous;
}

DiscreteField reference_solution(const ScenarioConfig& sc, ReferenceKind which, std::shared_ptr<const TriMesh> mesh) {
  if (!mesh) mesh = sc.build_production_mesh();
  const MediumSpec med =
      which == ReferenceKind::kHomogeneous ? homogeneous_medium(sc.k) : with_object_medium(sc.kind, sc.object, sc.k);
  const DtNOperator dtn = dtn_operator(sc.k, sc.geometry.R_out, sc.dtn_modes);
  return solve_system(assemble(mesh, med, sc.source, dtn));
}

DiscreteField reference_solution(const ScenarioConfig& sc) {
  return reference_solution(sc, primary_reference(sc.kind));
}

}  // namespace alr
