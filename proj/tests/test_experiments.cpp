#include <gtest/gtest.h>

#include <cmath>
#include <regex>
#include <sstream>

#include "alr/experiments.hpp"
#include "alr/oracle.hpp"

using namespace alr;

namespace {

// Coarse mesh and a short schedule: seconds per sweep on one core.
ScenarioConfig cheap(ScenarioKind kind, std::vector<double> deltas = {1e-1, std::pow(10.0, -1.5), 1e-2}) {
  ScenarioConfig sc = ScenarioConfig::defaults(kind);
  sc.deltas = std::move(deltas);
  sc.mesh = default_schedule(sc.geometry, 0.5 * sc.geometry.r1, sc.delta_min());
  sc.mesh.refine_levels = 0;
  return sc;
}

cplx saddle(Point2 p) { return cplx(p.x * p.x - p.y * p.y, 0.0); }
Grad saddle_grad(Point2 p) { return {cplx(2 * p.x, 0.0), cplx(-2 * p.y, 0.0)}; }

}  // namespace

TEST(FitRate, ExactPowerLaw) {
  const auto deltas = geometric_deltas(1.0, 4.0, 2);
  std::vector<double> values;
  for (double d : deltas) values.push_back(std::pow(d, 0.4));
  const FitResult fit = fit_rate(deltas, values, 0.0);
  ASSERT_TRUE(fit.ok);
  EXPECT_NEAR(fit.slope, 0.4, 1e-6);
  EXPECT_EQ(fit.points, deltas.size());
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_TRUE(fit.diagnostic.empty());
}

TEST(FitRate, ConstantCurveWarnsAboutFloor) {
  const auto deltas = geometric_deltas(1.0, 4.0, 2);
  const FitResult fit = fit_rate(deltas, std::vector<double>(deltas.size(), 0.3), 0.0);
  ASSERT_TRUE(fit.ok);
  EXPECT_NEAR(fit.slope, 0.0, 1e-12);
  EXPECT_NE(fit.diagnostic.find("floor"), std::string::npos);
}

TEST(FitRate, RefusesWindowBelowFloor) {
  const auto deltas = geometric_deltas(1.0, 4.0, 2);
  std::vector<double> values;
  for (double d : deltas) values.push_back(std::pow(d, 0.5));
  // Only the first two points clear 3x the floor.
  const FitResult fit = fit_rate(deltas, values, 0.05);
  EXPECT_FALSE(fit.ok);
  EXPECT_EQ(fit.points, 2u);
  EXPECT_NE(fit.diagnostic.find("fewer than 3"), std::string::npos);
}

TEST(FitRate, WindowIsPrefixFromLargestDelta) {
  const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  const std::vector<double> values{10.0, 5.0, 2.0, 0.5, 3.0};
  const std::vector<double> floors(5, 0.3);
  EXPECT_EQ(above_floor_window(deltas, values, floors), (std::vector<std::size_t>{0, 1, 2}));
  // Order of the input does not matter.
  const std::vector<double> rd{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  const std::vector<double> rv{3.0, 0.5, 2.0, 5.0, 10.0};
  EXPECT_EQ(above_floor_window(rd, rv, floors), (std::vector<std::size_t>{4, 3, 2}));
  EXPECT_THROW(above_floor_window(deltas, values, std::vector<double>(2, 0.0)), DomainError);
}

TEST(RichardsonFloor, OrderClampedBetweenOneAndTwo) {
  EXPECT_DOUBLE_EQ(richardson_floor(1.0, 4.0), 1.0);   // p = 2
  EXPECT_DOUBLE_EQ(richardson_floor(1.0, 2.0), 1.0);   // p = 1
  EXPECT_DOUBLE_EQ(richardson_floor(1.0, 16.0), 5.0);  // p clamped to 2
  EXPECT_DOUBLE_EQ(richardson_floor(1.0, 1.2), 0.2);   // p clamped to 1
  EXPECT_DOUBLE_EQ(richardson_floor(2.0, 1.5), 0.5);   // no convergence: raw gap
  EXPECT_DOUBLE_EQ(richardson_floor(0.0, 0.7), 0.7);
}

TEST(Schedule, GeometricDeltasAndRule) {
  const auto d = geometric_deltas(1.0, 4.0, 2);
  ASSERT_EQ(d.size(), 7u);
  EXPECT_DOUBLE_EQ(d.front(), 0.1);
  EXPECT_NEAR(d.back(), 1e-4, 1e-18);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d[i], d[i - 1]);
  GeometryConfig g;
  EXPECT_DOUBLE_EQ(h_rule(g, 1e-4), (g.r2 - g.r1) / 64.0);
  EXPECT_DOUBLE_EQ(h_rule(g, 1.0), (g.r2 - g.r1) / 8.0);
  EXPECT_GT(h_rule(g, 1e-2), h_rule(g, 1e-4));
  EXPECT_DOUBLE_EQ(h_rule(g, 1e-6), h_rule(g, 1e-4));  // capped at the finest layer size
}

TEST(ScenarioConfig, ValidationNamesTheRule) {
  ScenarioConfig sc = ScenarioConfig::defaults(ScenarioKind::kQuasistaticCloak);
  EXPECT_NO_THROW(sc.validate());
  EXPECT_DOUBLE_EQ(sc.observation_radius, 1.5 * sc.geometry.r3());
  ScenarioConfig coarse = sc;
  coarse.mesh.grading = 1.0;
  coarse.mesh.h_target = 0.5;
  try {
    coarse.validate();
    ADD_FAILURE() << "coarse interface mesh accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("delta-floor rule"), std::string::npos);
  }
  ScenarioConfig unsorted = sc;
  unsorted.deltas = {1e-2, 1e-1};
  EXPECT_THROW(unsorted.validate(), ConfigError);
  ScenarioConfig slab = ScenarioConfig::defaults(ScenarioKind::kSlabDc);
  EXPECT_THROW(slab.validate(), ConfigError);
  slab.accept_experimental_slab = true;
  EXPECT_NO_THROW(slab.validate());
}

TEST(ScenarioConfig, LensLayoutInvariants) {
  const ScenarioConfig sc = ScenarioConfig::defaults(ScenarioKind::kSuperlensFull);
  const GeometryConfig& g = sc.geometry;
  const double M = lens_magnification(g);
  EXPECT_GT(M, 1.0);
  EXPECT_DOUBLE_EQ(g.r3() / g.r1, M);
  const GeometryConfig full = sc.resolved_geometry();
  EXPECT_FALSE(full.inclusions.empty());
}

TEST(Power, ConstantFieldHasNoPower) {
  const ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak);
  const auto mesh = sc.build_production_mesh();
  const DiscreteField one = DiscreteField::interpolate(mesh, [](Point2) { return cplx(2.0, -1.0); });
  EXPECT_NEAR(power(one, 1e-2), 0.0, 1e-14);
  const DiscreteField x = DiscreteField::interpolate(mesh, [](Point2 p) { return cplx(p.x, 0.0); });
  const double annulus_area = mesh->tagged_area(RegionTag::kAnnulus);
  EXPECT_NEAR(power(x, 1e-2), 1e-2 * annulus_area, 1e-3 * 1e-2 * annulus_area);
}

TEST(ReflectionDiagnostics, ConstantFieldHasNoMismatch) {
  const ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak);
  const auto mesh = sc.build_production_mesh();
  const GeometryConfig& g = mesh->config();
  const DiscreteField one = DiscreteField::interpolate(mesh, [](Point2) { return cplx(1.0, 0.5); });
  const MismatchRecord m =
      reflection_diagnostics(one, kelvin_map({0.0, 0.0}, g.r2), kelvin_map({0.0, 0.0}, g.r3()), g);
  EXPECT_NEAR(m.at_r2, 0.0, 1e-12);
  EXPECT_NEAR(m.at_r3, 0.0, 1e-12);
}

TEST(ReflectionDiagnostics, NegativeAnnulusIsEssential) {
  // Same source, same mesh: the loss-free homogeneous field is far from
  // reflection-symmetric, the plasmonic field nearly is.
  ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak, {1e-2});
  sc.geometry.r0 = 0.0;
  const auto mesh = sc.build_production_mesh();
  const GeometryConfig& g = mesh->config();
  const auto F = kelvin_map({0.0, 0.0}, g.r2), G = kelvin_map({0.0, 0.0}, g.r3());
  const auto dtn = dtn_operator(0.0, g.R_out, sc.dtn_modes);
  const DiscreteField cloak =
      solve_system(assemble(mesh, build_medium(sc.kind, g, sc.object, 1e-2, 0.0), sc.source, dtn));
  const DiscreteField plain = solve_system(assemble(mesh, homogeneous_medium(0.0), sc.source, dtn));
  const double m_cloak = reflection_diagnostics(cloak, F, G, g).at_r2;
  const double m_plain = reflection_diagnostics(plain, F, G, g).at_r2;
  EXPECT_GT(m_plain, 5.0 * m_cloak);
}

TEST(ThreeSpheres, AlphaFormulaLimits) {
  const double R1 = 0.5, R2 = 1.0, R3 = 2.0;
  const double hadamard = std::log(R3 / R2) / std::log(R3 / R1);
  EXPECT_NEAR(three_sphere_alpha(0.0, R1, R2, R3), hadamard, 1e-15);
  EXPECT_NEAR(three_sphere_alpha(1e-9, R1, R2, R3), hadamard, 1e-8);
  EXPECT_NEAR(three_sphere_alpha(1.0, R1, R2, R3), (1.0 / R2 - 1.0 / R3) / (1.0 / R1 - 1.0 / R3), 1e-15);
  EXPECT_NEAR(three_sphere_alpha(0.7, R1, R1 * (1 + 1e-10), R3), 1.0, 1e-8);
  EXPECT_NEAR(three_sphere_alpha(0.0, R1, R1 * (1 + 1e-10), R3), 1.0, 1e-8);
}

TEST(ThreeSpheres, HarmonicSaddleSatisfiesInequality) {
  const ThreeSphereReport rep = three_sphere_check(saddle, saddle_grad, {0.3, -0.2}, 0.4, 0.9, 1.7);
  EXPECT_LE(rep.constant, 1.1);
  EXPECT_GE(rep.margin, 0.0);
  EXPECT_GT(rep.alpha, 0.0);
  EXPECT_LT(rep.alpha, 1.0);
  EXPECT_FALSE(rep.alpha_curve.empty());
}

TEST(ThreeSpheres, ConstantFieldGivesEquality) {
  const ThreeSphereReport rep = three_sphere_check([](Point2) { return cplx(3.0, 0.0); },
                                                   [](Point2) { return Grad{}; }, {1.0, 1.0}, 0.2, 0.5, 1.3);
  EXPECT_NEAR(rep.constant, 1.0, 1e-9);
}

TEST(ThreeSpheres, DiscreteFieldRejectsCirclesCrossingInterfaces) {
  const ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak);
  const auto mesh = sc.build_production_mesh();
  const DiscreteField u = DiscreteField::interpolate(mesh, saddle);
  EXPECT_THROW(three_sphere_check(u, {0.0, 0.0}, 0.5, 1.5, 2.5), DomainError);
  const ThreeSphereReport rep = three_sphere_check(u, {-5.0, 0.0}, 0.2, 0.4, 0.8);
  EXPECT_LE(rep.constant, 1.1);
}

TEST(ReferenceSolution, ZeroSourceGivesZeroField) {
  ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak);
  sc.source.amplitude = 0.0;
  const DiscreteField u = reference_solution(sc);
  EXPECT_EQ(u.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ReferenceSolution, UnmodifiedSchemeSeesTheObject) {
  const ScenarioConfig sc = cheap(ScenarioKind::kCmCloakUnmodified);
  EXPECT_EQ(primary_reference(sc.kind), ReferenceKind::kWithObject);
  EXPECT_EQ(primary_reference(ScenarioKind::kQuasistaticCloak), ReferenceKind::kHomogeneous);
  const auto mesh = sc.build_production_mesh();
  const DiscreteField with = reference_solution(sc, ReferenceKind::kWithObject, mesh);
  const DiscreteField without = reference_solution(sc, ReferenceKind::kHomogeneous, mesh);
  const Region obs = sc.observation_region();
  EXPECT_GT(norm(with - without, obs, NormKind::kL2), 1e-3 * norm(without, obs, NormKind::kL2));
}

TEST(Sweep, LinearInSourceAmplitude) {
  ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak, {1e-1, 1e-2});
  const ConvergenceReport one = run_sweep(sc);
  sc.source.amplitude = 2.0;
  const ConvergenceReport two = run_sweep(sc);
  ASSERT_EQ(one.records.size(), 2u);
  ASSERT_EQ(two.records.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(two.records[i].power, 4.0 * one.records[i].power, 1e-8 * two.records[i].power);
    EXPECT_NEAR(two.records[i].error_h1, 2.0 * one.records[i].error_h1, 1e-8 * two.records[i].error_h1);
    EXPECT_NEAR(two.records[i].relative_l2, one.records[i].relative_l2, 1e-8);
    EXPECT_LE(two.records[i].residual, 1e-10);
  }
}

TEST(Sweep, ObserverMonotonicity) {
  const ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak, {1e-2});
  const auto mesh = sc.build_production_mesh();
  const GeometryConfig& g = mesh->config();
  const DiscreteField u = solve_system(assemble(mesh, build_medium(sc.kind, g, sc.object, 1e-2, 0.0), sc.source,
                                                dtn_operator(0.0, g.R_out, sc.dtn_modes)));
  const DiscreteField ref = reference_solution(sc, ReferenceKind::kHomogeneous, mesh);
  double prev = 0.0;
  for (double R : {4.5, 5.0, 5.5, sc.observation_radius}) {
    const double e = norm(u - ref, Region::ring(g.r3(), R), NormKind::kH1);
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(Sweep, MatchesOracleForRadialLayout) {
  ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak, {1e-1, std::pow(10.0, -1.5), 1e-2});
  sc.geometry.r0 = 0.0;
  const std::vector<RingMode> modes{RingMode{2, 1.0, 0.0}};
  sc.source = SourceSpec::ring(5.0, modes);
  sc.mesh = default_schedule(sc.geometry, 0.25, 1e-2);
  sc.mesh.refine_levels = 1;
  const ConvergenceReport rep = run_sweep(sc);
  ASSERT_EQ(rep.records.size(), 3u);
  ASSERT_EQ(rep.floor_h1.size(), 3u);
  const auto mesh = std::make_shared<const TriMesh>(refine_uniform(*sc.build_production_mesh()));
  const GeometryConfig& g = mesh->config();
  const auto layers = cloak_layers(g, false);
  std::vector<RadialLayer> free_space = layers;
  for (RadialLayer& l : free_space) l = RadialLayer{l.r_in, l.r_out, 1.0, 1.0, 0.0, false};
  const OracleSolution hom(free_space, modes, 0.0, 0.0, 5.0);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const DeltaRecord& r = rep.records[i];
    const OracleSolution orc(layers, modes, 0.0, r.delta, 5.0);
    const auto diff = [&](Point2 p) { return orc.value(p) - hom.value(p); };
    const auto diff_grad = [&](Point2 p) {
      const auto a = orc.gradient(p), b = hom.gradient(p);
      return Grad{a[0] - b[0], a[1] - b[1]};
    };
    const double exact = exact_norm(*mesh, diff, diff_grad, sc.observation_region(), NormKind::kH1);
    // The estimated discretization floor bounds what the mesh can resolve.
    EXPECT_NEAR(r.error_h1, exact, 0.1 * exact + rep.floor_h1[i]) << "delta " << r.delta;
    EXPECT_LT(rep.floor_h1[i], 0.5 * exact) << "delta " << r.delta;
  }
}

TEST(Report, CsvHasOneRowPerDeltaAndIsDeterministic) {
  const ScenarioConfig sc = cheap(ScenarioKind::kQuasistaticCloak, {1e-1, 1e-2});
  const ConvergenceReport rep = run_sweep(sc);
  const std::string csv = report_csv(rep);
  EXPECT_EQ(csv, report_csv(run_sweep(sc)));
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("delta,error_h1,", 0), 0u);
  const std::regex number(R"(-?\d\.\d{16}e[+-]\d{2,3})");
  std::istringstream row(lines[1]);
  std::string cell;
  int cells = 0;
  while (std::getline(row, cell, ',')) {
    EXPECT_TRUE(std::regex_match(cell, number)) << cell;
    ++cells;
  }
  EXPECT_EQ(cells, static_cast<int>(std::count(lines[0].begin(), lines[0].end(), ',')) + 1);
}

TEST(Report, SummaryNamesVerdict) {
  SuiteResult res;
  res.config = cheap(ScenarioKind::kSlabDc);
  res.verdict = Verdict::kExcluded;
  const std::string text = summary_text(res);
  EXPECT_NE(text.find("EXCLUDED"), std::string::npos);
  EXPECT_EQ(to_string(Verdict::kPass), "PASS");
}
