#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "alr/discretization.hpp"

using namespace alr;

namespace {

using MeshPtr = std::shared_ptr<const TriMesh>;

const std::vector<RingMode> kMode2{RingMode{2, 1.0, 0.0}};

MeshPtr ring_mesh(double h, double grading, GeometryConfig cfg = {}) {
  SourceSpec::ring(5.0, kMode2).add_to_geometry(cfg);
  return std::make_shared<const TriMesh>(build_mesh(cfg, h, grading));
}

// Free-space response to f = cos(2 theta) delta(r - 5) for k = 0.
cplx exact_mode2(Point2 p) {
  const double r = norm(p), t = std::atan2(p.y, p.x);
  const double ratio = r < 5.0 ? std::pow(r / 5.0, 2) : std::pow(5.0 / r, 2);
  return -5.0 / 4.0 * ratio * std::cos(2 * t);
}

Grad exact_mode2_grad(Point2 p) {
  const double h = 1e-6;
  return {(exact_mode2({p.x + h, p.y}) - exact_mode2({p.x - h, p.y})) / (2 * h),
          (exact_mode2({p.x, p.y + h}) - exact_mode2({p.x, p.y - h})) / (2 * h)};
}

DiscreteField solve_homogeneous(const MeshPtr& mesh) {
  const MediumSpec med = homogeneous_medium(0.0);
  return solve_system(assemble(mesh, med, SourceSpec::ring(5.0, kMode2), dtn_operator(0.0, mesh->config().R_out, 48)));
}

double sparse_asymmetry(const SparseRowMatrix& m) {
  const SparseRowMatrix t = m.transpose();
  return (m - t).norm() / m.norm();
}

}  // namespace

TEST(ElementStiffness, ReferenceTriangle) {
  const Eigen::Matrix3cd k = element_stiffness({Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}, Mat2c::Identity());
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  EXPECT_LT((k - expected.cast<cplx>()).norm(), 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(k.row(i).sum()), 1e-15);
}

TEST(ElementStiffness, ScalesWithSignedCoefficient) {
  const std::array<Point2, 3> tri{Point2{1.2, 0.1}, Point2{1.5, 0.3}, Point2{1.3, 0.6}};
  const cplx s(-1.0, -0.5);
  const Eigen::Matrix3cd base = element_stiffness(tri, Mat2c::Identity());
  EXPECT_LT((element_stiffness(tri, s * Mat2c::Identity()) - s * base).norm(), 1e-14);
}

TEST(Assemble, AnnulusBlockCarriesLossFactor) {
  const MeshPtr mesh = ring_mesh(0.8, 2.0);
  const GeometryConfig& cfg = mesh->config();
  const auto src = SourceSpec::ring(5.0, kMode2);
  const auto dtn = dtn_operator(0.0, cfg.R_out, 16);
  const SparseRowMatrix pos = assemble(mesh, homogeneous_medium(0.0), src, dtn).matrix;
  const MediumSpec cloak = build_medium(ScenarioKind::kQuasistaticCloak, cfg, ObjectSpec{}, 0.0, 0.0);
  const SparseRowMatrix at0 = assemble(mesh, cloak, src, dtn).matrix;
  const SparseRowMatrix at05 = assemble(mesh, cloak.with_delta(0.5), src, dtn).matrix;
  // A(delta) - A_positive = (s - 1) N with N the annulus stiffness.
  const SparseRowMatrix lhs = at05 - pos;
  const SparseRowMatrix rhs = ((cplx(-1.0, -0.5) - 1.0) / cplx(-2.0, 0.0)) * (at0 - pos);
  EXPECT_LT((lhs - rhs).norm(), 1e-13 * lhs.norm());
}

TEST(Assemble, SymmetricWithGaugeDimension) {
  const MeshPtr mesh = ring_mesh(0.8, 2.0);
  const GeometryConfig& cfg = mesh->config();
  const auto src = SourceSpec::ring(5.0, kMode2);
  const LinearSystem qs =
      assemble(mesh, build_medium(ScenarioKind::kQuasistaticCloak, cfg, ObjectSpec{}, 1e-2, 0.0), src,
               dtn_operator(0.0, cfg.R_out, 16));
  EXPECT_TRUE(qs.gauge);
  EXPECT_EQ(qs.dimension(), mesh->num_nodes() + 1);
  EXPECT_LT(sparse_asymmetry(qs.matrix), 1e-14);
  const LinearSystem fr = assemble(mesh, build_medium(ScenarioKind::kFreqCloak, cfg, ObjectSpec{}, 1e-2, 0.5), src,
                                   dtn_operator(0.5, cfg.R_out, 16));
  EXPECT_FALSE(fr.gauge);
  EXPECT_EQ(fr.dimension(), mesh->num_nodes());
  EXPECT_LT(sparse_asymmetry(fr.matrix), 1e-14);
}

TEST(Assemble, RejectsMismatchedInputs) {
  const MeshPtr mesh = ring_mesh(0.8, 2.0);
  const auto src = SourceSpec::ring(5.0, kMode2);
  EXPECT_THROW(assemble(mesh, homogeneous_medium(0.0), src, dtn_operator(0.5, 7.0, 16)), ConfigError);
  EXPECT_THROW(assemble(mesh, homogeneous_medium(0.0), src, dtn_operator(0.0, 8.0, 16)), ConfigError);
  MediumSpec partial;
  partial.set(RegionTag::kCore, TensorField(), ScalarField());
  EXPECT_THROW(assemble(mesh, partial, src, dtn_operator(0.0, 7.0, 16)), ConfigError);
}

TEST(Source, BumpPairLoadHasZeroSum) {
  GeometryConfig cfg;
  const auto src = SourceSpec::bump_pair({5.0, 0.0}, {-5.0, 0.3}, 0.4);
  EXPECT_NO_THROW(src.validate(cfg, 0.0));
  src.add_to_geometry(cfg);
  const auto mesh = std::make_shared<const TriMesh>(build_mesh(cfg, 0.6, 2.0));
  const LinearSystem sys = assemble(mesh, homogeneous_medium(0.0), src, dtn_operator(0.0, cfg.R_out, 16));
  const auto n = static_cast<Eigen::Index>(sys.num_nodes);
  EXPECT_LT(std::abs(sys.rhs.head(n).sum()), 1e-14 * sys.rhs.head(n).cwiseAbs().sum());
  EXPECT_GT(sys.rhs.head(n).cwiseAbs().sum(), 0.0);
}

TEST(Source, RejectsSupportInsideShell) {
  GeometryConfig cfg;
  EXPECT_THROW(SourceSpec::bump_pair({3.0, 0.0}, {-5.0, 0.0}, 0.3).validate(cfg, 0.0), ConfigError);
  EXPECT_THROW(SourceSpec::ring(3.5, kMode2).validate(cfg, 0.0), ConfigError);
  EXPECT_THROW(SourceSpec::ring(5.0, {RingMode{0, 1.0, 0.0}}).validate(cfg, 0.0), ConfigError);
  auto allowed = SourceSpec::bump_pair({3.0, 0.0}, {-3.0, 0.0}, 0.3);
  allowed.allow_shell = true;
  EXPECT_NO_THROW(allowed.validate(cfg, 0.0));
}

TEST(DtN, QuasistaticSymbol) {
  const DtNOperator d = dtn_operator(0.0, 10.0, 16);
  EXPECT_NEAR(d.impedance(2).real(), 0.2, 1e-15);
  EXPECT_EQ(d.impedance(0), cplx(0.0, 0.0));
  for (int n = 1; n <= 16; ++n) EXPECT_DOUBLE_EQ(d.impedance(n).real(), n / 10.0);
}

TEST(DtN, HelmholtzSymbolMatchesTabulatedHankel) {
  const DtNOperator d = dtn_operator(1.0, 10.0, 16);
  // H0(10) = J0 + iY0, H0'(10) = -(J1 + iY1), tabulated values.
  const cplx h0(-0.2459357644513483, 0.05567116728359939);
  const cplx h1(0.04347274616886144, 0.24901542420695388);
  const cplx expected = -1.0 * (-h1) / h0;
  EXPECT_LT(std::abs(d.impedance(0) - expected), 1e-12);
  // Outgoing waves carry energy outward: Im(-conj(u) d_r u) > 0.
  for (int n = 0; n <= 16; ++n) EXPECT_LT(d.impedance(n).imag(), 0.0);
  EXPECT_THROW(dtn_operator(-1.0, 10.0, 16), DomainError);
  EXPECT_THROW(dtn_operator(1.0, 10.0, 4), DomainError);
}

TEST(DtN, SymbolIsExactOnExteriorModes) {
  const double R = 7.0;
  const DtNOperator d0 = dtn_operator(0.0, R, 16);
  const DtNOperator d1 = dtn_operator(0.8, R, 16);
  for (int n = 1; n <= 16; ++n) {
    // u = r^-n: -u'(R)/u(R) = n/R.
    EXPECT_NEAR(d0.impedance(n).real(), n / R, 1e-14);
    // u = H_n(k r): -u'(R)/u(R).
    const cplx h = bessel(BesselKind::kH1, n, 0.8 * R), dh = bessel_derivative(BesselKind::kH1, n, 0.8 * R);
    EXPECT_LT(std::abs(d1.impedance(n) + 0.8 * dh / h), 1e-12 * std::abs(d1.impedance(n)));
  }
}

TEST(DtN, TruncationRadiusDoesNotBias) {
  // Both truncated problems approximate the same unbounded solution; the
  // difference inside B_R0 stays at the discretization level and shrinks
  // with it.
  auto error_in_b6 = [](double R_out, double h) {
    GeometryConfig cfg;
    cfg.R_out = R_out;
    const MeshPtr mesh = ring_mesh(h, 1.0, cfg);
    const DiscreteField u = solve_homogeneous(mesh);
    return error_norm(u, exact_mode2, exact_mode2_grad, Region::ring(0.0, 6.0), NormKind::kL2) /
           exact_norm(*mesh, exact_mode2, exact_mode2_grad, Region::ring(0.0, 6.0), NormKind::kL2);
  };
  const double near = error_in_b6(7.0, 0.35), far = error_in_b6(10.5, 0.35);
  EXPECT_LT(std::abs(near - far), 0.5 * std::max(near, far));
  const double near_f = error_in_b6(7.0, 0.175), far_f = error_in_b6(10.5, 0.175);
  EXPECT_LT(near_f, 0.5 * near);
  EXPECT_LT(far_f, 0.5 * far);
}

TEST(Solver, DiagonalSystem) {
  SparseRowMatrix m(2, 2);
  m.insert(0, 0) = cplx(2.0, 1.0);
  m.insert(1, 1) = cplx(0.0, -3.0);
  Eigen::VectorXcd b(2);
  b << cplx(1.0, 0.0), cplx(0.0, 6.0);
  SparseSolver solver;
  const Eigen::VectorXcd x = solver.solve(m, b);
  EXPECT_LT(std::abs(x(0) - cplx(1.0, 0.0) / cplx(2.0, 1.0)), 1e-15);
  EXPECT_LT(std::abs(x(1) - cplx(-2.0, 0.0)), 1e-15);
}

TEST(Solver, MatchesDenseEliminationOnRandomSparseSystem) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = 50;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, cplx(4.0 + U(rng), U(rng)));
    for (int k = 0; k < 4; ++k) trip.emplace_back(i, static_cast<int>((U(rng) + 1.0) * 0.5 * (n - 1)), cplx(U(rng), U(rng)));
  }
  SparseRowMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) b(i) = cplx(U(rng), U(rng));
  SparseSolver solver;
  SolveStats stats;
  const Eigen::VectorXcd x = solver.solve(m, b, &stats);
  const Eigen::VectorXcd dense = Eigen::MatrixXcd(m).partialPivLu().solve(b);
  EXPECT_LT((x - dense).norm(), 1e-10 * dense.norm());
  EXPECT_LE(stats.residual, 1e-10);
  // Same pattern, new values: the symbolic analysis is reused.
  const SparseRowMatrix m2 = cplx(0.5, 0.25) * m;
  solver.solve(m2, b, &stats);
  EXPECT_TRUE(stats.pattern_reused);
}

TEST(Solver, ReportsSingularPivot) {
  SparseRowMatrix m(3, 3);
  m.insert(0, 0) = 1.0;
  m.insert(1, 1) = 1.0;
  m.insert(2, 0) = 1.0;
  m.insert(2, 1) = 1.0;
  SparseSolver solver;
  EXPECT_THROW(solver.solve(m, Eigen::VectorXcd::Ones(3)), NumericalError);
}

TEST(Solver, CloakSystemResidual) {
  const MeshPtr mesh = ring_mesh(0.5, 4.0);
  const GeometryConfig& cfg = mesh->config();
  const LinearSystem sys =
      assemble(mesh, build_medium(ScenarioKind::kQuasistaticCloak, cfg, ObjectSpec{}, 1e-2, 0.0),
               SourceSpec::ring(5.0, kMode2), dtn_operator(0.0, cfg.R_out, 48));
  SolveStats stats;
  const DiscreteField u = solve_system(sys, &stats);
  EXPECT_LE(stats.residual, 1e-10);
  EXPECT_EQ(u.values().size(), static_cast<Eigen::Index>(mesh->num_nodes()));
}

TEST(Norms, ConstantAndLinearFields) {
  GeometryConfig cfg;
  const auto mesh = std::make_shared<const TriMesh>(build_mesh(cfg, 0.1, 1.0));
  const Region core = Region::tags_only({RegionTag::kCore});
  const DiscreteField one = DiscreteField::interpolate(mesh, [](Point2) { return cplx(1.0, 0.0); });
  EXPECT_NEAR(norm(one, core, NormKind::kL2), std::sqrt(kPi), 5e-3);
  EXPECT_NEAR(norm(one, core, NormKind::kH1Semi), 0.0, 1e-13);
  const DiscreteField x = DiscreteField::interpolate(mesh, [](Point2 p) { return cplx(p.x, 0.0); });
  const double semi = norm(x, core, NormKind::kH1Semi);
  EXPECT_NEAR(semi * semi, kPi, 1e-2);
  const double l2 = norm(x, core, NormKind::kL2), h1 = norm(x, core, NormKind::kH1);
  EXPECT_NEAR(h1 * h1, l2 * l2 + semi * semi, 1e-12);
  EXPECT_GE(norm(x, core, NormKind::kBoundary), 0.0);
  EXPECT_THROW(norm(x, Region::ring(100.0, 200.0), NormKind::kL2), DomainError);
}

TEST(Evaluate, NodesLinearsAndFixedCircle) {
  GeometryConfig cfg;
  const auto mesh = std::make_shared<const TriMesh>(build_mesh(cfg, 0.5, 2.0));
  const DiscreteField lin =
      DiscreteField::interpolate(mesh, [](Point2 p) { return cplx(2.0 * p.x - p.y + 0.5, p.y); });
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-4.5, 4.5);
  for (int i = 0; i < 50; ++i) {
    const Point2 p{U(rng), U(rng)};
    EXPECT_LT(std::abs(lin.evaluate(p) - cplx(2.0 * p.x - p.y + 0.5, p.y)), 1e-13);
    const Grad g = lin.gradient_at(p);
    EXPECT_LT(std::abs(g[0] - cplx(2.0, 0.0)) + std::abs(g[1] - cplx(-1.0, 1.0)), 1e-12);
  }
  const DiscreteField u = DiscreteField::interpolate(mesh, [](Point2 p) { return cplx(std::sin(p.x), p.y * p.y); });
  for (std::size_t n = 0; n < mesh->num_nodes(); n += 13) EXPECT_EQ(u.evaluate(mesh->nodes()[n]), u.values()[n]);
  const Diffeomorphism F = kelvin_map({0.0, 0.0}, cfg.r2);
  std::vector<Point2> circle;
  for (int i = 0; i < 12; ++i) circle.push_back({cfg.r2 * std::cos(0.5 * i + 0.1), cfg.r2 * std::sin(0.5 * i + 0.1)});
  const auto plain = u.evaluate(circle);
  const auto pulled = u.evaluate(circle, &F);
  for (std::size_t i = 0; i < circle.size(); ++i) EXPECT_LT(std::abs(plain[i] - pulled[i]), 1e-12);
  EXPECT_THROW(u.evaluate(Point2{20.0, 0.0}), DomainError);
}

TEST(ManufacturedSolution, ObservedOrders) {
  MeshPtr mesh = ring_mesh(0.7, 1.0);
  std::vector<double> h1, l2;
  for (int level = 0; level < 3; ++level) {
    const DiscreteField u = solve_homogeneous(mesh);
    h1.push_back(error_norm(u, exact_mode2, exact_mode2_grad, Region{}, NormKind::kH1));
    l2.push_back(error_norm(u, exact_mode2, exact_mode2_grad, Region{}, NormKind::kL2));
    if (level < 2) mesh = std::make_shared<const TriMesh>(refine_uniform(*mesh));
  }
  for (int i = 1; i < 3; ++i) {
    EXPECT_GE(std::log2(h1[i - 1] / h1[i]), 0.9) << "level " << i;
    EXPECT_GE(std::log2(l2[i - 1] / l2[i]), 1.8) << "level " << i;
  }
}

TEST(GaugeInvariance, ConstantShiftLeavesDifferenceNormsUnchanged) {
  const MeshPtr mesh = ring_mesh(0.5, 2.0);
  const DiscreteField u = solve_homogeneous(mesh);
  const DiscreteField ref = DiscreteField::interpolate(mesh, exact_mode2);
  const Region obs = Region::ring(4.0, 6.0);
  for (NormKind kind : {NormKind::kL2, NormKind::kH1, NormKind::kH1Semi}) {
    const double base = norm(u - ref, obs, kind);
    const double shifted = norm(u.plus_constant(cplx(3.0, -2.0)) - ref.plus_constant(cplx(3.0, -2.0)), obs, kind);
    EXPECT_NEAR(base, shifted, 1e-10 * std::max(1.0, base));
  }
}

TEST(StabilityEstimate, OneConstantAcrossTheSweep) {
  // |u|^2_{H1(B_R)} <= C (|int f conj(u)| / delta + |f|^2) with C fitted once.
  const MeshPtr mesh = ring_mesh(0.5, 4.0);
  const GeometryConfig& cfg = mesh->config();
  const auto src = SourceSpec::ring(5.0, kMode2);
  const SystemFamily family(mesh, build_medium(ScenarioKind::kQuasistaticCloak, cfg, ObjectSpec{}, 0.0, 0.0), src,
                            dtn_operator(0.0, cfg.R_out, 48));
  SparseSolver solver;
  std::vector<double> ratios;
  for (double delta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const LinearSystem sys = family.at(delta);
    const DiscreteField u = solver.solve(sys);
    const auto n = static_cast<Eigen::Index>(sys.num_nodes);
    const double pairing = std::abs(sys.rhs.head(n).dot(u.values()));
    const double f2 = src.l2_norm() * src.l2_norm();
    const double lhs = std::pow(norm(u, Region{}, NormKind::kH1), 2);
    ratios.push_back(lhs / (pairing / delta + f2));
  }
  // A constant fitted at the largest delta must keep bounding the estimate:
  // a missing 1/delta factor would make the ratio grow 1000-fold here.
  for (double r : ratios) EXPECT_LE(r, 2.0 * ratios.front());
}

TEST(Checkpoint, RoundTripsAndChecksMesh) {
  const MeshPtr mesh = ring_mesh(0.8, 2.0);
  const DiscreteField u = solve_homogeneous(mesh);
  const auto dir = std::filesystem::temp_directory_path() / "alr_checkpoint_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "u.bin").string();
  u.save_checkpoint(path);
  const DiscreteField back = DiscreteField::load_checkpoint(path, mesh);
  EXPECT_EQ(back.values(), u.values());
  const MeshPtr other = ring_mesh(0.7, 2.0);
  EXPECT_THROW(DiscreteField::load_checkpoint(path, other), Error);
  u.write_vtk((dir / "u.vtk").string());
  EXPECT_GT(std::filesystem::file_size(dir / "u.vtk"), 0u);
  std::filesystem::remove_all(dir);
}
