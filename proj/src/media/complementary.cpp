#include <algorithm>
#include <cmath>
#include <random>

#include "alr/media.hpp"

namespace alr {

namespace {

constexpr double kFixedPointTol = 1e-8;
constexpr int kPreconditionSamples = 64;

double scaled_residual(const Mat2& got, const Mat2& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

double scaled_residual(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

// Uniform samples of a predicate region inside B_R (rejection sampling).
template <class Pred>
std::vector<Point2> sample_region(Pred inside, double R, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-R, R);
  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t tries = 0; out.size() < n && tries < 1000 * n + 10000; ++tries) {
    const Point2 p{U(rng), U(rng)};
    if (inside(p)) out.push_back(p);
  }
  return out;
}

void check_preconditions(const Diffeomorphism& F, const Diffeomorphism& G, const ComplementaryGeometry& geom) {
  auto reject = [](const std::string& why) { throw ConfigError("doubly complementary construction rejected: " + why); };
  for (int i = 0; i < kPreconditionSamples; ++i) {
    const double t = (i + 0.5) / kPreconditionSamples;
    const Point2 b2 = geom.boundary2(t);
    const Point2 b3 = geom.boundary3(t);
    if (dist(F.forward(b2), b2) > kFixedPointTol * std::max(1.0, norm(b2))) reject("F(x) != x on the boundary of Omega_2");
    if (dist(G.forward(b3), b3) > kFixedPointTol * std::max(1.0, norm(b3))) reject("G(x) != x on the boundary of Omega_3");
  }
  std::mt19937_64 rng(7);
  const auto ring = sample_region(
      [&](Point2 p) { return geom.in_omega2(p) && !geom.in_omega1(p); }, geom.outer_radius, kPreconditionSamples, rng);
  for (Point2 x : ring) {
    const Point2 y = F.forward(x);
    if (!(geom.in_omega3(y) && !geom.in_omega2(y))) reject("F does not map Omega_2 \\ Omega_1 into Omega_3 \\ Omega_2");
  }
  const double R = geom.outer_radius;
  for (int i = 0; i < kPreconditionSamples; ++i) {
    const double th = 2.0 * kPi * (i + 0.5) / kPreconditionSamples;
    const double r = R * (1.05 + 0.9 * i / kPreconditionSamples);
    const Point2 y{r * std::cos(th), r * std::sin(th)};
    if (geom.in_omega3(y)) continue;
    if (!geom.in_omega3(G.forward(y))) reject("G does not map the exterior of Omega_3 into Omega_3");
  }
}

}  // namespace

ComplementaryGeometry ComplementaryGeometry::concentric(const GeometryConfig& cfg) {
  const double r1 = cfg.r1, r2 = cfg.r2, r3 = cfg.r3();
  GeometryConfig plain = cfg;
  plain.inclusions.clear();
  plain.slab.reset();
  plain.source_disks.clear();
  ComplementaryGeometry g;
  g.in_omega1 = [r1](Point2 p) { return norm(p) < r1; };
  g.in_omega2 = [r2](Point2 p) { return norm(p) < r2; };
  g.in_omega3 = [r3](Point2 p) { return norm(p) < r3; };
  g.boundary2 = [r2](double t) { return Point2{r2 * std::cos(2 * kPi * t), r2 * std::sin(2 * kPi * t)}; };
  g.boundary3 = [r3](double t) { return Point2{r3 * std::cos(2 * kPi * t), r3 * std::sin(2 * kPi * t)}; };
  g.tag_of = [plain](Point2 p) { return region_of(p, plain); };
  g.outer_radius = r3;
  return g;
}

MediumSpec build_doubly_complementary(const TensorField& a_outer, const ScalarField& sigma_outer,
                                      const Diffeomorphism& F, const Diffeomorphism& G,
                                      const ComplementaryGeometry& geom, double k) {
  check_preconditions(F, G, geom);
  const Diffeomorphism F_inv = F.inverted();
  const Diffeomorphism GF_inv = compose(G, F).inverted();

  // Outside the image of Omega_3 \ Omega_2 the core is filled with the
  // pull-back of (I, 1).
  auto in_outer = [geom](Point2 y) { return geom.in_omega3(y) && !geom.in_omega2(y); };
  const TensorField a_ext = TensorField::from_function(
      [a_outer, in_outer](Point2 y) -> Mat2 { return in_outer(y) ? a_outer(y) : Mat2::Identity(); });
  const ScalarField s_ext =
      ScalarField::from_function([sigma_outer, in_outer](Point2 y) { return in_outer(y) ? sigma_outer(y) : 1.0; });

  MediumSpec m = homogeneous_medium(k);
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    const auto t = static_cast<RegionTag>(i);
    if (geom.outer_tags.contains(t)) m.set(t, a_outer, sigma_outer);
    if (geom.negative_tags.contains(t)) m.set(t, push_forward(F_inv, a_outer), push_forward(F_inv, sigma_outer));
    if (geom.core_tags.contains(t)) m.set(t, push_forward(GF_inv, a_ext), push_forward(GF_inv, s_ext));
  }
  m.set_negative_region(geom.negative_tags);
  return m;
}

bool VerificationReport::pass() const {
  return std::all_of(identities.begin(), identities.end(), [](const Identity& i) { return !i.checked || i.pass; });
}

VerificationReport verify_doubly_complementary(const MediumSpec& med, const Diffeomorphism& F, const Diffeomorphism& G,
                                               const ComplementaryGeometry& geom, std::size_t n_samples,
                                               double tolerance, std::uint64_t seed) {
  VerificationReport rep;
  rep.tolerance = tolerance;
  const bool check_sigma = med.k() > 0.0;
  rep.identities = {{"F_*A = A", 0.0, true, true},
                    {"G_*F_*A = A", 0.0, true, true},
                    {"F_*Sigma = Sigma", 0.0, check_sigma, true},
                    {"G_*F_*Sigma = Sigma", 0.0, check_sigma, true}};

  // Points within eps of an interface are skipped.
  const double eps = 1e-9 * geom.outer_radius;
  auto in_outer = [&](Point2 p) { return geom.in_omega3(p) && !geom.in_omega2(p); };
  auto clear_of_interfaces = [&](Point2 p) {
    for (Point2 d : {Point2{eps, 0}, Point2{-eps, 0}, Point2{0, eps}, Point2{0, -eps}})
      if (!in_outer(p + d)) return false;
    return true;
  };
  std::mt19937_64 rng(seed);
  const auto samples = sample_region([&](Point2 p) { return in_outer(p) && clear_of_interfaces(p); },
                                     geom.outer_radius, n_samples, rng);
  rep.samples = samples.size();
  const Diffeomorphism GF = compose(G, F);

  auto record = [](VerificationReport::Identity& id, double r) {
    id.max_residual = std::isfinite(r) ? std::max(id.max_residual, r) : INFINITY;
  };
  for (Point2 y : samples) {
    const RegionTag ty = geom.tag_of(y);
    const Mat2 a_y = med.tensor(ty, y);
    const double s_y = med.sigma(ty, y);
    auto pushed = [&](const Diffeomorphism& T, std::size_t a_idx, std::size_t s_idx) {
      try {
        const Point2 x = T.inverse(y);
        const RegionTag tx = geom.tag_of(x);
        const Mat2 J = T.jacobian(x);
        const double det = std::abs(J.determinant());
        record(rep.identities[a_idx], scaled_residual(Mat2(J * med.tensor(tx, x) * J.transpose() / det), a_y));
        if (check_sigma) record(rep.identities[s_idx], scaled_residual(med.sigma(tx, x) / det, s_y));
      } catch (const DomainError&) {
        record(rep.identities[a_idx], INFINITY);
        if (check_sigma) record(rep.identities[s_idx], INFINITY);
      }
    };
    pushed(F, 0, 2);
    pushed(GF, 1, 3);
  }
  for (auto& id : rep.identities) id.pass = !id.checked || (rep.samples > 0 && id.max_residual <= tolerance);

  // The identities only mean something if F and G fix the interfaces.
  VerificationReport::Identity fix2{"F(x) = x on the boundary of Omega_2", 0.0, true, true};
  VerificationReport::Identity fix3{"G(x) = x on the boundary of Omega_3", 0.0, true, true};
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = (i + 0.5) / static_cast<double>(n_samples);
    const Point2 b2 = geom.boundary2(t);
    const Point2 b3 = geom.boundary3(t);
    record(fix2, dist(F.forward(b2), b2) / std::max(1.0, norm(b2)));
    record(fix3, dist(G.forward(b3), b3) / std::max(1.0, norm(b3)));
  }
  fix2.pass = fix2.max_residual <= kFixedPointTol;
  fix3.pass = fix3.max_residual <= kFixedPointTol;
  rep.identities.push_back(fix2);
  rep.identities.push_back(fix3);
  return rep;
}

SlabMaps experimental_slab_maps(const GeometryConfig& cfg) {
  if (!cfg.slab) throw ConfigError("slab maps need a slab geometry");
  const double r1 = cfg.r1, r2 = cfg.r2;
  const double bottom = cfg.slab->bottom;
  // Rays hitting the slab bottom segment form the cone |x| / y < s / bottom.
  const double slope = cfg.slab->half_width / bottom;
  auto in_cone = [slope](Point2 p) { return p.y > 0.0 && std::abs(p.x) < slope * p.y; };
  auto hit = [bottom](Point2 p) { return bottom * norm(p) / p.y; };  // distance to y = bottom along the ray

  // Radial stretch in the cone taking (r1, hit) onto (r1, r2); identity elsewhere.
  auto stretch = [=](Point2 x) -> Point2 {
    const double r = norm(x);
    if (!in_cone(x) || r <= r1) return x;
    const double rp = r1 + (r - r1) * (r2 - r1) / (hit(x) - r1);
    return (rp / r) * x;
  };
  auto unstretch = [=](Point2 w) -> Point2 {
    const double r = norm(w);
    if (!in_cone(w) || r <= r1) return w;
    const double rx = r1 + (r - r1) * (hit(w) - r1) / (r2 - r1);
    return (rx / r) * w;
  };
  auto stretch_jac = [=](Point2 x) -> Mat2 {
    const double r = norm(x);
    if (!in_cone(x) || r <= r1) return Mat2::Identity();
    // S(x) = g(x) x / |x| with g = r1 + (r - r1) c, c = (r2 - r1) / (b r / y - r1).
    const double b = bottom;
    const double den = b * r / x.y - r1;
    const double c = (r2 - r1) / den;
    const double g = r1 + (r - r1) * c;
    // Gradients of r and of q = b r / y.
    const Eigen::Vector2d grad_r(x.x / r, x.y / r);
    const Eigen::Vector2d grad_q(b * x.x / (r * x.y), b * (x.y / r - r / x.y) / x.y);
    const Eigen::Vector2d grad_c = -(r2 - r1) / (den * den) * grad_q;
    const Eigen::Vector2d grad_g = c * grad_r + (r - r1) * grad_c;
    const Eigen::Vector2d e(x.x / r, x.y / r);
    const Mat2 de = (Mat2::Identity() - e * e.transpose()) / r;
    return e * grad_g.transpose() + g * de;
  };
  const Diffeomorphism S("slab-stretch", stretch, unstretch, stretch_jac);
  const Diffeomorphism K2 = kelvin_map({0.0, 0.0}, r2);
  return {compose(K2, S), kelvin_map({0.0, 0.0}, cfg.r3())};
}

ComplementaryGeometry slab_complementary_geometry(const GeometryConfig& cfg) {
  if (!cfg.slab) throw ConfigError("slab geometry required");
  const double r1 = cfg.r1, r2 = cfg.r2, r3 = cfg.r3();
  const double s = cfg.slab->half_width, t = cfg.slab->bottom;
  ComplementaryGeometry g;
  auto in_h = [s, t](Point2 p) { return std::abs(p.x) < s && p.y >= t; };
  g.in_omega1 = [r1](Point2 p) { return norm(p) < r1; };
  g.in_omega2 = [r2, in_h](Point2 p) { return norm(p) < r2 && !in_h(p); };
  g.in_omega3 = [r3](Point2 p) { return norm(p) < r3; };
  // Boundary of B_r2 \ H_t: the arc outside the slab, then the notch.
  const double y_top = std::sqrt(r2 * r2 - s * s);
  const double phi = std::atan2(s, y_top);  // half-angle of the notch seen from the origin
  const double arc = r2 * (2.0 * kPi - 2.0 * phi);
  const double side = y_top - t;
  const double total = arc + 2.0 * side + 2.0 * s;
  g.boundary2 = [=](double u) -> Point2 {
    double l = u * total;
    if (l < arc) {
      const double th = kPi / 2 + phi + l / r2;
      return {r2 * std::cos(th), r2 * std::sin(th)};
    }
    l -= arc;
    if (l < side) return {s, y_top - l};
    l -= side;
    if (l < 2.0 * s) return {s - l, t};
    l -= 2.0 * s;
    return {-s, t + l};
  };
  g.boundary3 = [r3](double u) { return Point2{r3 * std::cos(2 * kPi * u), r3 * std::sin(2 * kPi * u)}; };
  GeometryConfig plain = cfg;
  plain.inclusions.clear();
  plain.source_disks.clear();
  g.tag_of = [plain](Point2 p) { return region_of(p, plain); };
  g.outer_tags = {RegionTag::kShell, RegionTag::kSlab};
  g.outer_radius = r3;
  return g;
}

}  // namespace alr
