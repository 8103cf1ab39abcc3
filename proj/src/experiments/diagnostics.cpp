#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "alr/experiments.hpp"

namespace alr {

double power(const DiscreteField& u, double delta) {
  const GeometryConfig& cfg = u.mesh().config();
  const double semi = norm(u, Region{RegionSet::all(), cfg.r1, cfg.r2}, NormKind::kH1Semi);
  return delta * semi * semi;
}

namespace {

// Gradient of u recovered from one side of an interface: least-squares
// quadratic through the nodes of elements carrying `tags` near the point.
class SideGradient {
 public:
  SideGradient(const DiscreteField& u, RegionSet tags) : u_(u) {
    const TriMesh& m = u.mesh();
    member_.assign(m.num_nodes(), false);
    node_h_.assign(m.num_nodes(), 0.0);
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x, hi = -lo_x;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      if (!tags.contains(m.tags()[e])) continue;
      for (int v : m.elements()[e]) {
        member_[static_cast<std::size_t>(v)] = true;
        node_h_[static_cast<std::size_t>(v)] = std::max(node_h_[static_cast<std::size_t>(v)], m.h(e));
      }
    }
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      if (!member_[i]) continue;
      const Point2 p = m.nodes()[i];
      lo_x = std::min(lo_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi = std::max({hi, p.x, p.y});
      members_.push_back(static_cast<int>(i));
    }
    if (members_.empty()) throw DomainError("one-sided gradient: no elements with the requested tags");
    lo_ = {lo_x, lo_y};
    cell_ = std::max(1e-12, (hi - std::min(lo_x, lo_y)) / 256.0);
    for (int i : members_) {
      const Point2 p = m.nodes()[static_cast<std::size_t>(i)];
      grid_[key(p)].push_back(i);
    }
  }

  Grad at(Point2 x) const {
    const TriMesh& m = u_.mesh();
    const int nearest = nearest_member(x);
    double rho = 2.5 * node_h_[static_cast<std::size_t>(nearest)];
    std::vector<int> pts;
    for (int attempt = 0; attempt < 6; ++attempt, rho *= 1.5) {
      pts = within(x, rho);
      if (pts.size() >= 12) break;
    }
    if (pts.size() < 6) throw DomainError("one-sided gradient: too few nodes near the sample point");
    Eigen::MatrixXcd A(static_cast<Eigen::Index>(pts.size()), 6);
    Eigen::VectorXcd b(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t r = 0; r < pts.size(); ++r) {
      const Point2 d = (m.nodes()[static_cast<std::size_t>(pts[r])] - x) / rho;
      const auto row = static_cast<Eigen::Index>(r);
      A.row(row) << 1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y;
      b(row) = u_.values()(pts[r]);
    }
    const Eigen::VectorXcd c = A.colPivHouseholderQr().solve(b);
    return {c(1) / rho, c(2) / rho};
  }

 private:
  std::int64_t key(Point2 p) const { return key_of(cell_index(p.x - lo_.x), cell_index(p.y - lo_.y)); }
  long cell_index(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  static std::int64_t key_of(long i, long j) { return (static_cast<std::int64_t>(i) << 32) ^ (j & 0xffffffff); }

  std::vector<int> within(Point2 x, double rho) const {
    std::vector<int> out;
    const long i0 = cell_index(x.x - rho - lo_.x), i1 = cell_index(x.x + rho - lo_.x);
    const long j0 = cell_index(x.y - rho - lo_.y), j1 = cell_index(x.y + rho - lo_.y);
    for (long i = i0; i <= i1; ++i)
      for (long j = j0; j <= j1; ++j) {
        const auto it = grid_.find(key_of(i, j));
        if (it == grid_.end()) continue;
        for (int n : it->second)
          if (dist(u_.mesh().nodes()[static_cast<std::size_t>(n)], x) <= rho) out.push_back(n);
      }
    std::sort(out.begin(), out.end());
    return out;
  }

  int nearest_member(Point2 x) const {
    for (double rho = 2.0 * cell_;; rho *= 2.0) {
      const auto near = within(x, rho);
      if (!near.empty()) {
        return *std::min_element(near.begin(), near.end(), [&](int a, int b) {
          return dist(u_.mesh().nodes()[static_cast<std::size_t>(a)], x) <
                 dist(u_.mesh().nodes()[static_cast<std::size_t>(b)], x);
        });
      }
      if (rho > 1e6 * cell_) throw DomainError("one-sided gradient: no nodes found");
    }
  }

  const DiscreteField& u_;
  std::vector<bool> member_;
  std::vector<double> node_h_;
  std::vector<int> members_;
  Point2 lo_;
  double cell_ = 1.0;
  std::unordered_map<std::int64_t, std::vector<int>> grid_;
};

Grad pull_gradient(const Mat2& jac, const Grad& g) {
  // grad(u o T)(y) = DT(y)^T grad u(T(y)).
  return {jac(0, 0) * g[0] + jac(1, 0) * g[1], jac(0, 1) * g[0] + jac(1, 1) * g[1]};
}

bool near_object(Point2 p, const GeometryConfig& cfg, double margin) {
  for (const Inclusion& inc : cfg.inclusions)
    if (dist(p, inc.center) < 2.0 * inc.radius + margin) return true;
  if (cfg.slab && std::abs(p.x) < cfg.slab->half_width + margin && p.y > 0.0) return true;
  return false;
}

// Fourier-weighted norm on a circle of radius R sampled at equispaced angles:
// 2 pi R * sum_{|n| <= N} (1 + |n|)^{2s} |c_n|^2 with N = samples / 4.
// Masked samples carry zero.
double circle_sobolev(const std::vector<cplx>& f, double R, double s) {
  const auto m = static_cast<int>(f.size());
  const int modes = m / 4;
  const double step = 2.0 * kPi / m;
  double sum = 0.0;
  for (int n = -modes; n <= modes; ++n) {
    const cplx rot = std::polar(1.0, -n * step);
    cplx phase = std::polar(1.0, -n * 0.5 * step);
    cplx c = 0.0;
    for (int i = 0; i < m; ++i, phase *= rot) c += f[static_cast<std::size_t>(i)] * phase;
    c /= static_cast<double>(m);
    sum += std::pow(1.0 + std::abs(n), 2.0 * s) * std::norm(c);
  }
  return std::sqrt(2.0 * kPi * R * sum);
}

// Cauchy-data surrogate: trace in H^1/2, normal derivative in H^-1/2.
double cauchy_norm(const std::vector<cplx>& trace, const std::vector<cplx>& flux, double R) {
  return std::hypot(circle_sobolev(trace, R, 0.5), circle_sobolev(flux, R, -0.5));
}

cplx normal_part(const Grad& g, Point2 y) {
  const Point2 n = y / norm(y);
  return g[0] * n.x + g[1] * n.y;
}

}  // namespace

MismatchRecord reflection_diagnostics(const DiscreteField& u, const Diffeomorphism& F, const Diffeomorphism& G,
                                      const GeometryConfig& cfg, int samples) {
  if (samples < 16) throw DomainError("reflection diagnostics: at least 16 samples");
  const SideGradient annulus(u, {RegionTag::kAnnulus});
  const SideGradient shell(u, {RegionTag::kShell});
  const SideGradient core(u, {RegionTag::kCore});
  const double margin = 0.05 * (cfg.r2 - cfg.r1);
  const Diffeomorphism F_inv = F.inverted(), G_inv = G.inverted();

  const auto n = static_cast<std::size_t>(samples);
  std::vector<cplx> trace2(n, 0.0), flux2(n, 0.0), trace3(n, 0.0), flux3(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * kPi * (static_cast<double>(i) + 0.5) / samples;
    const Point2 dir{std::cos(theta), std::sin(theta)};

    // u1 = u o F^-1 against u on the boundary of B_r2, outer side.
    const Point2 y2 = cfg.r2 * dir;
    const Point2 x2 = F_inv.forward(y2);
    if (!near_object(y2, cfg, margin) && !near_object(x2, cfg, margin)) {
      const Grad g1 = pull_gradient(F_inv.jacobian(y2), annulus.at(x2));
      trace2[i] = u.evaluate(x2) - u.evaluate(y2);
      flux2[i] = normal_part(g1, y2) - normal_part(shell.at(y2), y2);
    }

    // u2 = u1 o G^-1 against u1 on the boundary of B_r3, outer side.
    const Point2 y3 = cfg.r3() * dir;
    const Point2 x1 = F_inv.forward(y3);               // core side of |x| = r1
    const Point2 x12 = F_inv.forward(G_inv.forward(y3));  // annulus side of |x| = r1
    if (!near_object(y3, cfg, margin) && !near_object(x1, cfg, margin) && !near_object(x12, cfg, margin)) {
      const Grad g1 = pull_gradient(F_inv.jacobian(y3), core.at(x1));
      const Mat2 d2 = F_inv.jacobian(G_inv.forward(y3)) * G_inv.jacobian(y3);
      const Grad g2 = pull_gradient(d2, annulus.at(x12));
      trace3[i] = u.evaluate(x12) - u.evaluate(x1);
      flux3[i] = normal_part(g2, y3) - normal_part(g1, y3);
    }
  }
  return {cauchy_norm(trace2, flux2, cfg.r2), cauchy_norm(trace3, flux3, cfg.r3())};
}

double three_sphere_alpha(double q, double R1, double R2, double R3) {
  if (!(0.0 < R1 && R1 < R2 && R2 < R3)) throw DomainError("three spheres: radii must satisfy 0 < R1 < R2 < R3");
  if (std::abs(q) < 1e-12) return std::log(R3 / R2) / std::log(R3 / R1);
  // expm1 keeps the ratio accurate as q -> 0, where both differences cancel.
  const auto drop = [q, R3](double R) { return std::expm1(-q * std::log(R)) - std::expm1(-q * std::log(R3)); };
  return drop(R2) / drop(R1);
}

namespace {

double circle_norm(const std::function<cplx(Point2)>& value, const std::function<Grad(Point2)>& gradient, Point2 z,
                   double R) {
  constexpr int kSamples = 256;
  double sum = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double theta = 2.0 * kPi * (i + 0.5) / kSamples;
    const Point2 d{R * std::cos(theta), R * std::sin(theta)};
    const Grad g = gradient(z + d);
    sum += std::norm(value(z + d)) + std::norm(g[0]) + std::norm(g[1]);
  }
  // Mean over the circle, so a constant field has the same norm on every radius.
  return std::sqrt(sum / kSamples);
}

ThreeSphereReport three_sphere_from_norms(Point2 z, std::array<double, 3> radii, std::array<double, 3> norms) {
  ThreeSphereReport rep;
  rep.center = z;
  rep.radii = radii;
  rep.norms = norms;
  const auto [R1, R2, R3] = radii;
  rep.alpha_hadamard = three_sphere_alpha(0.0, R1, R2, R3);
  auto constant_at = [&](double alpha) {
    if (norms[1] == 0.0) return 1.0;
    return norms[1] / (std::pow(norms[0], alpha) * std::pow(norms[2], 1.0 - alpha));
  };
  rep.constant = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 80; ++i) {
    const double q = 0.05 * i;
    const double a = three_sphere_alpha(q, R1, R2, R3);
    rep.alpha_curve.emplace_back(q, a);
    const double c = constant_at(a);
    if (c < rep.constant) {
      rep.constant = c;
      rep.best_q = q;
      rep.alpha = a;
    }
  }
  rep.margin = 1.1 - rep.constant;
  return rep;
}

}  // namespace

ThreeSphereReport three_sphere_check(const std::function<cplx(Point2)>& value,
                                     const std::function<Grad(Point2)>& gradient, Point2 z, double R1, double R2,
                                     double R3) {
  if (!(0.0 < R1 && R1 < R2 && R2 < R3)) throw DomainError("three spheres: radii must satisfy 0 < R1 < R2 < R3");
  return three_sphere_from_norms(z, {R1, R2, R3},
                                 {circle_norm(value, gradient, z, R1), circle_norm(value, gradient, z, R2),
                                  circle_norm(value, gradient, z, R3)});
}

ThreeSphereReport three_sphere_check(const DiscreteField& u, Point2 z, double R1, double R2, double R3) {
  if (!(0.0 < R1 && R1 < R2 && R2 < R3)) throw DomainError("three spheres: radii must satisfy 0 < R1 < R2 < R3");
  // The equation must be homogeneous with smooth coefficients in B(z, R3).
  const TriMesh& m = u.mesh();
  std::optional<RegionTag> tag;
  for (int ir = 0; ir <= 24; ++ir) {
    const double r = R3 * ir / 24.0;
    const int n = ir == 0 ? 1 : 8 * ir;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * kPi * i / n;
      const auto loc = m.locate(z + Point2{r * std::cos(th), r * std::sin(th)});
      if (!loc) throw DomainError("three spheres: circle leaves the mesh");
      const RegionTag t = m.tags()[static_cast<std::size_t>(loc->element)];
      if (tag && *tag != t) throw DomainError("three spheres: circles cross a material interface");
      tag = t;
    }
  }
  auto value = [&](Point2 p) { return u.evaluate(p); };
  auto gradient = [&](Point2 p) { return u.gradient_at(p); };
  return three_sphere_check(value, gradient, z, R1, R2, R3);
}

}  // namespace alr
