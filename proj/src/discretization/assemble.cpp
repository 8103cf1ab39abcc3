#include <cmath>
#include <string>

#include "alr/discretization.hpp"
#include "quadrature.hpp"

namespace alr {

namespace {

using Triplets = std::vector<Eigen::Triplet<cplx>>;

struct ElementGeometry {
  double area = 0.0;
  std::array<Eigen::Vector2d, 3> grads;
};

ElementGeometry element_geometry(const std::array<Point2, 3>& v) {
  const double twice = cross(v[1] - v[0], v[2] - v[0]);
  if (!(std::abs(twice) > 0.0)) throw NumericalError("degenerate element");
  ElementGeometry g;
  g.area = 0.5 * std::abs(twice);
  for (int i = 0; i < 3; ++i) {
    const Point2 pj = v[static_cast<std::size_t>((i + 1) % 3)];
    const Point2 pk = v[static_cast<std::size_t>((i + 2) % 3)];
    g.grads[static_cast<std::size_t>(i)] = Eigen::Vector2d(pj.y - pk.y, pk.x - pj.x) / twice;
  }
  return g;
}

std::array<Point2, 3> vertices(const TriMesh& mesh, std::size_t e) {
  const auto& el = mesh.elements()[e];
  return {mesh.nodes()[static_cast<std::size_t>(el[0])], mesh.nodes()[static_cast<std::size_t>(el[1])],
          mesh.nodes()[static_cast<std::size_t>(el[2])]};
}

Point2 at_bary(const std::array<Point2, 3>& v, const std::array<double, 3>& l) {
  return l[0] * v[0] + l[1] * v[1] + l[2] * v[2];
}

void require_finite(const Mat2& a, double sigma, std::size_t e) {
  if (!a.allFinite() || !std::isfinite(sigma))
    throw NumericalError("non-finite coefficient in element " + std::to_string(e), static_cast<long>(e));
}

void check_tags(const TriMesh& mesh, const MediumSpec& med) {
  RegionSet seen;
  for (RegionTag t : mesh.tags()) seen.insert(t);
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    const auto t = static_cast<RegionTag>(i);
    if (seen.contains(t) && !med.defines(t))
      throw ConfigError("medium does not define region '" + std::string(to_string(t)) + "' present in the mesh");
  }
}

Eigen::VectorXcd ring_load(const TriMesh& mesh, const SourceSpec& src) {
  std::optional<int> curve;
  for (std::size_t i = 0; i < mesh.curves().size(); ++i) {
    const Curve& c = mesh.curves()[i];
    if (c.role == CurveRole::kExtra && c.kind == Curve::Kind::kCircle && norm(c.center) < 1e-12 &&
        std::abs(c.radius - src.ring_radius) < 1e-9 * src.ring_radius)
      curve = static_cast<int>(i);
  }
  if (!curve) throw ConfigError("mesh does not resolve the source ring");

  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  const auto gl = quad::gauss_legendre(4);
  for (const CurveEdge& e : mesh.edges_on(*curve)) {
    const Point2 pa = mesh.nodes()[static_cast<std::size_t>(e.a)];
    const Point2 pb = mesh.nodes()[static_cast<std::size_t>(e.b)];
    const double len = dist(pa, pb);
    for (const quad::LinePoint& q : gl) {
      const Point2 p = (1.0 - q.t) * pa + q.t * pb;
      const double theta = std::atan2(p.y, p.x);
      double g = 0.0;
      for (const RingMode& m : src.modes) g += m.amplitude * std::cos(m.n * theta + m.phase);
      b(e.a) -= g * (1.0 - q.t) * q.weight * len;
      b(e.b) -= g * q.t * q.weight * len;
    }
  }
  return b;
}

Eigen::VectorXcd bump_load(const TriMesh& mesh, const SourceSpec& src, bool zero_mean) {
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  std::array<Eigen::VectorXd, 2> parts = {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  const double rho2 = src.bump_radius * src.bump_radius;
  bool any = false;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.tags()[e] != RegionTag::kSourceSupport) continue;
    any = true;
    const auto v = vertices(mesh, e);
    const double area = mesh.area(e);
    const auto& el = mesh.elements()[e];
    for (std::size_t side = 0; side < 2; ++side) {
      for (const quad::TriPoint& q : quad::kTri7) {
        const double t = norm2(at_bary(v, q.bary) - src.bump_centers[side]) / rho2;
        if (t >= 1.0) continue;
        const double f = src.amplitude * std::exp(1.0 - 1.0 / (1.0 - t));
        for (int i = 0; i < 3; ++i) parts[side](el[static_cast<std::size_t>(i)]) += f * q.bary[static_cast<std::size_t>(i)] * q.weight * area;
      }
    }
  }
  if (!any) throw ConfigError("mesh does not resolve the source disks");
  double w = 1.0;
  if (zero_mean && parts[1].sum() != 0.0) w = parts[0].sum() / parts[1].sum();
  return (-(parts[0] - w * parts[1])).cast<cplx>();
}

}  // namespace

Eigen::Matrix3cd element_stiffness(const std::array<Point2, 3>& v, const Mat2c& coefficient) {
  const ElementGeometry g = element_geometry(v);
  Eigen::Matrix3cd K;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      K(i, j) = g.area * (g.grads[static_cast<std::size_t>(i)].cast<cplx>().transpose() * coefficient *
                          g.grads[static_cast<std::size_t>(j)].cast<cplx>())(0, 0);
  return K;
}

SystemFamily::SystemFamily(std::shared_ptr<const TriMesh> mesh, const MediumSpec& med, const SourceSpec& src,
                           const DtNOperator& dtn)
    : mesh_(std::move(mesh)) {
  const TriMesh& m = *mesh_;
  check_tags(m, med);
  src.validate(m.config(), med.k());
  num_nodes_ = m.num_nodes();
  gauge_ = med.k() == 0.0;
  const auto dim = static_cast<Eigen::Index>(num_nodes_ + (gauge_ ? 1 : 0));
  const double k2 = med.k() * med.k();

  Triplets pos, neg;
  pos.reserve(9 * m.num_elements());
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const RegionTag tag = m.tags()[e];
    const auto v = vertices(m, e);
    const ElementGeometry g = element_geometry(v);
    Eigen::Matrix3d K = Eigen::Matrix3d::Zero(), M = Eigen::Matrix3d::Zero();
    if (med.is_constant(tag)) {
      const Point2 c = m.barycenter(e);
      const Mat2 a = med.tensor(tag, c);
      const double sigma = med.sigma(tag, c);
      require_finite(a, sigma, e);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          K(i, j) = g.area * g.grads[static_cast<std::size_t>(i)].dot(a * g.grads[static_cast<std::size_t>(j)]);
          M(i, j) = sigma * g.area / 12.0 * (i == j ? 2.0 : 1.0);
        }
    } else {
      for (const quad::TriPoint& q : quad::kTri3) {
        const Point2 p = at_bary(v, q.bary);
        const Mat2 a = med.tensor(tag, p);
        const double sigma = med.sigma(tag, p);
        require_finite(a, sigma, e);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            K(i, j) += q.weight * g.area *
                       g.grads[static_cast<std::size_t>(i)].dot(a * g.grads[static_cast<std::size_t>(j)]);
            M(i, j) += q.weight * g.area * sigma * q.bary[static_cast<std::size_t>(i)] *
                       q.bary[static_cast<std::size_t>(j)];
          }
      }
    }
    const bool negative = med.negative_region().contains(tag);
    Triplets& stiff = negative ? neg : pos;
    const auto& el = m.elements()[e];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int r = el[static_cast<std::size_t>(i)], c = el[static_cast<std::size_t>(j)];
        stiff.emplace_back(r, c, K(i, j));
        if (k2 != 0.0) pos.emplace_back(r, c, -k2 * med.s0(tag) * M(i, j));
      }
  }

  const DtNOperator::Block block = dtn.boundary_block(m);
  for (std::size_t i = 0; i < block.nodes.size(); ++i)
    for (std::size_t j = 0; j < block.nodes.size(); ++j)
      pos.emplace_back(block.nodes[i], block.nodes[j],
                       block.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  if (gauge_) {
    const auto last = static_cast<int>(num_nodes_);
    for (std::size_t i = 0; i < block.nodes.size(); ++i) {
      const double w = block.mean_weights(static_cast<Eigen::Index>(i));
      pos.emplace_back(block.nodes[i], last, w);
      pos.emplace_back(last, block.nodes[i], w);
    }
  }

  positive_.resize(dim, dim);
  negative_.resize(dim, dim);
  positive_.setFromTriplets(pos.begin(), pos.end());
  negative_.setFromTriplets(neg.begin(), neg.end());

  rhs_ = Eigen::VectorXcd::Zero(dim);
  const auto n = static_cast<Eigen::Index>(num_nodes_);
  rhs_.head(n) = src.kind == SourceSpec::Kind::kRing ? ring_load(m, src) : bump_load(m, src, gauge_);
}

LinearSystem SystemFamily::at(double delta) const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("delta must be finite and >= 0");
  LinearSystem sys;
  sys.mesh = mesh_;
  sys.matrix = positive_ + cplx(-1.0, -delta) * negative_;
  sys.rhs = rhs_;
  sys.num_nodes = num_nodes_;
  sys.gauge = gauge_;
  return sys;
}

LinearSystem assemble(std::shared_ptr<const TriMesh> mesh, const MediumSpec& med, const SourceSpec& src,
                      const DtNOperator& dtn) {
  if (std::abs(dtn.k() - med.k()) > 1e-14 * std::max(1.0, med.k()))
    throw ConfigError("DtN wavenumber differs from the medium wavenumber");
  return SystemFamily(std::move(mesh), med, src, dtn).at(med.delta());
}

}  // namespace alr
