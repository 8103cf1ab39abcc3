#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "alr/field.hpp"
#include "alr/media.hpp"
#include "quadrature.hpp"

namespace alr {

namespace {

using quad::kTri7;
using QuadPoint = quad::TriPoint;

constexpr char kMagic[8] = {'A', 'L', 'R', 'F', 'L', 'D', '0', '1'};

Point2 bary_point(const TriMesh& m, std::size_t e, const std::array<double, 3>& l) {
  const auto& v = m.elements()[e];
  const auto& N = m.nodes();
  return l[0] * N[static_cast<std::size_t>(v[0])] + l[1] * N[static_cast<std::size_t>(v[1])] +
         l[2] * N[static_cast<std::size_t>(v[2])];
}

// Gradients of the three P1 shape functions on element e.
std::array<Point2, 3> shape_gradients(const TriMesh& m, std::size_t e) {
  const auto& v = m.elements()[e];
  const Point2 a = m.nodes()[static_cast<std::size_t>(v[0])];
  const Point2 b = m.nodes()[static_cast<std::size_t>(v[1])];
  const Point2 c = m.nodes()[static_cast<std::size_t>(v[2])];
  const double det = cross(b - a, c - a);
  return {Point2{b.y - c.y, c.x - b.x} / det, Point2{c.y - a.y, a.x - c.x} / det, Point2{a.y - b.y, b.x - a.x} / det};
}

double abs2(cplx z) { return std::norm(z); }

}  // namespace

bool Region::contains(const TriMesh& mesh, std::size_t e) const {
  if (!tags.contains(mesh.tags()[e])) return false;
  if (r_min <= 0.0 && std::isinf(r_max)) return true;
  const double r = norm(mesh.barycenter(e));
  return r > r_min && r < r_max;
}

DiscreteField::DiscreteField(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXcd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw DomainError("DiscreteField: null mesh");
  if (static_cast<std::size_t>(values_.size()) != mesh_->num_nodes())
    throw DomainError("DiscreteField: value count differs from node count");
  if (!values_.allFinite()) throw NumericalError("DiscreteField: non-finite nodal value");
}

DiscreteField DiscreteField::zero(std::shared_ptr<const TriMesh> mesh) {
  const auto n = static_cast<Eigen::Index>(mesh->num_nodes());
  return DiscreteField(std::move(mesh), Eigen::VectorXcd::Zero(n));
}

DiscreteField DiscreteField::interpolate(std::shared_ptr<const TriMesh> mesh, const std::function<cplx(Point2)>& f) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(mesh->num_nodes()));
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) v(static_cast<Eigen::Index>(i)) = f(mesh->nodes()[i]);
  return DiscreteField(std::move(mesh), std::move(v));
}

cplx DiscreteField::evaluate(Point2 p) const {
  const auto loc = mesh_->locate(p);
  if (!loc) throw DomainError("evaluate: point outside the mesh");
  const auto& v = mesh_->elements()[static_cast<std::size_t>(loc->element)];
  cplx s = 0.0;
  for (int i = 0; i < 3; ++i) s += loc->bary[i] * values_(v[i]);
  return s;
}

std::vector<cplx> DiscreteField::evaluate(std::span<const Point2> pts, const Diffeomorphism* precompose) const {
  std::vector<cplx> out;
  out.reserve(pts.size());
  for (Point2 p : pts) out.push_back(evaluate(precompose ? precompose->inverse(p) : p));
  return out;
}

Grad DiscreteField::gradient(std::size_t element) const {
  const auto g = shape_gradients(*mesh_, element);
  const auto& v = mesh_->elements()[element];
  Grad out{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    out[0] += g[i].x * values_(v[i]);
    out[1] += g[i].y * values_(v[i]);
  }
  return out;
}

Grad DiscreteField::gradient_at(Point2 p) const {
  const auto loc = mesh_->locate(p);
  if (!loc) throw DomainError("gradient_at: point outside the mesh");
  return gradient(static_cast<std::size_t>(loc->element));
}

void DiscreteField::require_same_mesh(const DiscreteField& o) const {
  if (mesh_ != o.mesh_ && mesh_->hash() != o.mesh_->hash()) throw DomainError("fields live on different meshes");
}

DiscreteField DiscreteField::operator+(const DiscreteField& o) const {
  require_same_mesh(o);
  return DiscreteField(mesh_, values_ + o.values_);
}

DiscreteField DiscreteField::operator-(const DiscreteField& o) const {
  require_same_mesh(o);
  return DiscreteField(mesh_, values_ - o.values_);
}

DiscreteField DiscreteField::operator*(cplx s) const { return DiscreteField(mesh_, values_ * s); }

DiscreteField DiscreteField::plus_constant(cplx c) const {
  return DiscreteField(mesh_, values_ + Eigen::VectorXcd::Constant(values_.size(), c));
}

void DiscreteField::write_vtk(const std::string& path) const {
  std::vector<PointData> pd = {{"re", {}}, {"im", {}}, {"abs", {}}};
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    pd[0].values.push_back(values_(i).real());
    pd[1].values.push_back(values_(i).imag());
    pd[2].values.push_back(std::abs(values_(i)));
  }
  alr::write_vtk(*mesh_, path, pd);
}

void DiscreteField::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  const std::uint64_t hash = mesh_->hash();
  const std::uint64_t n = static_cast<std::uint64_t>(values_.size());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&hash), sizeof hash);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(values_.data()), static_cast<std::streamsize>(n * sizeof(cplx)));
  if (!out) throw Error("write failed: " + path);
}

DiscreteField DiscreteField::load_checkpoint(const std::string& path, std::shared_ptr<const TriMesh> mesh) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[8];
  std::uint64_t hash = 0, n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&hash), sizeof hash);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error("not a field checkpoint: " + path);
  if (hash != mesh->hash() || n != mesh->num_nodes()) throw Error("checkpoint was written for a different mesh");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(cplx)));
  if (!in) throw Error("truncated checkpoint: " + path);
  return DiscreteField(std::move(mesh), std::move(v));
}

double norm(const DiscreteField& u, const Region& region, NormKind kind) {
  const TriMesh& m = u.mesh();
  const auto& U = u.values();
  bool any = false;
  double sum = 0.0;
  if (kind != NormKind::kBoundary) {
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      if (!region.contains(m, e)) continue;
      any = true;
      const auto& v = m.elements()[e];
      const double A = m.area(e);
      if (kind != NormKind::kH1Semi) {
        // Exact P1 mass: (A/12) (sum |u_i|^2 + |sum u_i|^2).
        const cplx s = U(v[0]) + U(v[1]) + U(v[2]);
        sum += A / 12.0 * (abs2(U(v[0])) + abs2(U(v[1])) + abs2(U(v[2])) + abs2(s));
      }
      if (kind != NormKind::kL2) {
        const Grad g = u.gradient(e);
        sum += A * (abs2(g[0]) + abs2(g[1]));
      }
    }
  } else {
    std::map<std::pair<int, int>, std::array<long, 2>> edges;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      const auto& v = m.elements()[e];
      for (int i = 0; i < 3; ++i) {
        const int a = v[i], b = v[(i + 1) % 3];
        auto [it, fresh] = edges.try_emplace({std::min(a, b), std::max(a, b)}, std::array<long, 2>{-1, -1});
        it->second[fresh ? 0 : 1] = static_cast<long>(e);
      }
    }
    for (const auto& [key, els] : edges) {
      const bool in0 = region.contains(m, static_cast<std::size_t>(els[0]));
      const bool in1 = els[1] >= 0 && region.contains(m, static_cast<std::size_t>(els[1]));
      if (in0 == in1) continue;
      any = true;
      const Point2 pa = m.nodes()[static_cast<std::size_t>(key.first)];
      const Point2 pb = m.nodes()[static_cast<std::size_t>(key.second)];
      const double L = dist(pa, pb);
      const cplx ua = U(key.first), ub = U(key.second);
      sum += L / 3.0 * (abs2(ua) + abs2(ub) + (ua * std::conj(ub)).real());
      sum += abs2(ub - ua) / L;
      if (els[1] >= 0) {
        const Point2 t = (pb - pa) / L;
        const Grad g0 = u.gradient(static_cast<std::size_t>(els[0]));
        const Grad g1 = u.gradient(static_cast<std::size_t>(els[1]));
        const cplx jump = (g0[0] - g1[0]) * t.y - (g0[1] - g1[1]) * t.x;
        sum += abs2(jump) * L;
      }
    }
  }
  if (!any) throw DomainError("norm: region selects no elements");
  return std::sqrt(sum);
}

namespace {

double quad_norm(const TriMesh& m, const std::function<cplx(std::size_t, Point2)>& val,
                 const std::function<Grad(std::size_t, Point2)>& grad, const Region& region, NormKind kind) {
  if (kind == NormKind::kBoundary) throw DomainError("quadrature norms support L2, H1 and H1 seminorm only");
  bool any = false;
  double sum = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    if (!region.contains(m, e)) continue;
    any = true;
    const double A = m.area(e);
    for (const QuadPoint& q : kTri7) {
      const Point2 p = bary_point(m, e, q.bary);
      double f = 0.0;
      if (kind != NormKind::kH1Semi) f += abs2(val(e, p));
      if (kind != NormKind::kL2) {
        const Grad g = grad(e, p);
        f += abs2(g[0]) + abs2(g[1]);
      }
      sum += A * q.weight * f;
    }
  }
  if (!any) throw DomainError("norm: region selects no elements");
  return std::sqrt(sum);
}

}  // namespace

double error_norm(const DiscreteField& u, const std::function<cplx(Point2)>& exact,
                  const std::function<Grad(Point2)>& exact_grad, const Region& region, NormKind kind) {
  const TriMesh& m = u.mesh();
  auto val = [&](std::size_t e, Point2 p) {
    const auto& v = m.elements()[e];
    // P1 value from the vertex value plus the constant gradient.
    const Point2 a = m.nodes()[static_cast<std::size_t>(v[0])];
    const Grad gu = u.gradient(e);
    const cplx uh = u.values()(v[0]) + gu[0] * (p.x - a.x) + gu[1] * (p.y - a.y);
    return uh - exact(p);
  };
  auto grad = [&](std::size_t e, Point2 p) {
    const Grad gu = u.gradient(e);
    const Grad ge = exact_grad(p);
    return Grad{gu[0] - ge[0], gu[1] - ge[1]};
  };
  return quad_norm(m, val, grad, region, kind);
}

double exact_norm(const TriMesh& mesh, const std::function<cplx(Point2)>& exact,
                  const std::function<Grad(Point2)>& exact_grad, const Region& region, NormKind kind) {
  return quad_norm(
      mesh, [&](std::size_t, Point2 p) { return exact(p); }, [&](std::size_t, Point2 p) { return exact_grad(p); },
      region, kind);
}

}  // namespace alr
