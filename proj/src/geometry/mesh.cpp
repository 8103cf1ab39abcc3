#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

#include "alr/geometry.hpp"
#include "mesher.hpp"

namespace alr {

namespace {

using detail::CurvePoint;

std::vector<Point2> intersect(const Curve& c, const Curve& d) {
  std::vector<Point2> out;
  using K = Curve::Kind;
  if (c.kind == K::kCircle && d.kind == K::kCircle) {
    const double dd = dist(c.center, d.center);
    if (dd == 0.0 || dd > c.radius + d.radius || dd < std::abs(c.radius - d.radius)) return out;
    const double a = (dd * dd + c.radius * c.radius - d.radius * d.radius) / (2.0 * dd);
    const double h = std::sqrt(std::max(0.0, c.radius * c.radius - a * a));
    const Point2 u = (d.center - c.center) / dd;
    const Point2 m = c.center + a * u;
    const Point2 perp{-u.y, u.x};
    out.push_back(m + h * perp);
    if (h > 0.0) out.push_back(m - h * perp);
    return out;
  }
  if (c.kind == K::kSegment && d.kind == K::kCircle) return intersect(d, c);
  if (c.kind == K::kCircle) {
    // |a + t (b - a) - center|^2 = R^2
    const Point2 v = d.b - d.a, w = d.a - c.center;
    const double A = norm2(v), B = 2.0 * dot(v, w), C = norm2(w) - c.radius * c.radius;
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return out;
    const double sq = std::sqrt(disc);
    for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
      if (t < -1e-9 || t > 1.0 + 1e-9) continue;
      if (std::abs(t) <= 1e-9) out.push_back(d.a);
      else if (std::abs(t - 1.0) <= 1e-9) out.push_back(d.b);
      else out.push_back(d.at(t));
    }
    return out;
  }
  // Segment-segment: proper crossings and T-junctions.
  const Point2 r = c.b - c.a, s = d.b - d.a;
  const double den = cross(r, s);
  if (std::abs(den) < 1e-14 * norm(r) * norm(s)) return out;
  const double t = cross(d.a - c.a, s) / den;
  const double u = cross(d.a - c.a, r) / den;
  const double tol = 1e-9;
  if (t < -tol || t > 1 + tol || u < -tol || u > 1 + tol) return out;
  if (std::abs(t) <= tol) out.push_back(c.a);
  else if (std::abs(t - 1) <= tol) out.push_back(c.b);
  else if (std::abs(u) <= tol) out.push_back(d.a);
  else if (std::abs(u - 1) <= tol) out.push_back(d.b);
  else out.push_back(c.at(t));
  return out;
}

void sort_unique(std::vector<CurvePoint>& pts) {
  std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.param < b.param; });
  std::vector<CurvePoint> out;
  for (const CurvePoint& p : pts)
    if (out.empty() || p.param - out.back().param > 1e-12) out.push_back(p);
  pts = std::move(out);
}

// Required points plus fill-in samples spaced by the local size.
std::vector<CurvePoint> sample_curve(const Curve& c, std::vector<CurvePoint> req,
                                     const std::function<double(Point2)>& size) {
  const bool closed = c.kind == Curve::Kind::kCircle;
  if (!closed) {
    req.push_back({0.0, c.a});
    req.push_back({1.0, c.b});
  }
  sort_unique(req);
  if (closed && req.empty()) req.push_back({0.0, c.at(0.0)});
  if (closed && req.size() > 1 && req.front().param + 2.0 * kPi - req.back().param < 1e-12) req.pop_back();

  const double span = closed ? 2.0 * kPi : 1.0;
  const double unit = closed ? c.radius : c.length();
  std::vector<CurvePoint> out;
  const std::size_t gaps = closed ? req.size() : req.size() - 1;
  for (std::size_t g = 0; g < gaps; ++g) {
    const double t0 = req[g].param;
    const double t1 = g + 1 < req.size() ? req[g + 1].param : req.front().param + span;
    double hmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 32; ++k) hmin = std::min(hmin, size(c.at(t0 + (t1 - t0) * k / 32.0)));
    int n = static_cast<int>(std::ceil((t1 - t0) * unit / hmin));
    if (closed && gaps == 1) n = std::max(n, 12);
    n = std::max(n, 1);
    out.push_back(req[g]);
    for (int k = 1; k < n; ++k) {
      double t = t0 + (t1 - t0) * k / n;
      if (closed && t >= 2.0 * kPi) t -= 2.0 * kPi;
      out.push_back({t, c.at(t)});
    }
  }
  if (!closed) out.push_back(req.back());
  if (closed) sort_unique(out);
  return out;
}

std::vector<RegionTag> tag_elements(const std::vector<Point2>& nodes, const std::vector<std::array<int, 3>>& elems,
                                    const GeometryConfig& cfg) {
  std::vector<RegionTag> tags(elems.size());
  for (std::size_t e = 0; e < elems.size(); ++e) {
    const auto& v = elems[e];
    const Point2 g = (nodes[static_cast<std::size_t>(v[0])] + nodes[static_cast<std::size_t>(v[1])] +
                      nodes[static_cast<std::size_t>(v[2])]) / 3.0;
    tags[e] = region_of(g, cfg);
  }
  return tags;
}

TriMesh run_refiner(std::vector<Curve> curves, std::vector<std::vector<CurvePoint>> pts, std::vector<Point2> seeds,
                    const MeshRecipe& recipe) {
  detail::RefinerInput in;
  in.curves = curves;
  in.curve_points = std::move(pts);
  in.seeds = std::move(seeds);
  in.domain_radius = recipe.cfg.R_out;
  in.size = [&recipe, &curves](Point2 p) { return recipe.size_at(p, curves); };
  detail::RefinerOutput out = detail::delaunay_refine(in);
  auto tags = tag_elements(out.nodes, out.elements, recipe.cfg);
  return TriMesh(std::move(out.nodes), std::move(out.elements), std::move(tags), std::move(curves),
                 std::move(out.curve_edges), recipe);
}

double unwrap_near(double t, double ref) {
  while (t - ref > kPi) t -= 2.0 * kPi;
  while (ref - t > kPi) t += 2.0 * kPi;
  return t;
}

}  // namespace

TriMesh::TriMesh(std::vector<Point2> nodes, std::vector<std::array<int, 3>> elements, std::vector<RegionTag> tags,
                 std::vector<Curve> curves, std::vector<CurveEdge> curve_edges, MeshRecipe recipe)
    : nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      tags_(std::move(tags)),
      curves_(std::move(curves)),
      curve_edges_(std::move(curve_edges)),
      recipe_(std::move(recipe)) {
  if (tags_.size() != elements_.size()) throw GeometryError("mesh: one tag per element required");
  for (const auto& el : elements_)
    for (int v : el)
      if (v < 0 || static_cast<std::size_t>(v) >= nodes_.size()) throw GeometryError("mesh: node index out of range");
  for (std::size_t e = 0; e < elements_.size(); ++e)
    if (!(area(e) > 0.0)) throw GeometryError("mesh: element with non-positive orientation");
  build_locator();
}

double TriMesh::area(std::size_t e) const {
  const auto& v = elements_[e];
  const Point2 a = nodes_[static_cast<std::size_t>(v[0])], b = nodes_[static_cast<std::size_t>(v[1])],
               c = nodes_[static_cast<std::size_t>(v[2])];
  return 0.5 * cross(b - a, c - a);
}

double TriMesh::h(std::size_t e) const {
  const auto& v = elements_[e];
  const Point2 a = nodes_[static_cast<std::size_t>(v[0])], b = nodes_[static_cast<std::size_t>(v[1])],
               c = nodes_[static_cast<std::size_t>(v[2])];
  return std::max({dist(a, b), dist(b, c), dist(c, a)});
}

double TriMesh::min_angle_deg(std::size_t e) const {
  const auto& v = elements_[e];
  double m = 180.0;
  for (int i = 0; i < 3; ++i) {
    const Point2 p = nodes_[static_cast<std::size_t>(v[i])];
    const Point2 q = nodes_[static_cast<std::size_t>(v[(i + 1) % 3])];
    const Point2 r = nodes_[static_cast<std::size_t>(v[(i + 2) % 3])];
    const double ang = std::atan2(std::abs(cross(q - p, r - p)), dot(q - p, r - p));
    m = std::min(m, ang * 180.0 / kPi);
  }
  return m;
}

double TriMesh::min_angle_deg() const {
  double m = 180.0;
  for (std::size_t e = 0; e < elements_.size(); ++e) m = std::min(m, min_angle_deg(e));
  return m;
}

Point2 TriMesh::barycenter(std::size_t e) const {
  const auto& v = elements_[e];
  return (nodes_[static_cast<std::size_t>(v[0])] + nodes_[static_cast<std::size_t>(v[1])] +
          nodes_[static_cast<std::size_t>(v[2])]) / 3.0;
}

double TriMesh::tagged_area(RegionTag tag) const {
  double s = 0.0;
  for (std::size_t e = 0; e < elements_.size(); ++e)
    if (tags_[e] == tag) s += area(e);
  return s;
}

std::optional<int> TriMesh::find_curve(CurveRole role) const {
  for (std::size_t c = 0; c < curves_.size(); ++c)
    if (curves_[c].role == role) return static_cast<int>(c);
  return std::nullopt;
}

std::vector<CurveEdge> TriMesh::edges_on(int curve) const {
  std::vector<CurveEdge> out;
  for (const CurveEdge& e : curve_edges_)
    if (e.curve == curve) out.push_back(e);
  return out;
}

std::vector<int> TriMesh::nodes_on(int curve) const {
  std::vector<int> ids;
  for (const CurveEdge& e : curve_edges_)
    if (e.curve == curve) {
      ids.push_back(e.a);
      ids.push_back(e.b);
    }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const Curve& c = curves_[static_cast<std::size_t>(curve)];
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return c.param_of(nodes_[static_cast<std::size_t>(a)]) < c.param_of(nodes_[static_cast<std::size_t>(b)]);
  });
  return ids;
}

void TriMesh::build_locator() {
  if (elements_.empty()) return;
  double xlo = nodes_[0].x, xhi = xlo, ylo = nodes_[0].y, yhi = ylo;
  for (Point2 p : nodes_) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  double total = 0.0;
  for (std::size_t e = 0; e < elements_.size(); ++e) total += area(e);
  grid_cell_ = std::max(std::sqrt(2.0 * total / static_cast<double>(elements_.size())), 1e-12);
  grid_nx_ = std::clamp(static_cast<int>((xhi - xlo) / grid_cell_) + 1, 1, 4096);
  grid_ny_ = std::clamp(static_cast<int>((yhi - ylo) / grid_cell_) + 1, 1, 4096);
  grid_cell_ = std::max((xhi - xlo) / grid_nx_, (yhi - ylo) / grid_ny_) * (1.0 + 1e-12);
  grid_lo_ = {xlo, ylo};
  const std::size_t ncell = static_cast<std::size_t>(grid_nx_) * static_cast<std::size_t>(grid_ny_);
  std::vector<int> count(ncell + 1, 0);
  auto range = [&](std::size_t e, int& i0, int& i1, int& j0, int& j1) {
    const auto& v = elements_[e];
    double ax = 1e300, bx = -1e300, ay = 1e300, by = -1e300;
    for (int k : v) {
      const Point2 p = nodes_[static_cast<std::size_t>(k)];
      ax = std::min(ax, p.x);
      bx = std::max(bx, p.x);
      ay = std::min(ay, p.y);
      by = std::max(by, p.y);
    }
    i0 = std::clamp(static_cast<int>((ax - xlo) / grid_cell_), 0, grid_nx_ - 1);
    i1 = std::clamp(static_cast<int>((bx - xlo) / grid_cell_), 0, grid_nx_ - 1);
    j0 = std::clamp(static_cast<int>((ay - ylo) / grid_cell_), 0, grid_ny_ - 1);
    j1 = std::clamp(static_cast<int>((by - ylo) / grid_cell_), 0, grid_ny_ - 1);
  };
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    int i0, i1, j0, j1;
    range(e, i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) ++count[static_cast<std::size_t>(j * grid_nx_ + i) + 1];
  }
  for (std::size_t c = 0; c < ncell; ++c) count[c + 1] += count[c];
  grid_start_ = count;
  grid_items_.assign(static_cast<std::size_t>(count[ncell]), 0);
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    int i0, i1, j0, j1;
    range(e, i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        grid_items_[static_cast<std::size_t>(fill[static_cast<std::size_t>(j * grid_nx_ + i)]++)] = static_cast<int>(e);
  }
}

std::optional<TriMesh::Location> TriMesh::locate(Point2 p) const {
  if (elements_.empty() || !is_finite(p)) return std::nullopt;
  auto bary = [&](std::size_t e) {
    const auto& v = elements_[e];
    const Point2 a = nodes_[static_cast<std::size_t>(v[0])], b = nodes_[static_cast<std::size_t>(v[1])],
                 c = nodes_[static_cast<std::size_t>(v[2])];
    const double det = cross(b - a, c - a);
    const double l1 = cross(p - a, c - a) / det;
    const double l2 = cross(b - a, p - a) / det;
    return std::array<double, 3>{1.0 - l1 - l2, l1, l2};
  };
  const int ci = static_cast<int>(std::floor((p.x - grid_lo_.x) / grid_cell_));
  const int cj = static_cast<int>(std::floor((p.y - grid_lo_.y) / grid_cell_));
  if (ci < -1 || cj < -1 || ci > grid_nx_ || cj > grid_ny_) return std::nullopt;
  auto cell_items = [&](int i, int j) -> std::pair<const int*, const int*> {
    if (i < 0 || j < 0 || i >= grid_nx_ || j >= grid_ny_) return {nullptr, nullptr};
    const std::size_t c = static_cast<std::size_t>(j * grid_nx_ + i);
    return {grid_items_.data() + grid_start_[c], grid_items_.data() + grid_start_[c + 1]};
  };
  {
    auto [b, e] = cell_items(ci, cj);
    for (const int* it = b; it != e; ++it) {
      const auto l = bary(static_cast<std::size_t>(*it));
      if (std::min({l[0], l[1], l[2]}) >= -1e-12) return Location{*it, l};
    }
  }
  // Tolerant fallback for points on or just outside the polygonal boundary.
  double best = std::numeric_limits<double>::infinity();
  Location loc;
  for (int j = cj - 1; j <= cj + 1; ++j)
    for (int i = ci - 1; i <= ci + 1; ++i) {
      auto [b, e] = cell_items(i, j);
      for (const int* it = b; it != e; ++it) {
        const auto l = bary(static_cast<std::size_t>(*it));
        const double m = -std::min({l[0], l[1], l[2]});
        if (m < best) {
          best = m;
          loc = Location{*it, l};
        }
      }
    }
  if (loc.element >= 0 && best <= 0.05) return loc;
  return std::nullopt;
}

std::uint64_t TriMesh::hash() const {
  Fnv1a h;
  for (Point2 p : nodes_) {
    h.pod(p.x);
    h.pod(p.y);
  }
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int v : elements_[e]) h.pod(v);
    h.pod(static_cast<std::uint8_t>(tags_[e]));
  }
  return h.value();
}

TriMesh build_mesh(const GeometryConfig& cfg, double h_target, double grading, double layer_size) {
  cfg.validate();
  if (!(h_target > 0.0)) throw GeometryError("mesh: h_target > 0 required");
  if (!(grading >= 1.0)) throw GeometryError("mesh: grading >= 1 required");
  MeshRecipe recipe;
  recipe.cfg = cfg;
  recipe.h_target = h_target;
  recipe.grading = grading;
  if (!(layer_size >= 0.0)) throw GeometryError("mesh: layer_size >= 0 required");
  recipe.layer_size = layer_size;

  std::vector<Curve> curves = geometry_curves(cfg);
  std::vector<std::vector<CurvePoint>> req(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t j = i + 1; j < curves.size(); ++j)
      for (Point2 p : intersect(curves[i], curves[j])) {
        req[i].push_back({curves[i].param_of(p), p});
        req[j].push_back({curves[j].param_of(p), p});
      }
  auto size = [&](Point2 p) { return recipe.size_at(p, curves); };
  std::vector<std::vector<CurvePoint>> pts(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) pts[i] = sample_curve(curves[i], req[i], size);
  return run_refiner(std::move(curves), std::move(pts), {}, recipe);
}

TriMesh refine_near(const TriMesh& mesh, std::span<const CurveRole> roles, int levels) {
  if (levels < 0) throw GeometryError("refine_near: levels >= 0 required");
  if (levels == 0 || roles.empty()) return mesh;
  MeshRecipe recipe = mesh.recipe();
  const auto& curves = mesh.curves();
  std::vector<bool> targeted(curves.size(), false);
  for (std::size_t c = 0; c < curves.size(); ++c)
    targeted[c] = std::find(roles.begin(), roles.end(), curves[c].role) != roles.end();
  for (CurveRole r : roles) recipe.near_levels[static_cast<std::size_t>(r)] += levels;
  for (std::size_t c = 0; c < curves.size(); ++c)
    if (targeted[c] && recipe.scale * recipe.feature_size(curves[c]) < 1e-6 * recipe.cfg.r1)
      throw GeometryError("refine_near: element size below 1e-6 * r1");

  const auto& nodes = mesh.nodes();
  std::vector<bool> on_curve(nodes.size(), false);
  std::vector<std::vector<CurvePoint>> pts(curves.size());
  const int parts = 1 << levels;
  for (const CurveEdge& e : mesh.curve_edges()) {
    const Curve& c = curves[static_cast<std::size_t>(e.curve)];
    const Point2 pa = nodes[static_cast<std::size_t>(e.a)], pb = nodes[static_cast<std::size_t>(e.b)];
    on_curve[static_cast<std::size_t>(e.a)] = on_curve[static_cast<std::size_t>(e.b)] = true;
    auto& list = pts[static_cast<std::size_t>(e.curve)];
    const double ta = c.param_of(pa);
    list.push_back({ta, pa});
    list.push_back({c.param_of(pb), pb});
    if (!targeted[static_cast<std::size_t>(e.curve)]) continue;
    const double tb = c.kind == Curve::Kind::kCircle ? unwrap_near(c.param_of(pb), ta) : c.param_of(pb);
    for (int k = 1; k < parts; ++k) {
      const double t = ta + (tb - ta) * k / parts;
      const Point2 q = c.at(t);
      list.push_back({c.param_of(q), q});
    }
  }
  for (auto& list : pts) sort_unique(list);
  std::vector<Point2> seeds;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!on_curve[i]) seeds.push_back(nodes[i]);
  return run_refiner(curves, std::move(pts), std::move(seeds), recipe);
}

TriMesh refine_uniform(const TriMesh& mesh) {
  std::vector<Point2> nodes = mesh.nodes();
  const auto& curves = mesh.curves();
  std::unordered_map<std::uint64_t, int> mid;
  std::unordered_map<std::uint64_t, int> edge_curve;
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (const CurveEdge& e : mesh.curve_edges()) edge_curve[key(e.a, e.b)] = e.curve;
  auto midpoint = [&](int a, int b) {
    const auto k = key(a, b);
    if (auto it = mid.find(k); it != mid.end()) return it->second;
    Point2 m = 0.5 * (nodes[static_cast<std::size_t>(a)] + nodes[static_cast<std::size_t>(b)]);
    if (auto it = edge_curve.find(k); it != edge_curve.end()) {
      const Curve& c = curves[static_cast<std::size_t>(it->second)];
      if (c.kind == Curve::Kind::kCircle) m = c.center + (c.radius / dist(m, c.center)) * (m - c.center);
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(m);
    mid.emplace(k, id);
    return id;
  };
  std::vector<std::array<int, 3>> elems;
  std::vector<RegionTag> tags;
  elems.reserve(4 * mesh.num_elements());
  tags.reserve(4 * mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto [a, b, c] = mesh.elements()[e];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    for (const auto& child : {std::array{a, ab, ca}, std::array{ab, b, bc}, std::array{ca, bc, c}, std::array{ab, bc, ca}}) {
      elems.push_back(child);
      tags.push_back(mesh.tags()[e]);
    }
  }
  std::vector<CurveEdge> cedges;
  for (const CurveEdge& e : mesh.curve_edges()) {
    const int m = mid.at(key(e.a, e.b));
    cedges.push_back({e.a, m, e.curve});
    cedges.push_back({m, e.b, e.curve});
  }
  MeshRecipe recipe = mesh.recipe();
  recipe.scale *= 0.5;
  return TriMesh(std::move(nodes), std::move(elems), std::move(tags), curves, std::move(cedges), recipe);
}

void write_vtk(const TriMesh& mesh, const std::string& path, std::span<const PointData> point_data,
               std::span<const PointData> cell_data) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path + " for writing");
  std::fprintf(f, "# vtk DataFile Version 3.0\nalrcloak mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
  std::fprintf(f, "POINTS %zu double\n", mesh.num_nodes());
  for (Point2 p : mesh.nodes()) std::fprintf(f, "%.17g %.17g 0\n", p.x, p.y);
  std::fprintf(f, "CELLS %zu %zu\n", mesh.num_elements(), 4 * mesh.num_elements());
  for (const auto& el : mesh.elements()) std::fprintf(f, "3 %d %d %d\n", el[0], el[1], el[2]);
  std::fprintf(f, "CELL_TYPES %zu\n", mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) std::fprintf(f, "5\n");
  std::fprintf(f, "CELL_DATA %zu\nSCALARS region_tag int 1\nLOOKUP_TABLE default\n", mesh.num_elements());
  for (RegionTag t : mesh.tags()) std::fprintf(f, "%d\n", static_cast<int>(t));
  for (const PointData& d : cell_data) {
    if (d.values.size() != mesh.num_elements()) throw Error("vtk: cell data size mismatch for " + d.name);
    std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", d.name.c_str());
    for (double v : d.values) std::fprintf(f, "%.17g\n", v);
  }
  if (!point_data.empty()) std::fprintf(f, "POINT_DATA %zu\n", mesh.num_nodes());
  for (const PointData& d : point_data) {
    if (d.values.size() != mesh.num_nodes()) throw Error("vtk: point data size mismatch for " + d.name);
    std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", d.name.c_str());
    for (double v : d.values) std::fprintf(f, "%.17g\n", v);
  }
  if (std::fclose(f) != 0) throw Error("error writing " + path);
}

}  // namespace alr
