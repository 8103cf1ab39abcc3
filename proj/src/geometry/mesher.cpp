#include "mesher.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <unordered_set>

namespace alr::detail {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

double orient(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

// p strictly left of a->b, with a relative margin so that nearly collinear
// configurations never produce flat triangles.
bool strictly_left(Point2 a, Point2 b, Point2 p) {
  return orient(a, b, p) > 1e-13 * dist(a, b) * (dist(a, p) + dist(b, p));
}

Point2 circumcenter(Point2 a, Point2 b, Point2 c) {
  const Point2 ba = b - a, ca = c - a;
  const double d = 2.0 * cross(ba, ca);
  const double nb = norm2(ba), nc = norm2(ca);
  return {a.x + (ca.y * nb - ba.y * nc) / d, a.y + (ba.x * nc - ca.x * nb) / d};
}

class Refiner {
 public:
  explicit Refiner(const RefinerInput& in) : in_(in), scale_(in.domain_radius) {}
  RefinerOutput run();

 private:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};
    bool alive = true;
  };
  struct Seg {
    int a = 0, b = 0, curve = 0;
    double ta = 0.0, tb = 0.0;
    bool alive = true;
  };

  static bool is_super(int v) { return v < 3; }
  const Tri& T(int t) const { return tris_[static_cast<std::size_t>(t)]; }
  Tri& T(int t) { return tris_[static_cast<std::size_t>(t)]; }
  bool has_super(int t) const { return is_super(T(t).v[0]) || is_super(T(t).v[1]) || is_super(T(t).v[2]); }
  Point2 P(int v) const { return pts_[static_cast<std::size_t>(v)]; }

  bool in_circle(int t, Point2 p) const;
  int locate(Point2 p, int hint, int* blocking_seg) const;
  bool collect_cavity(Point2 p, int t0, std::vector<int>& cav) const;
  int existing_vertex_near(Point2 p, int t) const;
  int insert(Point2 p, const std::vector<int>& cav);
  int insert_point(Point2 p, int hint);
  int alloc_tri();
  std::vector<int> edge_tris(int a, int b) const;
  int seg_of(int a, int b) const;
  void add_seg(int a, int b, int curve, double ta, double tb);
  bool seg_needs_split(int s) const;
  void split_seg(int s);
  bool is_bad(int t) const;
  void refine_triangle(int t);
  void push_tri(int t) { tri_queue_.push_back({t, T(t).v}); }
  void check_budget() const;

  const RefinerInput& in_;
  double scale_;
  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> free_tris_;
  std::vector<int> vert_tri_;
  std::vector<Seg> segs_;
  std::unordered_map<std::uint64_t, int> seg_by_edge_;
  std::deque<int> seg_queue_;
  std::deque<std::pair<int, std::array<int, 3>>> tri_queue_;
  int last_tri_ = 0;
};

bool Refiner::in_circle(int t, Point2 p) const {
  const Tri& tr = T(t);
  const long double adx = P(tr.v[0]).x - p.x, ady = P(tr.v[0]).y - p.y;
  const long double bdx = P(tr.v[1]).x - p.x, bdy = P(tr.v[1]).y - p.y;
  const long double cdx = P(tr.v[2]).x - p.x, cdy = P(tr.v[2]).y - p.y;
  const long double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
                          (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                          (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  return det > 0.0L;
}

int Refiner::locate(Point2 p, int hint, int* blocking_seg) const {
  int t = hint;
  if (t < 0 || !T(t).alive) t = last_tri_;
  if (!T(t).alive) {
    for (std::size_t i = 0; i < tris_.size(); ++i)
      if (tris_[i].alive) {
        t = static_cast<int>(i);
        break;
      }
  }
  int rot = 0;
  const std::size_t max_steps = 4 * tris_.size() + 64;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Tri& tr = T(t);
    bool moved = false;
    for (int k = 0; k < 3; ++k) {
      const int i = (k + rot) % 3;
      const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
      if (orient(P(a), P(b), p) < 0.0) {
        if (blocking_seg) {
          const int s = seg_of(a, b);
          if (s >= 0) {
            *blocking_seg = s;
            return t;
          }
        }
        if (tr.nb[i] < 0) throw GeometryError("mesher: point outside the bounding triangle");
        t = tr.nb[i];
        moved = true;
        break;
      }
    }
    if (!moved) return t;
    rot = (rot + 1) % 3;
  }
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const Tri& tr = tris_[i];
    if (!tr.alive) continue;
    if (orient(P(tr.v[0]), P(tr.v[1]), p) >= 0 && orient(P(tr.v[1]), P(tr.v[2]), p) >= 0 &&
        orient(P(tr.v[2]), P(tr.v[0]), p) >= 0)
      return static_cast<int>(i);
  }
  throw GeometryError("mesher: point location failed");
}

// Bowyer-Watson cavity of p, shrunk if needed so that it is star-shaped
// from p and swallows no vertex.
bool Refiner::collect_cavity(Point2 p, int t0, std::vector<int>& cav) const {
  std::vector<int> core = {t0};
  for (int i = 0; i < 3; ++i) {
    const Point2 a = P(T(t0).v[(i + 1) % 3]), b = P(T(t0).v[(i + 2) % 3]);
    if (!strictly_left(a, b, p) && T(t0).nb[i] >= 0) core.push_back(T(t0).nb[i]);
  }
  std::unordered_set<int> in(core.begin(), core.end());
  std::vector<int> stack(core.begin(), core.end());
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    for (int n : T(t).nb)
      if (n >= 0 && !in.count(n) && in_circle(n, p)) {
        in.insert(n);
        stack.push_back(n);
      }
  }
  auto is_core = [&](int t) { return std::find(core.begin(), core.end(), t) != core.end(); };

  for (int iter = 0; iter < 256; ++iter) {
    std::vector<int> drop;
    std::unordered_set<int> on_boundary;
    for (int t : in) {
      const Tri& tr = T(t);
      for (int i = 0; i < 3; ++i) {
        if (tr.nb[i] >= 0 && in.count(tr.nb[i])) continue;
        const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
        on_boundary.insert(a);
        on_boundary.insert(b);
        if (!strictly_left(P(a), P(b), p)) {
          if (is_core(t)) return false;
          drop.push_back(t);
        }
      }
    }
    if (drop.empty()) {
      for (int t : in)
        for (int v : T(t).v)
          if (!on_boundary.count(v))
            for (int u : in) {
              const auto& vv = T(u).v;
              if (!is_core(u) && std::find(vv.begin(), vv.end(), v) != vv.end()) drop.push_back(u);
            }
      if (drop.empty()) {
        bool swallowed = false;
        for (int t : in)
          for (int v : T(t).v) swallowed = swallowed || !on_boundary.count(v);
        if (swallowed) return false;
        cav.assign(in.begin(), in.end());
        std::sort(cav.begin(), cav.end());
        return true;
      }
    }
    for (int t : drop) in.erase(t);
    std::unordered_set<int> kept(core.begin(), core.end());
    std::vector<int> st(core.begin(), core.end());
    while (!st.empty()) {
      const int t = st.back();
      st.pop_back();
      for (int n : T(t).nb)
        if (n >= 0 && in.count(n) && !kept.count(n)) {
          kept.insert(n);
          st.push_back(n);
        }
    }
    in = std::move(kept);
  }
  return false;
}

int Refiner::existing_vertex_near(Point2 p, int t) const {
  const double tol = 1e-12 * scale_;
  for (int v : T(t).v)
    if (dist(P(v), p) <= tol) return v;
  for (int n : T(t).nb) {
    if (n < 0) continue;
    for (int v : T(n).v)
      if (dist(P(v), p) <= tol) return v;
  }
  return -1;
}

int Refiner::alloc_tri() {
  if (!free_tris_.empty()) {
    const int t = free_tris_.back();
    free_tris_.pop_back();
    T(t) = Tri{};
    return t;
  }
  tris_.emplace_back();
  return static_cast<int>(tris_.size()) - 1;
}

int Refiner::insert(Point2 p, const std::vector<int>& cav) {
  const int v = static_cast<int>(pts_.size());
  pts_.push_back(p);
  vert_tri_.push_back(-1);

  struct BEdge {
    int a, b, outer;
  };
  std::vector<BEdge> boundary;
  const std::unordered_set<int> in(cav.begin(), cav.end());
  for (int t : cav) {
    const Tri& tr = T(t);
    for (int i = 0; i < 3; ++i) {
      const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
      if (tr.nb[i] >= 0 && in.count(tr.nb[i])) {
        const int s = seg_of(a, b);
        if (s >= 0) seg_queue_.push_back(s);
      } else {
        boundary.push_back({a, b, tr.nb[i]});
      }
    }
  }
  for (int t : cav) {
    T(t).alive = false;
    free_tris_.push_back(t);
  }

  std::vector<std::pair<int, int>> first_of, second_of;
  std::vector<int> created;
  for (const BEdge& e : boundary) {
    const int nt = alloc_tri();
    T(nt).v = {e.a, e.b, v};
    T(nt).nb = {-1, -1, e.outer};
    if (e.outer >= 0) {
      Tri& o = T(e.outer);
      for (int j = 0; j < 3; ++j)
        if (o.v[j] != e.a && o.v[j] != e.b) o.nb[j] = nt;
    }
    first_of.push_back({e.a, nt});
    second_of.push_back({e.b, nt});
    created.push_back(nt);
  }
  auto find = [](const std::vector<std::pair<int, int>>& m, int key) {
    for (const auto& [k, t] : m)
      if (k == key) return t;
    throw GeometryError("mesher: open cavity boundary");
  };
  for (int nt : created) {
    Tri& tr = T(nt);
    tr.nb[0] = find(first_of, tr.v[1]);   // across (b, v)
    tr.nb[1] = find(second_of, tr.v[0]);  // across (v, a)
    vert_tri_[static_cast<std::size_t>(tr.v[0])] = nt;
    vert_tri_[static_cast<std::size_t>(tr.v[1])] = nt;
    vert_tri_[static_cast<std::size_t>(v)] = nt;
    push_tri(nt);
    const int s = seg_of(tr.v[0], tr.v[1]);
    if (s >= 0) seg_queue_.push_back(s);
  }
  last_tri_ = created.front();
  return v;
}

int Refiner::insert_point(Point2 p, int hint) {
  const int t = locate(p, hint, nullptr);
  const int existing = existing_vertex_near(p, t);
  if (existing >= 0) return existing;
  std::vector<int> cav;
  if (!collect_cavity(p, t, cav)) throw GeometryError("mesher: degenerate insertion cavity");
  return insert(p, cav);
}

std::vector<int> Refiner::edge_tris(int a, int b) const {
  std::vector<int> out;
  const int t0 = vert_tri_[static_cast<std::size_t>(a)];
  if (t0 < 0) return out;
  auto index_of = [&](int t, int v) {
    for (int i = 0; i < 3; ++i)
      if (T(t).v[i] == v) return i;
    return -1;
  };
  // Rotate around a in both directions (only fans of super vertices are open).
  for (int dir = 1; dir <= 2; ++dir) {
    int t = t0;
    do {
      const int i = index_of(t, a);
      if (index_of(t, b) >= 0 && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
      t = T(t).nb[(i + dir) % 3];
    } while (t >= 0 && t != t0);
    if (t == t0) break;
  }
  return out;
}

int Refiner::seg_of(int a, int b) const {
  const auto it = seg_by_edge_.find(edge_key(a, b));
  return it == seg_by_edge_.end() ? -1 : it->second;
}

void Refiner::add_seg(int a, int b, int curve, double ta, double tb) {
  const int id = static_cast<int>(segs_.size());
  segs_.push_back({a, b, curve, ta, tb, true});
  seg_by_edge_[edge_key(a, b)] = id;
  seg_queue_.push_back(id);
}

bool Refiner::seg_needs_split(int s) const {
  const Seg& sg = segs_[static_cast<std::size_t>(s)];
  const Point2 pa = P(sg.a), pb = P(sg.b);
  const Point2 mid = in_.curves[static_cast<std::size_t>(sg.curve)].at(0.5 * (sg.ta + sg.tb));
  if (dist(pa, pb) > 1.3 * in_.size(mid)) return true;
  const std::vector<int> ts = edge_tris(sg.a, sg.b);
  if (ts.empty()) return true;  // missing from the triangulation
  for (int t : ts)
    for (int q : T(t).v) {
      if (q == sg.a || q == sg.b || is_super(q)) continue;
      if (dot(pa - P(q), pb - P(q)) < 0.0) return true;
    }
  return false;
}

void Refiner::check_budget() const {
  if (pts_.size() > in_.max_vertices) throw GeometryError("mesher: vertex budget exceeded");
}

void Refiner::split_seg(int s) {
  const Seg sg = segs_[static_cast<std::size_t>(s)];
  if (dist(P(sg.a), P(sg.b)) < 1e-9 * scale_) throw GeometryError("mesher: subsegment collapsed (near-tangent curves?)");
  const double tm = 0.5 * (sg.ta + sg.tb);
  const Point2 m = in_.curves[static_cast<std::size_t>(sg.curve)].at(tm);
  const int v = insert_point(m, vert_tri_[static_cast<std::size_t>(sg.a)]);
  if (v == sg.a || v == sg.b) throw GeometryError("mesher: subsegment split produced a duplicate vertex");
  segs_[static_cast<std::size_t>(s)].alive = false;
  seg_by_edge_.erase(edge_key(sg.a, sg.b));
  add_seg(sg.a, v, sg.curve, sg.ta, tm);
  add_seg(v, sg.b, sg.curve, tm, sg.tb);
  check_budget();
}

bool Refiner::is_bad(int t) const {
  if (has_super(t)) return false;
  const Point2 a = P(T(t).v[0]), b = P(T(t).v[1]), c = P(T(t).v[2]);
  const double la = dist(b, c), lb = dist(c, a), lc = dist(a, b);
  const double area2 = orient(a, b, c);
  if (area2 <= 0.0) return true;
  const double R = la * lb * lc / (2.0 * area2);
  const double lmin = std::min({la, lb, lc});
  if (R > std::sqrt(2.0) * lmin * (1.0 + 1e-9)) return true;
  const Point2 g = (a + b + c) / 3.0;
  return R * std::sqrt(3.0) > 1.3 * in_.size(g);
}

void Refiner::refine_triangle(int t) {
  const Point2 c = circumcenter(P(T(t).v[0]), P(T(t).v[1]), P(T(t).v[2]));
  int blocking = -1;
  const int loc = locate(c, t, &blocking);
  if (blocking >= 0) {
    split_seg(blocking);
    if (T(t).alive) push_tri(t);
    return;
  }
  std::vector<int> cav;
  if (existing_vertex_near(c, loc) >= 0 || !collect_cavity(c, loc, cav)) return;
  std::vector<int> encroached;
  for (int ct : cav) {
    const Tri& tr = T(ct);
    for (int i = 0; i < 3; ++i) {
      const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
      const int s = seg_of(a, b);
      if (s >= 0 && dot(P(a) - c, P(b) - c) < 0.0 &&
          std::find(encroached.begin(), encroached.end(), s) == encroached.end())
        encroached.push_back(s);
    }
  }
  if (!encroached.empty()) {
    for (int s : encroached)
      if (segs_[static_cast<std::size_t>(s)].alive) split_seg(s);
    if (T(t).alive) push_tri(t);
    return;
  }
  insert(c, cav);
  check_budget();
}

RefinerOutput Refiner::run() {
  // Bounding triangle well outside the domain.
  const double L = 50.0 * scale_;
  pts_ = {{-L, -L}, {L, -L}, {0.0, L}};
  vert_tri_ = {0, 0, 0};
  tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, true});

  for (std::size_t c = 0; c < in_.curves.size(); ++c) {
    const auto& cps = in_.curve_points[c];
    std::vector<int> ids;
    for (const CurvePoint& cp : cps) ids.push_back(insert_point(cp.p, last_tri_));
    const bool closed = in_.curves[c].kind == Curve::Kind::kCircle;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
      add_seg(ids[i], ids[i + 1], static_cast<int>(c), cps[i].param, cps[i + 1].param);
    if (closed) add_seg(ids.back(), ids.front(), static_cast<int>(c), cps.back().param, cps.front().param + 2.0 * kPi);
  }
  for (Point2 s : in_.seeds) insert_point(s, last_tri_);
  for (std::size_t t = 0; t < tris_.size(); ++t)
    if (tris_[t].alive) push_tri(static_cast<int>(t));

  while (true) {
    if (!seg_queue_.empty()) {
      const int s = seg_queue_.front();
      seg_queue_.pop_front();
      if (segs_[static_cast<std::size_t>(s)].alive && seg_needs_split(s)) split_seg(s);
      continue;
    }
    if (!tri_queue_.empty()) {
      const auto [t, v] = tri_queue_.front();
      tri_queue_.pop_front();
      if (!T(t).alive || T(t).v != v || !is_bad(t)) continue;
      refine_triangle(t);
      continue;
    }
    break;
  }

  RefinerOutput out;
  out.nodes.assign(pts_.begin() + 3, pts_.end());
  for (const Tri& tr : tris_) {
    if (!tr.alive || is_super(tr.v[0]) || is_super(tr.v[1]) || is_super(tr.v[2])) continue;
    out.elements.push_back({tr.v[0] - 3, tr.v[1] - 3, tr.v[2] - 3});
  }
  for (const Seg& s : segs_) {
    if (!s.alive) continue;
    if (edge_tris(s.a, s.b).empty()) throw GeometryError("mesher: curve edge missing from final mesh");
    out.curve_edges.push_back({s.a - 3, s.b - 3, s.curve});
  }
  return out;
}

}  // namespace

RefinerOutput delaunay_refine(const RefinerInput& in) {
  Refiner r(in);
  return r.run();
}

}  // namespace alr::detail
