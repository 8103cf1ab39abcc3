#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alr/common.hpp"

namespace alr {

enum class RegionTag : std::uint8_t {
  kExterior = 0,
  kShell,        // B_r3 \ B_r2
  kAnnulus,      // B_r2 \ B_r1, the plasmonic layer
  kCore,         // B_r1
  kInclusionA,
  kInclusionB,
  kSlab,
  kSourceSupport,
};
inline constexpr std::size_t kRegionCount = 8;

std::string_view to_string(RegionTag tag);
std::optional<RegionTag> region_from_string(std::string_view name);

class RegionSet {
 public:
  constexpr RegionSet() = default;
  RegionSet(std::initializer_list<RegionTag> tags) {
    for (RegionTag t : tags) insert(t);
  }
  static RegionSet all() {
    RegionSet s;
    s.bits_.set();
    return s;
  }
  void insert(RegionTag t) { bits_.set(static_cast<std::size_t>(t)); }
  void erase(RegionTag t) { bits_.reset(static_cast<std::size_t>(t)); }
  bool contains(RegionTag t) const { return bits_.test(static_cast<std::size_t>(t)); }
  bool empty() const { return bits_.none(); }
  RegionSet operator|(const RegionSet& o) const {
    RegionSet s;
    s.bits_ = bits_ | o.bits_;
    return s;
  }
  bool operator==(const RegionSet&) const = default;
  std::string to_string() const;

 private:
  std::bitset<kRegionCount> bits_;
};

// A disk B(center, radius) intersected with the host region; points of the
// intersection are tagged `tag`.
struct Inclusion {
  Point2 center;
  double radius = 0.0;
  RegionTag tag = RegionTag::kInclusionA;
  RegionTag host = RegionTag::kCore;
};

// Slab H_t = {|x| < half_width} x [t, inf). The rectangle between `bottom`
// and `top` is the object zone; the rest of H_bottom inside B_r2 belongs to
// the shell.
struct SlabGeometry {
  double half_width = 0.0;
  double bottom = 0.0;
  double top = 0.0;
};

struct SourceDisk {
  Point2 center;
  double radius = 0.0;
};

struct GeometryConfig {
  double r0 = 0.0;
  double r1 = 1.0;
  double r2 = 2.0;
  double R0 = 6.0;
  double R_out = 7.0;
  Point2 x1{1.0, 0.0};
  Point2 x2{2.0, 0.0};
  Point2 x3{4.0, 0.0};
  std::vector<Inclusion> inclusions;
  std::optional<SlabGeometry> slab;
  std::vector<SourceDisk> source_disks;
  // Centred circles resolved by mesh edges (source ring, observation radius).
  std::vector<double> extra_circles;

  double r3() const { return r2 * r2 / r1; }
  double eps_geo() const { return 1e-12 * r2; }

  // Throws GeometryError naming the violated rule.
  void validate() const;

  // Places the two cloaked objects B(x1, r0) in the core and B(x2, r0) in
  // the shell. No-op for r0 = 0.
  void add_cloak_objects();
};

// Inner region wins on interfaces (within eps_geo).
RegionTag region_of(Point2 p, const GeometryConfig& cfg);

enum class CurveRole : std::uint8_t {
  kCoreInterface = 0,  // |x| = r1
  kAnnulusInterface,   // |x| = r2
  kShellInterface,     // |x| = r3
  kOuter,              // |x| = R_out
  kInclusion,
  kExtra,
  kSlab,
  kSource,
};
inline constexpr std::size_t kCurveRoleCount = 8;
std::string_view to_string(CurveRole role);

struct Curve {
  enum class Kind : std::uint8_t { kCircle, kSegment };
  Kind kind = Kind::kCircle;
  CurveRole role = CurveRole::kExtra;
  Point2 center;
  double radius = 0.0;
  Point2 a, b;

  static Curve circle(Point2 c, double r, CurveRole role) { return {Kind::kCircle, role, c, r, {}, {}}; }
  static Curve segment(Point2 a, Point2 b, CurveRole role) { return {Kind::kSegment, role, {}, 0.0, a, b}; }

  // Circle: polar angle about the centre. Segment: t in [0, 1].
  Point2 at(double param) const;
  double param_of(Point2 p) const;
  double distance(Point2 p) const;
  double length() const;
};

std::vector<Curve> geometry_curves(const GeometryConfig& cfg);

struct CurveEdge {
  int a = 0;
  int b = 0;
  int curve = 0;
};

// Everything needed to regenerate a mesh deterministically.
struct MeshRecipe {
  GeometryConfig cfg;
  double h_target = 0.25;
  double grading = 1.0;
  // Cap on the element size inside B_r2 \ B_r1 (0: none), relaxed with the
  // same slope as the curve grading outside the layer.
  double layer_size = 0.0;
  double scale = 1.0;  // halved by each uniform refinement
  std::array<int, kCurveRoleCount> near_levels{};

  double feature_size(const Curve& c) const;
  double size_at(Point2 p, std::span<const Curve> curves) const;
};

class TriMesh {
 public:
  TriMesh(std::vector<Point2> nodes, std::vector<std::array<int, 3>> elements,
          std::vector<RegionTag> tags, std::vector<Curve> curves,
          std::vector<CurveEdge> curve_edges, MeshRecipe recipe);

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  const std::vector<RegionTag>& tags() const { return tags_; }
  const std::vector<Curve>& curves() const { return curves_; }
  const std::vector<CurveEdge>& curve_edges() const { return curve_edges_; }
  const MeshRecipe& recipe() const { return recipe_; }
  const GeometryConfig& config() const { return recipe_.cfg; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size(); }

  double area(std::size_t e) const;
  double h(std::size_t e) const;  // longest edge
  double min_angle_deg(std::size_t e) const;
  double min_angle_deg() const;
  Point2 barycenter(std::size_t e) const;
  double tagged_area(RegionTag tag) const;

  // Index of the first curve with the given role, if any.
  std::optional<int> find_curve(CurveRole role) const;
  std::vector<CurveEdge> edges_on(int curve) const;
  // Nodes on a curve, ordered by curve parameter.
  std::vector<int> nodes_on(int curve) const;

  struct Location {
    int element = -1;
    std::array<double, 3> bary{};
  };
  // Points up to a few percent of an element diameter outside the polygonal
  // boundary are clamped onto the nearest element.
  std::optional<Location> locate(Point2 p) const;

  std::uint64_t hash() const;

 private:
  void build_locator();

  std::vector<Point2> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<RegionTag> tags_;
  std::vector<Curve> curves_;
  std::vector<CurveEdge> curve_edges_;
  MeshRecipe recipe_;

  Point2 grid_lo_;
  double grid_cell_ = 1.0;
  int grid_nx_ = 0;
  int grid_ny_ = 0;
  std::vector<int> grid_start_;
  std::vector<int> grid_items_;
};

TriMesh build_mesh(const GeometryConfig& cfg, double h_target, double grading, double layer_size = 0.0);

// Regenerates the mesh with the feature size on the named curve roles
// divided by 2^levels; every old edge on those curves is split `levels`
// times and all previous vertices are kept.
TriMesh refine_near(const TriMesh& mesh, std::span<const CurveRole> roles, int levels);

// Red refinement: every element split into four, midpoints of curve edges
// projected onto their curve. Produces nested meshes for convergence runs.
TriMesh refine_uniform(const TriMesh& mesh);

struct PointData {
  std::string name;
  std::vector<double> values;
};
void write_vtk(const TriMesh& mesh, const std::string& path,
               std::span<const PointData> point_data = {},
               std::span<const PointData> cell_data = {});

}  // namespace alr
