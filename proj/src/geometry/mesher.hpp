#pragma once

#include <functional>
#include <vector>

#include "alr/geometry.hpp"

namespace alr::detail {

struct CurvePoint {
  double param = 0.0;
  Point2 p;
};

struct RefinerInput {
  std::vector<Curve> curves;
  // Initial vertices of each curve sorted by parameter. Circles are closed
  // loops; segments run from param 0 to param 1.
  std::vector<std::vector<CurvePoint>> curve_points;
  std::vector<Point2> seeds;
  std::function<double(Point2)> size;
  double domain_radius = 1.0;
  std::size_t max_vertices = 4'000'000;
};

struct RefinerOutput {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> elements;
  std::vector<CurveEdge> curve_edges;
};

// Conforming Delaunay refinement (Bowyer-Watson insertion, Ruppert-style
// encroachment handling) with a radius-edge bound of sqrt(2), i.e. minimum
// angles of about 20.7 degrees, and a size bound from `size`.
RefinerOutput delaunay_refine(const RefinerInput& in);

}  // namespace alr::detail
