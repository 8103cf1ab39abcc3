#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "alr/common.hpp"

namespace alr::quad {

// Degree-5 rule on the reference triangle: barycentric points and weights
// summing to 1.
struct TriPoint {
  std::array<double, 3> bary;
  double weight;
};
inline constexpr double kA1 = 0.059715871789770, kB1 = 0.470142064105115;
inline constexpr double kA2 = 0.797426985353087, kB2 = 0.101286507323456;
inline constexpr double kW1 = 0.132394152788506, kW2 = 0.125939180544827;
inline constexpr std::array<TriPoint, 7> kTri7 = {{
    {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225},
    {{kA1, kB1, kB1}, kW1},
    {{kB1, kA1, kB1}, kW1},
    {{kB1, kB1, kA1}, kW1},
    {{kA2, kB2, kB2}, kW2},
    {{kB2, kA2, kB2}, kW2},
    {{kB2, kB2, kA2}, kW2},
}};

// Edge-midpoint rule, exact for quadratics.
inline constexpr std::array<TriPoint, 3> kTri3 = {{
    {{0.5, 0.5, 0.0}, 1.0 / 3},
    {{0.0, 0.5, 0.5}, 1.0 / 3},
    {{0.5, 0.0, 0.5}, 1.0 / 3},
}};

struct LinePoint {
  double t;  // in [0, 1]
  double weight;
};

// Gauss-Legendre on [0, 1] by Newton iteration on P_n.
inline std::vector<LinePoint> gauss_legendre(int n) {
  std::vector<LinePoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    pts[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)};
  }
  return pts;
}

}  // namespace alr::quad
