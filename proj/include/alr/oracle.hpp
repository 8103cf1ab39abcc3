#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "alr/field.hpp"
#include "alr/geometry.hpp"

namespace alr {

enum class BesselKind : std::uint8_t { kJ, kY, kH1 };

// Real argument, n >= 0. Y and H1 reject x <= 0; J rejects x < 0.
cplx bessel(BesselKind kind, int n, double x);
// d/dx of bessel(kind, n, x).
cplx bessel_derivative(BesselKind kind, int n, double x);

// Complex argument by power series; restricted to |z| <= 25 where the
// series keep about 1e-9 relative accuracy (better for small |z|).
cplx bessel_j(int n, cplx z);
cplx bessel_y(int n, cplx z);
cplx bessel_j_derivative(int n, cplx z);
cplx bessel_y_derivative(int n, cplx z);

// Layer r_in < r < r_out with coefficient a*I, sigma(r) = sigma (constant) or
// sigma * (kelvin_radius / r)^4 when kelvin_radius > 0. Negative layers carry
// s = -1 - i delta and s_0 = -1.
struct RadialLayer {
  double r_in = 0.0;
  double r_out = 1.0;
  double a = 1.0;
  double sigma = 1.0;
  double kelvin_radius = 0.0;
  bool negative = false;
};

// Layers of the cloak layout with r0 = 0: core, plasmonic annulus and, for
// k > 0, the matching sigma profile. Positive free space beyond r2.
std::vector<RadialLayer> cloak_layers(const GeometryConfig& cfg, bool frequency_layout);

struct SourceRing {
  double radius = 5.0;
  double amplitude = 1.0;
};

// Mode n of the response to f = amplitude * delta(r - radius) * e^{i n theta}:
// u = u_n(r) e^{i n theta}, where on interval j,
//   u_n(r) = c_j0 * b_j0(r) + c_j1 * b_j1(r).
// Intervals are the layers, then free space up to the ring, then the
// exterior beyond the ring (only the decaying / outgoing function).
class ModeSolution {
 public:
  struct Interval {
    RadialLayer layer;
    bool regular_only = false;   // innermost: only the regular function
    bool outgoing_only = false;  // beyond the ring
  };

  ModeSolution(int n, double k, double delta, std::vector<Interval> intervals,
               std::vector<std::array<cplx, 2>> amplitudes, double condition_number);

  int n() const { return n_; }
  cplx value(double r) const;
  cplx derivative(double r) const;
  // s * a * du/dr, continuous across every interface.
  cplx flux(double r) const;

  const std::vector<Interval>& intervals() const { return intervals_; }
  const std::vector<std::array<cplx, 2>>& amplitudes() const { return amplitudes_; }
  cplx exterior_amplitude() const { return amplitudes_.back()[0]; }
  double condition_number() const { return condition_; }

  // Largest relative jump of u and of the flux over internal interfaces
  // (the source ring excluded).
  double interface_residual() const;

  // Basis function b (0 or 1) on interval j and its r-derivative.
  cplx basis(std::size_t j, int b, double r) const;
  cplx basis_derivative(std::size_t j, int b, double r) const;

 private:
  std::size_t interval_of(double r) const;
  cplx s_of(std::size_t j) const;

  int n_;
  double k_;
  double delta_;
  std::vector<Interval> intervals_;
  std::vector<std::array<cplx, 2>> amplitudes_;
  double condition_;
};

// One global (2 x interfaces) system per mode. Throws NumericalError carrying
// the mode index when the system is singular to working precision.
ModeSolution radial_layered_solve(const std::vector<RadialLayer>& layers, int n, double k, double delta,
                                  const SourceRing& ring);

// Field generated by f = amplitude * cos(n theta + phase) * delta(r - rho_s).
struct RingMode {
  int n = 2;
  double amplitude = 1.0;
  double phase = 0.0;
};

class OracleSolution {
 public:
  OracleSolution(const std::vector<RadialLayer>& layers, const std::vector<RingMode>& modes, double k, double delta,
                 double ring_radius);

  cplx value(Point2 p) const;
  std::array<cplx, 2> gradient(Point2 p) const;
  const std::vector<ModeSolution>& modes() const { return solutions_; }

  // Per-mode amplitude table: n, interval, r_in, r_out, re/im of both
  // amplitudes, condition number.
  void write_csv(const std::string& path) const;

 private:
  std::vector<RingMode> modes_;
  std::vector<ModeSolution> solutions_;
};

DiscreteField oracle_field(const std::vector<RadialLayer>& layers, const std::vector<RingMode>& modes, double k,
                           double delta, double ring_radius, std::shared_ptr<const TriMesh> mesh);

}  // namespace alr
