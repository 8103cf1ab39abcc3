#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "alr/oracle.hpp"

namespace alr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

cplx layer_s(const RadialLayer& L, double delta) { return L.negative ? cplx(-1.0, -delta) : cplx(1.0, 0.0); }

// Wavenumber of the layer, or of its Kelvin variable when kelvin_radius > 0.
cplx layer_kappa(const RadialLayer& L, double k, double delta) {
  const double s0 = L.negative ? -1.0 : 1.0;
  const cplx k2 = k * k * s0 * L.sigma / (layer_s(L, delta) * L.a);
  return std::sqrt(k2);
}

}  // namespace

std::vector<RadialLayer> cloak_layers(const GeometryConfig& cfg, bool frequency_layout) {
  const double core_sigma = frequency_layout ? cfg.r3() * cfg.r3() / (cfg.r1 * cfg.r1) : 1.0;
  return {
      {0.0, cfg.r1, 1.0, core_sigma, 0.0, false},
      {cfg.r1, cfg.r2, 1.0, 1.0, frequency_layout ? cfg.r2 : 0.0, true},
  };
}

ModeSolution::ModeSolution(int n, double k, double delta, std::vector<Interval> intervals,
                           std::vector<std::array<cplx, 2>> amplitudes, double condition_number)
    : n_(n),
      k_(k),
      delta_(delta),
      intervals_(std::move(intervals)),
      amplitudes_(std::move(amplitudes)),
      condition_(condition_number) {}

cplx ModeSolution::s_of(std::size_t j) const { return layer_s(intervals_[j].layer, delta_); }

std::size_t ModeSolution::interval_of(double r) const {
  for (std::size_t j = 0; j + 1 < intervals_.size(); ++j)
    if (r <= intervals_[j].layer.r_out) return j;
  return intervals_.size() - 1;
}

cplx ModeSolution::basis(std::size_t j, int b, double r) const {
  const Interval& I = intervals_[j];
  const RadialLayer& L = I.layer;
  if (k_ == 0.0) {
    if (I.outgoing_only) return std::pow(L.r_in / r, n_);
    if (b == 0) return std::pow(r / L.r_out, n_);
    return std::pow(L.r_in / r, n_);
  }
  if (I.outgoing_only) return bessel(BesselKind::kH1, n_, k_ * r);
  const cplx kappa = layer_kappa(L, k_, delta_);
  const cplx z = L.kelvin_radius > 0.0 ? kappa * L.kelvin_radius * L.kelvin_radius / r : kappa * r;
  return b == 0 ? bessel_j(n_, z) : bessel_y(n_, z);
}

cplx ModeSolution::basis_derivative(std::size_t j, int b, double r) const {
  const Interval& I = intervals_[j];
  const RadialLayer& L = I.layer;
  const double n = n_;
  if (k_ == 0.0) {
    if (I.outgoing_only || b == 1) return -n / r * std::pow(L.r_in / r, n_);
    return n == 0 ? 0.0 : n / L.r_out * std::pow(r / L.r_out, n_ - 1);
  }
  if (I.outgoing_only) return k_ * bessel_derivative(BesselKind::kH1, n_, k_ * r);
  const cplx kappa = layer_kappa(L, k_, delta_);
  if (L.kelvin_radius > 0.0) {
    const double R2 = L.kelvin_radius * L.kelvin_radius;
    const cplx z = kappa * R2 / r;
    const cplx dz = -kappa * R2 / (r * r);
    return dz * (b == 0 ? bessel_j_derivative(n_, z) : bessel_y_derivative(n_, z));
  }
  const cplx z = kappa * r;
  return kappa * (b == 0 ? bessel_j_derivative(n_, z) : bessel_y_derivative(n_, z));
}

cplx ModeSolution::value(double r) const {
  const std::size_t j = interval_of(r);
  cplx v = amplitudes_[j][0] * basis(j, 0, r);
  if (!intervals_[j].regular_only && !intervals_[j].outgoing_only) v += amplitudes_[j][1] * basis(j, 1, r);
  return v;
}

cplx ModeSolution::derivative(double r) const {
  const std::size_t j = interval_of(r);
  cplx v = amplitudes_[j][0] * basis_derivative(j, 0, r);
  if (!intervals_[j].regular_only && !intervals_[j].outgoing_only) v += amplitudes_[j][1] * basis_derivative(j, 1, r);
  return v;
}

cplx ModeSolution::flux(double r) const {
  const std::size_t j = interval_of(r);
  return s_of(j) * intervals_[j].layer.a * derivative(r);
}

double ModeSolution::interface_residual() const {
  double worst = 0.0;
  auto side = [&](std::size_t j, double r, bool deriv) {
    cplx v = amplitudes_[j][0] * (deriv ? basis_derivative(j, 0, r) : basis(j, 0, r));
    if (!intervals_[j].regular_only && !intervals_[j].outgoing_only)
      v += amplitudes_[j][1] * (deriv ? basis_derivative(j, 1, r) : basis(j, 1, r));
    return deriv ? s_of(j) * intervals_[j].layer.a * v : v;
  };
  // The last interface is the source ring, where the flux jumps by design.
  for (std::size_t j = 0; j + 2 < intervals_.size(); ++j) {
    const double r = intervals_[j].layer.r_out;
    for (bool deriv : {false, true}) {
      const cplx a = side(j, r, deriv), b = side(j + 1, r, deriv);
      const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
      worst = std::max(worst, std::abs(a - b) / scale);
    }
  }
  return worst;
}

ModeSolution radial_layered_solve(const std::vector<RadialLayer>& layers, int n, double k, double delta,
                                  const SourceRing& ring) {
  if (n < 0) throw DomainError("radial_layered_solve: mode index n >= 0");
  if (k == 0.0 && n == 0) throw DomainError("radial_layered_solve: n >= 1 when k = 0 (zero-mean sources)");
  if (!(k >= 0.0)) throw DomainError("radial_layered_solve: k >= 0");

  std::vector<ModeSolution::Interval> iv;
  double r = 0.0;
  for (const RadialLayer& L : layers) {
    if (std::abs(L.r_in - r) > 1e-14 * std::max(1.0, r) || !(L.r_out > L.r_in) || !(L.a > 0.0))
      throw DomainError("radial_layered_solve: layers must be contiguous from 0 with increasing radii");
    if (L.kelvin_radius > 0.0 && L.r_in == 0.0)
      throw DomainError("radial_layered_solve: innermost layer cannot use the Kelvin profile");
    iv.push_back({L, false, false});
    r = L.r_out;
  }
  if (!(ring.radius > r)) throw DomainError("radial_layered_solve: ring strictly outside all layers");
  iv.push_back({RadialLayer{r, ring.radius, 1.0, 1.0, 0.0, false}, false, false});
  iv.push_back({RadialLayer{ring.radius, kInf, 1.0, 1.0, 0.0, false}, false, true});
  iv.front().regular_only = true;

  const std::size_t m = iv.size() - 1;  // interfaces
  const std::size_t N = 2 * m;
  std::vector<std::size_t> offset(iv.size());
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < iv.size(); ++j) {
    offset[j] = cursor;
    cursor += (iv[j].regular_only || iv[j].outgoing_only) ? 1 : 2;
  }
  if (cursor != N) throw DomainError("radial_layered_solve: inconsistent interval layout");

  // Zero amplitudes only to get a ModeSolution that can evaluate bases.
  std::vector<std::array<cplx, 2>> amps(iv.size(), {cplx(0), cplx(0)});
  const ModeSolution probe(n, k, delta, iv, amps, 0.0);

  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(N);
  for (std::size_t i = 0; i < m; ++i) {
    const double rho = iv[i].layer.r_out;
    for (int side = 0; side < 2; ++side) {
      const std::size_t j = i + side;
      const double sign = side == 0 ? 1.0 : -1.0;
      const int nb = (iv[j].regular_only || iv[j].outgoing_only) ? 1 : 2;
      const cplx sa = layer_s(iv[j].layer, delta) * iv[j].layer.a;
      for (int b = 0; b < nb; ++b) {
        A(2 * i, offset[j] + b) += sign * probe.basis(j, b, rho);
        A(2 * i + 1, offset[j] + b) += sign * sa * probe.basis_derivative(j, b, rho);
      }
    }
  }
  // Ring: u'(rho+) - u'(rho-) = amplitude.
  rhs(2 * (m - 1) + 1) = -ring.amplitude;

  Eigen::VectorXd colscale(N);
  for (std::size_t c = 0; c < N; ++c) {
    colscale(c) = A.col(c).cwiseAbs().maxCoeff();
    if (!(colscale(c) > 0.0) || !std::isfinite(colscale(c)))
      throw NumericalError("radial_layered_solve: degenerate basis column", n);
    A.col(c) /= colscale(c);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(N - 1);
  if (!(sv(N - 1) > 1e-15 * sv(0))) throw NumericalError("radial_layered_solve: singular interface system", n);
  const Eigen::VectorXcd x = A.partialPivLu().solve(rhs);

  for (std::size_t j = 0; j < iv.size(); ++j) {
    const int nb = (iv[j].regular_only || iv[j].outgoing_only) ? 1 : 2;
    for (int b = 0; b < nb; ++b) amps[j][b] = x(offset[j] + b) / colscale(offset[j] + b);
  }
  return ModeSolution(n, k, delta, std::move(iv), std::move(amps), cond);
}

OracleSolution::OracleSolution(const std::vector<RadialLayer>& layers, const std::vector<RingMode>& modes, double k,
                               double delta, double ring_radius)
    : modes_(modes) {
  solutions_.reserve(modes.size());
  for (const RingMode& m : modes) solutions_.push_back(radial_layered_solve(layers, m.n, k, delta, {ring_radius, 1.0}));
}

cplx OracleSolution::value(Point2 p) const {
  const double r = norm(p);
  const double th = std::atan2(p.y, p.x);
  cplx v = 0.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (r == 0.0 && modes_[i].n > 0) continue;
    const double ang = modes_[i].n * th + modes_[i].phase;
    v += modes_[i].amplitude * std::cos(ang) * (r == 0.0 ? solutions_[i].value(0.0) : solutions_[i].value(r));
  }
  return v;
}

Grad OracleSolution::gradient(Point2 p) const {
  double r = norm(p);
  if (r < 1e-12) {
    p = {1e-12, 0.0};
    r = 1e-12;
  }
  const double th = std::atan2(p.y, p.x);
  const double c = std::cos(th), s = std::sin(th);
  Grad g{0.0, 0.0};
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const double ang = modes_[i].n * th + modes_[i].phase;
    const cplx dr = modes_[i].amplitude * std::cos(ang) * solutions_[i].derivative(r);
    const cplx dth = -modes_[i].amplitude * modes_[i].n * std::sin(ang) * solutions_[i].value(r) / r;
    g[0] += dr * c - dth * s;
    g[1] += dr * s + dth * c;
  }
  return g;
}

void OracleSolution::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path);
  std::fprintf(f, "n,interval,r_in,r_out,re_c0,im_c0,re_c1,im_c1,condition\n");
  for (const ModeSolution& sol : solutions_) {
    for (std::size_t j = 0; j < sol.intervals().size(); ++j) {
      const auto& L = sol.intervals()[j].layer;
      const auto& a = sol.amplitudes()[j];
      std::fprintf(f, "%d,%zu,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e\n", sol.n(), j, L.r_in, L.r_out, a[0].real(),
                   a[0].imag(), a[1].real(), a[1].imag(), sol.condition_number());
    }
  }
  std::fclose(f);
}

DiscreteField oracle_field(const std::vector<RadialLayer>& layers, const std::vector<RingMode>& modes, double k,
                           double delta, double ring_radius, std::shared_ptr<const TriMesh> mesh) {
  const OracleSolution sol(layers, modes, k, delta, ring_radius);
  return DiscreteField::interpolate(std::move(mesh), [&](Point2 p) { return sol.value(p); });
}

}  // namespace alr
