#include <algorithm>
#include <cmath>
#include <string>

#include "alr/discretization.hpp"
#include "quadrature.hpp"

namespace alr {

namespace {

// Bump profile exp(1 - 1/(1 - t)) with t = |x|^2 / rho^2.
double bump_profile(double t) { return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0; }

}  // namespace

SourceSpec SourceSpec::ring(double radius, std::vector<RingMode> modes) {
  SourceSpec s;
  s.kind = Kind::kRing;
  s.ring_radius = radius;
  s.modes = std::move(modes);
  return s;
}

SourceSpec SourceSpec::bump_pair(Point2 plus, Point2 minus, double radius, double amplitude) {
  SourceSpec s;
  s.kind = Kind::kBumpPair;
  s.bump_centers = {plus, minus};
  s.bump_radius = radius;
  s.amplitude = amplitude;
  return s;
}

void SourceSpec::validate(const GeometryConfig& cfg, double k) const {
  const double inner = allow_shell ? cfg.r2 : cfg.r3();
  const std::string zone = allow_shell ? "B_R0 \\ B_r2" : "B_R0 \\ B_r3";
  if (kind == Kind::kRing) {
    if (modes.empty()) throw ConfigError("ring source needs at least one mode");
    if (!(ring_radius > inner && ring_radius < cfg.R0))
      throw ConfigError("ring source radius must lie in " + zone);
    for (const RingMode& m : modes) {
      if (m.n < 0) throw ConfigError("ring mode index must be >= 0");
      if (k == 0.0 && m.n == 0) throw ConfigError("quasistatic sources need zero mean: ring mode n = 0 excluded");
      if (!std::isfinite(m.amplitude) || !std::isfinite(m.phase)) throw ConfigError("ring mode amplitude not finite");
    }
    return;
  }
  if (!(bump_radius > 0.0)) throw ConfigError("bump radius must be > 0");
  for (Point2 c : bump_centers) {
    if (norm(c) - bump_radius <= inner || norm(c) + bump_radius >= cfg.R0)
      throw ConfigError("bump support must lie in " + zone);
  }
  if (dist(bump_centers[0], bump_centers[1]) < 2.0 * bump_radius) throw ConfigError("bump supports overlap");
  if (!std::isfinite(amplitude)) throw ConfigError("bump amplitude not finite");
}

void SourceSpec::add_to_geometry(GeometryConfig& cfg) const {
  if (kind == Kind::kRing) {
    const bool present = std::any_of(cfg.extra_circles.begin(), cfg.extra_circles.end(),
                                     [&](double r) { return std::abs(r - ring_radius) < 1e-12 * ring_radius; });
    if (!present) cfg.extra_circles.push_back(ring_radius);
    return;
  }
  for (Point2 c : bump_centers) cfg.source_disks.push_back({c, bump_radius});
}

double SourceSpec::density(Point2 p) const {
  if (kind != Kind::kBumpPair) return 0.0;
  const double r2 = bump_radius * bump_radius;
  return amplitude * (bump_profile(norm2(p - bump_centers[0]) / r2) - bump_profile(norm2(p - bump_centers[1]) / r2));
}

double SourceSpec::l2_norm() const {
  if (kind == Kind::kRing) {
    // Distinct modes are orthogonal on the circle; equal indices are summed
    // as phasors first.
    std::vector<std::pair<int, cplx>> merged;
    for (const RingMode& m : modes) {
      auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& e) { return e.first == m.n; });
      const cplx phasor = m.amplitude * std::exp(cplx(0.0, m.phase));
      if (it == merged.end())
        merged.emplace_back(m.n, phasor);
      else
        it->second += phasor;
    }
    double sum = 0.0;
    for (const auto& [n, c] : merged) {
      // int_0^2pi |Re(c e^{in theta})|^2 = pi |c|^2 (n > 0), 2 pi Re(c)^2 (n = 0).
      sum += n == 0 ? 2.0 * kPi * c.real() * c.real() : kPi * std::norm(c);
    }
    return std::sqrt(ring_radius * sum);
  }
  // ||psi||^2 = 2 pi rho^2 int_0^1 psi(s^2)^2 s ds, both bumps disjoint.
  double radial = 0.0;
  for (const quad::LinePoint& q : quad::gauss_legendre(64)) {
    const double p = bump_profile(q.t * q.t);
    radial += q.weight * p * p * q.t;
  }
  return std::abs(amplitude) * std::sqrt(2.0 * 2.0 * kPi * bump_radius * bump_radius * radial);
}

}  // namespace alr
