#include <cmath>
#include <complex>
#include <string>

#include "alr/media.hpp"

namespace alr {

namespace {

Mat2 holomorphic_jacobian(cplx dfdz) {
  Mat2 J;
  J << dfdz.real(), -dfdz.imag(), dfdz.imag(), dfdz.real();
  return J;
}

cplx to_c(Point2 p) { return {p.x, p.y}; }
Point2 to_p(cplx z) { return {z.real(), z.imag()}; }

}  // namespace

TensorField TensorField::constant(const Mat2& m) {
  TensorField f;
  f.constant_ = m;
  f.fn_ = nullptr;
  return f;
}

TensorField TensorField::from_function(Fn fn) {
  TensorField f;
  f.constant_.reset();
  f.fn_ = std::move(fn);
  return f;
}

ScalarField ScalarField::constant(double v) {
  ScalarField f;
  f.constant_ = v;
  f.fn_ = nullptr;
  return f;
}

ScalarField ScalarField::from_function(Fn fn) {
  ScalarField f;
  f.constant_.reset();
  f.fn_ = std::move(fn);
  return f;
}

Diffeomorphism::Diffeomorphism(std::string name, Map forward, Map inverse, Jac jacobian)
    : name_(std::move(name)), fwd_(std::move(forward)), inv_(std::move(inverse)), jac_(std::move(jacobian)) {}

Diffeomorphism Diffeomorphism::inverted() const {
  Map fwd = fwd_;
  Jac jac = jac_;
  return Diffeomorphism(
      name_ + "^-1", inv_, fwd, [fwd, jac, inv = inv_](Point2 y) -> Mat2 { return jac(inv(y)).inverse(); });
}

Diffeomorphism identity_map() {
  return Diffeomorphism(
      "identity", [](Point2 x) { return x; }, [](Point2 y) { return y; }, [](Point2) -> Mat2 { return Mat2::Identity(); });
}

Diffeomorphism kelvin_map(Point2 c, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("kelvin_map: radius must be positive");
  const double R2 = R * R;
  auto apply = [c, R2](Point2 x) -> Point2 {
    const Point2 d = x - c;
    const double n2 = norm2(d);
    if (!(n2 > 0.0)) throw DomainError("kelvin_map: evaluation at the centre");
    return c + (R2 / n2) * d;
  };
  auto jac = [c, R2](Point2 x) -> Mat2 {
    const Point2 d = x - c;
    const double n2 = norm2(d);
    if (!(n2 > 0.0)) throw DomainError("kelvin_map: evaluation at the centre");
    Mat2 J;
    J << n2 - 2.0 * d.x * d.x, -2.0 * d.x * d.y, -2.0 * d.x * d.y, n2 - 2.0 * d.y * d.y;
    return (R2 / (n2 * n2)) * J;
  };
  return Diffeomorphism("kelvin", apply, apply, jac);
}

Diffeomorphism power_map(int m) {
  if (m < 1) throw DomainError("power_map: m >= 1");
  if (m == 1) return identity_map();
  const double inv_m = 1.0 / m;
  auto check_cut = [](Point2 z) {
    if (z.y == 0.0 && z.x <= 0.0) throw DomainError("power_map: evaluation on the branch cut");
  };
  auto fwd = [=](Point2 x) -> Point2 {
    check_cut(x);
    return to_p(std::pow(to_c(x), inv_m));
  };
  auto inv = [=](Point2 y) -> Point2 {
    const double th = std::atan2(y.y, y.x);
    if (std::abs(th) >= kPi * inv_m || norm(y) == 0.0) throw DomainError("power_map: inverse outside the image sector");
    return to_p(std::pow(to_c(y), static_cast<double>(m)));
  };
  auto jac = [=](Point2 x) -> Mat2 {
    check_cut(x);
    const cplx z = to_c(x);
    return holomorphic_jacobian(inv_m * std::pow(z, inv_m - 1.0));
  };
  return Diffeomorphism("power" + std::to_string(m), fwd, inv, jac);
}

Diffeomorphism dilation(double factor) {
  if (!(factor > 0.0)) throw DomainError("dilation: factor must be positive");
  return Diffeomorphism(
      "dilation", [factor](Point2 x) { return factor * x; }, [factor](Point2 y) { return y / factor; },
      [factor](Point2) -> Mat2 { return factor * Mat2::Identity(); });
}

Diffeomorphism compose(const Diffeomorphism& outer, const Diffeomorphism& inner) {
  return Diffeomorphism(
      outer.name() + "*" + inner.name(), [outer, inner](Point2 x) { return outer.forward(inner.forward(x)); },
      [outer, inner](Point2 y) { return inner.inverse(outer.inverse(y)); },
      [outer, inner](Point2 x) -> Mat2 { return outer.jacobian(inner.forward(x)) * inner.jacobian(x); });
}

Mat2 finite_difference_jacobian(const Diffeomorphism& T, Point2 x, double step) {
  Mat2 J;
  const Point2 dx{step, 0.0};
  const Point2 dy{0.0, step};
  const Point2 gx = (T.forward(x + dx) - T.forward(x - dx)) / (2.0 * step);
  const Point2 gy = (T.forward(x + dy) - T.forward(x - dy)) / (2.0 * step);
  J << gx.x, gy.x, gx.y, gy.y;
  return J;
}

TensorField push_forward(const Diffeomorphism& T, const TensorField& a) {
  return TensorField::from_function([T, a](Point2 y) -> Mat2 {
    const Point2 x = T.inverse(y);
    const Mat2 J = T.jacobian(x);
    return J * a(x) * J.transpose() / std::abs(J.determinant());
  });
}

ScalarField push_forward(const Diffeomorphism& T, const ScalarField& s) {
  return ScalarField::from_function([T, s](Point2 y) -> double {
    const Point2 x = T.inverse(y);
    return s(x) / std::abs(T.jacobian(x).determinant());
  });
}

}  // namespace alr
