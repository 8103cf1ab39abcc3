#include <cmath>
#include <limits>

#include "alr/oracle.hpp"

namespace alr {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kSeriesLimit = 25.0;

void require_order(int n) {
  if (n < 0) throw DomainError("bessel: order n >= 0");
}

void require_series_domain(cplx z) {
  if (!(std::abs(z) <= kSeriesLimit)) throw DomainError("bessel: complex series limited to |z| <= 25");
}

bool is_positive_real(cplx z) { return z.imag() == 0.0 && z.real() > 0.0; }

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double harmonic(int m) {
  double h = 0.0;
  for (int i = 1; i <= m; ++i) h += 1.0 / i;
  return h;
}

}  // namespace

cplx bessel(BesselKind kind, int n, double x) {
  require_order(n);
  if (!std::isfinite(x)) throw DomainError("bessel: argument must be finite");
  switch (kind) {
    case BesselKind::kJ:
      if (x < 0.0) throw DomainError("bessel: J needs x >= 0");
      return std::cyl_bessel_j(static_cast<double>(n), x);
    case BesselKind::kY:
      if (!(x > 0.0)) throw DomainError("bessel: Y needs x > 0");
      return std::cyl_neumann(static_cast<double>(n), x);
    case BesselKind::kH1:
      if (!(x > 0.0)) throw DomainError("bessel: H1 needs x > 0");
      return {std::cyl_bessel_j(static_cast<double>(n), x), std::cyl_neumann(static_cast<double>(n), x)};
  }
  return {};
}

cplx bessel_derivative(BesselKind kind, int n, double x) {
  // Z_n' = Z_{n-1} - (n/x) Z_n, and Z_0' = -Z_1.
  if (n == 0) return -bessel(kind, 1, x);
  if (x == 0.0 && kind == BesselKind::kJ) return n == 1 ? 0.5 : 0.0;
  return bessel(kind, n - 1, x) - (static_cast<double>(n) / x) * bessel(kind, n, x);
}

cplx bessel_j(int n, cplx z) {
  require_order(n);
  if (is_positive_real(z)) return std::cyl_bessel_j(static_cast<double>(n), z.real());
  require_series_domain(z);
  const cplx half = 0.5 * z;
  const cplx q = -half * half;
  cplx term = std::pow(half, n) / factorial(n);
  cplx sum = term;
  for (int k = 0; k < 400; ++k) {
    term *= q / (static_cast<double>(k + 1) * static_cast<double>(n + k + 1));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) && k > std::abs(z)) break;
  }
  return sum;
}

cplx bessel_y(int n, cplx z) {
  require_order(n);
  if (is_positive_real(z)) return std::cyl_neumann(static_cast<double>(n), z.real());
  if (std::abs(z) == 0.0) throw DomainError("bessel: Y at z = 0");
  require_series_domain(z);
  const cplx half = 0.5 * z;
  const cplx q = half * half;

  // Finite part: -(1/pi) (z/2)^-n sum_{k<n} (n-k-1)!/k! (z^2/4)^k.
  cplx finite = 0.0;
  if (n > 0) {
    cplx qk = 1.0;
    for (int k = 0; k < n; ++k) {
      finite += factorial(n - k - 1) / factorial(k) * qk;
      qk *= q;
    }
    finite *= -std::pow(half, -n) / kPi;
  }

  // Series part with psi(k+1) + psi(n+k+1), psi(m+1) = -gamma + H_m.
  cplx term = std::pow(half, n) / factorial(n);
  double hk = 0.0;
  double hnk = harmonic(n);
  cplx series = (hk + hnk - 2.0 * kEulerGamma) * term;
  for (int k = 0; k < 400; ++k) {
    term *= -q / (static_cast<double>(k + 1) * static_cast<double>(n + k + 1));
    hk += 1.0 / (k + 1);
    hnk += 1.0 / (n + k + 1);
    const cplx add = (hk + hnk - 2.0 * kEulerGamma) * term;
    series += add;
    if (std::abs(add) <= 1e-17 * std::abs(series) && k > std::abs(z)) break;
  }
  return finite + (2.0 / kPi) * std::log(half) * bessel_j(n, z) - series / kPi;
}

cplx bessel_j_derivative(int n, cplx z) {
  if (n == 0) return -bessel_j(1, z);
  if (std::abs(z) == 0.0) return n == 1 ? 0.5 : 0.0;
  return bessel_j(n - 1, z) - (static_cast<double>(n) / z) * bessel_j(n, z);
}

cplx bessel_y_derivative(int n, cplx z) {
  if (n == 0) return -bessel_y(1, z);
  return bessel_y(n - 1, z) - (static_cast<double>(n) / z) * bessel_y(n, z);
}

}  // namespace alr
