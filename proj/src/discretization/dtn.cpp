#include <cmath>
#include <string>

#include "alr/discretization.hpp"
#include "quadrature.hpp"

namespace alr {

DtNOperator::DtNOperator(double k, double radius, std::vector<cplx> impedance)
    : k_(k), radius_(radius), impedance_(std::move(impedance)) {}

cplx DtNOperator::impedance(int n) const {
  const int m = std::abs(n);
  if (m > modes()) throw DomainError("dtn: mode beyond truncation");
  return impedance_[static_cast<std::size_t>(m)];
}

DtNOperator dtn_operator(double k, double radius, int modes) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw DomainError("dtn: k >= 0 required");
  if (!(radius > 0.0)) throw DomainError("dtn: radius > 0 required");
  if (modes < 8) throw DomainError("dtn: at least 8 modes required");
  std::vector<cplx> lambda(static_cast<std::size_t>(modes) + 1);
  for (int n = 0; n <= modes; ++n) {
    cplx l;
    if (k == 0.0) {
      l = static_cast<double>(n) / radius;
    } else {
      const cplx h = bessel(BesselKind::kH1, n, k * radius);
      const cplx dh = bessel_derivative(BesselKind::kH1, n, k * radius);
      l = -k * dh / h;
      if (!std::isfinite(l.real()) || !std::isfinite(l.imag()) || std::abs(h) < 1e-300)
        throw NumericalError("dtn: Hankel quotient not finite for mode " + std::to_string(n), n);
    }
    lambda[static_cast<std::size_t>(n)] = l;
  }
  return DtNOperator(k, radius, std::move(lambda));
}

DtNOperator::Block DtNOperator::boundary_block(const TriMesh& mesh) const {
  const auto outer = mesh.find_curve(CurveRole::kOuter);
  if (!outer) throw ConfigError("dtn: mesh has no outer circle");
  const Curve& c = mesh.curves()[static_cast<std::size_t>(*outer)];
  if (std::abs(c.radius - radius_) > 1e-9 * radius_ || norm(c.center) > 1e-12)
    throw ConfigError("dtn: truncation radius differs from the mesh outer circle");

  Block block;
  block.nodes = mesh.nodes_on(*outer);
  const std::size_t nb = block.nodes.size();
  std::vector<int> local(mesh.num_nodes(), -1);
  for (std::size_t i = 0; i < nb; ++i) local[static_cast<std::size_t>(block.nodes[i])] = static_cast<int>(i);

  // cosines(i, n) = int phi_i cos(n theta) dtheta, likewise for sines.
  const int N = modes();
  Eigen::MatrixXd cosines = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), N + 1);
  Eigen::MatrixXd sines = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), N + 1);
  const auto gl = quad::gauss_legendre(8);
  for (const CurveEdge& e : mesh.edges_on(*outer)) {
    const Point2 pa = mesh.nodes()[static_cast<std::size_t>(e.a)];
    const Point2 pb = mesh.nodes()[static_cast<std::size_t>(e.b)];
    const double ta = std::atan2(pa.y, pa.x);
    double span = std::atan2(pb.y, pb.x) - ta;
    if (span > kPi) span -= 2.0 * kPi;
    if (span < -kPi) span += 2.0 * kPi;
    const Eigen::Index ia = local[static_cast<std::size_t>(e.a)];
    const Eigen::Index ib = local[static_cast<std::size_t>(e.b)];
    for (const quad::LinePoint& q : gl) {
      const double theta = ta + q.t * span;
      const double w = q.weight * std::abs(span);
      for (int n = 0; n <= N; ++n) {
        const double cn = std::cos(n * theta) * w, sn = std::sin(n * theta) * w;
        cosines(ia, n) += (1.0 - q.t) * cn;
        cosines(ib, n) += q.t * cn;
        sines(ia, n) += (1.0 - q.t) * sn;
        sines(ib, n) += q.t * sn;
      }
    }
  }

  // int_Gamma (DtN u) v ds = R/(2 pi) l_0 C_0 C_0 + R/pi sum_n l_n (C_n C_n + S_n S_n).
  Eigen::VectorXcd weights(N + 1);
  for (int n = 0; n <= N; ++n)
    weights(n) = impedance_[static_cast<std::size_t>(n)] * radius_ / (n == 0 ? 2.0 * kPi : kPi);
  const Eigen::MatrixXcd cc = cosines.cast<cplx>();
  const Eigen::MatrixXcd ss = sines.cast<cplx>();
  block.matrix = cc * weights.asDiagonal() * cc.transpose() + ss * weights.asDiagonal() * ss.transpose();
  block.mean_weights = cosines.col(0) / (2.0 * kPi);
  return block;
}

}  // namespace alr
