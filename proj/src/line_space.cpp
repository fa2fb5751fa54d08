#include "lineoptics/line_space.hpp"

#include <cmath>
#include <string>

#include "lineoptics/error.hpp"

namespace lineoptics {

Vec3 to_vec3(const Point3& p) { return {p.z.real(), p.z.imag(), p.t}; }

Point3 to_point3(const Vec3& v) { return {Complex(v.x(), v.y()), v.z()}; }

bool in_chart(Complex xi) noexcept {
  return std::isfinite(xi.real()) && std::isfinite(xi.imag()) && std::abs(xi) <= kMaxChartModulus;
}

void require_in_chart(Complex xi, const char* what) {
  if (!in_chart(xi)) {
    throw Error(ErrorKind::ChartExcluded,
                std::string(what) + " lies in the excluded cap around the south direction");
  }
}

Vec3 unit_direction(const Vec3& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kRenormalizeTolerance) {
    throw Error(ErrorKind::DegenerateInput,
                "direction vector has norm " + std::to_string(n) + ", expected 1");
  }
  return v / n;
}

Complex dir_to_xi(const Vec3& unit) {
  const Vec3 d = unit_direction(unit);
  // Two algebraically equal forms; the second avoids cancellation in 1 + z
  // on the southern hemisphere.
  Complex xi;
  if (d.z() >= 0.0) {
    xi = Complex(d.x(), d.y()) / (1.0 + d.z());
  } else {
    const Complex w(d.x(), -d.y());
    if (w == Complex(0.0, 0.0)) {
      throw Error(ErrorKind::ChartExcluded, "direction is the south pole");
    }
    xi = (1.0 - d.z()) / w;
  }
  require_in_chart(xi, "direction");
  return xi;
}

Vec3 xi_to_dir(Complex xi) {
  const double a = std::norm(xi);
  const double s = 1.0 + a;
  return Vec3(2.0 * xi.real() / s, 2.0 * xi.imag() / s, (1.0 - a) / s);
}

ExtendedXi antipode(Complex xi) {
  if (xi == Complex(0.0, 0.0)) return AtInfinity{};
  return -1.0 / std::conj(xi);
}

double chordal_distance(Complex a, Complex b) {
  return 2.0 * std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
}

Point3 phi(const LinePointParam& lp) {
  const Complex xi = lp.line.xi;
  const Complex eta = lp.line.eta;
  const double r = lp.r;
  const double a = std::norm(xi);
  const double denom = (1.0 + a) * (1.0 + a);
  const Complex z = (2.0 * (eta - std::conj(eta) * xi * xi) + 2.0 * xi * (1.0 + a) * r) / denom;
  const double t =
      (-2.0 * (eta * std::conj(xi) + std::conj(eta) * xi).real() + (1.0 - a * a) * r) / denom;
  return {z, t};
}

EtaR eta_r_of_point(Complex xi, const Point3& p) {
  const double a = std::norm(xi);
  const Complex eta = 0.5 * (p.z - 2.0 * p.t * xi - std::conj(p.z) * xi * xi);
  const double r = ((xi * std::conj(p.z) + std::conj(xi) * p.z).real() + (1.0 - a) * p.t) / (1.0 + a);
  return {eta, r};
}

std::pair<LinePointParam, LinePointParam> line_through_points(const Point3& p, const Point3& q) {
  const Vec3 delta = to_vec3(q) - to_vec3(p);
  const double len = delta.norm();
  if (!(len >= 1e-12)) {
    throw Error(ErrorKind::DegenerateInput, "line_through_points needs two distinct points");
  }
  const Complex xi = dir_to_xi(delta / len);
  const EtaR at_p = eta_r_of_point(xi, p);
  const EtaR at_q = eta_r_of_point(xi, q);
  // Both points give the same eta analytically; p's value is canonical.
  const OrientedLine line{xi, at_p.eta};
  return {LinePointParam{line, at_p.r}, LinePointParam{line, at_q.r}};
}

}  // namespace lineoptics
