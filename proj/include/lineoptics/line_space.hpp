#ifndef LINEOPTICS_LINE_SPACE_HPP
#define LINEOPTICS_LINE_SPACE_HPP

#include <complex>
#include <utility>
#include <variant>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lineoptics {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;

/// Directions whose stereographic coordinate exceeds 1/kCapEpsilon in modulus
/// lie in the excluded cap around (0,0,-1) and are rejected with ChartExcluded.
inline constexpr double kCapEpsilon = 1e-6;
inline constexpr double kMaxChartModulus = 1.0 / kCapEpsilon;

/// Direction vectors within this distance of unit norm are silently
/// renormalized; anything further off is DegenerateInput.
inline constexpr double kRenormalizeTolerance = 1e-8;

/// A point of R^3 split as z = x1 + i x2, t = x3.
struct Point3 {
  Complex z;
  double t = 0.0;
};

Vec3 to_vec3(const Point3& p);
Point3 to_point3(const Vec3& v);

/// An oriented line in the south-excluding chart: xi is the stereographic
/// coordinate of the direction, eta encodes the perpendicular from the origin.
struct OrientedLine {
  Complex xi;
  Complex eta;
};

/// A point on an oriented line, located by its signed distance r from the
/// line's closest point to the origin.
struct LinePointParam {
  OrientedLine line;
  double r = 0.0;
};

struct EtaR {
  Complex eta;
  double r = 0.0;
};

/// Tagged stand-in for the chart point at infinity (the south direction).
struct AtInfinity {
  friend bool operator==(AtInfinity, AtInfinity) { return true; }
};
using ExtendedXi = std::variant<Complex, AtInfinity>;

bool in_chart(Complex xi) noexcept;

/// Throws ChartExcluded when xi lies in the excluded cap (or is not finite).
void require_in_chart(Complex xi, const char* what);

/// Applies the renormalization policy to a nominal unit vector.
Vec3 unit_direction(const Vec3& v);

/// Stereographic projection from the south pole: (x + iy) / (1 + z).
Complex dir_to_xi(const Vec3& unit);

/// Inverse stereographic projection; always unit norm.
Vec3 xi_to_dir(Complex xi);

/// The antipodal direction -1/conj(xi); AtInfinity for xi = 0.
ExtendedXi antipode(Complex xi);

/// |d(a) - d(b)| for the unit vectors with chart values a and b.
double chordal_distance(Complex a, Complex b);

/// The map (line, r) -> point of R^3.
Point3 phi(const LinePointParam& lp);

/// Inverse of phi for a known direction: the eta of the line with direction
/// xi through p, and the parameter r of p on that line.
EtaR eta_r_of_point(Complex xi, const Point3& p);

/// The oriented line from p toward q, with the parameters of p and q on it.
std::pair<LinePointParam, LinePointParam> line_through_points(const Point3& p, const Point3& q);

}  // namespace lineoptics

#endif  // LINEOPTICS_LINE_SPACE_HPP
