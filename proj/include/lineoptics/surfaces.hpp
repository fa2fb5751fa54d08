#ifndef LINEOPTICS_SURFACES_HPP
#define LINEOPTICS_SURFACES_HPP

#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "lineoptics/line_space.hpp"
#include "lineoptics/newton.hpp"

namespace lineoptics {

/// Closed rectangle [re_min, re_max] x [im_min, im_max] in the parameter plane.
struct ParamDomain {
  double re_min = -1.0;
  double re_max = 1.0;
  double im_min = -1.0;
  double im_max = 1.0;

  bool contains(Complex mu, double margin = 0.0) const;
  Complex center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
  double width() const { return re_max - re_min; }
  double height() const { return im_max - im_min; }
};

/// Cell centres of an n x n grid over the rectangle, row-major in (re, im).
std::vector<Complex> grid_seeds(const ParamDomain& domain, int n);

/// One sample of a surface's normal congruence: the oriented normal line
/// (xi0, eta0) through the foot point, and the foot's parameter r0 on it.
struct SurfaceFrame {
  Complex mu;
  Complex xi0;
  Complex eta0;
  double r0 = 0.0;
  Point3 foot;
};

enum class SurfaceKind { Plane, Sphere, Paraboloid, Ellipsoid, Parametric };

std::string_view to_string(SurfaceKind kind);

/// Plane through `base` with unit normal `normal`; mu = a e1 + b e2 offsets
/// from base. For the normal (0,0,1), e1 and e2 are the x and y axes so mu is
/// the z-coordinate of the foot.
struct PlaneShape {
  Vec3 base;
  Vec3 normal;
  Vec3 e1;
  Vec3 e2;
};

/// mu is the chart value of the outward unit normal u; foot = center + R u.
struct SphereShape {
  Vec3 center;
  double radius = 1.0;
};

/// Axis-aligned ellipsoid; mu is the chart value of the outward unit normal
/// u, and the foot is center + D^2 u / sqrt(u . D^2 u) with D = diag(a, b, c).
struct EllipsoidShape {
  Vec3 center;
  Vec3 semi_axes;
};

/// Paraboloid of revolution about `axis` with its vertex at `vertex`:
/// height along the axis is rho^2 / (4 f). mu = a e1 + b e2 is the graph
/// coordinate in the plane perpendicular to the axis. Orientation +1 points
/// the normal into the concave side (towards the focus).
struct ParaboloidShape {
  Vec3 vertex;
  Vec3 axis;
  double focal_length = 1.0;
  Vec3 e1;
  Vec3 e2;
};

/// User chart mu -> p(mu). When `normal` is empty the normal is the
/// normalized cross product of fourth-order central differences of p.
struct ParametricShape {
  std::function<Vec3(Complex)> position;
  std::function<Vec3(Complex)> normal;
};

using SurfaceShape =
    std::variant<PlaneShape, SphereShape, ParaboloidShape, EllipsoidShape, ParametricShape>;

/// An oriented C^1 mirror patch over a parameter rectangle. Immutable after
/// construction; construction validates shape parameters and checks that the
/// oriented normal stays chart-valid over the rectangle.
class MirrorSurface {
 public:
  static MirrorSurface plane(const Vec3& base, const Vec3& unit_normal, const ParamDomain& domain);
  static MirrorSurface sphere(const Vec3& center, double radius, int orientation,
                              const ParamDomain& domain);
  static MirrorSurface ellipsoid(const Vec3& center, const Vec3& semi_axes, int orientation,
                                 const ParamDomain& domain);
  static MirrorSurface paraboloid(const Vec3& vertex, const Vec3& axis, double focal_length,
                                  int orientation, const ParamDomain& domain);
  static MirrorSurface parametric(std::function<Vec3(Complex)> position,
                                  std::function<Vec3(Complex)> normal, int orientation,
                                  const ParamDomain& domain);

  SurfaceKind kind() const;
  const SurfaceShape& shape() const { return shape_; }
  const ParamDomain& domain() const { return domain_; }
  int orientation() const { return orientation_; }

  /// Evaluate the parameterization (no domain check, so root searches may
  /// step slightly outside the rectangle).
  Vec3 point(Complex mu) const;
  /// Oriented unit normal at mu.
  Vec3 normal(Complex mu) const;

  /// Parameter of a point known to lie on the surface. Closed-form kinds
  /// only; nullopt for parametric surfaces or unrepresentable points.
  std::optional<Complex> param_of(const Vec3& p) const;

 private:
  MirrorSurface(SurfaceShape shape, int orientation, const ParamDomain& domain);
  void validate_chart() const;

  SurfaceShape shape_;
  int orientation_ = 1;
  ParamDomain domain_;
};

/// Normal-congruence sample at mu. Throws OutOfDomain outside the rectangle
/// and ChartExcluded if the normal enters the excluded cap.
SurfaceFrame frame_at(const MirrorSurface& surface, Complex mu);

/// As frame_at, without the domain check.
SurfaceFrame frame_at_unchecked(const MirrorSurface& surface, Complex mu);

struct CongruenceSample {
  Complex xi;
  Complex eta;
  double r = 0.0;
};

/// A parameterized line congruence together with a real function r.
using LineCongruence = std::function<CongruenceSample(Complex)>;

LineCongruence normal_congruence(const MirrorSurface& surface);

/// d r - (2 conj(eta) d xi + 2 eta d conj(xi)) / (1 + |xi|^2)^2 with
/// d = d/d mu by central differences of step h. Vanishes (up to O(h^2)) iff
/// the congruence is normal with r the distance function.
Complex integrability_residual(const LineCongruence& congruence, Complex mu, double h = 1e-5);

/// Surface overload; throws OutOfDomain unless mu has margin h inside the
/// rectangle.
Complex integrability_residual(const MirrorSurface& surface, Complex mu, double h = 1e-5);

/// eta of the line with direction xi through the frame's foot point,
/// expressed in the frame's normal-congruence data.
Complex us_eta(const SurfaceFrame& frame, Complex xi);

/// Every frame whose foot lies on `line` (within the rectangle), from a
/// multistart solve of us_eta(frame_at(mu), xi) = eta. Sorted by mu. Throws
/// SolverFailure when no root certifies but some seed stalled close to one.
std::vector<SurfaceFrame> line_hits_surface(const MirrorSurface& surface, const OrientedLine& line,
                                            const SolveOptions& opts = {});

}  // namespace lineoptics

#endif  // LINEOPTICS_SURFACES_HPP
