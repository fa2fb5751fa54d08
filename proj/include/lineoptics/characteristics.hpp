#ifndef LINEOPTICS_CHARACTERISTICS_HPP
#define LINEOPTICS_CHARACTERISTICS_HPP

#include <optional>
#include <utility>
#include <vector>

#include "lineoptics/line_space.hpp"
#include "lineoptics/newton.hpp"
#include "lineoptics/surfaces.hpp"

namespace lineoptics {

/// Angle characteristic query: incoming and outgoing directions.
struct CharQueryT {
  Complex xi1;
  Complex xi2;
};

/// Mixed characteristic query: source point and outgoing direction.
struct CharQueryW {
  Point3 p1;
  Complex xi2;
};

/// Point characteristic query: source and target points.
struct CharQueryV {
  Point3 p1;
  Point3 p2;
};

/// One branch of T, W or V. `value` is the unsigned path quantity; the signed
/// pieces (s1, s2, r1, r2) let callers apply their own sign convention.
/// `residual` is the max normalized residual of the defining equations,
/// re-evaluated at the reported solution.
struct CharacteristicResult {
  double value = 0.0;
  SurfaceFrame frame;
  Complex xi0;
  Complex xi1;
  Complex xi2;
  std::optional<double> s1;
  std::optional<double> s2;
  double r1 = 0.0;
  double r2 = 0.0;
  double residual = 0.0;

  Complex mu() const { return frame.mu; }
};

/// A solved reflection configuration for the W and V domain problems.
struct DomainRoot {
  SurfaceFrame frame;
  Complex xi1;
  Complex xi2;
  double residual = 0.0;
};

/// Frames whose normal is +-mirror_normal(xi1, xi2). Frames sharing both the
/// normal direction and r0 (a flat family, e.g. a plane) collapse to one.
/// Empty means the query is outside Dom T up to grid completeness.
std::vector<SurfaceFrame> domain_T(const MirrorSurface& surface, const CharQueryT& q,
                                   const SolveOptions& opts = {});
std::vector<CharacteristicResult> char_T(const MirrorSurface& surface, const CharQueryT& q,
                                         const SolveOptions& opts = {});

/// Only roots whose incoming ray runs from p1 forward to the reflection point
/// are reported.
std::vector<DomainRoot> domain_W(const MirrorSurface& surface, const CharQueryW& q,
                                 const SolveOptions& opts = {});
std::vector<CharacteristicResult> char_W(const MirrorSurface& surface, const CharQueryW& q,
                                         const SolveOptions& opts = {});

/// Roots are reported with the incoming line oriented from p1 towards the
/// reflection point (the reversed line is the same geometric path).
std::vector<DomainRoot> domain_V(const MirrorSurface& surface, const CharQueryV& q,
                                 const SolveOptions& opts = {});
std::vector<CharacteristicResult> char_V(const MirrorSurface& surface, const CharQueryV& q,
                                         const SolveOptions& opts = {});

// Defining equations, exposed for certification and tests. The raw forms
// return LHS - RHS; the *_residual forms divide by a bound on the monomial
// sizes so the result is dimensionless.

/// Source point p1 sees the frame's mirror reflect into direction xi2.
Complex w_equation(const SurfaceFrame& frame, const Point3& p1, Complex xi2);
double w_residual(const SurfaceFrame& frame, const Point3& p1, Complex xi2);

/// First: the reflected line passes through p2. Second: the incoming line
/// with direction xi1 through p1 meets the frame's foot.
std::pair<Complex, Complex> v_equations(const SurfaceFrame& frame, const Point3& p1, const Point3& p2,
                                        Complex xi1);
double v_residual(const SurfaceFrame& frame, const Point3& p1, const Point3& p2, Complex xi1);

/// r0 measured along the normal that faces the incoming ray (d1 . n <= 0).
/// With this orientation chordal(xi1, xi2) * r0 equals r2 - r1.
double facing_r0(const SurfaceFrame& frame, Complex xi1);

}  // namespace lineoptics

#endif  // LINEOPTICS_CHARACTERISTICS_HPP
