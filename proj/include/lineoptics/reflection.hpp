#ifndef LINEOPTICS_REFLECTION_HPP
#define LINEOPTICS_REFLECTION_HPP

#include "lineoptics/line_space.hpp"
#include "lineoptics/surfaces.hpp"

namespace lineoptics {

/// Incoming line, its reflection, the mirror frame at the reflection point and
/// the point's parameters r1, r2 on the two lines.
struct ReflectionEvent {
  OrientedLine incoming;
  OrientedLine outgoing;
  SurfaceFrame frame;
  double r1 = 0.0;
  double r2 = 0.0;
};

/// Direction of a ray with direction xi1 after reflection in a mirror whose
/// normal has chart value xi0. Invariant under xi0 -> -1/conj(xi0).
/// Throws ChartExcluded when the reflected direction is (near) the south pole.
Complex reflect_direction(Complex xi0, Complex xi1);

/// The incoming direction that reflects to xi2. Reflection is an involution,
/// so this is the same Moebius map applied to xi2.
Complex inverse_reflect_direction(Complex xi0, Complex xi2);

/// Cosine of the angle between the unit vectors with chart values xi0, xi1.
double incidence_cosine(Complex xi0, Complex xi1);

/// Reflects `incoming` at the frame's foot point, located at parameter r1 on
/// the incoming line. Throws NotIncident if phi(incoming, r1) misses the foot
/// by more than 1e-9 (scaled by max(1, |foot|)), ChartExcluded if the
/// reflected direction is not representable.
ReflectionEvent reflect_line(const SurfaceFrame& frame, const OrientedLine& incoming, double r1);

/// Chart value of the mirror normal that reflects direction xi1 into xi2.
/// The closed form always yields the normal along d1 - d2; callers wanting
/// the opposite orientation take the antipode. AtInfinity when that normal is
/// the south direction. Throws DegenerateInput for |xi1 - xi2| < 1e-12.
ExtendedXi mirror_normal(Complex xi1, Complex xi2);

}  // namespace lineoptics

#endif  // LINEOPTICS_REFLECTION_HPP
