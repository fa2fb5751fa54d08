#include "lineoptics/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lineoptics/error.hpp"

namespace lineoptics {

namespace {

constexpr double kVanishing = 1e-12;
constexpr double kIncidenceTolerance = 1e-9;

// Denominator and numerator of the reflection Moebius map; they satisfy
// |num|^2 + |den|^2 = (1 + |xi0|^2)^2 (1 + |xi|^2).
struct MoebiusTerms {
  Complex num;
  Complex den;
};

MoebiusTerms reflection_terms(Complex xi0, Complex xi) {
  const double a0 = std::norm(xi0);
  return {2.0 * xi0 * std::conj(xi) + 1.0 - a0, (1.0 - a0) * std::conj(xi) - 2.0 * std::conj(xi0)};
}

Complex apply_reflection(Complex xi0, Complex xi, const char* what) {
  require_in_chart(xi0, "mirror normal");
  require_in_chart(xi, what);
  const MoebiusTerms m = reflection_terms(xi0, xi);
  const double size = std::sqrt(std::norm(m.num) + std::norm(m.den));
  if (std::abs(m.den) <= kVanishing * size) {
    throw Error(ErrorKind::ChartExcluded, "reflected direction is the south pole");
  }
  const Complex out = m.num / m.den;
  require_in_chart(out, "reflected direction");
  return out;
}

}  // namespace

Complex reflect_direction(Complex xi0, Complex xi1) { return apply_reflection(xi0, xi1, "incoming direction"); }

Complex inverse_reflect_direction(Complex xi0, Complex xi2) {
  return apply_reflection(xi0, xi2, "outgoing direction");
}

double incidence_cosine(Complex xi0, Complex xi1) {
  return (std::norm(1.0 + std::conj(xi0) * xi1) - std::norm(xi0 - xi1)) /
         ((1.0 + std::norm(xi0)) * (1.0 + std::norm(xi1)));
}

ReflectionEvent reflect_line(const SurfaceFrame& frame, const OrientedLine& incoming, double r1) {
  const Point3 hit = phi(LinePointParam{incoming, r1});
  const Vec3 foot = to_vec3(frame.foot);
  const double miss = (to_vec3(hit) - foot).norm();
  if (!(miss <= kIncidenceTolerance * std::max(1.0, foot.norm()))) {
    throw Error(ErrorKind::NotIncident, "incoming line misses the reflection point by " + std::to_string(miss));
  }

  const Complex xi0 = frame.xi0;
  const Complex xi1 = incoming.xi;
  const Complex xi2 = reflect_direction(xi0, xi1);

  const double a0 = std::norm(xi0);
  const Complex den = reflection_terms(xi0, xi1).den;
  const Complex den2 = den * den;
  const Complex u = std::conj(xi0) - std::conj(xi1);
  const Complex v = 1.0 + xi0 * std::conj(xi1);
  const Complex eta2 =
      (u * u * frame.eta0 - v * v * std::conj(frame.eta0) + u * v * (1.0 + a0) * frame.r0) / den2;

  const double r2 = r1 + 2.0 * (std::norm(xi0 - xi1) - std::norm(1.0 + std::conj(xi0) * xi1)) /
                             ((1.0 + a0) * (1.0 + std::norm(xi1))) * frame.r0;

  return ReflectionEvent{incoming, OrientedLine{xi2, eta2}, frame, r1, r2};
}

ExtendedXi mirror_normal(Complex xi1, Complex xi2) {
  require_in_chart(xi1, "incoming direction");
  require_in_chart(xi2, "outgoing direction");
  if (std::abs(xi1 - xi2) < kVanishing) {
    throw Error(ErrorKind::DegenerateInput, "coincident directions leave the mirror normal undetermined");
  }
  const double a1 = std::norm(xi1);
  const double a2 = std::norm(xi2);
  const double root = std::abs(xi1 - xi2) * std::sqrt((1.0 + a1) * (1.0 + a2));
  const double num = a1 - a2 + root;        // >= 0
  const double num_other = a1 - a2 - root;  // <= 0, and num * num_other = -|den|^2
  const Complex den = std::conj(xi1) * (1.0 + a2) - std::conj(xi2) * (1.0 + a1);

  // num/den and -conj(den)/num_other are the same number; the larger of
  // |num|, |num_other| avoids the 0/0 cancellation near the north pole.
  if (num >= -num_other) {
    if (std::abs(den) * kMaxChartModulus <= num) return AtInfinity{};
    return num / den;
  }
  return -std::conj(den) / num_other;
}

}  // namespace lineoptics
