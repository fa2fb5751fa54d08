#ifndef LINEOPTICS_TESTS_SUPPORT_HPP
#define LINEOPTICS_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lineoptics/line_space.hpp"
#include "lineoptics/oracle.hpp"
#include "lineoptics/surfaces.hpp"

namespace lineoptics::testing {

inline const double kSqrt2 = std::sqrt(2.0);

struct NamedSurface {
  std::string name;
  MirrorSurface surface;
};

inline MirrorSurface wavy_surface() {
  return MirrorSurface::parametric(
      [](Complex mu) { return Vec3(mu.real(), mu.imag(), 0.2 * std::sin(mu.real()) * std::cos(mu.imag())); }, {}, 1,
      ParamDomain{-2.0, 2.0, -2.0, 2.0});
}

inline std::vector<NamedSurface> catalog() {
  return {
      {"tilted plane", MirrorSurface::plane(Vec3(0.2, -0.1, 0.3), Vec3(0.2, 0.1, 1.0).normalized(),
                                            ParamDomain{-5.0, 5.0, -5.0, 5.0})},
      {"sphere", MirrorSurface::sphere(Vec3(0.3, -0.2, 0.1), 1.5, 1, ParamDomain{-2.0, 2.0, -2.0, 2.0})},
      {"ellipsoid", MirrorSurface::ellipsoid(Vec3(0.1, 0.2, -0.3), Vec3(2.0, 1.5, 1.0), 1,
                                             ParamDomain{-2.0, 2.0, -2.0, 2.0})},
      {"paraboloid", MirrorSurface::paraboloid(Vec3(0.0, 0.0, -1.0), Vec3::UnitZ(), 1.0, 1,
                                               ParamDomain{-3.0, 3.0, -3.0, 3.0})},
      {"wavy", wavy_surface()},
  };
}

inline MirrorSurface xy_plane() {
  return MirrorSurface::plane(Vec3::Zero(), Vec3::UnitZ(), ParamDomain{-10.0, 10.0, -10.0, 10.0});
}

inline MirrorSurface unit_sphere() {
  return MirrorSurface::sphere(Vec3::Zero(), 1.0, 1, ParamDomain{-3.0, 3.0, -3.0, 3.0});
}

inline MirrorSurface focal_ellipsoid() {
  return MirrorSurface::ellipsoid(Vec3::Zero(), Vec3(2.0, std::sqrt(3.0), std::sqrt(3.0)), 1,
                                  ParamDomain{-3.0, 3.0, -3.0, 3.0});
}

class Random {
 public:
  explicit Random(unsigned seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

  Vec3 unit() {
    std::normal_distribution<double> n;
    Vec3 v(n(gen_), n(gen_), n(gen_));
    return v.normalized();
  }

  /// Unit vector with z > zmin, away from the excluded south cap.
  Vec3 chart_unit(double zmin = -0.9) {
    while (true) {
      const Vec3 v = unit();
      if (v.z() > zmin) return v;
    }
  }

  Complex chart_xi(double zmin = -0.9) { return dir_to_xi(chart_unit(zmin)); }

  Complex in(const ParamDomain& d, double shrink = 0.9) {
    const Complex c = d.center();
    return {c.real() + shrink * 0.5 * d.width() * uniform(-1.0, 1.0),
            c.imag() + shrink * 0.5 * d.height() * uniform(-1.0, 1.0)};
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// A reflection at surface.point(mu): a non-grazing incoming direction whose
/// reflection is chart-valid too.
struct Bounce {
  Complex mu;
  Vec3 point;
  Vec3 normal;
  Vec3 d1;
  Vec3 d2;
};

inline Bounce random_bounce(const MirrorSurface& s, Random& rng, double min_cos = 0.2, double shrink = 0.9) {
  while (true) {
    const Complex mu = rng.in(s.domain(), shrink);
    const Vec3 p = s.point(mu);
    const Vec3 n = s.normal(mu);
    const Vec3 d1 = rng.chart_unit();
    if (std::abs(d1.dot(n)) < min_cos) continue;
    const Vec3 d2 = oracle::reflect_vec(d1, n);
    if (d2.z() <= -0.9) continue;
    return Bounce{mu, p, n, d1, d2};
  }
}

}  // namespace lineoptics::testing

#endif  // LINEOPTICS_TESTS_SUPPORT_HPP
