#include <doctest.h>

#include "lineoptics/characteristics.hpp"
#include "lineoptics/error.hpp"
#include "lineoptics/oracle.hpp"
#include "lineoptics/reflection.hpp"
#include "support.hpp"

using namespace lineoptics;
using namespace lineoptics::testing;

namespace {

bool near(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol; }

void check_reflection_law(const CharacteristicResult& r) {
  CHECK(chordal_distance(reflect_direction(r.xi0, r.xi1), r.xi2) < 1e-10);
}

}  // namespace

TEST_CASE("domain_T on the plane") {
  const MirrorSurface plane = xy_plane();
  const auto frames = domain_T(plane, CharQueryT{kSqrt2 + 1.0, kSqrt2 - 1.0});
  CHECK(frames.size() == 1);
  CHECK(domain_T(plane, CharQueryT{1.0, Complex(0, 1)}).empty());
  try {
    domain_T(plane, CharQueryT{0.5, 0.5});
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateInput);
  }
}

TEST_CASE("char_T fixtures") {
  for (const auto& r : char_T(xy_plane(), CharQueryT{kSqrt2 + 1.0, kSqrt2 - 1.0})) {
    CHECK(r.value == doctest::Approx(0.0));
    check_reflection_law(r);
  }
  const auto sphere = char_T(unit_sphere(), CharQueryT{-(kSqrt2 + 1.0), kSqrt2 + 1.0});
  REQUIRE(!sphere.empty());
  for (const auto& r : sphere) {
    CHECK(std::abs(r.value - kSqrt2) < 1e-9);
    CHECK(r.residual < 1e-10);
    check_reflection_law(r);
  }
}

TEST_CASE("T tends to zero as the directions merge") {
  const MirrorSurface sphere = unit_sphere();
  double previous = 1e300;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto res = char_T(sphere, CharQueryT{Complex(0.3, 0.1), Complex(0.3 + eps, 0.1)});
    REQUIRE(!res.empty());
    double largest = 0.0;
    for (const auto& r : res) largest = std::max(largest, r.value);
    CHECK(largest < previous);
    CHECK(largest < 3.0 * eps);
    previous = largest;
  }
}

TEST_CASE("domain_W and char_W fixtures on the plane") {
  const MirrorSurface plane = xy_plane();
  const CharQueryW q{Point3{0.0, 1.0}, kSqrt2 - 1.0};
  const auto roots = domain_W(plane, q);
  REQUIRE(roots.size() == 1);
  CHECK((to_vec3(roots[0].frame.foot) - Vec3(1, 0, 0)).norm() < 1e-9);
  CHECK(near(roots[0].xi1, kSqrt2 + 1.0, 1e-9));
  CHECK(roots[0].residual < 1e-12);

  const auto res = char_W(plane, q);
  REQUIRE(res.size() == 1);
  CHECK(std::abs(res[0].value - 1.0 / kSqrt2) < 1e-10);
  CHECK(std::abs(res[0].value - std::abs(*res[0].s1)) < 1e-12);  // r0 = 0 on this plane

  // An outgoing direction pointing down can only come from below the plane.
  CHECK(domain_W(plane, CharQueryW{Point3{0.0, 1.0}, dir_to_xi(Vec3(1, 0, -1).normalized())}).empty());
}

TEST_CASE("W from the centre of a sphere retraces radial rays") {
  const MirrorSurface sphere = MirrorSurface::sphere(Vec3::Zero(), 2.0, 1, ParamDomain{-3, 3, -3, 3});
  const Complex xi2(0.4, -0.3);
  const auto res = char_W(sphere, CharQueryW{Point3{0.0, 0.0}, xi2});
  REQUIRE(res.size() == 1);
  CHECK(chordal_distance(res[0].xi1, std::get<Complex>(antipode(xi2))) < 1e-9);
  CHECK((to_vec3(res[0].frame.foot) + 2.0 * xi_to_dir(xi2)).norm() < 1e-9);
  // Out to the mirror and back to the centre, which is the outgoing foot.
  CHECK(std::abs(res[0].value - 4.0) < 1e-9);
  check_reflection_law(res[0]);
}

TEST_CASE("W with the source at the outgoing foot is the full path") {
  // Choose p1 so that the closest point of the outgoing ray to the origin
  // is the reflection point itself; W is then |p1 -> P|.
  const MirrorSurface plane = MirrorSurface::plane(Vec3(0, 0, -1), Vec3::UnitZ(), ParamDomain{-10, 10, -10, 10});
  const Vec3 P(1, 0, -1);
  const Vec3 d2 = Vec3(1, 0, 1).normalized();  // P . d2 = 0
  const Vec3 d1 = oracle::reflect_vec(d2, Vec3::UnitZ());
  const Vec3 p1 = P - 1.7 * d1;
  const auto res = char_W(plane, CharQueryW{to_point3(p1), dir_to_xi(d2)});
  REQUIRE(res.size() == 1);
  CHECK(std::abs(res[0].value - 1.7) < 1e-10);
}

TEST_CASE("domain_V and char_V fixtures") {
  const MirrorSurface plane = xy_plane();
  const CharQueryV q{Point3{0.0, 1.0}, Point3{2.0, 1.0}};
  const auto roots = domain_V(plane, q);
  REQUIRE(roots.size() == 1);
  CHECK((to_vec3(roots[0].frame.foot) - Vec3(1, 0, 0)).norm() < 1e-9);
  CHECK(near(roots[0].xi1, kSqrt2 + 1.0, 1e-9));

  const auto res = char_V(plane, q);
  REQUIRE(res.size() == 1);
  CHECK(std::abs(res[0].value - 2.0 * kSqrt2) < 1e-10);
  CHECK(std::abs(*res[0].s1 + 1.0 / kSqrt2) < 1e-10);
  CHECK(std::abs(*res[0].s2 - 3.0 / kSqrt2) < 1e-10);

  const auto retro = char_V(unit_sphere(), CharQueryV{Point3{2.0, 0.0}, Point3{2.0, 0.0}});
  bool found = false;
  for (const auto& r : retro) {
    if ((to_vec3(r.frame.foot) - Vec3(1, 0, 0)).norm() < 1e-9) {
      found = true;
      CHECK(std::abs(r.value - 2.0) < 1e-10);
      CHECK((xi_to_dir(r.xi1) - Vec3(-1, 0, 0)).norm() < 1e-9);
    }
  }
  CHECK(found);
}

TEST_CASE("V requires p2 ahead of the outgoing ray") {
  // The radial line through (1,0,0) satisfies the line equations, but p2
  // sits behind the mirror there. Occlusion is not modelled, so the far side
  // at (-1,0,0) remains.
  const MirrorSurface sphere = unit_sphere();
  const Vec3 p1(2, 0, 0);
  const Vec3 p2(0.5, 0, 0);
  const auto roots = domain_V(sphere, CharQueryV{to_point3(p1), to_point3(p2)});
  REQUIRE(roots.size() == 1);
  CHECK((to_vec3(roots[0].frame.foot) - Vec3(-1, 0, 0)).norm() < 1e-9);
  const auto paths = oracle::oracle_V(sphere, p1, p2);
  REQUIRE(paths.size() == 1);
  CHECK((paths[0].point - Vec3(-1, 0, 0)).norm() < 1e-9);
}

TEST_CASE("V finds a root next to the source") {
  // p1 sits 0.03 from the sphere; the root's basin is far smaller than a
  // grid cell.
  const MirrorSurface& sphere = catalog()[1].surface;
  const Vec3 p1(0.844368, -1.2873, 0.929694);
  const Vec3 p2(-0.114793, 0.938221, -0.839291);
  const auto paths = oracle::oracle_V(sphere, p1, p2);
  const auto res = char_V(sphere, CharQueryV{to_point3(p1), to_point3(p2)});
  REQUIRE(res.size() == paths.size());
  bool near_source = false;
  for (std::size_t k = 0; k < res.size(); ++k) {
    CHECK((to_vec3(res[k].frame.foot) - paths[k].point).norm() < 1e-9);
    CHECK(std::abs(res[k].value - paths[k].value) < 1e-9);
    near_source = near_source || (paths[k].point - p1).norm() < 0.05;
  }
  CHECK(near_source);
}

TEST_CASE("ellipsoid focal property") {
  const auto res = char_V(focal_ellipsoid(), CharQueryV{Point3{1.0, 0.0}, Point3{-1.0, 0.0}});
  CHECK(res.size() >= 8);
  for (const auto& r : res) {
    CHECK(std::abs(r.value - 4.0) < 1e-7);
    CHECK(r.residual < 1e-10);
  }
}

TEST_CASE("V roots also solve the W equation") {
  Random rng(41);
  for (const auto& [name, s] : catalog()) {
    CAPTURE(name);
    for (int i = 0; i < 5; ++i) {
      const Bounce b = random_bounce(s, rng);
      const Vec3 p1 = b.point - rng.uniform(0.5, 3.0) * b.d1;
      const Vec3 p2 = b.point + rng.uniform(0.5, 3.0) * b.d2;
      const auto roots = domain_V(s, CharQueryV{to_point3(p1), to_point3(p2)});
      CHECK(!roots.empty());
      for (const auto& r : roots) {
        CHECK(r.residual < 1e-10);
        CHECK(w_residual(r.frame, to_point3(p1), r.xi2) < 1e-9);
      }
    }
  }
}

TEST_CASE("facing r0 turns chordal r0 into r2 - r1") {
  Random rng(42);
  for (const auto& [name, s] : catalog()) {
    for (int i = 0; i < 50; ++i) {
      const Bounce b = random_bounce(s, rng);
      const SurfaceFrame f = frame_at(s, b.mu);
      const Complex xi1 = dir_to_xi(b.d1);
      const Complex xi2 = dir_to_xi(b.d2);
      const double r1 = b.point.dot(b.d1);
      const double r2 = b.point.dot(b.d2);
      CHECK(std::abs(chordal_distance(xi1, xi2) * facing_r0(f, xi1) - (r2 - r1)) < 1e-10 * (1.0 + b.point.norm()));
    }
  }
}
