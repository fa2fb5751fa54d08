#ifndef LINEOPTICS_ORACLE_HPP
#define LINEOPTICS_ORACLE_HPP

#include <optional>
#include <vector>

#include "lineoptics/line_space.hpp"
#include "lineoptics/surfaces.hpp"

// Reference raytracer in plain vector algebra. It only touches the surface
// through point(), param_of() and the shape parameters; nothing here goes
// through the complex line coordinates.
namespace lineoptics::oracle {

struct Ray3 {
  Vec3 origin;
  Vec3 dir;  // unit
};

struct Hit {
  Vec3 point;
  Vec3 normal;  // oriented unit normal
  double arclength = 0.0;
  Complex mu;
};

/// Forward intersections (arclength > -1e-9) inside the parameter rectangle,
/// sorted by arclength. Closed form for the quadric kinds; Newton in
/// (mu, arclength) from a seed grid for parametric surfaces.
std::vector<Hit> intersect(const MirrorSurface& surface, const Ray3& ray);

/// d - 2 (d . n) n.
Vec3 reflect_vec(const Vec3& d, const Vec3& n);

/// Closest point to the origin of the ray's line, and signed parameters of
/// points on it measured from there.
struct FootParams {
  Vec3 q;
  Vec3 dir;
  double r_of(const Vec3& p) const { return p.dot(dir); }
};
FootParams foot_params(const Ray3& ray);

/// Oriented unit normal at a surface point with parameter mu.
Vec3 normal_at(const MirrorSurface& surface, const Vec3& point, Complex mu);

/// One single-reflection path. s1, s2 are zero when the query has no
/// corresponding endpoint.
struct Path {
  Complex mu;
  Vec3 point;
  Vec3 normal;
  Vec3 d1;
  Vec3 d2;
  double r1 = 0.0;
  double r2 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double value = 0.0;
  double residual = 0.0;
};

struct OracleOptions {
  int grid = 128;           // specular-point search grid per side
  double accept = 1e-9;     // max residual of a polished path
  double dedup = 1e-6;      // paths whose reflection points are this close merge
};

/// Paths reflecting direction d1 into d2; value |r1 - r2|. Paths in one flat
/// family (same normal, same value) are reported once.
std::vector<Path> oracle_T(const MirrorSurface& surface, const Vec3& d1, const Vec3& d2,
                           const OracleOptions& opts = {});

/// Rays from p1 that leave in direction d2; value |r1 - s1 - r2|.
std::vector<Path> oracle_W(const MirrorSurface& surface, const Vec3& p1, const Vec3& d2,
                           const OracleOptions& opts = {});

/// Paths from p1 to p2, with p2 ahead on the outgoing ray; value |s2 - s1 + r1 - r2|.
std::vector<Path> oracle_V(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2,
                           const OracleOptions& opts = {});

/// The path p1 -> point(mu) -> p2 if point(mu) is a specular point for the
/// pair (residual below opts.accept).
std::optional<Path> confirm_V(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2, Complex mu,
                              const OracleOptions& opts = {});

}  // namespace lineoptics::oracle

#endif  // LINEOPTICS_ORACLE_HPP
