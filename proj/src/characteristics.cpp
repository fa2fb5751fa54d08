#include "lineoptics/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <tuple>

#include <Eigen/Geometry>

#include "lineoptics/error.hpp"
#include "lineoptics/reflection.hpp"

namespace lineoptics {

namespace {

constexpr double kFamilyTolerance = 1e-9;

// Grid seeds plus a finer patch around the grid point nearest each query
// point. Roots whose reflection point sits close to a query point have small
// basins that the coarse grid misses.
std::vector<Complex> param_seeds(const MirrorSurface& surface, int grid, std::initializer_list<Vec3> near = {}) {
  constexpr int kPatch = 8;
  const ParamDomain& d = surface.domain();
  std::vector<Complex> seeds = grid_seeds(d, grid);
  const std::size_t coarse = seeds.size();
  for (const Vec3& q : near) {
    const Complex* best = nullptr;
    double best_dist = INFINITY;
    for (std::size_t k = 0; k < coarse; ++k) {
      const double dist = (surface.point(seeds[k]) - q).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = &seeds[k];
      }
    }
    if (!best) continue;
    const Complex c = *best;
    const double hu = d.width() / grid;
    const double hv = d.height() / grid;
    const ParamDomain patch{std::max(d.re_min, c.real() - hu), std::min(d.re_max, c.real() + hu),
                            std::max(d.im_min, c.imag() - hv), std::min(d.im_max, c.imag() + hv)};
    for (const Complex& s : grid_seeds(patch, kPatch)) seeds.push_back(s);
  }
  return seeds;
}

std::vector<VectorX> mu_seeds(const std::vector<Complex>& params) {
  std::vector<VectorX> seeds;
  for (const Complex& s : params) seeds.push_back(Eigen::Vector2d(s.real(), s.imag()));
  return seeds;
}

Complex mu_of(const VectorX& x) { return {x[0], x[1]}; }

void require_distinct(Complex xi1, Complex xi2) {
  if (std::abs(xi1 - xi2) < 1e-12) {
    throw Error(ErrorKind::DegenerateInput, "incoming and outgoing directions coincide");
  }
}

[[noreturn]] void solver_failure(const char* what) {
  throw Error(ErrorKind::SolverFailure, std::string(what) + " search stalled without a certified root");
}

// (1 + |p1| + |p2| + |foot|), the length scale the equations are divided by.
double length_scale(const SurfaceFrame& f, const Point3& p1, const Point3* p2 = nullptr) {
  double s = 1.0 + to_vec3(p1).norm() + to_vec3(f.foot).norm();
  if (p2) s += to_vec3(*p2).norm();
  return s;
}

double chordal_term(Complex xi1, Complex xi2, double r0) { return chordal_distance(xi1, xi2) * r0; }

CharacteristicResult base_result(const SurfaceFrame& frame, Complex xi1, Complex xi2) {
  CharacteristicResult out;
  out.frame = frame;
  out.xi0 = frame.xi0;
  out.xi1 = xi1;
  out.xi2 = xi2;
  out.r1 = eta_r_of_point(xi1, frame.foot).r;
  out.r2 = out.r1 - 2.0 * incidence_cosine(frame.xi0, xi1) * frame.r0;
  return out;
}

bool mu_less(const Complex& a, const Complex& b) {
  return std::make_tuple(a.real(), a.imag()) < std::make_tuple(b.real(), b.imag());
}

}  // namespace

double facing_r0(const SurfaceFrame& frame, Complex xi1) {
  return incidence_cosine(frame.xi0, xi1) > 0.0 ? -frame.r0 : frame.r0;
}

// --- T ---------------------------------------------------------------------

std::vector<SurfaceFrame> domain_T(const MirrorSurface& surface, const CharQueryT& q,
                                   const SolveOptions& opts) {
  require_in_chart(q.xi1, "incoming direction");
  require_in_chart(q.xi2, "outgoing direction");
  require_distinct(q.xi1, q.xi2);

  const ExtendedXi normal = mirror_normal(q.xi1, q.xi2);
  const Vec3 target = std::holds_alternative<AtInfinity>(normal) ? Vec3(0.0, 0.0, -1.0)
                                                                 : xi_to_dir(std::get<Complex>(normal));

  // n(mu) x target vanishes for either orientation of the normal.
  const ResidualMap residual = [&](const VectorX& x) -> std::optional<VectorX> {
    try {
      const SurfaceFrame f = frame_at_unchecked(surface, mu_of(x));
      return VectorX(xi_to_dir(f.xi0).cross(target));
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const MultistartReport report =
      multistart_solve(residual, mu_seeds(param_seeds(surface, opts.grid)), opts,
                       [&](const VectorX& x) { return surface.domain().contains(mu_of(x)); });
  if (report.roots.empty() && report.stalled_near_root) solver_failure("angle-characteristic domain");

  std::vector<SurfaceFrame> frames;
  for (const auto& root : report.roots) {
    const SurfaceFrame f = frame_at(surface, mu_of(root.x));
    const bool same_family = std::any_of(frames.begin(), frames.end(), [&](const SurfaceFrame& g) {
      return chordal_distance(g.xi0, f.xi0) < kFamilyTolerance &&
             std::abs(g.r0 - f.r0) <= kFamilyTolerance * std::max(1.0, std::abs(f.r0));
    });
    if (!same_family) frames.push_back(f);
  }
  return frames;
}

std::vector<CharacteristicResult> char_T(const MirrorSurface& surface, const CharQueryT& q,
                                         const SolveOptions& opts) {
  const ExtendedXi normal = mirror_normal(q.xi1, q.xi2);
  const Vec3 target = std::holds_alternative<AtInfinity>(normal) ? Vec3(0.0, 0.0, -1.0)
                                                                 : xi_to_dir(std::get<Complex>(normal));
  std::vector<CharacteristicResult> out;
  for (const SurfaceFrame& f : domain_T(surface, q, opts)) {
    CharacteristicResult res = base_result(f, q.xi1, q.xi2);
    res.value = std::abs(chordal_term(q.xi1, q.xi2, f.r0));
    const double gauss = xi_to_dir(f.xi0).cross(target).cwiseAbs().maxCoeff();
    const double law = chordal_distance(reflect_direction(f.xi0, q.xi1), q.xi2);
    res.residual = std::max(gauss, law);
    out.push_back(res);
  }
  return out;
}

// --- W ---------------------------------------------------------------------

Complex w_equation(const SurfaceFrame& frame, const Point3& p1, Complex xi2) {
  const Complex xi0 = frame.xi0;
  const double a0 = std::norm(xi0);
  const Complex den = (1.0 - a0) * std::conj(xi2) - 2.0 * std::conj(xi0);
  const Complex num = 2.0 * xi0 * std::conj(xi2) + 1.0 - a0;
  const Complex lhs = p1.z * den * den - 2.0 * p1.t * den * num - std::conj(p1.z) * num * num;
  const Complex u = std::conj(xi0) - std::conj(xi2);
  const Complex v = 1.0 + xi0 * std::conj(xi2);
  const Complex rhs = 2.0 * (u * u * frame.eta0 - v * v * std::conj(frame.eta0) + u * v * (1.0 + a0) * frame.r0);
  return lhs - rhs;
}

double w_residual(const SurfaceFrame& frame, const Point3& p1, Complex xi2) {
  const double s0 = 1.0 + std::norm(frame.xi0);
  const double scale = s0 * s0 * (1.0 + std::norm(xi2)) * length_scale(frame, p1);
  return std::abs(w_equation(frame, p1, xi2)) / scale;
}

std::vector<DomainRoot> domain_W(const MirrorSurface& surface, const CharQueryW& q, const SolveOptions& opts) {
  require_in_chart(q.xi2, "outgoing direction");

  const ResidualMap residual = [&](const VectorX& x) -> std::optional<VectorX> {
    try {
      const SurfaceFrame f = frame_at_unchecked(surface, mu_of(x));
      const double s0 = 1.0 + std::norm(f.xi0);
      const double scale = s0 * s0 * (1.0 + std::norm(q.xi2)) * length_scale(f, q.p1);
      const Complex e = w_equation(f, q.p1, q.xi2) / scale;
      return VectorX(Eigen::Vector2d(e.real(), e.imag()));
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const MultistartReport report =
      multistart_solve(residual, mu_seeds(param_seeds(surface, opts.grid, {to_vec3(q.p1)})), opts,
                       [&](const VectorX& x) { return surface.domain().contains(mu_of(x)); });
  if (report.roots.empty() && report.stalled_near_root) solver_failure("mixed-characteristic domain");

  std::vector<DomainRoot> roots;
  for (const auto& root : report.roots) {
    const SurfaceFrame f = frame_at(surface, mu_of(root.x));
    Complex xi1;
    try {
      xi1 = inverse_reflect_direction(f.xi0, q.xi2);
    } catch (const Error&) {
      continue;  // incoming direction is the excluded south pole
    }
    // The ray from p1 must reach the reflection point.
    const double travel = eta_r_of_point(xi1, f.foot).r - eta_r_of_point(xi1, q.p1).r;
    if (travel < -kFamilyTolerance * length_scale(f, q.p1)) continue;
    roots.push_back(DomainRoot{f, xi1, q.xi2, w_residual(f, q.p1, q.xi2)});
  }
  return roots;
}

std::vector<CharacteristicResult> char_W(const MirrorSurface& surface, const CharQueryW& q,
                                         const SolveOptions& opts) {
  std::vector<CharacteristicResult> out;
  for (const DomainRoot& root : domain_W(surface, q, opts)) {
    CharacteristicResult res = base_result(root.frame, root.xi1, root.xi2);
    res.s1 = eta_r_of_point(root.xi1, q.p1).r;
    res.value = std::abs(*res.s1 + chordal_term(root.xi1, root.xi2, facing_r0(root.frame, root.xi1)));
    res.residual = root.residual;
    out.push_back(res);
  }
  return out;
}

// --- V ---------------------------------------------------------------------

std::pair<Complex, Complex> v_equations(const SurfaceFrame& frame, const Point3& p1, const Point3& p2,
                                        Complex xi1) {
  const Complex xi0 = frame.xi0;
  const double a0 = std::norm(xi0);
  const double s0 = 1.0 + a0;
  const Complex c1 = std::conj(xi1);

  const Complex den = (1.0 - a0) * c1 - 2.0 * std::conj(xi0);
  const Complex num = 2.0 * xi0 * c1 + 1.0 - a0;
  const Complex u = std::conj(xi0) - c1;
  const Complex v = 1.0 + xi0 * c1;
  const Complex outgoing = p2.z * den * den - 2.0 * p2.t * den * num - std::conj(p2.z) * num * num +
                           s0 * s0 * (std::conj(p1.z) - 2.0 * p1.t * c1 - p1.z * c1 * c1) -
                           4.0 * u * v * s0 * frame.r0;

  const Complex a = 1.0 + std::conj(xi0) * xi1;
  const Complex b = xi0 - xi1;
  const Complex incoming = s0 * s0 * (p1.z - 2.0 * p1.t * xi1 - std::conj(p1.z) * xi1 * xi1) -
                           (2.0 * a * a * frame.eta0 - 2.0 * b * b * std::conj(frame.eta0) +
                            2.0 * a * b * s0 * frame.r0);
  return {outgoing, incoming};
}

double v_residual(const SurfaceFrame& frame, const Point3& p1, const Point3& p2, Complex xi1) {
  const double s0 = 1.0 + std::norm(frame.xi0);
  const double scale = s0 * s0 * (1.0 + std::norm(xi1)) * length_scale(frame, p1, &p2);
  const auto [e1, e2] = v_equations(frame, p1, p2, xi1);
  return std::max(std::abs(e1), std::abs(e2)) / scale;
}

std::vector<DomainRoot> domain_V(const MirrorSurface& surface, const CharQueryV& q, const SolveOptions& opts) {
  const ResidualMap residual = [&](const VectorX& x) -> std::optional<VectorX> {
    const Complex xi1(x[2], x[3]);
    if (!in_chart(xi1)) return std::nullopt;
    try {
      const SurfaceFrame f = frame_at_unchecked(surface, mu_of(x));
      const double s0 = 1.0 + std::norm(f.xi0);
      const double scale = s0 * s0 * (1.0 + std::norm(xi1)) * length_scale(f, q.p1, &q.p2);
      const auto [e1, e2] = v_equations(f, q.p1, q.p2, xi1);
      VectorX out(4);
      out << e1.real() / scale, e1.imag() / scale, e2.real() / scale, e2.imag() / scale;
      return out;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  // Seed xi1 with the direction from p1 to the seed's foot point.
  std::vector<VectorX> seeds;
  const Vec3 p1 = to_vec3(q.p1);
  for (const Complex& mu : param_seeds(surface, opts.grid, {p1, to_vec3(q.p2)})) {
    const Vec3 delta = surface.point(mu) - p1;
    const double len = delta.norm();
    if (!(len > 1e-9)) continue;
    try {
      const Complex xi1 = dir_to_xi(delta / len);
      VectorX s(4);
      s << mu.real(), mu.imag(), xi1.real(), xi1.imag();
      seeds.push_back(s);
    } catch (const Error&) {
    }
  }

  const MultistartReport report = multistart_solve(residual, seeds, opts, [&](const VectorX& x) {
    return surface.domain().contains(mu_of(x)) && in_chart(Complex(x[2], x[3]));
  });
  if (report.roots.empty() && report.stalled_near_root) solver_failure("point-characteristic domain");

  std::vector<DomainRoot> roots;
  for (const auto& root : report.roots) {
    const SurfaceFrame f = frame_at(surface, mu_of(root.x));
    Complex xi1(root.x[2], root.x[3]);
    // Orient the incoming line from p1 towards the foot.
    const double travel = eta_r_of_point(xi1, f.foot).r - eta_r_of_point(xi1, q.p1).r;
    if (travel < 0.0) {
      const ExtendedXi flipped = antipode(xi1);
      if (std::holds_alternative<AtInfinity>(flipped) || !in_chart(std::get<Complex>(flipped))) continue;
      xi1 = std::get<Complex>(flipped);
    }
    Complex xi2;
    try {
      xi2 = reflect_direction(f.xi0, xi1);
    } catch (const Error&) {
      continue;
    }
    // p2 must lie ahead on the outgoing ray.
    const double ahead = eta_r_of_point(xi2, q.p2).r - eta_r_of_point(xi2, f.foot).r;
    if (ahead < -kFamilyTolerance * length_scale(f, q.p1, &q.p2)) continue;
    const DomainRoot cand{f, xi1, xi2, v_residual(f, q.p1, q.p2, xi1)};
    if (!(cand.residual < opts.newton.accept)) continue;
    const bool dup = std::any_of(roots.begin(), roots.end(), [&](const DomainRoot& r) {
      return std::hypot(std::abs(r.frame.mu - cand.frame.mu), std::abs(r.xi1 - cand.xi1)) < opts.dedup;
    });
    if (!dup) roots.push_back(cand);
  }
  std::sort(roots.begin(), roots.end(), [](const DomainRoot& a, const DomainRoot& b) {
    if (a.frame.mu != b.frame.mu) return mu_less(a.frame.mu, b.frame.mu);
    return mu_less(a.xi1, b.xi1);
  });
  return roots;
}

std::vector<CharacteristicResult> char_V(const MirrorSurface& surface, const CharQueryV& q,
                                         const SolveOptions& opts) {
  std::vector<CharacteristicResult> out;
  for (const DomainRoot& root : domain_V(surface, q, opts)) {
    CharacteristicResult res = base_result(root.frame, root.xi1, root.xi2);
    res.s1 = eta_r_of_point(root.xi1, q.p1).r;
    res.s2 = eta_r_of_point(root.xi2, q.p2).r;
    res.value = std::abs(*res.s1 - *res.s2 + chordal_term(root.xi1, root.xi2, facing_r0(root.frame, root.xi1)));
    res.residual = root.residual;
    out.push_back(res);
  }
  return out;
}

}  // namespace lineoptics
