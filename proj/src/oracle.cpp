#include "lineoptics/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace lineoptics::oracle {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using Residual = std::function<std::optional<Vec3>(Complex)>;

constexpr double kForward = -1e-9;
constexpr int kParametricSeeds = 24;

// Real roots of a s^2 + b s + c, tolerant of a vanishing leading term.
std::vector<double> quadratic_roots(double a, double b, double c) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  std::vector<double> out{q / a};
  if (q != 0.0) out.push_back(c / q);
  return out;
}

std::vector<double> ray_parameters(const MirrorSurface& surface, const Ray3& ray) {
  const Vec3& o = ray.origin;
  const Vec3& d = ray.dir;
  return std::visit(
      Overloaded{
          [&](const PlaneShape& s) -> std::vector<double> {
            const double nd = s.normal.dot(d);
            if (std::abs(nd) < 1e-15) return {};
            return {s.normal.dot(s.base - o) / nd};
          },
          [&](const SphereShape& s) -> std::vector<double> {
            const Vec3 w = o - s.center;
            return quadratic_roots(d.squaredNorm(), 2.0 * w.dot(d), w.squaredNorm() - s.radius * s.radius);
          },
          [&](const EllipsoidShape& s) -> std::vector<double> {
            const Vec3 w = (o - s.center).cwiseQuotient(s.semi_axes);
            const Vec3 e = d.cwiseQuotient(s.semi_axes);
            return quadratic_roots(e.squaredNorm(), 2.0 * w.dot(e), w.squaredNorm() - 1.0);
          },
          [&](const ParaboloidShape& s) -> std::vector<double> {
            // |x|^2 - (a.x)^2 = 4 f (a.x) with x = o + s d - vertex.
            const Vec3 w = o - s.vertex;
            const double ad = s.axis.dot(d);
            const double aw = s.axis.dot(w);
            const double f4 = 4.0 * s.focal_length;
            return quadratic_roots(d.squaredNorm() - ad * ad, 2.0 * (w.dot(d) - aw * ad) - f4 * ad,
                                   w.squaredNorm() - aw * aw - f4 * aw);
          },
          [&](const ParametricShape&) -> std::vector<double> { return {}; },
      },
      surface.shape());
}

// Newton on position(mu) = origin + s dir from a grid of seeds.
std::vector<Hit> intersect_parametric(const MirrorSurface& surface, const Ray3& ray) {
  std::vector<Hit> hits;
  const ParamDomain& dom = surface.domain();
  const double h = 1e-7;
  for (const Complex& seed : grid_seeds(dom, kParametricSeeds)) {
    Eigen::Vector3d x(seed.real(), seed.imag(), (surface.point(seed) - ray.origin).dot(ray.dir));
    auto F = [&](const Eigen::Vector3d& y) {
      return Vec3(surface.point({y[0], y[1]}) - ray.origin - y[2] * ray.dir);
    };
    Vec3 f = F(x);
    for (int it = 0; it < 40 && f.norm() > 1e-14; ++it) {
      Eigen::Matrix3d J;
      J.col(0) = (F(x + Eigen::Vector3d(h, 0, 0)) - F(x - Eigen::Vector3d(h, 0, 0))) / (2.0 * h);
      J.col(1) = (F(x + Eigen::Vector3d(0, h, 0)) - F(x - Eigen::Vector3d(0, h, 0))) / (2.0 * h);
      J.col(2) = -ray.dir;
      const Eigen::Vector3d step = J.colPivHouseholderQr().solve(-f);
      if (!step.allFinite()) break;
      x += step;
      f = F(x);
      if (step.norm() < 1e-15) break;
    }
    const Complex mu(x[0], x[1]);
    if (!(f.norm() < 1e-11) || !dom.contains(mu) || x[2] <= kForward) continue;
    const Vec3 p = surface.point(mu);
    const bool dup = std::any_of(hits.begin(), hits.end(), [&](const Hit& g) { return (g.point - p).norm() < 1e-8; });
    if (!dup) hits.push_back(Hit{p, normal_at(surface, p, mu), x[2], mu});
  }
  return hits;
}

// Gauss-Newton on |residual(mu)| with a central-difference Jacobian and a
// least-squares step.
std::optional<Complex> polish(const Residual& residual, Complex mu) {
  auto eval = [&](const Eigen::Vector2d& x) -> std::optional<Vec3> { return residual({x[0], x[1]}); };
  Eigen::Vector2d x(mu.real(), mu.imag());
  std::optional<Vec3> r = eval(x);
  if (!r) return std::nullopt;
  for (int it = 0; it < 60 && r->norm() > 1e-15; ++it) {
    Eigen::Matrix<double, 3, 2> J;
    bool ok = true;
    for (int k = 0; k < 2 && ok; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[k]));
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[k] = h;
      const auto fp = eval(x + e);
      const auto fm = eval(x - e);
      ok = fp && fm;
      if (ok) J.col(k) = (*fp - *fm) / (2.0 * h);
    }
    if (!ok) break;
    Eigen::Vector2d step = J.completeOrthogonalDecomposition().solve(-*r);
    if (!step.allFinite()) break;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const auto trial = eval(x + step);
      if (trial && trial->norm() < r->norm()) {
        x += step;
        r = trial;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return Complex(x[0], x[1]);
}

// Indices of grid values no larger than any of their eight neighbours.
std::vector<std::size_t> local_minima(const std::vector<double>& f, int n) {
  std::vector<std::size_t> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = f[static_cast<std::size_t>(i * n + j)];
      if (!std::isfinite(v)) continue;
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di;
          const int b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= n || b >= n) continue;
          if (f[static_cast<std::size_t>(a * n + b)] < v) {
            minimum = false;
            break;
          }
        }
      }
      if (minimum) out.push_back(static_cast<std::size_t>(i * n + j));
    }
  }
  return out;
}

std::vector<double> sample(const Residual& residual, const std::vector<Complex>& seeds) {
  std::vector<double> f(seeds.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (const auto r = residual(seeds[k])) f[k] = r->norm();
  }
  return f;
}

// Tangential part of w in the surface's coordinate directions; zero exactly
// where w is parallel to the normal.
std::optional<Eigen::Vector2d> tangential(const MirrorSurface& surface, const Residual& w, Complex mu) {
  const auto v = w(mu);
  if (!v) return std::nullopt;
  const double hu = 1e-6 * std::max(1.0, std::abs(mu.real()));
  const double hv = 1e-6 * std::max(1.0, std::abs(mu.imag()));
  const Vec3 pu = surface.point(mu + hu) - surface.point(mu - hu);
  const Vec3 pv = surface.point(mu + Complex(0.0, hv)) - surface.point(mu - Complex(0.0, hv));
  const Eigen::Vector2d f(v->dot(pu.normalized()), v->dot(pv.normalized()));
  if (!f.allFinite()) return std::nullopt;
  return f;
}

// Centres of node-grid cells in which both tangential components change sign.
std::vector<Complex> sign_change_cells(const MirrorSurface& surface, const Residual& w, int n) {
  const ParamDomain& d = surface.domain();
  auto node = [&](int i, int j) {
    return Complex(d.re_min + d.width() * i / n, d.im_min + d.height() * j / n);
  };
  std::vector<std::optional<Eigen::Vector2d>> f(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) f[static_cast<std::size_t>(i * (n + 1) + j)] = tangential(surface, w, node(i, j));
  }
  std::vector<Complex> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      bool ok = true;
      Eigen::Vector2d lo = Eigen::Vector2d::Constant(INFINITY);
      Eigen::Vector2d hi = Eigen::Vector2d::Constant(-INFINITY);
      for (int di = 0; di <= 1 && ok; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
          const auto& v = f[static_cast<std::size_t>((i + di) * (n + 1) + j + dj)];
          if (!v) {
            ok = false;
            break;
          }
          lo = lo.cwiseMin(*v);
          hi = hi.cwiseMax(*v);
        }
      }
      if (ok && lo[0] <= 0.0 && hi[0] >= 0.0 && lo[1] <= 0.0 && hi[1] >= 0.0) {
        out.push_back(0.5 * (node(i, j) + node(i + 1, j + 1)));
      }
    }
  }
  return out;
}

// Candidate roots come from cells where both tangential components of the
// bisector w change sign, and from local minima of |search| with a finer grid
// around each. Candidates are polished on search and kept inside the
// rectangle where |check| is below the acceptance threshold. The search
// residual shares the zeros of the check residual but stays smooth where the
// reflection point approaches a query point.
std::vector<Complex> specular_points(const MirrorSurface& surface, const Residual& bisector, const Residual& search,
                                     const Residual& check, const OracleOptions& opts) {
  constexpr int kRefine = 15;
  const ParamDomain& d = surface.domain();
  const int n = opts.grid;
  const std::vector<Complex> seeds = grid_seeds(d, n);
  const std::vector<double> f = sample(search, seeds);
  const Complex cell(d.width() / n, d.height() / n);

  std::vector<Complex> roots;
  auto try_seed = [&](Complex seed) {
    const auto mu = polish(search, seed);
    if (!mu || !d.contains(*mu)) return;
    const auto r = check(*mu);
    if (r && r->norm() < opts.accept) roots.push_back(*mu);
  };
  for (const Complex& c : sign_change_cells(surface, bisector, n)) try_seed(c);
  for (const std::size_t k : local_minima(f, n)) {
    try_seed(seeds[k]);
    // Close root pairs near a fold share one coarse minimum; polish from a
    // finer grid over the surrounding 5x5 cells to separate them.
    const Complex c = seeds[k];
    const ParamDomain box{std::max(d.re_min, c.real() - 2.5 * cell.real()),
                          std::min(d.re_max, c.real() + 2.5 * cell.real()),
                          std::max(d.im_min, c.imag() - 2.5 * cell.imag()),
                          std::min(d.im_max, c.imag() + 2.5 * cell.imag())};
    for (const Complex& seed : grid_seeds(box, kRefine)) try_seed(seed);
  }
  return roots;
}

void add_unique(std::vector<Path>& paths, const Path& p, double dedup) {
  for (Path& q : paths) {
    if ((q.point - p.point).norm() < dedup) {
      if (p.residual < q.residual) q = p;
      return;
    }
  }
  paths.push_back(p);
}

void sort_paths(std::vector<Path>& paths) {
  std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
    if (a.mu.real() != b.mu.real()) return a.mu.real() < b.mu.real();
    return a.mu.imag() < b.mu.imag();
  });
}

Vec3 unit_or_zero(const Vec3& v) {
  const double n = v.norm();
  return n > 1e-12 ? Vec3(v / n) : Vec3::Zero();
}

}  // namespace

Vec3 reflect_vec(const Vec3& d, const Vec3& n) { return d - 2.0 * d.dot(n) * n; }

FootParams foot_params(const Ray3& ray) {
  return FootParams{ray.origin - ray.origin.dot(ray.dir) * ray.dir, ray.dir};
}

Vec3 normal_at(const MirrorSurface& surface, const Vec3& point, Complex mu) {
  const Vec3 outward = std::visit(
      Overloaded{
          [&](const PlaneShape& s) -> Vec3 { return s.normal; },
          [&](const SphereShape& s) -> Vec3 { return (point - s.center).normalized(); },
          [&](const EllipsoidShape& s) -> Vec3 {
            return (point - s.center).cwiseQuotient(s.semi_axes.cwiseProduct(s.semi_axes)).normalized();
          },
          [&](const ParaboloidShape& s) -> Vec3 {
            const Vec3 w = point - s.vertex;
            const Vec3 radial = w - s.axis.dot(w) * s.axis;
            return (s.axis - radial / (2.0 * s.focal_length)).normalized();
          },
          // normal() is already oriented; undo it here.
          [&](const ParametricShape&) -> Vec3 { return surface.orientation() * surface.normal(mu); },
      },
      surface.shape());
  return surface.orientation() * outward;
}

std::vector<Hit> intersect(const MirrorSurface& surface, const Ray3& ray) {
  std::vector<Hit> hits;
  if (surface.kind() == SurfaceKind::Parametric) {
    hits = intersect_parametric(surface, ray);
  } else {
    for (double s : ray_parameters(surface, ray)) {
      if (!(s > kForward)) continue;
      const Vec3 p = ray.origin + s * ray.dir;
      const auto mu = surface.param_of(p);
      if (!mu || !surface.domain().contains(*mu)) continue;
      hits.push_back(Hit{p, normal_at(surface, p, *mu), s, *mu});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.arclength < b.arclength; });
  return hits;
}

std::vector<Path> oracle_T(const MirrorSurface& surface, const Vec3& d1, const Vec3& d2,
                           const OracleOptions& opts) {
  const Vec3 target = unit_or_zero(d1 - d2);
  if (target.isZero()) return {};
  const Residual residual = [&](Complex mu) -> std::optional<Vec3> {
    const Vec3 p = surface.point(mu);
    if (!p.allFinite()) return std::nullopt;
    return Vec3(normal_at(surface, p, mu).cross(target));
  };
  std::vector<Path> paths;
  const Residual bisector = [&](Complex) -> std::optional<Vec3> { return target; };
  for (const Complex& mu : specular_points(surface, bisector, residual, residual, opts)) {
    Path p;
    p.mu = mu;
    p.point = surface.point(mu);
    p.normal = normal_at(surface, p.point, mu);
    p.d1 = d1;
    p.d2 = d2;
    p.r1 = p.point.dot(d1);
    p.r2 = p.point.dot(d2);
    p.value = std::abs(p.r1 - p.r2);
    p.residual = residual(mu)->norm();
    const bool same_family = std::any_of(paths.begin(), paths.end(), [&](const Path& q) {
      return q.normal.cross(p.normal).norm() < 1e-9 && std::abs(q.value - p.value) < 1e-9;
    });
    if (!same_family) add_unique(paths, p, opts.dedup);
  }
  sort_paths(paths);
  return paths;
}

std::vector<Path> oracle_W(const MirrorSurface& surface, const Vec3& p1, const Vec3& d2,
                           const OracleOptions& opts) {
  // The incoming line through p1 must carry the reversed reflection of d2.
  const Residual residual = [&](Complex mu) -> std::optional<Vec3> {
    const Vec3 p = surface.point(mu);
    const Vec3 toward = unit_or_zero(p - p1);
    if (!p.allFinite() || toward.isZero()) return std::nullopt;
    return Vec3(reflect_vec(d2, normal_at(surface, p, mu)).cross(toward));
  };
  const Residual search = [&](Complex mu) -> std::optional<Vec3> {
    const Vec3 p = surface.point(mu);
    if (!p.allFinite()) return std::nullopt;
    return Vec3(reflect_vec(d2, normal_at(surface, p, mu)).cross(p - p1));
  };
  // |p - p1| (d1 - d2) with d1 the unit direction from p1.
  const Residual bisector = [&](Complex mu) -> std::optional<Vec3> {
    const Vec3 a = surface.point(mu) - p1;
    if (!a.allFinite()) return std::nullopt;
    return Vec3(a - a.norm() * d2);
  };
  std::vector<Path> paths;
  for (const Complex& mu : specular_points(surface, bisector, search, residual, opts)) {
    Path p;
    p.mu = mu;
    p.point = surface.point(mu);
    p.normal = normal_at(surface, p.point, mu);
    p.d2 = d2;
    p.d1 = reflect_vec(d2, p.normal);
    if ((p.point - p1).dot(p.d1) < -1e-9) continue;  // p1 lies beyond the mirror
    p.s1 = p1.dot(p.d1);
    p.r1 = p.point.dot(p.d1);
    p.r2 = p.point.dot(d2);
    p.value = std::abs(p.r1 - p.s1 - p.r2);
    p.residual = residual(mu)->norm();
    add_unique(paths, p, opts.dedup);
  }
  sort_paths(paths);
  return paths;
}

namespace {

std::optional<Vec3> v_residual(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2, Complex mu) {
  const Vec3 p = surface.point(mu);
  const Vec3 d1 = unit_or_zero(p - p1);
  const Vec3 out = unit_or_zero(p2 - p);
  if (!p.allFinite() || d1.isZero() || out.isZero()) return std::nullopt;
  return Vec3(reflect_vec(d1, normal_at(surface, p, mu)).cross(out));
}

// a |b| + b |a| with a, b the offsets to p1, p2: the bisector of the two
// directions scaled by both lengths.
std::optional<Vec3> v_bisector(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2, Complex mu) {
  const Vec3 p = surface.point(mu);
  if (!p.allFinite()) return std::nullopt;
  const Vec3 a = p1 - p;
  const Vec3 b = p2 - p;
  return Vec3(a * b.norm() + b * a.norm());
}

std::optional<Vec3> v_search(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2, Complex mu) {
  const auto w = v_bisector(surface, p1, p2, mu);
  if (!w) return std::nullopt;
  return Vec3(normal_at(surface, surface.point(mu), mu).cross(*w));
}

Path v_path(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2, Complex mu, double residual) {
  Path p;
  p.mu = mu;
  p.point = surface.point(mu);
  p.normal = normal_at(surface, p.point, mu);
  p.d1 = (p.point - p1).normalized();
  p.d2 = reflect_vec(p.d1, p.normal);
  p.s1 = p1.dot(p.d1);
  p.s2 = p2.dot(p.d2);
  p.r1 = p.point.dot(p.d1);
  p.r2 = p.point.dot(p.d2);
  p.value = std::abs(p.s2 - p.s1 + p.r1 - p.r2);
  p.residual = residual;
  return p;
}

}  // namespace

std::vector<Path> oracle_V(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2,
                           const OracleOptions& opts) {
  const Residual residual = [&](Complex mu) { return v_residual(surface, p1, p2, mu); };
  const Residual search = [&](Complex mu) { return v_search(surface, p1, p2, mu); };
  const Residual bisector = [&](Complex mu) { return v_bisector(surface, p1, p2, mu); };
  std::vector<Path> paths;
  for (const Complex& mu : specular_points(surface, bisector, search, residual, opts)) {
    const Path p = v_path(surface, p1, p2, mu, residual(mu)->norm());
    if ((p2 - p.point).dot(p.d2) < -1e-9) continue;  // p2 lies behind the outgoing ray
    add_unique(paths, p, opts.dedup);
  }
  sort_paths(paths);
  return paths;
}

std::optional<Path> confirm_V(const MirrorSurface& surface, const Vec3& p1, const Vec3& p2, Complex mu,
                              const OracleOptions& opts) {
  const auto r = v_residual(surface, p1, p2, mu);
  if (!r || !(r->norm() < opts.accept)) return std::nullopt;
  Path p = v_path(surface, p1, p2, mu, r->norm());
  if ((p2 - p.point).dot(p.d2) < -1e-9) return std::nullopt;
  return p;
}

}  // namespace lineoptics::oracle
