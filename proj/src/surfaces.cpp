#include "lineoptics/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "lineoptics/error.hpp"

namespace lineoptics {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kParametricStep = 1e-3;
constexpr int kChartCheckSamples = 33;

// Orthonormal (e1, e2) with e1 x e2 = n; for n = +z this is (x, y).
std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  Vec3 ref = Vec3::UnitX();
  if (std::abs(n.dot(ref)) > 0.9) ref = Vec3::UnitY();
  const Vec3 e1 = (ref - ref.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

void check_orientation(int orientation) {
  if (orientation != 1 && orientation != -1) {
    throw Error(ErrorKind::DegenerateInput, "orientation must be +1 or -1");
  }
}

void check_domain(const ParamDomain& d) {
  const bool finite = std::isfinite(d.re_min) && std::isfinite(d.re_max) && std::isfinite(d.im_min) &&
                      std::isfinite(d.im_max);
  if (!finite || !(d.re_min < d.re_max) || !(d.im_min < d.im_max)) {
    throw Error(ErrorKind::DegenerateInput, "parameter domain must be a non-empty finite rectangle");
  }
}

Vec3 checked_unit(const Vec3& v, const char* what) {
  const double n = v.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw Error(ErrorKind::DegenerateInput, std::string(what) + " must be a non-zero vector");
  }
  return v / n;
}

double distance_to_origin(const ParamDomain& d) {
  const double x = std::clamp(0.0, d.re_min, d.re_max);
  const double y = std::clamp(0.0, d.im_min, d.im_max);
  return std::hypot(x, y);
}

}  // namespace

bool ParamDomain::contains(Complex mu, double margin) const {
  return mu.real() >= re_min + margin && mu.real() <= re_max - margin && mu.imag() >= im_min + margin &&
         mu.imag() <= im_max - margin;
}

std::vector<Complex> grid_seeds(const ParamDomain& domain, int n) {
  std::vector<Complex> seeds;
  if (n <= 0) return seeds;
  seeds.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  const double dx = domain.width() / n;
  const double dy = domain.height() / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      seeds.emplace_back(domain.re_min + (i + 0.5) * dx, domain.im_min + (j + 0.5) * dy);
    }
  }
  return seeds;
}

std::string_view to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::Plane: return "plane";
    case SurfaceKind::Sphere: return "sphere";
    case SurfaceKind::Paraboloid: return "paraboloid";
    case SurfaceKind::Ellipsoid: return "ellipsoid";
    case SurfaceKind::Parametric: return "parametric";
  }
  return "unknown";
}

MirrorSurface::MirrorSurface(SurfaceShape shape, int orientation, const ParamDomain& domain)
    : shape_(std::move(shape)), orientation_(orientation), domain_(domain) {
  check_orientation(orientation_);
  check_domain(domain_);
  validate_chart();
}

MirrorSurface MirrorSurface::plane(const Vec3& base, const Vec3& unit_normal, const ParamDomain& domain) {
  const Vec3 n = checked_unit(unit_normal, "plane normal");
  auto [e1, e2] = tangent_basis(n);
  return MirrorSurface(PlaneShape{base, n, e1, e2}, 1, domain);
}

MirrorSurface MirrorSurface::sphere(const Vec3& center, double radius, int orientation,
                                    const ParamDomain& domain) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::DegenerateInput, "sphere radius must be positive");
  }
  return MirrorSurface(SphereShape{center, radius}, orientation, domain);
}

MirrorSurface MirrorSurface::ellipsoid(const Vec3& center, const Vec3& semi_axes, int orientation,
                                       const ParamDomain& domain) {
  if (!(semi_axes.minCoeff() > 0.0) || !semi_axes.allFinite()) {
    throw Error(ErrorKind::DegenerateInput, "ellipsoid semi-axes must be positive");
  }
  return MirrorSurface(EllipsoidShape{center, semi_axes}, orientation, domain);
}

MirrorSurface MirrorSurface::paraboloid(const Vec3& vertex, const Vec3& axis, double focal_length,
                                        int orientation, const ParamDomain& domain) {
  if (!(focal_length > 0.0) || !std::isfinite(focal_length)) {
    throw Error(ErrorKind::DegenerateInput, "paraboloid focal length must be positive");
  }
  const Vec3 a = checked_unit(axis, "paraboloid axis");
  auto [e1, e2] = tangent_basis(a);
  return MirrorSurface(ParaboloidShape{vertex, a, focal_length, e1, e2}, orientation, domain);
}

MirrorSurface MirrorSurface::parametric(std::function<Vec3(Complex)> position,
                                        std::function<Vec3(Complex)> normal, int orientation,
                                        const ParamDomain& domain) {
  if (!position) throw Error(ErrorKind::DegenerateInput, "parametric surface needs a position map");
  return MirrorSurface(ParametricShape{std::move(position), std::move(normal)}, orientation, domain);
}

SurfaceKind MirrorSurface::kind() const {
  return std::visit(Overloaded{
                        [](const PlaneShape&) { return SurfaceKind::Plane; },
                        [](const SphereShape&) { return SurfaceKind::Sphere; },
                        [](const ParaboloidShape&) { return SurfaceKind::Paraboloid; },
                        [](const EllipsoidShape&) { return SurfaceKind::Ellipsoid; },
                        [](const ParametricShape&) { return SurfaceKind::Parametric; },
                    },
                    shape_);
}

Vec3 MirrorSurface::point(Complex mu) const {
  return std::visit(
      Overloaded{
          [&](const PlaneShape& s) -> Vec3 { return s.base + mu.real() * s.e1 + mu.imag() * s.e2; },
          [&](const SphereShape& s) -> Vec3 { return s.center + s.radius * xi_to_dir(mu); },
          [&](const ParaboloidShape& s) -> Vec3 {
            const double rho2 = std::norm(mu);
            return s.vertex + mu.real() * s.e1 + mu.imag() * s.e2 + rho2 / (4.0 * s.focal_length) * s.axis;
          },
          [&](const EllipsoidShape& s) -> Vec3 {
            const Vec3 u = xi_to_dir(mu);
            const Vec3 w = s.semi_axes.cwiseProduct(s.semi_axes).cwiseProduct(u);
            return s.center + w / std::sqrt(u.dot(w));
          },
          [&](const ParametricShape& s) -> Vec3 { return s.position(mu); },
      },
      shape_);
}

Vec3 MirrorSurface::normal(Complex mu) const {
  const Vec3 outward = std::visit(
      Overloaded{
          [&](const PlaneShape& s) -> Vec3 { return s.normal; },
          [&](const SphereShape&) -> Vec3 { return xi_to_dir(mu); },
          [&](const ParaboloidShape& s) -> Vec3 {
            const Vec3 radial = mu.real() * s.e1 + mu.imag() * s.e2;
            return (s.axis - radial / (2.0 * s.focal_length)).normalized();
          },
          [&](const EllipsoidShape&) -> Vec3 { return xi_to_dir(mu); },
          [&](const ParametricShape& s) -> Vec3 {
            if (s.normal) return s.normal(mu).normalized();
            const double h = kParametricStep;
            auto diff = [&](Complex dir) {
              return (-s.position(mu + 2.0 * h * dir) + 8.0 * s.position(mu + h * dir) -
                      8.0 * s.position(mu - h * dir) + s.position(mu - 2.0 * h * dir)) /
                     (12.0 * h);
            };
            const Vec3 pu = diff(Complex(1.0, 0.0));
            const Vec3 pv = diff(Complex(0.0, 1.0));
            return pu.cross(pv).normalized();
          },
      },
      shape_);
  return orientation_ * outward;
}

std::optional<Complex> MirrorSurface::param_of(const Vec3& p) const {
  auto chart_of = [](const Vec3& v) -> std::optional<Complex> {
    const double n = v.norm();
    if (!(n > 0.0)) return std::nullopt;
    try {
      return dir_to_xi(v / n);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  return std::visit(
      Overloaded{
          [&](const PlaneShape& s) -> std::optional<Complex> {
            const Vec3 d = p - s.base;
            return Complex(d.dot(s.e1), d.dot(s.e2));
          },
          [&](const SphereShape& s) -> std::optional<Complex> { return chart_of(p - s.center); },
          [&](const ParaboloidShape& s) -> std::optional<Complex> {
            const Vec3 d = p - s.vertex;
            return Complex(d.dot(s.e1), d.dot(s.e2));
          },
          [&](const EllipsoidShape& s) -> std::optional<Complex> {
            const Vec3 a2 = s.semi_axes.cwiseProduct(s.semi_axes);
            return chart_of((p - s.center).cwiseQuotient(a2));
          },
          [&](const ParametricShape&) -> std::optional<Complex> { return std::nullopt; },
      },
      shape_);
}

void MirrorSurface::validate_chart() const {
  const bool normal_chart =
      std::holds_alternative<SphereShape>(shape_) || std::holds_alternative<EllipsoidShape>(shape_);
  if (normal_chart && orientation_ < 0 && distance_to_origin(domain_) <= 2.0 * kCapEpsilon) {
    throw Error(ErrorKind::ChartExcluded,
                "inward orientation maps mu = 0 to the south direction; the domain must avoid it");
  }
  const int n = kChartCheckSamples;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Complex mu(domain_.re_min + domain_.width() * i / (n - 1),
                       domain_.im_min + domain_.height() * j / (n - 1));
      const Vec3 nrm = normal(mu);
      if (!nrm.allFinite()) {
        throw Error(ErrorKind::DegenerateInput, "surface normal is undefined inside the domain");
      }
      dir_to_xi(nrm);  // throws ChartExcluded
    }
  }
}

SurfaceFrame frame_at_unchecked(const MirrorSurface& surface, Complex mu) {
  const Vec3 foot = surface.point(mu);
  if (!foot.allFinite()) {
    throw Error(ErrorKind::DegenerateInput, "surface point is not finite");
  }
  Complex xi0;
  const bool normal_chart = surface.kind() == SurfaceKind::Sphere || surface.kind() == SurfaceKind::Ellipsoid;
  if (normal_chart) {
    // The Gauss map is the parameter itself (or its antipode).
    if (surface.orientation() > 0) {
      xi0 = mu;
    } else {
      const ExtendedXi a = antipode(mu);
      if (std::holds_alternative<AtInfinity>(a)) {
        throw Error(ErrorKind::ChartExcluded, "normal is the south direction");
      }
      xi0 = std::get<Complex>(a);
    }
    require_in_chart(xi0, "surface normal");
  } else {
    xi0 = dir_to_xi(surface.normal(mu));
  }
  const Point3 p = to_point3(foot);
  const EtaR er = eta_r_of_point(xi0, p);
  return SurfaceFrame{mu, xi0, er.eta, er.r, p};
}

SurfaceFrame frame_at(const MirrorSurface& surface, Complex mu) {
  if (!surface.domain().contains(mu)) {
    throw Error(ErrorKind::OutOfDomain, "parameter lies outside the surface's domain");
  }
  return frame_at_unchecked(surface, mu);
}

LineCongruence normal_congruence(const MirrorSurface& surface) {
  return [&surface](Complex mu) {
    const SurfaceFrame f = frame_at_unchecked(surface, mu);
    return CongruenceSample{f.xi0, f.eta0, f.r0};
  };
}

Complex integrability_residual(const LineCongruence& congruence, Complex mu, double h) {
  const CongruenceSample c = congruence(mu);
  const CongruenceSample xp = congruence(mu + h);
  const CongruenceSample xm = congruence(mu - h);
  const CongruenceSample yp = congruence(mu + Complex(0.0, h));
  const CongruenceSample ym = congruence(mu - Complex(0.0, h));

  // d/dmu = (d/dx - i d/dy) / 2
  const Complex xi_x = (xp.xi - xm.xi) / (2.0 * h);
  const Complex xi_y = (yp.xi - ym.xi) / (2.0 * h);
  const double r_x = (xp.r - xm.r) / (2.0 * h);
  const double r_y = (yp.r - ym.r) / (2.0 * h);
  const Complex I(0.0, 1.0);
  const Complex d_xi = 0.5 * (xi_x - I * xi_y);
  const Complex d_xibar = 0.5 * (std::conj(xi_x) - I * std::conj(xi_y));
  const Complex d_r = 0.5 * (r_x - I * r_y);

  const double s = 1.0 + std::norm(c.xi);
  return d_r - (2.0 * std::conj(c.eta) * d_xi + 2.0 * c.eta * d_xibar) / (s * s);
}

Complex integrability_residual(const MirrorSurface& surface, Complex mu, double h) {
  if (!surface.domain().contains(mu, h)) {
    throw Error(ErrorKind::OutOfDomain, "finite-difference stencil leaves the surface's domain");
  }
  return integrability_residual(normal_congruence(surface), mu, h);
}

Complex us_eta(const SurfaceFrame& frame, Complex xi) {
  const Complex xi0 = frame.xi0;
  const double s = 1.0 + std::norm(xi0);
  const Complex a = 1.0 + std::conj(xi0) * xi;
  const Complex b = xi0 - xi;
  return a * a / (s * s) * frame.eta0 - b * b / (s * s) * std::conj(frame.eta0) + b * a / s * frame.r0;
}

std::vector<SurfaceFrame> line_hits_surface(const MirrorSurface& surface, const OrientedLine& line,
                                            const SolveOptions& opts) {
  require_in_chart(line.xi, "line direction");
  const double xi_scale = 1.0 + std::norm(line.xi);

  const ResidualMap residual = [&](const VectorX& x) -> std::optional<VectorX> {
    try {
      const SurfaceFrame f = frame_at_unchecked(surface, Complex(x[0], x[1]));
      const Complex d = us_eta(f, line.xi) - line.eta;
      const double scale = xi_scale * (1.0 + to_vec3(f.foot).norm());
      VectorX out(2);
      out << d.real() / scale, d.imag() / scale;
      return out;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  std::vector<VectorX> seeds;
  for (const Complex& s : grid_seeds(surface.domain(), opts.grid)) seeds.push_back(Eigen::Vector2d(s.real(), s.imag()));

  const MultistartReport report = multistart_solve(
      residual, seeds, opts, [&](const VectorX& x) { return surface.domain().contains(Complex(x[0], x[1])); });

  if (report.roots.empty() && report.stalled_near_root) {
    throw Error(ErrorKind::SolverFailure, "line/surface intersection search stalled without converging");
  }
  std::vector<SurfaceFrame> hits;
  hits.reserve(report.roots.size());
  for (const auto& root : report.roots) hits.push_back(frame_at(surface, Complex(root.x[0], root.x[1])));
  return hits;
}

}  // namespace lineoptics
