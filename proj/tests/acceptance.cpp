// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "lineoptics/characteristics.hpp"
#include "lineoptics/error.hpp"
#include "lineoptics/oracle.hpp"
#include "lineoptics/reflection.hpp"
#include "support.hpp"

using namespace lineoptics;
using namespace lineoptics::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Tracks the worst value of a measured error against its bound.
struct Worst {
  std::string label;
  double bound;
  double value = 0.0;

  void add(double v) { value = std::max(value, std::isnan(v) ? INFINITY : v); }
  bool ok() const { return value < bound; }
  std::string str() const { return label + " " + sci(value) + " (< " + sci(bound) + ")"; }
};

Outcome summarize(std::initializer_list<const Worst*> ws, bool extra_ok = true, const std::string& extra = "") {
  Outcome o;
  o.pass = extra_ok;
  for (const Worst* w : ws) {
    o.pass = o.pass && w->ok();
    o.detail += (o.detail.empty() ? "" : "; ") + w->str();
  }
  if (!extra.empty()) o.detail += "; " + extra;
  return o;
}

// 1. Chart and incidence round trips.
Outcome round_trips() {
  Random rng(101);
  Worst chart{"chart", 1e-12};
  Worst incidence{"incidence", 1e-12};
  for (int i = 0; i < 10000; ++i) {
    const Vec3 v = rng.chart_unit(-0.999);
    chart.add((xi_to_dir(dir_to_xi(v)) - v).norm());
  }
  for (int i = 0; i < 10000; ++i) {
    const Complex xi = rng.chart_xi(-0.999);
    const Complex eta(rng.uniform(-10, 10), rng.uniform(-10, 10));
    const double r = rng.uniform(-10, 10);
    const EtaR back = eta_r_of_point(xi, phi(LinePointParam{OrientedLine{xi, eta}, r}));
    const double scale = std::max({1.0, std::abs(eta), std::abs(r)});
    incidence.add(std::max(std::abs(back.eta - eta), std::abs(back.r - r)) / scale);
  }
  return summarize({&chart, &incidence});
}

// 2. Reflection of random incident lines against the vector raytracer.
Outcome reflection_differential() {
  Random rng(102);
  Worst dir{"direction", 1e-9};
  Worst eta{"eta2", 1e-9};
  Worst r2{"r2", 1e-9};
  int scenes = 0;
  int count_mismatch = 0;
  const auto surfaces = catalog();
  for (int i = 0; i < 1000; ++i) {
    const MirrorSurface& s = surfaces[static_cast<std::size_t>(i) % surfaces.size()].surface;
    const Bounce b = random_bounce(s, rng);
    const auto [start, end] = line_through_points(to_point3(b.point), to_point3(b.point + b.d1));
    const auto frames = line_hits_surface(s, start.line);
    const auto hits = oracle::intersect(s, oracle::Ray3{b.point - 50.0 * b.d1, b.d1});
    if (frames.size() != hits.size()) ++count_mismatch;
    for (const SurfaceFrame& f : frames) {
      const oracle::Hit* h = nullptr;
      for (const auto& c : hits) {
        if (!h || (c.point - to_vec3(f.foot)).norm() < (h->point - to_vec3(f.foot)).norm()) h = &c;
      }
      if (!h) continue;
      const Vec3 d2 = oracle::reflect_vec(b.d1, h->normal);
      if (d2.z() < -0.999) continue;  // reflected ray leaves the chart
      const ReflectionEvent ev = reflect_line(f, start.line, eta_r_of_point(start.line.xi, f.foot).r);
      const oracle::FootParams fp = oracle::foot_params(oracle::Ray3{h->point, d2});
      const Complex xi2 = dir_to_xi(d2);
      const Complex eta2 = eta_r_of_point(xi2, to_point3(fp.q)).eta;
      dir.add((xi_to_dir(ev.outgoing.xi) - d2).norm());
      eta.add(std::abs(ev.outgoing.eta - eta2) / std::max(1.0, std::abs(eta2)));
      r2.add(std::abs(ev.r2 - fp.r_of(h->point)) / std::max(1.0, h->point.norm()));
    }
    ++scenes;
  }
  return summarize({&dir, &eta, &r2}, count_mismatch == 0,
                   std::to_string(scenes) + " scenes, hit-count mismatches " + std::to_string(count_mismatch));
}

// 3. Antipodal normal invariance and the involution property, in chordal
// distance between directions.
Outcome antipodal_invariance() {
  Random rng(103);
  Worst antipodal{"antipodal", 1e-12};
  Worst involution{"involution", 1e-12};
  int used = 0;
  for (int i = 0; i < 10000; ++i) {
    const Complex xi0 = rng.chart_xi();
    const Complex xi1 = rng.chart_xi();
    try {
      const Complex a = reflect_direction(xi0, xi1);
      const Complex b = reflect_direction(std::get<Complex>(antipode(xi0)), xi1);
      antipodal.add(chordal_distance(a, b));
      involution.add(chordal_distance(reflect_direction(xi0, a), xi1));
      ++used;
    } catch (const Error&) {
      // reflected direction in the excluded cap
    }
  }
  return summarize({&antipodal, &involution}, used >= 9900, std::to_string(used) + " chart-valid pairs");
}

// 4. Closed-form fixtures.
Outcome closed_forms() {
  Random rng(104);
  Worst plane_mirror{"plane xi2 = 1/conj(xi1)", 1e-12};
  for (int i = 0; i < 1000; ++i) {
    const Complex xi1 = rng.chart_xi();
    const Complex expected = 1.0 / std::conj(xi1);
    plane_mirror.add(std::abs(reflect_direction(0.0, xi1) - expected) / std::max(1.0, std::abs(expected)));
  }

  Worst sphere_t{"sphere |T| - 2R cos", 1e-9};
  const MirrorSurface sphere = unit_sphere();
  int configs = 0;
  bool all_found = true;
  while (configs < 100) {
    const Complex mu = rng.in(sphere.domain(), 0.5);
    const Vec3 n = sphere.normal(mu);
    const Vec3 d1 = rng.chart_unit();
    const double cos_a = -d1.dot(n);
    if (cos_a < 0.1) continue;
    const Vec3 d2 = oracle::reflect_vec(d1, n);
    if (d2.z() < -0.9) continue;
    const auto res = char_T(sphere, CharQueryT{dir_to_xi(d1), dir_to_xi(d2)});
    all_found = all_found && !res.empty();
    for (const auto& r : res) sphere_t.add(std::abs(r.value - 2.0 * cos_a));
    ++configs;
  }

  Worst plane_wv{"plane W, V", 1e-10};
  const auto w = char_W(xy_plane(), CharQueryW{Point3{0.0, 1.0}, kSqrt2 - 1.0});
  const auto v = char_V(xy_plane(), CharQueryV{Point3{0.0, 1.0}, Point3{2.0, 1.0}});
  const bool single = w.size() == 1 && v.size() == 1;
  if (single) {
    plane_wv.add(std::abs(w[0].value - 1.0 / kSqrt2));
    plane_wv.add(std::abs(v[0].value - 2.0 * kSqrt2));
  }
  return summarize({&plane_mirror, &sphere_t, &plane_wv}, all_found && single,
                   single ? "W = " + std::to_string(w[0].value) + ", V = " + std::to_string(v[0].value)
                          : "plane W/V did not return exactly one root");
}

// 5. Ellipsoid focal property.
Outcome focal_property() {
  const MirrorSurface e = focal_ellipsoid();
  const Vec3 f1(1, 0, 0);
  const Vec3 f2(-1, 0, 0);
  const auto res = char_V(e, CharQueryV{to_point3(f1), to_point3(f2)});
  Worst value{"V - 4", 1e-7};
  int confirmed = 0;
  for (const auto& r : res) {
    value.add(std::abs(r.value - 4.0));
    const auto path = oracle::confirm_V(e, f1, f2, r.mu());
    if (path && std::abs(path->value - r.value) < 1e-7) ++confirmed;
  }
  const bool ok = res.size() >= 8 && confirmed == static_cast<int>(res.size());
  return summarize({&value}, ok,
                   std::to_string(res.size()) + " roots, " + std::to_string(confirmed) + " oracle-confirmed");
}

// 6. Integrability of normal congruences.
Outcome integrability() {
  Worst normal{"normal congruences", 1e-6};
  for (const auto& [name, s] : catalog()) {
    const ParamDomain& d = s.domain();
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const Complex mu(d.re_min + d.width() * (i + 0.5) / 20.0, d.im_min + d.height() * (j + 0.5) / 20.0);
        const double r0 = frame_at(s, mu).r0;
        normal.add(std::abs(integrability_residual(s, mu, 1e-5)) / (1.0 + std::abs(r0)));
      }
    }
  }
  // Sphere normals displaced by a constant eta: not a normal congruence.
  const LineCongruence perturbed = [](Complex mu) { return CongruenceSample{mu, 0.1, 1.0}; };
  double smallest = INFINITY;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const Complex mu(-1.0 + (i + 0.5) / 10.0, -1.0 + (j + 0.5) / 10.0);
      smallest = std::min(smallest, std::abs(integrability_residual(perturbed, mu, 1e-5)));
    }
  }
  return summarize({&normal}, smallest > 1e-3, "perturbed minimum " + sci(smallest) + " (> 1e-03)");
}

// 7. Domain solver certification against the oracle.
Outcome domain_certification() {
  Random rng(107);
  const auto surfaces = catalog();
  Worst residual{"root residual", 1e-10};
  Worst match{"oracle match", 1e-7};
  int unmatched = 0;
  int missed = 0;
  int oracle_only = 0;
  int in_domain = 0;

  auto match_roots = [&](const std::vector<CharacteristicResult>& res, const std::vector<oracle::Path>& paths,
                         const Vec3& constructed) {
    bool found = false;
    for (const auto& r : res) {
      residual.add(r.residual);
      const Vec3 foot = to_vec3(r.frame.foot);
      const oracle::Path* best = nullptr;
      for (const auto& p : paths) {
        if (!best || (p.point - foot).norm() < (best->point - foot).norm()) best = &p;
      }
      if (!best) {
        ++unmatched;
        continue;
      }
      match.add(std::max((best->point - foot).norm() / std::max(1.0, foot.norm()),
                         std::abs(best->value - r.value) / std::max(1.0, r.value)));
      found = found || (foot - constructed).norm() < 1e-7;
    }
    for (const auto& p : paths) {
      const bool seen = std::any_of(res.begin(), res.end(),
                                    [&](const auto& r) { return (to_vec3(r.frame.foot) - p.point).norm() < 1e-7; });
      if (!seen) ++oracle_only;
    }
    if (!found) ++missed;
    ++in_domain;
  };

  for (int i = 0; i < 200; ++i) {
    const MirrorSurface& s = surfaces[static_cast<std::size_t>(i) % surfaces.size()].surface;
    const Bounce b = random_bounce(s, rng);
    const Vec3 p1 = b.point - rng.uniform(0.5, 3.0) * b.d1;
    const Vec3 p2 = b.point + rng.uniform(0.5, 3.0) * b.d2;
    match_roots(char_W(s, CharQueryW{to_point3(p1), dir_to_xi(b.d2)}), oracle::oracle_W(s, p1, b.d2), b.point);
    match_roots(char_V(s, CharQueryV{to_point3(p1), to_point3(p2)}), oracle::oracle_V(s, p1, p2), b.point);
  }

  // Out of domain: the only specular points lie outside the parameter
  // rectangle, so the oracle finds nothing inside it.
  int out_queries = 0;
  int false_roots = 0;
  int attempts = 0;
  while (out_queries < 50 && attempts < 2000) {
    ++attempts;
    const MirrorSurface& s = surfaces[static_cast<std::size_t>(attempts) % surfaces.size()].surface;
    ParamDomain wide = s.domain();
    const Complex c = wide.center();
    wide = ParamDomain{c.real() - 0.8 * s.domain().width(), c.real() + 0.8 * s.domain().width(),
                       c.imag() - 0.8 * s.domain().height(), c.imag() + 0.8 * s.domain().height()};
    const Complex mu = rng.in(wide, 1.0);
    if (s.domain().contains(mu, -0.1 * s.domain().width())) continue;
    const Vec3 n = s.normal(mu);
    if (!n.allFinite()) continue;
    const Vec3 d1 = rng.chart_unit();
    if (std::abs(d1.dot(n)) < 0.2) continue;
    const Vec3 d2 = oracle::reflect_vec(d1, n);
    if (d2.z() < -0.9) continue;
    const Vec3 p = s.point(mu);
    const Vec3 p1 = p - rng.uniform(0.5, 3.0) * d1;
    const Vec3 p2 = p + rng.uniform(0.5, 3.0) * d2;
    try {
      if (out_queries % 2 == 0) {
        if (!oracle::oracle_W(s, p1, d2).empty()) continue;
        false_roots += static_cast<int>(char_W(s, CharQueryW{to_point3(p1), dir_to_xi(d2)}).size());
      } else {
        if (!oracle::oracle_V(s, p1, p2).empty()) continue;
        false_roots += static_cast<int>(char_V(s, CharQueryV{to_point3(p1), to_point3(p2)}).size());
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ChartExcluded) continue;
      throw;
    }
    ++out_queries;
  }
  const bool ok = unmatched == 0 && missed == 0 && oracle_only == 0 && out_queries == 50 && false_roots == 0;
  return summarize({&residual, &match}, ok,
                   std::to_string(in_domain) + " in-domain queries, unmatched roots " + std::to_string(unmatched) +
                       ", oracle paths the solver missed " + std::to_string(oracle_only) +
                       ", constructed path missed " + std::to_string(missed) + ", " + std::to_string(out_queries) +
                       " out-of-domain queries with " + std::to_string(false_roots) + " false roots");
}

// 8. CLI selftest and byte-identical reruns.
Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lineoptics_acceptance";
  fs::create_directories(dir);
  const fs::path scene = dir / "scene.txt";
  std::ofstream(scene) << "[surface]\nkind = sphere\nradius = 1\n[options]\nverify = true\n"
                          "[query.t]\ntype = char\nfunction = T\nxi1 = -2.414213562373095\nxi2 = 2.414213562373095\n"
                          "[query.v]\ntype = char\nfunction = V\np1 = 2,0,0.5\np2 = 0,2,0.5\n"
                          "[query.w]\ntype = char\nfunction = W\np1 = 0.3,0.1,3\nd2 = 0,0,1\n"
                          "[query.r]\ntype = reflect\npoint = 3,0.2,0.1\ndir = -1,0,0\n";
  const std::string cli = LINEOPTICS_CLI;
  const std::string quiet = " > " + (dir / "selftest.txt").string() + " 2>&1";
  const int selftest = std::system(("\"" + cli + "\" selftest" + quiet).c_str());
  std::string outputs[2];
  int status[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path out = dir / ("run" + std::to_string(k) + ".csv");
    status[k] = std::system(("\"" + cli + "\" run \"" + scene.string() + "\" > \"" + out.string() + "\"").c_str());
    std::ifstream in(out, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    outputs[k] = text.str();
  }
  const bool same = outputs[0] == outputs[1] && !outputs[0].empty();
  Outcome o;
  o.pass = selftest == 0 && status[0] == 0 && status[1] == 0 && same;
  o.detail = std::string("selftest ") + (selftest == 0 ? "passed" : "failed") + ", reruns " +
             (same ? "byte-identical" : "differ") + " (" + std::to_string(outputs[0].size()) + " bytes)";
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"chart/incidence round trips", round_trips},
      {"reflection differential test", reflection_differential},
      {"antipodal invariance and involution", antipodal_invariance},
      {"closed-form fixtures", closed_forms},
      {"ellipsoid focal property", focal_property},
      {"integrability", integrability},
      {"domain-solver certification", domain_certification},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << index << " " << name << ": " << o.detail << " ["
              << sci(secs) << " s]" << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
