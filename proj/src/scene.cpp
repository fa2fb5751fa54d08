#include "lineoptics/scene.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lineoptics/characteristics.hpp"
#include "lineoptics/error.hpp"
#include "lineoptics/oracle.hpp"
#include "lineoptics/reflection.hpp"

namespace lineoptics {

namespace {

// --- parsing ---------------------------------------------------------------

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  int line = 0;
  std::map<std::string, Entry> keys;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_real(std::string_view s, int line, const std::string& field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, field, "expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> parse_reals(const Entry& e, const std::string& field, std::size_t count) {
  const auto parts = split(e.value, ',');
  if (parts.size() != count) {
    throw ParseError(e.line, field, "expected " + std::to_string(count) + " comma-separated numbers");
  }
  std::vector<double> out;
  for (auto p : parts) out.push_back(parse_real(p, e.line, field));
  return out;
}

int parse_int(const Entry& e, const std::string& field) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (e.value.empty() || ec != std::errc() || ptr != e.value.data() + e.value.size()) {
    throw ParseError(e.line, field, "expected an integer, got '" + e.value + "'");
  }
  return v;
}

bool parse_bool(const Entry& e, const std::string& field) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ParseError(e.line, field, "expected true or false, got '" + e.value + "'");
}

Complex parse_complex(const Entry& e, const std::string& field) {
  const auto parts = split(e.value, ',');
  if (parts.size() == 1) return {parse_real(parts[0], e.line, field), 0.0};
  const auto v = parse_reals(e, field, 2);
  return {v[0], v[1]};
}

Vec3 parse_vec3(const Entry& e, const std::string& field) {
  const auto v = parse_reals(e, field, 3);
  return {v[0], v[1], v[2]};
}

Vec3 parse_direction(const Entry& e, const std::string& field) {
  const Vec3 v = parse_vec3(e, field);
  if (!(v.norm() > 1e-12)) throw ParseError(e.line, field, "direction must be non-zero");
  return v.normalized();
}

class SectionReader {
 public:
  SectionReader(const Section& s, std::string name) : section_(s), name_(std::move(name)) {}

  const Entry* find(const std::string& key) {
    used_.insert(key);
    const auto it = section_.keys.find(key);
    return it == section_.keys.end() ? nullptr : &it->second;
  }

  const Entry& require(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw ParseError(section_.line, key, "missing required key in [" + name_ + "]");
    return *e;
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : section_.keys) {
      if (!used_.count(key)) throw ParseError(entry.line, key, "unknown key in [" + name_ + "]");
    }
  }

  int line() const { return section_.line; }

 private:
  const Section& section_;
  std::string name_;
  std::set<std::string> used_;
};

ParamDomain default_domain(const std::string& kind) {
  const double half = kind == "plane" ? 10.0 : kind == "paraboloid" ? 4.0 : 3.0;
  return ParamDomain{-half, half, -half, half};
}

MirrorSurface build_surface(const Section& section) {
  SectionReader r(section, "surface");
  const Entry& kind_entry = r.require("kind");
  const std::string kind = kind_entry.value;

  ParamDomain domain = default_domain(kind);
  if (const Entry* e = r.find("domain")) {
    const auto v = parse_reals(*e, "domain", 4);
    domain = ParamDomain{v[0], v[1], v[2], v[3]};
  }
  int orientation = 1;
  if (kind != "plane") {
    if (const Entry* e = r.find("orientation")) {
      orientation = parse_int(*e, "orientation");
      if (orientation != 1 && orientation != -1) throw ParseError(e->line, "orientation", "must be 1 or -1");
    }
  }
  auto positive = [&](const char* key) {
    const Entry& e = r.require(key);
    const double v = parse_real(e.value, e.line, key);
    if (!(v > 0.0)) throw ParseError(e.line, key, "must be positive");
    return v;
  };
  auto vec_or = [&](const char* key, const Vec3& fallback) {
    const Entry* e = r.find(key);
    return e ? parse_vec3(*e, key) : fallback;
  };

  try {
    if (kind == "plane") {
      const Vec3 base = vec_or("base", Vec3::Zero());
      const Vec3 normal = parse_direction(r.require("normal"), "normal");
      r.reject_unknown();
      return MirrorSurface::plane(base, normal, domain);
    }
    if (kind == "sphere") {
      const Vec3 center = vec_or("center", Vec3::Zero());
      const double radius = positive("radius");
      r.reject_unknown();
      return MirrorSurface::sphere(center, radius, orientation, domain);
    }
    if (kind == "ellipsoid") {
      const Vec3 center = vec_or("center", Vec3::Zero());
      const Vec3 axes = parse_vec3(r.require("semi_axes"), "semi_axes");
      if (!(axes.minCoeff() > 0.0)) throw ParseError(r.line(), "semi_axes", "must be positive");
      r.reject_unknown();
      return MirrorSurface::ellipsoid(center, axes, orientation, domain);
    }
    if (kind == "paraboloid") {
      const Vec3 vertex = vec_or("vertex", Vec3::Zero());
      const Vec3 axis = vec_or("axis", Vec3::UnitZ());
      const double f = positive("focal_length");
      r.reject_unknown();
      return MirrorSurface::paraboloid(vertex, axis, f, orientation, domain);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(section.line, "surface", e.what());
  }
  throw ParseError(kind_entry.line, "kind", "unknown surface kind '" + kind + "'");
}

SceneOptions build_options(const Section* section) {
  SceneOptions o;
  if (!section) return o;
  SectionReader r(*section, "options");
  if (const Entry* e = r.find("grid")) {
    o.grid = parse_int(*e, "grid");
    if (o.grid < 1) throw ParseError(e->line, "grid", "must be at least 1");
  }
  if (const Entry* e = r.find("oracle_grid")) {
    o.oracle_grid = parse_int(*e, "oracle_grid");
    if (o.oracle_grid < 2) throw ParseError(e->line, "oracle_grid", "must be at least 2");
  }
  if (const Entry* e = r.find("tol")) {
    o.tol = parse_real(e->value, e->line, "tol");
    if (!(o.tol > 0.0)) throw ParseError(e->line, "tol", "must be positive");
  }
  if (const Entry* e = r.find("verify")) o.verify = parse_bool(*e, "verify");
  r.reject_unknown();
  return o;
}

Query build_query(const std::string& id, const Section& section) {
  const std::string name = "query." + id;
  SectionReader r(section, name);
  Query q;
  q.id = id;
  q.line = section.line;

  const Entry& type = r.require("type");
  if (type.value == "convert") {
    q.kind = QueryKind::Convert;
  } else if (type.value == "reflect") {
    q.kind = QueryKind::Reflect;
  } else if (type.value == "domain") {
    q.kind = QueryKind::Domain;
  } else if (type.value == "char") {
    q.kind = QueryKind::Char;
  } else {
    throw ParseError(type.line, "type", "expected convert, reflect, domain or char");
  }

  // Exactly one of a chart value or a direction vector.
  auto direction_pair = [&](const char* xi_key, const char* dir_key, std::optional<Complex>& xi,
                            std::optional<Vec3>& dir) {
    const Entry* a = r.find(xi_key);
    const Entry* b = r.find(dir_key);
    if (a && b) throw ParseError(b->line, dir_key, std::string("give either ") + xi_key + " or " + dir_key);
    if (!a && !b) {
      throw ParseError(section.line, xi_key, std::string("missing ") + xi_key + " (or " + dir_key + ")");
    }
    if (a) xi = parse_complex(*a, xi_key);
    if (b) dir = parse_direction(*b, dir_key);
  };

  switch (q.kind) {
    case QueryKind::Convert:
      q.dir = parse_direction(r.require("dir"), "dir");
      if (const Entry* e = r.find("point")) q.point = parse_vec3(*e, "point");
      break;
    case QueryKind::Reflect:
      q.point = parse_vec3(r.require("point"), "point");
      q.dir = parse_direction(r.require("dir"), "dir");
      break;
    case QueryKind::Domain:
    case QueryKind::Char: {
      const Entry& fn = r.require("function");
      if (fn.value != "T" && fn.value != "W" && fn.value != "V") {
        throw ParseError(fn.line, "function", "expected T, W or V");
      }
      q.function = fn.value[0];
      if (q.function == 'T') {
        direction_pair("xi1", "d1", q.xi1, q.d1);
        direction_pair("xi2", "d2", q.xi2, q.d2);
      } else if (q.function == 'W') {
        q.p1 = parse_vec3(r.require("p1"), "p1");
        direction_pair("xi2", "d2", q.xi2, q.d2);
      } else {
        q.p1 = parse_vec3(r.require("p1"), "p1");
        q.p2 = parse_vec3(r.require("p2"), "p2");
      }
      break;
    }
  }
  r.reject_unknown();
  return q;
}

// --- running ---------------------------------------------------------------

struct Row {
  std::string query;
  std::string function;
  std::string status = "ok";
  std::optional<int> branch;
  std::optional<double> value;
  std::optional<Complex> mu, xi0, xi1, xi2, eta1, eta2;
  std::optional<double> s1, s2, r1, r2, residual, oracle, delta;
};

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_header(std::ostream& out, bool verify) {
  out << "query,function,status,branch,value,mu_re,mu_im,xi0_re,xi0_im,xi1_re,xi1_im,xi2_re,xi2_im,"
         "eta1_re,eta1_im,eta2_re,eta2_im,s1,s2,r1,r2,residual";
  if (verify) out << ",oracle,abs_delta";
  out << "\n";
}

void write_row(std::ostream& out, const Row& row, bool verify) {
  std::vector<std::string> f{csv_field(row.query), csv_field(row.function), csv_field(row.status),
                             row.branch ? std::to_string(*row.branch) : std::string()};
  auto num = [&](const std::optional<double>& v) { f.push_back(v ? format_number(*v) : std::string()); };
  auto cpx = [&](const std::optional<Complex>& v) {
    num(v ? std::optional<double>(v->real()) : std::nullopt);
    num(v ? std::optional<double>(v->imag()) : std::nullopt);
  };
  num(row.value);
  cpx(row.mu);
  cpx(row.xi0);
  cpx(row.xi1);
  cpx(row.xi2);
  cpx(row.eta1);
  cpx(row.eta2);
  num(row.s1);
  num(row.s2);
  num(row.r1);
  num(row.r2);
  num(row.residual);
  if (verify) {
    num(row.oracle);
    num(row.delta);
  }
  for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
  out << "\n";
}

constexpr double kVerifyTolerance = 1e-7;

class Runner {
 public:
  Runner(const Scene& scene) : scene_(scene) {
    opts_.grid = scene.options.grid;
    opts_.newton.accept = scene.options.tol;
    oracle_opts_.grid = scene.options.oracle_grid;
  }

  std::vector<Row> evaluate(const Query& q) {
    Row base;
    base.query = q.id;
    base.function = function_name(q);
    std::vector<Row> rows;
    try {
      rows = dispatch(q, base);
    } catch (const Error& e) {
      Row r = base;
      r.status = std::string(to_string(e.kind()));
      rows = {r};
    }
    return rows;
  }

 private:
  static std::string function_name(const Query& q) {
    switch (q.kind) {
      case QueryKind::Convert: return "convert";
      case QueryKind::Reflect: return "reflect";
      case QueryKind::Domain: return std::string("domain_") + q.function;
      case QueryKind::Char: return std::string("char_") + q.function;
    }
    return "";
  }

  std::vector<Row> dispatch(const Query& q, const Row& base) {
    switch (q.kind) {
      case QueryKind::Convert: return convert(q, base);
      case QueryKind::Reflect: return reflect(q, base);
      default: break;
    }
    std::vector<Row> rows;
    if (q.function == 'T') {
      rows = characteristic_T(q, base);
    } else if (q.function == 'W') {
      rows = characteristic_W(q, base);
    } else {
      rows = characteristic_V(q, base);
    }
    if (rows.empty()) {
      Row r = base;
      r.status = "empty-domain";
      if (scene_.options.verify) {
        const auto paths = oracle_paths(q);
        if (!paths.empty()) {
          r.status = "oracle-mismatch";
          r.oracle = paths.front().value;
        }
      }
      rows.push_back(r);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].status == "ok") rows[i].branch = static_cast<int>(i);
    }
    return rows;
  }

  std::vector<Row> convert(const Query& q, const Row& base) {
    Row r = base;
    const Complex xi = dir_to_xi(*q.dir);
    const Point3 p = to_point3(q.point.value_or(Vec3::Zero()));
    const EtaR er = eta_r_of_point(xi, p);
    r.xi1 = xi;
    r.eta1 = er.eta;
    r.r1 = er.r;
    r.residual = (to_vec3(phi(LinePointParam{OrientedLine{xi, er.eta}, er.r})) - to_vec3(p)).norm();
    return {r};
  }

  std::vector<Row> reflect(const Query& q, const Row& base) {
    const auto [start, end] = line_through_points(to_point3(*q.point), to_point3(*q.point + *q.dir));
    const OrientedLine line = start.line;
    std::vector<Row> rows;
    for (const SurfaceFrame& f : line_hits_surface(scene_.surface, line, opts_)) {
      const double r1 = eta_r_of_point(line.xi, f.foot).r;
      const ReflectionEvent ev = reflect_line(f, line, r1);
      Row r = base;
      r.mu = f.mu;
      r.xi0 = f.xi0;
      r.xi1 = ev.incoming.xi;
      r.xi2 = ev.outgoing.xi;
      r.eta1 = ev.incoming.eta;
      r.eta2 = ev.outgoing.eta;
      r.r1 = ev.r1;
      r.r2 = ev.r2;
      r.residual = (to_vec3(phi(LinePointParam{ev.outgoing, ev.r2})) - to_vec3(f.foot)).norm();
      if (scene_.options.verify) verify_reflection(q, f, ev, r);
      rows.push_back(r);
    }
    if (rows.empty()) {
      Row r = base;
      r.status = "empty-domain";
      rows.push_back(r);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].status == "ok") rows[i].branch = static_cast<int>(i);
    }
    return rows;
  }

  void verify_reflection(const Query& q, const SurfaceFrame& f, const ReflectionEvent& ev, Row& r) const {
    std::vector<oracle::Hit> hits = oracle::intersect(scene_.surface, oracle::Ray3{*q.point, *q.dir});
    for (const auto& h : oracle::intersect(scene_.surface, oracle::Ray3{*q.point, -*q.dir})) hits.push_back(h);
    const Vec3 foot = to_vec3(f.foot);
    const oracle::Hit* best = nullptr;
    for (const auto& h : hits) {
      if (!best || (h.point - foot).norm() < (best->point - foot).norm()) best = &h;
    }
    if (!best || (best->point - foot).norm() > kVerifyTolerance * std::max(1.0, foot.norm())) {
      r.status = "oracle-mismatch";
      return;
    }
    const Vec3 d2 = oracle::reflect_vec(*q.dir, best->normal);
    const double r2 = oracle::foot_params(oracle::Ray3{best->point, d2}).r_of(best->point);
    r.oracle = r2;
    r.delta = std::max((xi_to_dir(ev.outgoing.xi) - d2).norm(), std::abs(ev.r2 - r2));
    if (!(*r.delta < kVerifyTolerance * std::max(1.0, std::abs(r2)))) r.status = "oracle-mismatch";
  }

  static Complex chart_of(const std::optional<Complex>& xi, const std::optional<Vec3>& dir) {
    return xi ? *xi : dir_to_xi(*dir);
  }

  void fill(Row& r, const CharacteristicResult& c, bool with_value) const {
    r.mu = c.mu();
    r.xi0 = c.xi0;
    r.xi1 = c.xi1;
    r.xi2 = c.xi2;
    r.eta1 = eta_r_of_point(c.xi1, c.frame.foot).eta;
    r.eta2 = eta_r_of_point(c.xi2, c.frame.foot).eta;
    r.residual = c.residual;
    if (with_value) {
      r.value = c.value;
      r.s1 = c.s1;
      r.s2 = c.s2;
      r.r1 = c.r1;
      r.r2 = c.r2;
    }
  }

  std::vector<Row> characteristic_T(const Query& q, const Row& base) {
    const CharQueryT cq{chart_of(q.xi1, q.d1), chart_of(q.xi2, q.d2)};
    std::vector<Row> rows;
    for (const CharacteristicResult& c : char_T(scene_.surface, cq, opts_)) {
      Row r = base;
      fill(r, c, q.kind == QueryKind::Char);
      if (scene_.options.verify) verify_T(q, c, r);
      rows.push_back(r);
    }
    return rows;
  }

  std::vector<Row> characteristic_W(const Query& q, const Row& base) {
    const CharQueryW cq{to_point3(*q.p1), chart_of(q.xi2, q.d2)};
    std::vector<Row> rows;
    for (const CharacteristicResult& c : char_W(scene_.surface, cq, opts_)) {
      Row r = base;
      fill(r, c, q.kind == QueryKind::Char);
      if (scene_.options.verify) verify_by_point(q, c, r);
      rows.push_back(r);
    }
    return rows;
  }

  std::vector<Row> characteristic_V(const Query& q, const Row& base) {
    const CharQueryV cq{to_point3(*q.p1), to_point3(*q.p2)};
    std::vector<Row> rows;
    for (const CharacteristicResult& c : char_V(scene_.surface, cq, opts_)) {
      Row r = base;
      fill(r, c, q.kind == QueryKind::Char);
      if (scene_.options.verify) verify_by_point(q, c, r);
      rows.push_back(r);
    }
    return rows;
  }

  const std::vector<oracle::Path>& oracle_paths(const Query& q) {
    auto it = oracle_cache_.find(q.id);
    if (it != oracle_cache_.end()) return it->second;
    std::vector<oracle::Path> paths;
    if (q.function == 'T') {
      const Vec3 d1 = q.d1 ? *q.d1 : xi_to_dir(*q.xi1);
      const Vec3 d2 = q.d2 ? *q.d2 : xi_to_dir(*q.xi2);
      paths = oracle::oracle_T(scene_.surface, d1, d2, oracle_opts_);
    } else if (q.function == 'W') {
      const Vec3 d2 = q.d2 ? *q.d2 : xi_to_dir(*q.xi2);
      paths = oracle::oracle_W(scene_.surface, *q.p1, d2, oracle_opts_);
    } else {
      paths = oracle::oracle_V(scene_.surface, *q.p1, *q.p2, oracle_opts_);
    }
    return oracle_cache_.emplace(q.id, std::move(paths)).first->second;
  }

  // Flat families collapse differently on the two sides, so T rows match an
  // oracle path by normal direction and value rather than by point.
  void verify_T(const Query& q, const CharacteristicResult& c, Row& r) {
    const Vec3 n = xi_to_dir(c.xi0);
    const oracle::Path* best = nullptr;
    double best_score = 0.0;
    for (const auto& p : oracle_paths(q)) {
      if (p.normal.cross(n).norm() > kVerifyTolerance) continue;
      const double score = std::abs(p.value - c.value);
      if (!best || score < best_score) {
        best = &p;
        best_score = score;
      }
    }
    settle(r, best, best ? (q.kind == QueryKind::Char ? best_score : best->normal.cross(n).norm()) : 0.0,
           c.value);
  }

  void verify_by_point(const Query& q, const CharacteristicResult& c, Row& r) {
    const Vec3 foot = to_vec3(c.frame.foot);
    const oracle::Path* best = nullptr;
    for (const auto& p : oracle_paths(q)) {
      if (!best || (p.point - foot).norm() < (best->point - foot).norm()) best = &p;
    }
    if (best && (best->point - foot).norm() > kVerifyTolerance * std::max(1.0, foot.norm())) best = nullptr;
    const double delta = !best ? 0.0
                         : q.kind == QueryKind::Char ? std::abs(best->value - c.value)
                                                     : (best->point - foot).norm();
    settle(r, best, delta, q.kind == QueryKind::Char ? c.value : foot.norm());
  }

  static void settle(Row& r, const oracle::Path* best, double delta, double scale) {
    if (!best) {
      r.status = "oracle-mismatch";
      return;
    }
    r.oracle = best->value;
    r.delta = delta;
    if (!(delta < kVerifyTolerance * std::max(1.0, std::abs(scale)))) r.status = "oracle-mismatch";
  }

  const Scene& scene_;
  SolveOptions opts_;
  oracle::OracleOptions oracle_opts_;
  std::map<std::string, std::vector<oracle::Path>> oracle_cache_;
};

}  // namespace

Scene parse_scene(std::string_view text) {
  std::map<std::string, Section> sections;
  std::vector<std::string> query_order;
  std::string current;
  int line_no = 0;

  auto open_section = [&](const std::string& name, int line) -> Section& {
    auto [it, inserted] = sections.try_emplace(name);
    if (inserted) {
      it->second.line = line;
      if (name.rfind("query.", 0) == 0) query_order.push_back(name.substr(6));
    }
    return it->second;
  };
  auto check_section_name = [&](const std::string& name, int line) {
    if (name == "surface" || name == "options") return;
    if (name.rfind("query.", 0) == 0 && valid_id(std::string_view(name).substr(6))) return;
    throw ParseError(line, name, "unknown section; expected surface, options or query.<id>");
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto hash = raw.find('#');
    const std::string_view line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, std::string(line), "unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      check_section_name(current, line_no);
      if (sections.count(current)) throw ParseError(line_no, current, "duplicate section");
      open_section(current, line_no);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, std::string(line), "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(line_no, "", "empty key");

    std::string section = current;
    if (section.empty()) {
      // Dotted keys outside a section: surface.kind, options.grid, query.N.type.
      const auto dot = key.rfind('.');
      if (dot == std::string::npos) throw ParseError(line_no, key, "key outside any section");
      section = key.substr(0, dot);
      key = key.substr(dot + 1);
      check_section_name(section, line_no);
    } else if (key.find('.') != std::string::npos) {
      throw ParseError(line_no, key, "dotted key inside a section");
    }
    Section& s = open_section(section, line_no);
    if (!s.keys.emplace(key, Entry{value, line_no}).second) throw ParseError(line_no, key, "duplicate key");
  }

  const auto surface_it = sections.find("surface");
  if (surface_it == sections.end()) throw ParseError(line_no, "surface", "missing [surface] section");
  const auto options_it = sections.find("options");

  std::vector<Query> queries;
  for (const std::string& id : query_order) queries.push_back(build_query(id, sections.at("query." + id)));
  SceneOptions options = build_options(options_it == sections.end() ? nullptr : &options_it->second);
  return Scene{build_surface(surface_it->second), options, std::move(queries)};
}

RunSummary run(const Scene& scene, std::ostream& out) {
  RunSummary summary;
  Runner runner(scene);
  write_header(out, scene.options.verify);
  for (const Query& q : scene.queries) {
    for (const Row& row : runner.evaluate(q)) {
      write_row(out, row, scene.options.verify);
      ++summary.rows;
      if (row.status == to_string(ErrorKind::SolverFailure)) ++summary.solver_failures;
      if (row.status == "oracle-mismatch") ++summary.mismatches;
    }
  }
  return summary;
}

// --- selftest --------------------------------------------------------------

namespace {

using CsvRow = std::map<std::string, std::string>;
using Check = std::function<bool(const std::vector<CsvRow>&)>;

std::vector<CsvRow> read_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  for (auto f : split(line, ',')) header.emplace_back(f);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    const auto fields = split(line, ',');
    CsvRow row;
    for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) row[header[i]] = std::string(fields[i]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<CsvRow> rows_of(const std::vector<CsvRow>& rows, const std::string& query) {
  std::vector<CsvRow> out;
  for (const auto& r : rows) {
    if (r.at("query") == query) out.push_back(r);
  }
  return out;
}

double number(const CsvRow& r, const std::string& column) {
  const std::string& s = r.at(column);
  double v = std::nan("");
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

// Some row of the query has `column` within tol of `expected`.
Check some_value(std::string query, std::string column, double expected, double tol) {
  return [=](const std::vector<CsvRow>& rows) {
    const auto qr = rows_of(rows, query);
    return std::any_of(qr.begin(), qr.end(), [&](const CsvRow& r) {
      return r.at("status") == "ok" && std::abs(number(r, column) - expected) <= tol;
    });
  };
}

// Every row of the query is ok, there are at least min_rows, and each has
// `column` within tol of `expected`.
Check every_value(std::string query, std::string column, double expected, double tol, std::size_t min_rows) {
  return [=](const std::vector<CsvRow>& rows) {
    const auto qr = rows_of(rows, query);
    return qr.size() >= min_rows && std::all_of(qr.begin(), qr.end(), [&](const CsvRow& r) {
             return r.at("status") == "ok" && std::abs(number(r, column) - expected) <= tol;
           });
  };
}

Check status_is(std::string query, std::string status) {
  return [=](const std::vector<CsvRow>& rows) {
    const auto qr = rows_of(rows, query);
    return qr.size() == 1 && qr.front().at("status") == status;
  };
}

Check all_below(std::string column, double bound) {
  return [=](const std::vector<CsvRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [&](const CsvRow& r) {
      const std::string& s = r.at(column);
      return s.empty() || std::abs(number(r, column)) < bound;
    });
  };
}

struct Fixture {
  std::string name;
  std::string scene;
  std::vector<Check> checks;
};

const std::vector<Fixture>& fixtures() {
  const double sqrt2 = std::sqrt(2.0);
  static const std::vector<Fixture> list{
      {"plane mirror",
       "[surface]\nkind = plane\nnormal = 0,0,1\n[options]\nverify = true\n"
       "[query.conv]\ntype = convert\ndir = 1,0,-1\n"
       "[query.refl]\ntype = reflect\npoint = 0,0,1\ndir = 1,0,-1\n"
       "[query.v]\ntype = char\nfunction = V\np1 = 0,0,1\np2 = 2,0,1\n"
       "[query.w]\ntype = char\nfunction = W\np1 = 0,0,1\nd2 = 1,0,1\n"
       "[query.t_in]\ntype = domain\nfunction = T\nxi1 = 2.41421356237309505\nxi2 = 0.41421356237309505\n"
       "[query.t_out]\ntype = char\nfunction = T\nxi1 = 1\nxi2 = 0,1\n",
       {some_value("conv", "xi1_re", 1.0 + sqrt2, 1e-10), some_value("refl", "xi2_re", sqrt2 - 1.0, 1e-10),
        some_value("refl", "mu_re", 1.0, 1e-9), every_value("v", "value", 2.0 * sqrt2, 1e-10, 1),
        every_value("w", "value", 1.0 / sqrt2, 1e-10, 1), every_value("t_in", "mu_re", 0.0, 10.0, 1),
        status_is("t_out", "empty-domain"), all_below("residual", 1e-10), all_below("abs_delta", 1e-7)}},
      {"unit sphere",
       "[surface]\nkind = sphere\nradius = 1\n[options]\nverify = true\n"
       "[query.t]\ntype = char\nfunction = T\nxi1 = -2.41421356237309505\nxi2 = 2.41421356237309505\n"
       "[query.retro]\ntype = char\nfunction = V\np1 = 2,0,0\np2 = 2,0,0\n"
       "[query.same]\ntype = char\nfunction = T\nxi1 = 1\nxi2 = 1\n",
       {every_value("t", "value", sqrt2, 1e-9, 1), some_value("retro", "value", 2.0, 1e-10),
        some_value("retro", "mu_re", 1.0, 1e-9), status_is("same", "DegenerateInput"),
        all_below("residual", 1e-10), all_below("abs_delta", 1e-7)}},
      {"ellipsoid foci",
       "[surface]\nkind = ellipsoid\nsemi_axes = 2,1.7320508075688772,1.7320508075688772\n"
       "[query.v]\ntype = char\nfunction = V\np1 = 1,0,0\np2 = -1,0,0\n",
       {every_value("v", "value", 4.0, 1e-7, 8), all_below("residual", 1e-10)}},
      {"paraboloid focus",
       "[surface]\nkind = paraboloid\nfocal_length = 1\n[options]\nverify = true\n"
       "[query.w]\ntype = char\nfunction = W\np1 = 0.5,0,1\nd2 = 0,0,1\n",
       {some_value("w", "value", 0.5, 1e-10), some_value("w", "value", 1.5, 1e-10), all_below("abs_delta", 1e-7)}},
  };
  return list;
}

struct BadScene {
  std::string name;
  std::string scene;
};

const std::vector<BadScene>& bad_scenes() {
  static const std::vector<BadScene> list{
      {"negative radius", "[surface]\nkind = sphere\nradius = -1\n"},
      {"zero grid", "[surface]\nkind = plane\nnormal = 0,0,1\n[options]\ngrid = 0\n"},
      {"unknown key", "[surface]\nkind = plane\nnormal = 0,0,1\ncolour = red\n"},
      {"missing function", "[surface]\nkind = plane\nnormal = 0,0,1\n[query.1]\ntype = char\np1 = 0,0,1\n"},
  };
  return list;
}

}  // namespace

int selftest(std::ostream& out) {
  int failures = 0;
  auto report = [&](bool ok, const std::string& name) {
    out << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };

  for (const Fixture& f : fixtures()) {
    std::ostringstream first;
    std::ostringstream second;
    bool ok = true;
    try {
      const Scene scene = parse_scene(f.scene);
      run(scene, first);
      run(scene, second);
      const auto rows = read_csv(first.str());
      for (const Check& c : f.checks) ok = ok && c(rows);
      report(first.str() == second.str(), f.name + " (deterministic)");
    } catch (const std::exception& e) {
      out << "  " << e.what() << "\n";
      ok = false;
    }
    report(ok, f.name);
  }

  for (const BadScene& b : bad_scenes()) {
    bool rejected = false;
    try {
      parse_scene(b.scene);
    } catch (const ParseError&) {
      rejected = true;
    }
    report(rejected, "rejects " + b.name);
  }
  return failures;
}

}  // namespace lineoptics
