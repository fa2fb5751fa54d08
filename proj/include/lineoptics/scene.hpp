#ifndef LINEOPTICS_SCENE_HPP
#define LINEOPTICS_SCENE_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lineoptics/line_space.hpp"
#include "lineoptics/surfaces.hpp"

namespace lineoptics {

struct SceneOptions {
  int grid = 16;            // multistart seeds per side
  double tol = 1e-10;       // root certification threshold
  bool verify = false;      // cross-check every row against the oracle
  int oracle_grid = 128;    // oracle search grid per side
};

enum class QueryKind { Convert, Reflect, Domain, Char };

/// One `[query.N]` section. Which optional fields are set depends on the
/// kind and function; the parser guarantees the required ones are present.
/// Direction vectors are normalized when read.
struct Query {
  std::string id;
  int line = 0;
  QueryKind kind = QueryKind::Convert;
  char function = 0;  // 'T', 'W' or 'V' for Domain and Char
  std::optional<Complex> xi1;
  std::optional<Complex> xi2;
  std::optional<Vec3> d1;
  std::optional<Vec3> d2;
  std::optional<Vec3> p1;
  std::optional<Vec3> p2;
  std::optional<Vec3> point;
  std::optional<Vec3> dir;
};

struct Scene {
  MirrorSurface surface;
  SceneOptions options;
  std::vector<Query> queries;
};

/// Parses the key-value scene format. Throws ParseError with the offending
/// line and field.
Scene parse_scene(std::string_view text);

struct RunSummary {
  int rows = 0;
  int solver_failures = 0;
  int mismatches = 0;
};

/// Writes the CSV table (header plus one row per query branch) to `out`.
RunSummary run(const Scene& scene, std::ostream& out);

/// Runs the built-in fixtures, printing one PASS/FAIL line each to `out`.
/// Returns the number of failures.
int selftest(std::ostream& out);

}  // namespace lineoptics

#endif  // LINEOPTICS_SCENE_HPP
