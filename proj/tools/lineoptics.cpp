#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lineoptics/error.hpp"
#include "lineoptics/scene.hpp"

namespace {

// Exit codes: 0 success, 1 solver failure rows, 2 unreadable or invalid scene.
int run_scene(const std::string& path, bool verify, int grid, double tol) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open scene file '" << path << "'\n";
    return 2;
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    lineoptics::Scene scene = lineoptics::parse_scene(text.str());
    if (verify) scene.options.verify = true;
    if (grid > 0) scene.options.grid = grid;
    if (tol > 0.0) scene.options.tol = tol;
    const lineoptics::RunSummary summary = lineoptics::run(scene, std::cout);
    if (summary.mismatches > 0) std::cerr << summary.mismatches << " row(s) disagree with the oracle\n";
    if (summary.solver_failures > 0) {
      std::cerr << summary.solver_failures << " query branch(es) hit a solver failure\n";
      return 1;
    }
    return 0;
  } catch (const lineoptics::ParseError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflection of oriented lines and Hamilton's characteristic functions"};
  app.require_subcommand(1);

  std::string scene_path;
  bool verify = false;
  int grid = 0;
  double tol = 0.0;
  CLI::App* run = app.add_subcommand("run", "Evaluate a scene file and print CSV to stdout");
  run->add_option("scene", scene_path, "Scene file")->required();
  run->add_flag("--verify", verify, "Cross-check every row against the vector oracle");
  run->add_option("--grid", grid, "Multistart seeds per side")->check(CLI::PositiveNumber);
  run->add_option("--tol", tol, "Root certification threshold")->check(CLI::PositiveNumber);

  CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in fixtures");

  CLI11_PARSE(app, argc, argv);

  if (*run) return run_scene(scene_path, verify, grid, tol);
  if (*selftest) return lineoptics::selftest(std::cout) == 0 ? 0 : 1;
  return 0;
}
