// Batch CLI: `pfgl run <config>` executes a scenario, `pfgl compare <a> <b>`
// diffs two completed run directories.

#include <CLI11.hpp>

#include "pfgl/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"phase-field fracture with an adaptive global-local solver"};
  app.require_subcommand(1);

  std::string config_path, outdir;
  std::vector<std::string> overrides;
  int log_level = 1;

  auto* run = app.add_subcommand("run", "execute a scenario config");
  run->add_option("config", config_path, "scenario config file")->required();
  run->add_option("--output-dir", outdir, "artifact directory (default <config>_out)");
  run->add_option("--override", overrides,
                  "override a config entry, section.key=value (repeatable)");
  run->add_option("--log-level", log_level, "0 quiet, 1 progress, 2 verbose");

  std::string dir_a, dir_b;
  double tol_reaction = 1e-8, tol_energy = 1e-8;
  auto* cmp = app.add_subcommand("compare", "compare two run directories");
  cmp->add_option("dirA", dir_a)->required();
  cmp->add_option("dirB", dir_b)->required();
  cmp->add_option("--tol-reaction-rel", tol_reaction, "relative reaction tolerance");
  cmp->add_option("--tol-energy-rel", tol_energy, "relative energy tolerance");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return pfgl::cli_run(config_path, outdir, overrides, log_level);
  return pfgl::cli_compare(dir_a, dir_b, tol_reaction, tol_energy);
}
