#include <CLI11.hpp>

#include <cstdio>

#include "viflow/run.hpp"

using namespace viflow;

int main(int argc, char** argv) {
  CLI::App app{"viflow: 2-D Stokes / Navier-Stokes flows with friction-type boundary conditions"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = 1;
  int levels = 0;
  bool override_adm = false;

  auto add_common = [&](CLI::App* cmd, bool need_out) {
    cmd->add_option("--config", config_path, "problem configuration file")->required();
    if (need_out) cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--threads", threads, "worker threads for check sweeps (default 1)");
    cmd->add_flag("--override-admissibility", override_adm,
                  "run even when the admissibility diagnostics warn");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the configured problem and export fields");
  add_common(solve, true);
  CLI::App* check = app.add_subcommand("check", "run the estimate/complementarity/sweep checks");
  add_common(check, false);
  CLI::App* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
  add_common(mms, false);
  mms->add_option("--levels", levels, "number of refinement levels");
  CLI::App* vmesh = app.add_subcommand("validate-mesh", "validate the configured mesh");
  add_common(vmesh, false);

  CLI11_PARSE(app, argc, argv);

  try {
    ProblemConfig cfg = load_config(config_path);
    if (solve->parsed()) return run_solve(cfg, out_dir, override_adm, threads);
    if (check->parsed()) return run_check(cfg, override_adm, threads);
    if (mms->parsed()) return run_convergence(cfg, levels);
    if (vmesh->parsed()) return run_validate_mesh(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "viflow: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "viflow: internal error: %s\n", e.what());
    return 2;
  }
  return 1;
}
