#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kinreg/cli.hpp"

namespace {

void apply_thread_env() {
  const char* env = std::getenv("KINREG_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    std::cerr << "warning: ignoring KINREG_THREADS='" << env << "'\n";
    return;
  }
  omp_set_num_threads(static_cast<int>(n));
}

struct Common {
  std::string config;
  std::string out;
  bool verify = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file")->required();
  app->add_option("--out", c.out, "output directory")->required();
  app->add_flag("--verify", c.verify, "run the module's invariant checks on these inputs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinreg: velocity-averaging regularity toolkit"};
  app.require_subcommand(1);

  Common common;
  kinreg::cli::RunConfig rc;

  auto* exponents = app.add_subcommand("exponents", "optimize or evaluate the exponent system");
  add_common(exponents, common);
  auto* nondeg = app.add_subcommand("nondeg", "estimate the non-degeneracy exponent of a drift");
  add_common(nondeg, common);

  auto* lpa = app.add_subcommand("lpa", "dyadic spectrum and Sobolev seminorm of a grid function");
  add_common(lpa, common);
  double r = 0.0, window = 0.0;
  int jmin = 0, jmax = 0;
  std::vector<double> seminorm;
  auto* o_r = lpa->add_option("--r", r, "integrability exponent of the band norms");
  auto* o_jmin = lpa->add_option("--jmin", jmin, "first band of the slope fit");
  auto* o_jmax = lpa->add_option("--jmax", jmax, "last band of the slope fit (0: top band)");
  auto* o_semi = lpa->add_option("--seminorm", seminorm, "Gagliardo seminorm order s and exponent q")
                     ->expected(2);
  auto* o_win = lpa->add_option("--window", window, "smooth cutoff margin per axis");

  auto* claw = app.add_subcommand("claw", "heterogeneous scalar conservation laws");
  claw->require_subcommand(1);
  auto* solve = claw->add_subcommand("solve", "run the finite-volume solver");
  add_common(solve, common);
  auto* pipeline = claw->add_subcommand("pipeline", "predicted versus measured regularity");
  add_common(pipeline, common);

  CLI11_PARSE(app, argc, argv);

  if (exponents->parsed()) rc.subcommand = "exponents";
  if (nondeg->parsed()) rc.subcommand = "nondeg";
  if (lpa->parsed()) {
    rc.subcommand = "lpa";
    if (o_r->count()) rc.lpa.r = r;
    if (o_jmin->count()) rc.lpa.jmin = jmin;
    if (o_jmax->count()) rc.lpa.jmax = jmax;
    if (o_semi->count()) rc.lpa.seminorm = std::array<double, 2>{seminorm[0], seminorm[1]};
    if (o_win->count()) rc.lpa.window = window;
  }
  if (solve->parsed()) rc.subcommand = "claw solve";
  if (pipeline->parsed()) rc.subcommand = "claw pipeline";

  rc.config_path = common.config;
  rc.out_dir = common.out;
  rc.verify = common.verify;
  apply_thread_env();
  return kinreg::cli::run(rc, std::cerr);
}
