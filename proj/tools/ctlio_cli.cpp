// SPDX-License-Identifier: Apache-2.0

// Batch front end over the shared C API: dataset synthesis, odometry,
// loop correction, evaluation and plot-data emission.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ctlio/capi.h"

namespace {

int finish(ctlio_status status) {
  if (status == CTLIO_OK) return 0;
  std::fprintf(stderr, "error: %s\n", ctlio_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time LiDAR-inertial trajectory estimation toolkit"};
  app.require_subcommand(1);

  std::string config, out, dataset, odometry_dir, constraints, run_dir;
  std::string estimate, ground_truth, align = "first-pose", per_sample;
  long seed = -1;

  auto* simulate = app.add_subcommand("simulate", "Synthesize a dataset from a simulator config");
  simulate->add_option("--config", config, "simulator config file")->required();
  simulate->add_option("--out", out, "output dataset directory")->required();
  simulate->add_option("--seed", seed, "seed override (beats the config file)");

  auto* odometry = app.add_subcommand("odometry", "Run the estimator over a dataset");
  odometry->add_option("--dataset", dataset, "dataset directory")->required();
  odometry->add_option("--config", config, "estimator config file");
  odometry->add_option("--out", out, "output run directory")->required();

  auto* loop = app.add_subcommand("loop-correct", "Two-stage loop closure correction");
  loop->add_option("--odometry", odometry_dir, "odometry run directory")->required();
  loop->add_option("--constraints", constraints, "loop constraint CSV")->required();
  loop->add_option("--out", out, "output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Absolute pose error between TUM files");
  evaluate->add_option("--estimate", estimate, "estimated trajectory (TUM)")->required();
  evaluate->add_option("--gt", ground_truth, "ground-truth trajectory (TUM)")->required();
  evaluate->add_option("--align", align, "alignment: first-pose | none")
      ->check(CLI::IsMember({"first-pose", "none"}));
  evaluate->add_option("--per-sample", per_sample, "write per-sample errors to this CSV");

  auto* plot = app.add_subcommand("plot-data", "Emit trajectory-derivative vs IMU series");
  plot->add_option("--run", run_dir, "finished run directory")->required();
  plot->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return finish(ctlio_simulate(config.c_str(), out.c_str(), seed));
  }
  if (odometry->parsed()) {
    return finish(ctlio_odometry(dataset.c_str(), config.empty() ? nullptr : config.c_str(),
                                 out.c_str()));
  }
  if (loop->parsed()) {
    return finish(ctlio_loop_correct(odometry_dir.c_str(), constraints.c_str(), out.c_str()));
  }
  if (evaluate->parsed()) {
    double trans = 0.0, rot = 0.0;
    const ctlio_status status =
        ctlio_evaluate(estimate.c_str(), ground_truth.c_str(), align == "first-pose" ? 1 : 0,
                       per_sample.empty() ? nullptr : per_sample.c_str(), &trans, &rot);
    if (status == CTLIO_OK) {
      std::printf("trans_rmse %.9g\nrot_rmse %.9g\n", trans, rot);
    }
    return finish(status);
  }
  if (plot->parsed()) {
    return finish(ctlio_plot_data(run_dir.c_str(), out.c_str()));
  }
  return 1;
}
