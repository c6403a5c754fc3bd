// Command-line front end: simulate | fit | effects | sensitivity | validate.
// Exit codes: 0 ok, 2 validation, 3 non-convergence, 4 oracle disagreement.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "its/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  its::harness::Overrides overrides;
  std::uint64_t seed = 0;
  int draws = 0;
  double threshold_pct = 0.0;
  std::string out;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-c,--config", args.config_path, "run configuration json")->required();
  sub->add_option("--seed", args.seed, "override the rng seed");
  sub->add_option("--draws", args.draws, "override the posterior draw count");
  sub->add_option("--threshold-pct", args.threshold_pct,
                  "override the intervention: awareness at this threshold");
  sub->add_option("--out", args.out, "override the output directory");
}

its::harness::RunConfig load(const CommonArgs& args, const CLI::App* sub) {
  its::harness::Overrides ov;
  if (sub->count("--seed")) ov.seed = args.seed;
  if (sub->count("--draws")) ov.draws = args.draws;
  if (sub->count("--threshold-pct")) ov.threshold_pct = args.threshold_pct;
  if (sub->count("--out")) ov.out = args.out;
  return its::harness::load_config(args.config_path, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian hierarchical interrupted-time-series engine for staggered policy "
               "rollouts on binary panel outcomes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(its::kEngineVersion));

  CommonArgs args;
  std::string artifact_path;

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, args);
  CLI::App* fit = app.add_subcommand("fit", "fit the model and write the posterior artifact");
  add_common(fit, args);
  CLI::App* eff = app.add_subcommand("effects", "compute effect reports from a fit artifact");
  add_common(eff, args);
  eff->add_option("--artifact", artifact_path, "fit artifact path (default <out>/fit_artifact.json)");
  CLI::App* sens = app.add_subcommand("sensitivity",
                                      "run the pipeline across intervention definitions");
  add_common(sens, args);
  CLI::App* val = app.add_subcommand("validate", "cross-check the Laplace fit against MCMC");
  add_common(val, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto cfg = load(args, sim);
      const int rc = its::harness::cmd_simulate(cfg);
      std::cout << "simulate: wrote panel.csv, areas.csv, rollout.csv, ground_truth.json to "
                << cfg.output_dir << "\n";
      return rc;
    }
    if (fit->parsed()) {
      const auto cfg = load(args, fit);
      const int rc = its::harness::cmd_fit(cfg);
      std::cout << "fit: wrote " << cfg.output_dir << "/fit_artifact.json\n";
      return rc;
    }
    if (eff->parsed()) {
      const auto cfg = load(args, eff);
      const std::string artifact =
          eff->count("--artifact") ? artifact_path : cfg.output_dir + "/fit_artifact.json";
      const int rc = its::harness::cmd_effects(cfg, artifact);
      std::cout << "effects: wrote report tables to " << cfg.output_dir << "\n";
      return rc;
    }
    if (sens->parsed()) {
      const auto cfg = load(args, sens);
      const int rc = its::harness::cmd_sensitivity(cfg);
      std::cout << "sensitivity: wrote aligned tables for "
                << cfg.sensitivity_definitions.size() << " definitions to " << cfg.output_dir
                << "\n";
      return rc;
    }
    if (val->parsed()) {
      const auto cfg = load(args, val);
      const int rc = its::harness::cmd_validate(cfg);
      std::cout << "validate: " << (rc == 0 ? "laplace agrees with the mcmc oracle"
                                            : "oracle comparison failed")
                << " (report in " << cfg.output_dir << "/validate_report.json)\n";
      return rc;
    }
  } catch (const its::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const its::convergence_error& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
