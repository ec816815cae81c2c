#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aion/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Separable exponential-trigonometric model fitting by one-shot root-finding"};
  app.require_subcommand(1);

  std::string fit_config;
  auto* fit = app.add_subcommand("fit", "Fit a model from a config file");
  fit->add_option("config", fit_config, "Config file")->required();

  std::string demo_out = "demo_out";
  auto* demo = app.add_subcommand("demo", "Run ID, SD and NCG on the toy problem");
  demo->add_option("--out", demo_out, "Output directory");

  aion::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "Run the derivative and structure property checks");
  verify->add_option("--seed", verify_opts.seed, "RNG seed");
  verify->add_option("--trials", verify_opts.trials, "Instances per property")
      ->check(CLI::PositiveNumber);
  // Negative control used by the test suite.
  verify->add_flag("--corrupt-gradient", verify_opts.corrupt_gradient)->group("");

  std::string landscape_config;
  auto* landscape = app.add_subcommand("landscape", "Write loss-landscape slices");
  landscape->add_option("config", landscape_config, "Config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (*fit) return aion::cli::cmd_fit(fit_config, std::cout, std::cerr);
  if (*demo) return aion::cli::cmd_demo(demo_out, std::cout, std::cerr);
  if (*verify) return aion::cli::cmd_verify(verify_opts, std::cout, std::cerr);
  if (*landscape) return aion::cli::cmd_landscape(landscape_config, std::cout, std::cerr);
  return 1;
}
