// gchan: error curves, identity checks and simulations for the Gaussian channel.
#include "gchan/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Gaussian channel estimation-error and mutual-information toolkit"};
  app.set_version_flag("--version", std::string(gchan::cli::version()));
  app.require_subcommand(1);

  gchan::cli::RunOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  const std::pair<const char*, const char*> commands[] = {
      {"spectrum", "discretize a kernel and write its eigenvalues"},
      {"curves", "closed-form causal/noncausal error and information curves"},
      {"verify", "run the identity and oracle checks, write a JSON report"},
      {"simulate", "seeded Monte Carlo run of the channel and causal filter"},
      {"yj", "Toeplitz convergence study against the spectral-density integral"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "64-bit seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return gchan::cli::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (!config.empty()) opts.config = config;
  if (chosen->count("--out") > 0) opts.out = out;
  if (chosen->count("--seed") > 0) opts.seed = seed;
  if (chosen->count("--threads") > 0) opts.threads = threads;
  return gchan::cli::run(chosen->get_name(), opts, std::cout, std::cerr);
}
