#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "seedens/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "seedens: recover per-sample annotator rating distributions from aggregated labels\n"
      "with seed ensembles, plus agreement analysis and baseline comparisons."};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;

  const std::pair<const char*, const char*> commands[] = {
      {"aggregate", "Aggregate annotations into gold labels, vote distributions, disagreement"},
      {"kappa", "Inter-rater agreement report: Cohen's kappa per question, span overlap"},
      {"train", "Train a model and save its bundle"},
      {"eval", "Repeated k-fold cross-validation report"},
      {"recover", "Apply a saved model bundle to recover per-sample distributions"},
      {"synth", "Generate the synthetic two-segment benchmark dataset"},
  };
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--output", output_dir, "Override output.dir from the config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2; --help exits 0
  }

  auto* sub = app.get_subcommands().front();
  std::optional<std::string> override_dir;
  if (sub->count("--output") > 0) override_dir = output_dir;
  return seedens::run_command(sub->get_name(), config_path, override_dir, std::cerr);
}
