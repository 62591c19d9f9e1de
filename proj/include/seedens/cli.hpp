#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "seedens/ensemble.hpp"
#include "seedens/eval.hpp"

#include "json.hpp"

namespace seedens {

// One JSON config drives every subcommand; all randomness comes from seeds
// declared in it. Unknown keys are rejected so typos cannot silently fall
// back to defaults, and the fully-resolved config is echoed into the output
// directory of every run.

struct RunConfig {
  // data
  std::string transcripts_path;
  std::string annotations_path;
  std::string gold_path;  // pre-aggregated labels, bypasses annotations
  std::string embeddings_path;

  EncoderConfig encoder;
  ModelConfigs models;
  ModelKind model_kind = ModelKind::seed_ensemble;
  std::string bundle_path;  // recover input

  // eval
  int cv_k = 5;
  int cv_repeats = 5;
  std::uint64_t cv_seed = 0;

  SynthConfig synth;

  // output
  std::filesystem::path output_dir = "out";
  bool write_csv = true;
  bool write_json = true;

  nlohmann::ordered_json resolved;  // echo of the config actually used
};

RunConfig parse_run_config(const nlohmann::ordered_json& doc);

int cmd_aggregate(const RunConfig& config);
int cmd_kappa(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_recover(const RunConfig& config);
int cmd_synth(const RunConfig& config);

// Loads the config file, applies the output override, dispatches, and maps
// errors to exit codes: 0 ok, 2 usage/input error, 1 internal error.
int run_command(const std::string& command, const std::string& config_path,
                const std::optional<std::string>& output_override, std::ostream& err);

}  // namespace seedens
