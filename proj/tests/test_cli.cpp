#include <doctest.h>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "seedens/cli.hpp"
#include "seedens/csv.hpp"
#include "seedens/io.hpp"
#include "seedens/model_io.hpp"

using namespace seedens;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("seedens_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const char* name, const ordered_json& doc) {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2) << "\n";
  return p;
}

int run(const std::string& command, const fs::path& config, std::string* err_text = nullptr) {
  std::ostringstream err;
  const int code = run_command(command, config.string(), std::nullopt, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("the full pipeline runs through every subcommand") {
  TempDir root;
  const fs::path synth_out = root.path / "synth_out";

  ordered_json synth_cfg;
  synth_cfg["synth"] = {{"n_samples", 36}, {"n_annotators", 4},    {"vocab_per_class", 6},
                        {"segment_length", 3}, {"label_noise", 0.1}, {"seed", 5}};
  synth_cfg["output"] = {{"dir", synth_out.string()}};
  const auto synth_path = write_config(root.path, "synth.json", synth_cfg);

  std::string err;
  REQUIRE(run("synth", synth_path, &err) == 0);
  CAPTURE(err);
  REQUIRE(fs::exists(synth_out / "transcripts.csv"));
  REQUIRE(fs::exists(synth_out / "annotations.csv"));
  REQUIRE(fs::exists(synth_out / "gold.csv"));
  REQUIRE(fs::exists(synth_out / "config.json"));

  const auto echoed = ordered_json::parse(read_text_file(synth_out / "config.json"));
  CHECK(echoed["synth"]["n_samples"] == 36);
  CHECK(echoed["output"]["dir"] == synth_out.string());

  // Re-aggregating the synthetic annotations reproduces its gold file exactly.
  const fs::path agg_out = root.path / "agg_out";
  ordered_json agg_cfg;
  agg_cfg["data"] = {{"transcripts", (synth_out / "transcripts.csv").string()},
                     {"annotations", (synth_out / "annotations.csv").string()}};
  agg_cfg["output"] = {{"dir", agg_out.string()}};
  REQUIRE(run("aggregate", write_config(root.path, "agg.json", agg_cfg), &err) == 0);
  CHECK(read_text_file(agg_out / "gold.csv") == read_text_file(synth_out / "gold.csv"));

  const fs::path kappa_out = root.path / "kappa_out";
  ordered_json kappa_cfg = agg_cfg;
  kappa_cfg["output"] = {{"dir", kappa_out.string()}};
  REQUIRE(run("kappa", write_config(root.path, "kappa.json", kappa_cfg), &err) == 0);
  const auto kappa_rows = csv::parse(read_text_file(kappa_out / "kappa.csv"));
  REQUIRE(kappa_rows.size() >= 2);
  CHECK(kappa_rows[0] ==
        std::vector<std::string>{"question", "statistic", "value", "defined", "n_pairs_used"});
  bool saw_q2 = false, saw_q4 = false;
  for (std::size_t i = 1; i < kappa_rows.size(); ++i) {
    REQUIRE(kappa_rows[i].size() == 5);
    if (kappa_rows[i][0] == "q2") saw_q2 = true;
    if (kappa_rows[i][0] == "q4") saw_q4 = true;
  }
  CHECK(saw_q2);
  CHECK(saw_q4);

  const fs::path train_out = root.path / "train_out";
  ordered_json train_cfg;
  train_cfg["data"] = {{"transcripts", (synth_out / "transcripts.csv").string()},
                       {"gold", (synth_out / "gold.csv").string()}};
  train_cfg["encoder"] = {{"kind", "hashed"}, {"d", 64}};
  train_cfg["train"] = {{"epochs", 2}, {"batch_size", 8}, {"master_seed", 7},
                        {"data_order_seed", 3}};
  train_cfg["model"] = {{"kind", "seed_ensemble"}, {"n", 3}, {"master_seed", 7}};
  train_cfg["output"] = {{"dir", train_out.string()}};
  REQUIRE(run("train", write_config(root.path, "train.json", train_cfg), &err) == 0);
  CAPTURE(err);
  REQUIRE(fs::exists(train_out / "model" / "manifest.json"));
  const auto bundle = load_bundle(train_out / "model");
  CHECK(bundle.kind == ModelKind::seed_ensemble);
  REQUIRE(bundle.ensemble.has_value());
  CHECK(bundle.ensemble->heads.size() == 3);

  const fs::path rec_out = root.path / "rec_out";
  ordered_json rec_cfg;
  rec_cfg["data"] = {{"transcripts", (synth_out / "transcripts.csv").string()},
                     {"gold", (synth_out / "gold.csv").string()}};
  rec_cfg["model"] = {{"bundle", (train_out / "model").string()}};
  rec_cfg["output"] = {{"dir", rec_out.string()}};
  REQUIRE(run("recover", write_config(root.path, "rec.json", rec_cfg), &err) == 0);
  const auto dist = ordered_json::parse(read_text_file(rec_out / "distributions.json"));
  REQUIRE(dist.is_array());
  REQUIRE(dist.size() == 36);
  CHECK(dist[0].contains("sample_id"));
  CHECK(dist[0]["recovered"].is_array());
  CHECK(dist[0]["true"].is_array());

  // Recovery replays bit-identically.
  const fs::path rec2_out = root.path / "rec2_out";
  ordered_json rec2_cfg = rec_cfg;
  rec2_cfg["output"] = {{"dir", rec2_out.string()}};
  REQUIRE(run("recover", write_config(root.path, "rec2.json", rec2_cfg), &err) == 0);
  CHECK(read_text_file(rec2_out / "distributions.json") ==
        read_text_file(rec_out / "distributions.json"));

  const fs::path eval_out = root.path / "eval_out";
  ordered_json eval_cfg = train_cfg;
  eval_cfg["eval"] = {{"k", 3}, {"repeats", 1}, {"seed", 1}};
  eval_cfg["output"] = {{"dir", eval_out.string()}};
  REQUIRE(run("eval", write_config(root.path, "eval.json", eval_cfg), &err) == 0);
  CAPTURE(err);
  REQUIRE(fs::exists(eval_out / "report.csv"));
  REQUIRE(fs::exists(eval_out / "report.json"));
  REQUIRE(fs::exists(eval_out / "report_distributions_seed_ensemble.json"));
  const auto report = ordered_json::parse(read_text_file(eval_out / "report.json"));
  REQUIRE(report.is_array());
  CHECK(report[0]["model"] == "seed_ensemble");
  CHECK(report[0]["metrics"].contains("accuracy"));
  CHECK(report[0]["metrics"].contains("mean_tv"));
}

TEST_CASE("usage and input errors exit with code 2") {
  TempDir root;
  ordered_json minimal;
  minimal["synth"] = {{"n_samples", 6}, {"n_annotators", 2}};
  minimal["output"] = {{"dir", (root.path / "out").string()}};
  const auto ok_path = write_config(root.path, "ok.json", minimal);

  std::string err;
  CHECK(run("frobnicate", ok_path, &err) == 2);
  CHECK(err.find("unknown command") != std::string::npos);

  CHECK(run("synth", root.path / "absent.json", &err) == 2);

  std::ofstream(root.path / "broken.json") << "{oops";
  CHECK(run("synth", root.path / "broken.json", &err) == 2);

  ordered_json typo = minimal;
  typo["data"] = {{"transcript", "x.csv"}};
  CHECK(run("synth", write_config(root.path, "typo.json", typo), &err) == 2);
  CHECK(err.find("unknown key 'transcript'") != std::string::npos);

  ordered_json wrong_type = minimal;
  wrong_type["train"] = {{"epochs", "three"}};
  CHECK(run("train", write_config(root.path, "wrong.json", wrong_type), &err) == 2);
  CHECK(err.find("wrong type") != std::string::npos);

  ordered_json no_bundle;
  no_bundle["data"] = {{"transcripts", "t.csv"}, {"gold", "g.csv"}};
  no_bundle["output"] = {{"dir", (root.path / "out2").string()}};
  CHECK(run("recover", write_config(root.path, "nb.json", no_bundle), &err) == 2);
  CHECK(err.find("model.bundle") != std::string::npos);

  ordered_json no_data;
  no_data["output"] = {{"dir", (root.path / "out3").string()}};
  CHECK(run("train", write_config(root.path, "nd.json", no_data), &err) == 2);
  CHECK(err.find("data.transcripts") != std::string::npos);

  ordered_json bad_synth = minimal;
  bad_synth["synth"]["n_samples"] = 0;
  CHECK(run("synth", write_config(root.path, "bs.json", bad_synth), &err) == 2);

  ordered_json bad_format = minimal;
  bad_format["output"]["formats"] = {"csv", "yaml"};
  CHECK(run("synth", write_config(root.path, "bf.json", bad_format), &err) == 2);
  CHECK(err.find("unknown output format") != std::string::npos);
}

TEST_CASE("soft-label training refuses gold files without distributions") {
  TempDir root;
  std::string transcripts = "sample_id,transcript\n";
  std::string gold = "sample_id,gold\n";
  for (int i = 0; i < 8; ++i) {
    const std::string id = "s" + std::to_string(i);
    transcripts += id + ",alpha beta gamma\n";
    gold += id + ",anger\n";
  }
  std::ofstream(root.path / "transcripts.csv") << transcripts;
  std::ofstream(root.path / "gold.csv") << gold;

  ordered_json cfg;
  cfg["data"] = {{"transcripts", (root.path / "transcripts.csv").string()},
                 {"gold", (root.path / "gold.csv").string()}};
  cfg["encoder"] = {{"d", 16}};
  cfg["train"] = {{"epochs", 1}};
  cfg["model"] = {{"kind", "ldl"}};
  cfg["output"] = {{"dir", (root.path / "out").string()}};

  std::string err;
  CHECK(run("train", write_config(root.path, "ldl.json", cfg), &err) == 2);
  CHECK(err.find("rating distribution") != std::string::npos);

  // The multi-task head is blocked the same way.
  cfg["model"] = {{"kind", "multitask"}};
  CHECK(run("train", write_config(root.path, "mt.json", cfg), &err) == 2);
  CHECK(err.find("disagreement") != std::string::npos);
}

TEST_CASE("the output flag overrides the configured directory") {
  TempDir root;
  ordered_json cfg;
  cfg["synth"] = {{"n_samples", 6}, {"n_annotators", 2}, {"vocab_per_class", 3},
                  {"segment_length", 2}, {"seed", 1}};
  cfg["output"] = {{"dir", (root.path / "ignored").string()}};
  const auto path = write_config(root.path, "cfg.json", cfg);

  const fs::path actual = root.path / "actual";
  std::ostringstream err;
  REQUIRE(run_command("synth", path.string(), actual.string(), err) == 0);
  CHECK(fs::exists(actual / "gold.csv"));
  CHECK(!fs::exists(root.path / "ignored"));
  const auto echoed = ordered_json::parse(read_text_file(actual / "config.json"));
  CHECK(echoed["output"]["dir"] == actual.string());
}
