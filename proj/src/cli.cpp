#include "seedens/cli.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "seedens/agreement.hpp"
#include "seedens/csv.hpp"
#include "seedens/error.hpp"
#include "seedens/io.hpp"
#include "seedens/model_io.hpp"

namespace seedens {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw InputError("config: unknown key '" + key + "' in " + where);
    }
  }
}

const ordered_json kEmpty = ordered_json::object();

const ordered_json& section(const ordered_json& doc, const char* name) {
  if (!doc.contains(name)) return kEmpty;
  const auto& s = doc.at(name);
  if (!s.is_object()) throw InputError(std::string("config: ") + name + " must be an object");
  return s;
}

template <typename T>
T get_field(const ordered_json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("config: " + where + "." + key + " has the wrong type");
  }
}

}  // namespace

RunConfig parse_run_config(const ordered_json& doc) {
  if (!doc.is_object()) throw InputError("config: top level must be a JSON object");
  check_keys(doc, {"data", "encoder", "train", "model", "eval", "synth", "output"}, "the top level");
  RunConfig cfg;

  const auto& data = section(doc, "data");
  check_keys(data, {"transcripts", "annotations", "gold", "embeddings"}, "data");
  cfg.transcripts_path = get_field<std::string>(data, "transcripts", "", "data");
  cfg.annotations_path = get_field<std::string>(data, "annotations", "", "data");
  cfg.gold_path = get_field<std::string>(data, "gold", "", "data");
  cfg.embeddings_path = get_field<std::string>(data, "embeddings", "", "data");

  const auto& enc = section(doc, "encoder");
  check_keys(enc, {"kind", "d", "unigrams", "bigrams"}, "encoder");
  const std::string enc_kind = get_field<std::string>(enc, "kind", "hashed", "encoder");
  if (enc_kind == "hashed") {
    cfg.encoder.kind = EncoderKind::hashed;
  } else if (enc_kind == "precomputed") {
    cfg.encoder.kind = EncoderKind::precomputed;
  } else {
    throw InputError("config: encoder.kind must be hashed or precomputed, got '" + enc_kind + "'");
  }
  cfg.encoder.d = get_field<int>(enc, "d", cfg.encoder.d, "encoder");
  cfg.encoder.unigrams = get_field<bool>(enc, "unigrams", true, "encoder");
  cfg.encoder.bigrams = get_field<bool>(enc, "bigrams", true, "encoder");
  cfg.encoder.embeddings_path = cfg.embeddings_path;

  const auto& train = section(doc, "train");
  check_keys(train,
             {"learning_rate", "epochs", "batch_size", "beta1", "beta2", "epsilon", "master_seed",
              "data_order_seed"},
             "train");
  auto& tc = cfg.models.train;
  tc.learning_rate = get_field<double>(train, "learning_rate", tc.learning_rate, "train");
  tc.epochs = get_field<int>(train, "epochs", tc.epochs, "train");
  tc.batch_size = get_field<int>(train, "batch_size", tc.batch_size, "train");
  tc.beta1 = get_field<double>(train, "beta1", tc.beta1, "train");
  tc.beta2 = get_field<double>(train, "beta2", tc.beta2, "train");
  tc.epsilon = get_field<double>(train, "epsilon", tc.epsilon, "train");
  tc.master_seed = get_field<std::uint64_t>(train, "master_seed", tc.master_seed, "train");
  tc.data_order_seed =
      get_field<std::uint64_t>(train, "data_order_seed", tc.data_order_seed, "train");

  const auto& model = section(doc, "model");
  check_keys(model,
             {"kind", "n", "master_seed", "head_seeds", "aggregation", "bnn", "multitask_lambda",
              "bundle"},
             "model");
  const std::string kind_name =
      get_field<std::string>(model, "kind", model_kind_name(cfg.model_kind), "model");
  const auto kind = model_kind_from_name(kind_name);
  if (!kind) throw InputError("config: unknown model.kind '" + kind_name + "'");
  cfg.model_kind = *kind;
  auto& ec = cfg.models.ensemble;
  ec.n = get_field<int>(model, "n", ec.n, "model");
  ec.master_seed = get_field<std::uint64_t>(model, "master_seed", ec.master_seed, "model");
  if (model.contains("head_seeds") && !model.at("head_seeds").is_null()) {
    ec.head_seeds =
        get_field<std::vector<std::uint64_t>>(model, "head_seeds", {}, "model");
  }
  const std::string agg_name =
      get_field<std::string>(model, "aggregation", aggregation_name(ec.aggregation), "model");
  const auto agg = aggregation_from_name(agg_name);
  if (!agg) throw InputError("config: unknown model.aggregation '" + agg_name + "'");
  ec.aggregation = *agg;
  cfg.models.multitask_lambda =
      get_field<double>(model, "multitask_lambda", cfg.models.multitask_lambda, "model");
  cfg.bundle_path = get_field<std::string>(model, "bundle", "", "model");

  const auto& bnn = section(model, "bnn");
  check_keys(bnn, {"prior_sigma", "kl_weight", "s_train", "s_pred", "rho_init"}, "model.bnn");
  auto& bc = cfg.models.bnn;
  bc.prior_sigma = get_field<double>(bnn, "prior_sigma", bc.prior_sigma, "model.bnn");
  if (bnn.contains("kl_weight") && !bnn.at("kl_weight").is_null()) {
    bc.kl_weight = get_field<double>(bnn, "kl_weight", 0.0, "model.bnn");
  }
  bc.s_train = get_field<int>(bnn, "s_train", bc.s_train, "model.bnn");
  bc.s_pred = get_field<int>(bnn, "s_pred", bc.s_pred, "model.bnn");
  bc.rho_init = get_field<double>(bnn, "rho_init", bc.rho_init, "model.bnn");

  const auto& eval = section(doc, "eval");
  check_keys(eval, {"k", "repeats", "seed"}, "eval");
  cfg.cv_k = get_field<int>(eval, "k", cfg.cv_k, "eval");
  cfg.cv_repeats = get_field<int>(eval, "repeats", cfg.cv_repeats, "eval");
  cfg.cv_seed = get_field<std::uint64_t>(eval, "seed", cfg.cv_seed, "eval");

  const auto& synth = section(doc, "synth");
  check_keys(synth,
             {"n_samples", "n_annotators", "vocab_per_class", "segment_length",
              "attention_bias_strength", "label_noise", "seed", "annotator_biases"},
             "synth");
  auto& sc = cfg.synth;
  sc.n_samples = get_field<int>(synth, "n_samples", sc.n_samples, "synth");
  sc.n_annotators = get_field<int>(synth, "n_annotators", sc.n_annotators, "synth");
  sc.vocab_per_class = get_field<int>(synth, "vocab_per_class", sc.vocab_per_class, "synth");
  sc.segment_length = get_field<int>(synth, "segment_length", sc.segment_length, "synth");
  sc.attention_bias_strength =
      get_field<double>(synth, "attention_bias_strength", sc.attention_bias_strength, "synth");
  sc.label_noise = get_field<double>(synth, "label_noise", sc.label_noise, "synth");
  sc.seed = get_field<std::uint64_t>(synth, "seed", sc.seed, "synth");
  if (synth.contains("annotator_biases") && !synth.at("annotator_biases").is_null()) {
    sc.annotator_biases = get_field<std::vector<double>>(synth, "annotator_biases", {}, "synth");
  }

  const auto& output = section(doc, "output");
  check_keys(output, {"dir", "formats"}, "output");
  cfg.output_dir = get_field<std::string>(output, "dir", cfg.output_dir.string(), "output");
  const auto formats = get_field<std::vector<std::string>>(output, "formats", {"csv", "json"},
                                                           "output");
  if (formats.empty()) throw InputError("config: output.formats must not be empty");
  cfg.write_csv = false;
  cfg.write_json = false;
  for (const auto& f : formats) {
    if (f == "csv") {
      cfg.write_csv = true;
    } else if (f == "json") {
      cfg.write_json = true;
    } else {
      throw InputError("config: unknown output format '" + f + "'");
    }
  }

  // Echo of the resolved configuration, defaults included.
  ordered_json echo;
  echo["data"] = {{"transcripts", cfg.transcripts_path},
                  {"annotations", cfg.annotations_path},
                  {"gold", cfg.gold_path},
                  {"embeddings", cfg.embeddings_path}};
  echo["encoder"] = {{"kind", enc_kind},
                     {"d", cfg.encoder.d},
                     {"unigrams", cfg.encoder.unigrams},
                     {"bigrams", cfg.encoder.bigrams}};
  echo["train"] = {{"learning_rate", tc.learning_rate}, {"epochs", tc.epochs},
                   {"batch_size", tc.batch_size},       {"beta1", tc.beta1},
                   {"beta2", tc.beta2},                 {"epsilon", tc.epsilon},
                   {"master_seed", tc.master_seed},     {"data_order_seed", tc.data_order_seed}};
  echo["model"] = {{"kind", model_kind_name(cfg.model_kind)},
                   {"n", ec.n},
                   {"master_seed", ec.master_seed},
                   {"head_seeds", ec.head_seeds ? ordered_json(*ec.head_seeds) : ordered_json()},
                   {"aggregation", aggregation_name(ec.aggregation)},
                   {"bnn",
                    {{"prior_sigma", bc.prior_sigma},
                     {"kl_weight", bc.kl_weight ? ordered_json(*bc.kl_weight) : ordered_json()},
                     {"s_train", bc.s_train},
                     {"s_pred", bc.s_pred},
                     {"rho_init", bc.rho_init}}},
                   {"multitask_lambda", cfg.models.multitask_lambda},
                   {"bundle", cfg.bundle_path}};
  echo["eval"] = {{"k", cfg.cv_k}, {"repeats", cfg.cv_repeats}, {"seed", cfg.cv_seed}};
  ordered_json synth_echo = {{"n_samples", sc.n_samples},
                             {"n_annotators", sc.n_annotators},
                             {"vocab_per_class", sc.vocab_per_class},
                             {"segment_length", sc.segment_length},
                             {"attention_bias_strength", sc.attention_bias_strength},
                             {"label_noise", sc.label_noise},
                             {"seed", sc.seed},
                             {"annotator_biases", sc.annotator_biases
                                                      ? ordered_json(*sc.annotator_biases)
                                                      : ordered_json()}};
  echo["synth"] = synth_echo;
  ordered_json fmts = ordered_json::array();
  if (cfg.write_csv) fmts.push_back("csv");
  if (cfg.write_json) fmts.push_back("json");
  echo["output"] = {{"dir", cfg.output_dir.string()}, {"formats", fmts}};
  cfg.resolved = echo;
  return cfg;
}

namespace {

void echo_config(const RunConfig& config) {
  write_text_atomic(config.output_dir / "config.json", config.resolved.dump(2) + "\n");
}

std::string require_path(const std::string& path, const char* key, const char* command) {
  if (path.empty()) {
    throw InputError(std::string("config: data.") + key + " is required for " + command);
  }
  return path;
}

struct LoadedData {
  SampleMap samples;
  std::vector<AnnotationRecord> records;
  std::vector<LabeledExample> examples;  // sorted by sample_id
};

std::vector<LabeledExample> aggregate_examples(const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::vector<AnnotationRecord>> by_sample;
  for (const auto& rec : records) by_sample[rec.sample_id].push_back(rec);
  std::vector<LabeledExample> examples;
  examples.reserve(by_sample.size());
  for (const auto& [id, recs] : by_sample) examples.push_back(aggregate_gold(recs));
  return examples;
}

// Labeled examples come from the gold file when one is configured, otherwise
// by aggregating the annotations.
LoadedData load_data(const RunConfig& config, const char* command) {
  LoadedData data;
  if (config.encoder.kind == EncoderKind::hashed || !config.annotations_path.empty() ||
      config.gold_path.empty()) {
    data.samples =
        parse_transcripts(read_text_file(require_path(config.transcripts_path, "transcripts",
                                                      command)));
  }
  if (!config.gold_path.empty()) {
    data.examples = parse_gold(read_text_file(config.gold_path));
    std::sort(data.examples.begin(), data.examples.end(),
              [](const LabeledExample& a, const LabeledExample& b) {
                return a.sample_id < b.sample_id;
              });
    return data;
  }
  data.records = parse_annotations(
      read_text_file(require_path(config.annotations_path, "annotations", command)),
      data.samples);
  if (data.records.empty()) throw InputError("annotations: no data rows");
  data.examples = aggregate_examples(data.records);
  return data;
}

std::string kappa_value(const KappaResult& result) {
  return result.defined ? format_double(*result.value) : "";
}

void append_kappa_row(std::vector<std::vector<std::string>>& rows, const std::string& question,
                      const std::string& statistic, const KappaResult& result) {
  rows.push_back({question, statistic, kappa_value(result),
                  result.defined ? "true" : "false", std::to_string(result.n_pairs_used)});
}

}  // namespace

int cmd_aggregate(const RunConfig& config) {
  echo_config(config);
  const auto samples = parse_transcripts(
      read_text_file(require_path(config.transcripts_path, "transcripts", "aggregate")));
  const auto records = parse_annotations(
      read_text_file(require_path(config.annotations_path, "annotations", "aggregate")), samples);
  if (records.empty()) throw InputError("annotations: no data rows");
  const auto examples = aggregate_examples(records);
  write_text_atomic(config.output_dir / "gold.csv", format_gold(examples));
  return 0;
}

int cmd_kappa(const RunConfig& config) {
  echo_config(config);
  const auto samples = parse_transcripts(
      read_text_file(require_path(config.transcripts_path, "transcripts", "kappa")));
  const auto records = parse_annotations(
      read_text_file(require_path(config.annotations_path, "annotations", "kappa")), samples);
  if (records.empty()) throw InputError("annotations: no data rows");

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"question", "statistic", "value", "defined", "n_pairs_used"});
  append_kappa_row(rows, "q1", "avg_pairwise_kappa", avg_pairwise_kappa(rating_matrix_q1(records)));
  append_kappa_row(rows, "q2", "avg_pairwise_kappa", avg_pairwise_kappa(rating_matrix_q2(records)));
  const auto ml = multilabel_kappa(records);
  append_kappa_row(rows, "q3", "mean_binary_kappa", ml.mean);
  for (int e = 0; e < kNumEmotions; ++e) {
    append_kappa_row(rows, std::string("q3_") + emotion_name(static_cast<EmotionLabel>(e)),
                     "avg_pairwise_kappa", ml.per_emotion[e]);
  }
  const auto overlap = highlight_overlap(records, samples);
  if (!overlap.pairs.empty()) {
    KappaResult same;
    same.defined = overlap.mean_same_emotion.has_value();
    same.value = overlap.mean_same_emotion;
    same.n_pairs_used = overlap.n_same;
    append_kappa_row(rows, "q4", "mean_jaccard_same_emotion", same);
    KappaResult diff;
    diff.defined = overlap.mean_different_emotion.has_value();
    diff.value = overlap.mean_different_emotion;
    diff.n_pairs_used = overlap.n_different;
    append_kappa_row(rows, "q4", "mean_jaccard_different_emotion", diff);
  }
  std::string out;
  for (const auto& row : rows) out += csv::join_row(row) + "\n";
  write_text_atomic(config.output_dir / "kappa.csv", out);
  return 0;
}

int cmd_train(const RunConfig& config) {
  echo_config(config);
  const auto data = load_data(config, "train");
  const auto set = build_example_set(data.samples, data.examples, config.encoder);
  const auto bundle = train_model(config.model_kind, set, config.encoder, config.models);
  save_bundle(bundle, config.output_dir / "model");
  return 0;
}

int cmd_eval(const RunConfig& config) {
  echo_config(config);
  const auto data = load_data(config, "eval");
  const auto set = build_example_set(data.samples, data.examples, config.encoder);
  const auto result = run_cv(set, config.model_kind, config.encoder, config.models, config.cv_k,
                             config.cv_repeats, config.cv_seed);
  const std::vector<ModelRow> rows = {{model_kind_name(config.model_kind), result}};
  if (config.write_csv) emit_report(rows, ReportFormat::csv, config.output_dir / "report.csv");
  if (config.write_json) emit_report(rows, ReportFormat::json, config.output_dir / "report.json");
  return 0;
}

int cmd_recover(const RunConfig& config) {
  echo_config(config);
  if (config.bundle_path.empty()) {
    throw InputError("config: model.bundle is required for recover");
  }
  const auto bundle = load_bundle(config.bundle_path);
  EncoderConfig encoder = bundle.encoder_config;
  if (!config.embeddings_path.empty()) encoder.embeddings_path = config.embeddings_path;
  RunConfig data_config = config;
  data_config.encoder = encoder;
  const auto data = load_data(data_config, "recover");
  const auto set = build_example_set(data.samples, data.examples, encoder);
  const auto outputs = apply_model(bundle, set);
  write_text_atomic(config.output_dir / "distributions.json",
                    render_distributions_json(outputs, set.y));
  return 0;
}

int cmd_synth(const RunConfig& config) {
  echo_config(config);
  const auto data = generate_synthetic(config.synth);
  std::string transcripts = "sample_id,transcript\n";
  for (const auto& [id, sample] : data.samples) {
    transcripts += csv::join_row({sample.sample_id, sample.transcript}) + "\n";
  }
  write_text_atomic(config.output_dir / "transcripts.csv", transcripts);
  write_text_atomic(config.output_dir / "annotations.csv", format_annotations(data.records));
  write_text_atomic(config.output_dir / "gold.csv", format_gold(data.examples));
  return 0;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::optional<std::string>& output_override, std::ostream& err) {
  try {
    ordered_json doc;
    try {
      doc = ordered_json::parse(read_text_file(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("config: " + std::string(e.what()));
    }
    RunConfig config = parse_run_config(doc);
    if (output_override) {
      config.output_dir = *output_override;
      config.resolved["output"]["dir"] = *output_override;
    }
    if (command == "aggregate") return cmd_aggregate(config);
    if (command == "kappa") return cmd_kappa(config);
    if (command == "train") return cmd_train(config);
    if (command == "eval") return cmd_eval(config);
    if (command == "recover") return cmd_recover(config);
    if (command == "synth") return cmd_synth(config);
    throw InputError("unknown command '" + command + "'");
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace seedens
