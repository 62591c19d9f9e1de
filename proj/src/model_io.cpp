#include "seedens/model_io.hpp"

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seedens/error.hpp"
#include "seedens/io.hpp"

namespace seedens {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string render_row(const double* values, std::size_t count) {
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) line += ' ';
    line += format_double(values[i]);
  }
  line += '\n';
  return line;
}

std::vector<double> parse_row(const std::string& line, std::size_t expect,
                              const std::string& context) {
  const auto fields = split_ws(line);
  if (fields.size() != expect) {
    throw InputError(context + ": expected " + std::to_string(expect) + " values, got " +
                     std::to_string(fields.size()));
  }
  std::vector<double> out(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) out[i] = parse_double(fields[i], context);
  return out;
}

std::string render_head(const HeadParams& head) {
  std::string text = std::to_string(head.d) + ' ' + std::to_string(head.K) + '\n';
  for (int k = 0; k < head.K; ++k) {
    text += render_row(head.W.data() + static_cast<std::size_t>(k) * head.d,
                       static_cast<std::size_t>(head.d));
  }
  text += render_row(head.b.data(), head.b.size());
  return text;
}

HeadParams parse_head(const std::string& text, const std::string& context) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw InputError(context + ": empty parameter file");
  const auto shape = split_ws(lines[0]);
  if (shape.size() != 2) throw InputError(context + ": malformed shape line");
  HeadParams head;
  head.d = static_cast<int>(parse_long(shape[0], context));
  head.K = static_cast<int>(parse_long(shape[1], context));
  if (head.d < 1 || head.K < 1) throw InputError(context + ": invalid shape");
  if (lines.size() != static_cast<std::size_t>(head.K) + 2) {
    throw InputError(context + ": expected " + std::to_string(head.K + 2) + " lines, got " +
                     std::to_string(lines.size()));
  }
  head.W.reserve(static_cast<std::size_t>(head.K) * head.d);
  for (int k = 0; k < head.K; ++k) {
    const auto row = parse_row(lines[static_cast<std::size_t>(k) + 1],
                               static_cast<std::size_t>(head.d), context);
    head.W.insert(head.W.end(), row.begin(), row.end());
  }
  head.b = parse_row(lines[static_cast<std::size_t>(head.K) + 1],
                     static_cast<std::size_t>(head.K), context);
  return head;
}

std::string render_bnn(const BnnParams& p) {
  std::string text = std::to_string(p.d) + ' ' + std::to_string(p.K) + ' ' +
                     format_double(p.prior_sigma) + ' ' + format_double(p.kl_weight) + ' ' +
                     std::to_string(p.s_train) + ' ' + std::to_string(p.s_pred) + '\n';
  for (int k = 0; k < p.K; ++k) {
    text += render_row(p.mu_W.data() + static_cast<std::size_t>(k) * p.d,
                       static_cast<std::size_t>(p.d));
  }
  for (int k = 0; k < p.K; ++k) {
    text += render_row(p.rho_W.data() + static_cast<std::size_t>(k) * p.d,
                       static_cast<std::size_t>(p.d));
  }
  text += render_row(p.mu_b.data(), p.mu_b.size());
  text += render_row(p.rho_b.data(), p.rho_b.size());
  return text;
}

BnnParams parse_bnn(const std::string& text, const std::string& context) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw InputError(context + ": empty parameter file");
  const auto shape = split_ws(lines[0]);
  if (shape.size() != 6) throw InputError(context + ": malformed shape line");
  BnnParams p;
  p.d = static_cast<int>(parse_long(shape[0], context));
  p.K = static_cast<int>(parse_long(shape[1], context));
  p.prior_sigma = parse_double(shape[2], context);
  p.kl_weight = parse_double(shape[3], context);
  p.s_train = static_cast<int>(parse_long(shape[4], context));
  p.s_pred = static_cast<int>(parse_long(shape[5], context));
  if (p.d < 1 || p.K < 1) throw InputError(context + ": invalid shape");
  if (lines.size() != 2 * static_cast<std::size_t>(p.K) + 3) {
    throw InputError(context + ": wrong line count");
  }
  std::size_t row = 1;
  for (int k = 0; k < p.K; ++k, ++row) {
    const auto vals = parse_row(lines[row], static_cast<std::size_t>(p.d), context);
    p.mu_W.insert(p.mu_W.end(), vals.begin(), vals.end());
  }
  for (int k = 0; k < p.K; ++k, ++row) {
    const auto vals = parse_row(lines[row], static_cast<std::size_t>(p.d), context);
    p.rho_W.insert(p.rho_W.end(), vals.begin(), vals.end());
  }
  p.mu_b = parse_row(lines[row++], static_cast<std::size_t>(p.K), context);
  p.rho_b = parse_row(lines[row], static_cast<std::size_t>(p.K), context);
  return p;
}

std::string render_multitask(const MultiTaskParams& p) {
  std::string text = format_double(p.lambda) + ' ' + format_double(p.b_g) + '\n';
  text += render_head(p.head);
  text += render_row(p.w_g.data(), p.w_g.size());
  return text;
}

MultiTaskParams parse_multitask(const std::string& text, const std::string& context) {
  const auto lines = split_lines(text);
  if (lines.size() < 2) throw InputError(context + ": empty parameter file");
  const auto extras = split_ws(lines[0]);
  if (extras.size() != 2) throw InputError(context + ": malformed header line");
  MultiTaskParams p;
  p.lambda = parse_double(extras[0], context);
  p.b_g = parse_double(extras[1], context);
  std::string head_text;
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) head_text += lines[i] + '\n';
  p.head = parse_head(head_text, context);
  p.w_g = parse_row(lines.back(), static_cast<std::size_t>(p.head.d), context);
  return p;
}

ordered_json encoder_to_json(const EncoderConfig& cfg) {
  ordered_json j;
  j["kind"] = cfg.kind == EncoderKind::hashed ? "hashed" : "precomputed";
  j["d"] = cfg.d;
  j["unigrams"] = cfg.unigrams;
  j["bigrams"] = cfg.bigrams;
  j["embeddings_path"] = cfg.embeddings_path;
  return j;
}

EncoderConfig encoder_from_json(const ordered_json& j) {
  EncoderConfig cfg;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "hashed") {
    cfg.kind = EncoderKind::hashed;
  } else if (kind == "precomputed") {
    cfg.kind = EncoderKind::precomputed;
  } else {
    throw InputError("model manifest: unknown encoder kind '" + kind + "'");
  }
  cfg.d = j.at("d").get<int>();
  cfg.unigrams = j.at("unigrams").get<bool>();
  cfg.bigrams = j.at("bigrams").get<bool>();
  cfg.embeddings_path = j.at("embeddings_path").get<std::string>();
  return cfg;
}

ordered_json train_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["master_seed"] = cfg.master_seed;
  j["data_order_seed"] = cfg.data_order_seed;
  return j;
}

TrainConfig train_from_json(const ordered_json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.epsilon = j.at("epsilon").get<double>();
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  cfg.data_order_seed = j.at("data_order_seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  ordered_json manifest;
  manifest["kind"] = model_kind_name(bundle.kind);
  manifest["encoder"] = encoder_to_json(bundle.encoder_config);
  manifest["train"] = train_to_json(bundle.train_config);
  if (bundle.ensemble) {
    const auto& model = *bundle.ensemble;
    ordered_json ens;
    ens["n"] = model.config.n;
    ens["master_seed"] = model.config.master_seed;
    if (model.config.head_seeds) {
      ens["head_seeds"] = *model.config.head_seeds;
    } else {
      ens["head_seeds"] = nullptr;
    }
    ens["aggregation"] = aggregation_name(model.config.aggregation);
    ens["seeds"] = model.config.resolved_seeds();
    std::vector<std::string> files;
    for (std::size_t i = 0; i < model.heads.size(); ++i) {
      std::string name = "head_" + std::to_string(i) + ".txt";
      write_text_atomic(dir / name, render_head(model.heads[i]));
      files.push_back(std::move(name));
    }
    ens["head_files"] = files;
    manifest["ensemble"] = ens;
  }
  if (bundle.bnn) {
    ordered_json b;
    b["pred_seed"] = bundle.bnn->pred_seed;
    b["file"] = "bnn.txt";
    write_text_atomic(dir / "bnn.txt", render_bnn(bundle.bnn->params));
    manifest["bnn"] = b;
  }
  if (bundle.multitask) {
    ordered_json m;
    m["file"] = "multitask.txt";
    write_text_atomic(dir / "multitask.txt", render_multitask(*bundle.multitask));
    manifest["multitask"] = m;
  }
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const fs::path& dir) {
  const std::string manifest_text = read_text_file(dir / "manifest.json");
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(manifest_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model manifest: " + std::string(e.what()));
  }
  ModelBundle bundle;
  try {
    const std::string kind_name = manifest.at("kind").get<std::string>();
    const auto kind = model_kind_from_name(kind_name);
    if (!kind) throw InputError("model manifest: unknown kind '" + kind_name + "'");
    bundle.kind = *kind;
    bundle.encoder_config = encoder_from_json(manifest.at("encoder"));
    bundle.train_config = train_from_json(manifest.at("train"));
    if (manifest.contains("ensemble")) {
      const auto& ens = manifest.at("ensemble");
      EnsembleModel model;
      model.encoder_config = bundle.encoder_config;
      model.config.n = ens.at("n").get<int>();
      model.config.master_seed = ens.at("master_seed").get<std::uint64_t>();
      if (!ens.at("head_seeds").is_null()) {
        model.config.head_seeds = ens.at("head_seeds").get<std::vector<std::uint64_t>>();
      }
      const std::string agg_name = ens.at("aggregation").get<std::string>();
      const auto agg = aggregation_from_name(agg_name);
      if (!agg) throw InputError("model manifest: unknown aggregation '" + agg_name + "'");
      model.config.aggregation = *agg;
      const auto files = ens.at("head_files").get<std::vector<std::string>>();
      if (files.size() != static_cast<std::size_t>(model.config.n)) {
        throw InputError("model manifest: n = " + std::to_string(model.config.n) + " but " +
                         std::to_string(files.size()) + " head files listed");
      }
      for (const auto& name : files) {
        model.heads.push_back(parse_head(read_text_file(dir / name), name));
      }
      bundle.ensemble = std::move(model);
    }
    if (manifest.contains("bnn")) {
      BnnModel model;
      model.pred_seed = manifest.at("bnn").at("pred_seed").get<std::uint64_t>();
      const std::string file = manifest.at("bnn").at("file").get<std::string>();
      model.params = parse_bnn(read_text_file(dir / file), file);
      bundle.bnn = std::move(model);
    }
    if (manifest.contains("multitask")) {
      const std::string file = manifest.at("multitask").at("file").get<std::string>();
      bundle.multitask = parse_multitask(read_text_file(dir / file), file);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model manifest: " + std::string(e.what()));
  }
  return bundle;
}

}  // namespace seedens
