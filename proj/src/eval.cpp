#include "seedens/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "seedens/csv.hpp"
#include "seedens/error.hpp"
#include "seedens/io.hpp"
#include "seedens/rng.hpp"

namespace seedens {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_labels(std::size_t np, std::size_t ng, const char* op) {
  if (np == 0) throw InputError(std::string(op) + ": empty input");
  if (np != ng) throw InputError(std::string(op) + ": length mismatch");
}

}  // namespace

double accuracy(const std::vector<EmotionLabel>& preds, const std::vector<EmotionLabel>& golds) {
  check_labels(preds.size(), golds.size(), "accuracy");
  long correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double macro_f1(const std::vector<int>& preds, const std::vector<int>& golds, int K) {
  check_labels(preds.size(), golds.size(), "macro_f1");
  if (K < 1) throw InputError("macro_f1: K must be >= 1");
  std::vector<long> tp(static_cast<std::size_t>(K)), fp(static_cast<std::size_t>(K)),
      fn(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= K || golds[i] < 0 || golds[i] >= K) {
      throw InputError("macro_f1: label out of range");
    }
    if (preds[i] == golds[i]) {
      ++tp[static_cast<std::size_t>(preds[i])];
    } else {
      ++fp[static_cast<std::size_t>(preds[i])];
      ++fn[static_cast<std::size_t>(golds[i])];
    }
  }
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double p = tp[i] + fp[i] > 0
                         ? static_cast<double>(tp[i]) / static_cast<double>(tp[i] + fp[i])
                         : 0.0;
    const double r = tp[i] + fn[i] > 0
                         ? static_cast<double>(tp[i]) / static_cast<double>(tp[i] + fn[i])
                         : 0.0;
    if (p + r > 0.0) total += 2.0 * p * r / (p + r);
  }
  return total / static_cast<double>(K);
}

double macro_f1(const std::vector<EmotionLabel>& preds, const std::vector<EmotionLabel>& golds) {
  std::vector<int> ip(preds.size()), ig(golds.size());
  std::transform(preds.begin(), preds.end(), ip.begin(),
                 [](EmotionLabel l) { return static_cast<int>(l); });
  std::transform(golds.begin(), golds.end(), ig.begin(),
                 [](EmotionLabel l) { return static_cast<int>(l); });
  return macro_f1(ip, ig, kNumEmotions);
}

double tv_distance(const LabelDistribution& p, const LabelDistribution& q) {
  double total = 0.0;
  for (int k = 0; k < kNumEmotions; ++k) total += std::abs(p.p[k] - q.p[k]);
  // Clamp rounding spill; the true value cannot leave [0, 1].
  return std::clamp(0.5 * total, 0.0, 1.0);
}

double js_divergence(const LabelDistribution& p, const LabelDistribution& q) {
  double klp = 0.0, klq = 0.0;
  for (int k = 0; k < kNumEmotions; ++k) {
    const double m = 0.5 * (p.p[k] + q.p[k]);
    if (p.p[k] > 0.0) klp += p.p[k] * std::log2(p.p[k] / m);
    if (q.p[k] > 0.0) klq += q.p[k] * std::log2(q.p[k] / m);
  }
  // Clamp rounding spill; the true value cannot leave [0, 1].
  return std::clamp(0.5 * (klp + klq), 0.0, 1.0);
}

MetricReport compute_metrics(const std::vector<SampleOutput>& outputs,
                             const std::vector<LabeledExample>& truth) {
  check_labels(outputs.size(), truth.size(), "compute_metrics");
  MetricReport report;
  std::vector<EmotionLabel> preds(outputs.size()), golds(truth.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    preds[i] = outputs[i].predicted;
    golds[i] = truth[i].gold;
  }
  report.accuracy = accuracy(preds, golds);
  report.macro_f1 = macro_f1(preds, golds);

  std::array<long, kNumEmotions> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) {
      ++tp[static_cast<int>(preds[i])];
    } else {
      ++fp[static_cast<int>(preds[i])];
      ++fn[static_cast<int>(golds[i])];
    }
  }
  for (int k = 0; k < kNumEmotions; ++k) {
    auto& pc = report.per_class[k];
    pc.support = tp[k] + fn[k];
    pc.precision = tp[k] + fp[k] > 0
                       ? static_cast<double>(tp[k]) / static_cast<double>(tp[k] + fp[k])
                       : 0.0;
    pc.recall = pc.support > 0 ? static_cast<double>(tp[k]) / static_cast<double>(pc.support) : 0.0;
    pc.f1 = pc.precision + pc.recall > 0.0
                ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                : 0.0;
  }

  double tv_total = 0.0, js_total = 0.0;
  long with_dist = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!truth[i].true_dist) continue;
    ++with_dist;
    tv_total += tv_distance(outputs[i].recovered, *truth[i].true_dist);
    js_total += js_divergence(outputs[i].recovered, *truth[i].true_dist);
  }
  if (with_dist > 0) {
    report.mean_tv = tv_total / static_cast<double>(with_dist);
    report.mean_js = js_total / static_cast<double>(with_dist);
  }
  return report;
}

namespace {

MetricAggregate aggregate_metric(const std::vector<double>& values) {
  MetricAggregate agg;
  const double n = static_cast<double>(values.size());
  for (double v : values) agg.mean += v;
  agg.mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - agg.mean) * (v - agg.mean);
  agg.stddev = std::sqrt(var / n);
  return agg;
}

ExampleSet subset(const ExampleSet& dataset, const std::map<std::string, std::size_t>& index,
                  const std::vector<std::string>& ids) {
  ExampleSet out;
  out.ids.reserve(ids.size());
  out.x.reserve(ids.size());
  out.y.reserve(ids.size());
  for (const auto& id : ids) {
    const std::size_t i = index.at(id);
    out.ids.push_back(dataset.ids[i]);
    out.x.push_back(dataset.x[i]);
    out.y.push_back(dataset.y[i]);
  }
  return out;
}

}  // namespace

CvResult run_cv(const ExampleSet& dataset, ModelKind kind, const EncoderConfig& encoder_config,
                const ModelConfigs& configs, int k, int repeats, std::uint64_t seed) {
  if (dataset.x.size() != dataset.size() || dataset.y.size() != dataset.size()) {
    throw InputError("run_cv: dataset has misaligned columns");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) index[dataset.ids[i]] = i;
  if (index.size() != dataset.size()) throw InputError("run_cv: duplicate sample ids");

  const auto folds = make_folds(dataset.ids, k, repeats, seed);

  CvResult result;
  std::vector<std::pair<SampleOutput, LabeledExample>> repeat0;
  for (int r = 0; r < repeats; ++r) {
    for (int f = 0; f < k; ++f) {
      std::vector<std::string> train_ids, test_ids;
      for (const auto& fold : folds) {
        if (fold.repeat_index != r) continue;
        auto& dst = fold.fold_index == f ? test_ids : train_ids;
        dst.insert(dst.end(), fold.sample_ids.begin(), fold.sample_ids.end());
      }
      const ExampleSet trainset = subset(dataset, index, train_ids);
      const ExampleSet testset = subset(dataset, index, test_ids);
      const auto outputs = run_model(kind, trainset, testset, encoder_config, configs);
      CvCell cell;
      cell.repeat = r;
      cell.fold = f;
      cell.metrics = compute_metrics(outputs, testset.y);
      result.cells.push_back(std::move(cell));
      if (r == 0) {
        for (std::size_t i = 0; i < outputs.size(); ++i) {
          repeat0.emplace_back(outputs[i], testset.y[i]);
        }
      }
    }
  }

  std::sort(repeat0.begin(), repeat0.end(), [](const auto& a, const auto& b) {
    return a.first.sample_id < b.first.sample_id;
  });
  for (auto& [out, truth] : repeat0) {
    result.sample_outputs.push_back(std::move(out));
    result.sample_truth.push_back(std::move(truth));
  }

  std::vector<double> acc, f1, tv, js;
  bool all_tv = true, all_js = true;
  for (const auto& cell : result.cells) {
    acc.push_back(cell.metrics.accuracy);
    f1.push_back(cell.metrics.macro_f1);
    if (cell.metrics.mean_tv) tv.push_back(*cell.metrics.mean_tv); else all_tv = false;
    if (cell.metrics.mean_js) js.push_back(*cell.metrics.mean_js); else all_js = false;
  }
  result.accuracy = aggregate_metric(acc);
  result.macro_f1 = aggregate_metric(f1);
  if (all_tv && !tv.empty()) result.mean_tv = aggregate_metric(tv);
  if (all_js && !js.empty()) result.mean_js = aggregate_metric(js);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string padded_id(int i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return "s" + digits;
}

void check_synth_config(const SynthConfig& config) {
  if (config.n_samples < 1 || config.n_annotators < 1 || config.vocab_per_class < 1 ||
      config.segment_length < 1) {
    throw InputError("synthetic: all counts must be >= 1");
  }
  if (config.label_noise < 0.0 || config.label_noise >= 1.0) {
    throw InputError("synthetic: label_noise must be in [0, 1)");
  }
  if (config.attention_bias_strength < 0.0 || config.attention_bias_strength > 1.0) {
    throw InputError("synthetic: attention_bias_strength must be in [0, 1]");
  }
  if (config.annotator_biases) {
    if (config.annotator_biases->size() != static_cast<std::size_t>(config.n_annotators)) {
      throw InputError("synthetic: annotator_biases must list one bias per annotator");
    }
    for (double b : *config.annotator_biases) {
      if (b < 0.0 || b > 1.0) throw InputError("synthetic: biases must be in [0, 1]");
    }
  }
}

}  // namespace

SyntheticData generate_synthetic(const SynthConfig& config) {
  check_synth_config(config);
  SyntheticData data;
  const int A = config.n_annotators;
  if (config.annotator_biases) {
    data.biases = *config.annotator_biases;
  } else {
    const double lo = 1.0 - config.attention_bias_strength;
    const double hi = config.attention_bias_strength;
    data.biases.resize(static_cast<std::size_t>(A));
    for (int j = 0; j < A; ++j) {
      const double t = A > 1 ? static_cast<double>(j) / static_cast<double>(A - 1) : 1.0;
      data.biases[static_cast<std::size_t>(j)] = lo + (hi - lo) * t;
    }
  }

  int width = 4;
  while (config.n_samples - 1 >= static_cast<int>(std::pow(10.0, width))) ++width;

  Rng rng(config.seed);
  for (int i = 0; i < config.n_samples; ++i) {
    const std::string id = padded_id(i, width);
    // Per sample: c1, c2, then segment-one tokens, then segment-two tokens.
    const int c1 = static_cast<int>(rng.below(kNumEmotions));
    int c2 = static_cast<int>(rng.below(kNumEmotions - 1));
    if (c2 >= c1) ++c2;
    auto draw_segment = [&](int cls) {
      std::string seg;
      for (int t = 0; t < config.segment_length; ++t) {
        if (t) seg += ' ';
        seg += "w" + std::to_string(cls) + "x" +
               std::to_string(rng.below(static_cast<std::uint64_t>(config.vocab_per_class)));
      }
      return seg;
    };
    const std::string seg1 = draw_segment(c1);
    const std::string seg2 = draw_segment(c2);
    Sample sample;
    sample.sample_id = id;
    sample.transcript = seg1 + ' ' + seg2;
    const Span span1{0, seg1.size()};
    const Span span2{seg1.size() + 1, sample.transcript.size()};
    data.samples[id] = sample;

    std::vector<AnnotationRecord> sample_records;
    for (int j = 0; j < A; ++j) {
      // Per annotator: attend coin, noise coin, then the noise label if any.
      const bool attend_one = rng.next_double() < data.biases[static_cast<std::size_t>(j)];
      const int attended = attend_one ? c1 : c2;
      int label = attended;
      if (rng.next_double() < config.label_noise) {
        label = static_cast<int>(rng.below(kNumEmotions));
      }
      AnnotationRecord rec;
      rec.sample_id = id;
      rec.annotator_id = "a" + std::to_string(j);
      rec.q1_any_emotion = true;
      rec.q2_primary = static_cast<EmotionLabel>(label);
      rec.q3_all_present = {static_cast<EmotionLabel>(c1), static_cast<EmotionLabel>(c2)};
      rec.q4_emotion = static_cast<EmotionLabel>(label);
      rec.q4_spans = std::vector<Span>{attend_one ? span1 : span2};
      sample_records.push_back(std::move(rec));
    }
    data.examples.push_back(aggregate_gold(sample_records));
    data.segment_classes.emplace_back(static_cast<EmotionLabel>(c1), static_cast<EmotionLabel>(c2));
    for (auto& rec : sample_records) data.records.push_back(std::move(rec));
  }
  return data;
}

ExampleSet build_example_set(const SampleMap& samples, const std::vector<LabeledExample>& examples,
                             const EncoderConfig& encoder_config) {
  ExampleSet set;
  std::map<std::string, FeatureVector> embeddings;
  if (encoder_config.kind == EncoderKind::precomputed) {
    embeddings = load_embeddings(encoder_config.embeddings_path);
  }
  for (const auto& example : examples) {
    FeatureVector x;
    if (encoder_config.kind == EncoderKind::hashed) {
      auto it = samples.find(example.sample_id);
      if (it == samples.end()) {
        throw InputError("no transcript for sample '" + example.sample_id + "'");
      }
      x = encode_hashed(it->second.transcript, encoder_config);
    } else {
      auto it = embeddings.find(example.sample_id);
      if (it == embeddings.end()) {
        throw InputError("no embedding for sample '" + example.sample_id + "'");
      }
      x = it->second;
    }
    set.ids.push_back(example.sample_id);
    set.x.push_back(std::move(x));
    set.y.push_back(example);
  }
  return set;
}

// ---------------------------------------------------------------------------

namespace {

void append_metric_rows(std::vector<std::vector<std::string>>& rows, const std::string& model,
                        const CvResult& r) {
  auto add = [&](const char* metric, const MetricAggregate& agg) {
    rows.push_back({model, metric, format_double(agg.mean), format_double(agg.stddev)});
  };
  add("accuracy", r.accuracy);
  add("macro_f1", r.macro_f1);
  if (r.mean_tv) add("mean_tv", *r.mean_tv);
  if (r.mean_js) add("mean_js", *r.mean_js);
}

ordered_json aggregate_to_json(const MetricAggregate& agg) {
  ordered_json j;
  j["mean"] = agg.mean;
  j["std"] = agg.stddev;
  return j;
}

}  // namespace

std::string render_report_csv(const std::vector<ModelRow>& rows) {
  std::vector<std::vector<std::string>> table;
  table.push_back({"model", "metric", "mean", "std"});
  for (const auto& row : rows) append_metric_rows(table, row.model, row.result);
  std::string out;
  for (const auto& r : table) out += csv::join_row(r) + "\n";
  return out;
}

std::string render_report_json(const std::vector<ModelRow>& rows) {
  ordered_json out = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json entry;
    entry["model"] = row.model;
    ordered_json metrics;
    metrics["accuracy"] = aggregate_to_json(row.result.accuracy);
    metrics["macro_f1"] = aggregate_to_json(row.result.macro_f1);
    if (row.result.mean_tv) metrics["mean_tv"] = aggregate_to_json(*row.result.mean_tv);
    if (row.result.mean_js) metrics["mean_js"] = aggregate_to_json(*row.result.mean_js);
    entry["metrics"] = metrics;
    out.push_back(entry);
  }
  return out.dump(2) + "\n";
}

std::string render_distributions_json(const std::vector<SampleOutput>& outputs,
                                      const std::vector<LabeledExample>& truth) {
  check_labels(outputs.size(), truth.size(), "render_distributions_json");
  ordered_json out = ordered_json::array();
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    ordered_json entry;
    entry["sample_id"] = outputs[i].sample_id;
    if (truth[i].true_dist) {
      entry["true"] = truth[i].true_dist->p;
    } else {
      entry["true"] = nullptr;
    }
    entry["recovered"] = outputs[i].recovered.p;
    entry["predicted"] = emotion_name(outputs[i].predicted);
    entry["gold"] = emotion_name(truth[i].gold);
    if (outputs[i].predicted_disagreement) {
      entry["predicted_disagreement"] = *outputs[i].predicted_disagreement;
    }
    out.push_back(entry);
  }
  return out.dump(2) + "\n";
}

void emit_report(const std::vector<ModelRow>& rows, ReportFormat format,
                 const std::filesystem::path& path) {
  if (rows.empty()) throw InputError("emit_report: no results to write");
  const std::string table =
      format == ReportFormat::csv ? render_report_csv(rows) : render_report_json(rows);
  write_text_atomic(path, table);
  for (const auto& row : rows) {
    std::filesystem::path dist_path = path;
    dist_path.replace_filename(path.stem().string() + "_distributions_" + row.model + ".json");
    write_text_atomic(dist_path,
                      render_distributions_json(row.result.sample_outputs, row.result.sample_truth));
  }
}

}  // namespace seedens
