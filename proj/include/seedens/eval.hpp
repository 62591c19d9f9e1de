#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seedens/data.hpp"
#include "seedens/ensemble.hpp"

namespace seedens {

// Metrics, the repeated k-fold cross-validation harness, the synthetic
// two-segment benchmark, and report emission.

struct PerClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct MetricReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> mean_tv;  // vs true_dist where available
  std::optional<double> mean_js;  // base-2
  std::array<PerClassStats, kNumEmotions> per_class{};
};

double accuracy(const std::vector<EmotionLabel>& preds, const std::vector<EmotionLabel>& golds);

// Unweighted mean of per-class F1 over all K classes; a class with
// P + R = 0 contributes 0.
double macro_f1(const std::vector<int>& preds, const std::vector<int>& golds, int K);
double macro_f1(const std::vector<EmotionLabel>& preds, const std::vector<EmotionLabel>& golds);

// Total variation, 0.5 * sum |p - q|.
double tv_distance(const LabelDistribution& p, const LabelDistribution& q);

// Jensen-Shannon divergence, base-2 logs, 0 log 0 = 0; bounded by [0, 1].
double js_divergence(const LabelDistribution& p, const LabelDistribution& q);

MetricReport compute_metrics(const std::vector<SampleOutput>& outputs,
                             const std::vector<LabeledExample>& truth);

struct CvCell {
  int repeat = 0;
  int fold = 0;
  MetricReport metrics;
};

struct MetricAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population, over the repeat x fold cells
};

struct CvResult {
  std::vector<CvCell> cells;
  MetricAggregate accuracy;
  MetricAggregate macro_f1;
  std::optional<MetricAggregate> mean_tv;
  std::optional<MetricAggregate> mean_js;
  // Held-out outputs from repeat 0 (each sample tested exactly once there),
  // sorted by sample_id; this is what the distribution report renders.
  std::vector<SampleOutput> sample_outputs;
  std::vector<LabeledExample> sample_truth;  // aligned with sample_outputs
};

// Train on k-1 folds, test on the held-out fold, for every (repeat, fold);
// per-fold metrics are averaged, not pooled.
CvResult run_cv(const ExampleSet& dataset, ModelKind kind, const EncoderConfig& encoder_config,
                const ModelConfigs& configs, int k, int repeats, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic two-segment benchmark. Each transcript is two token segments
// drawn from disjoint class vocabularies; each simulated annotator attends to
// segment one with an annotator-specific probability and labels the attended
// segment's class, with an epsilon chance of a uniform random label instead.

struct SynthConfig {
  int n_samples = 500;
  int n_annotators = 5;
  int vocab_per_class = 20;
  int segment_length = 6;
  double attention_bias_strength = 0.8;
  double label_noise = 0.1;  // epsilon
  std::uint64_t seed = 0;
  // Explicit per-annotator attend-segment-one probabilities; when unset they
  // spread evenly over [1 - strength, strength].
  std::optional<std::vector<double>> annotator_biases;
};

struct SyntheticData {
  SampleMap samples;
  std::vector<AnnotationRecord> records;
  std::vector<LabeledExample> examples;  // sorted by sample_id
  // Per sample (aligned with examples): the two segment classes.
  std::vector<std::pair<EmotionLabel, EmotionLabel>> segment_classes;
  std::vector<double> biases;  // resolved, per annotator
};

SyntheticData generate_synthetic(const SynthConfig& config);

// Assembles features + labels; hashed encoding works from transcripts,
// precomputed pulls from an embeddings map.
ExampleSet build_example_set(const SampleMap& samples, const std::vector<LabeledExample>& examples,
                             const EncoderConfig& encoder_config);

// ---------------------------------------------------------------------------
// Reports.

struct ModelRow {
  std::string model;
  CvResult result;
};

enum class ReportFormat { csv, json };

// model,metric,mean,std rows in a fixed metric order.
std::string render_report_csv(const std::vector<ModelRow>& rows);
std::string render_report_json(const std::vector<ModelRow>& rows);

// One entry per sample: true/recovered distributions, predicted and gold.
std::string render_distributions_json(const std::vector<SampleOutput>& outputs,
                                      const std::vector<LabeledExample>& truth);

// Writes the table plus the per-sample distribution pairs next to it
// (<stem>_distributions.json). Empty results are an error.
void emit_report(const std::vector<ModelRow>& rows, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace seedens
