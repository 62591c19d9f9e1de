#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seedens/data.hpp"
#include "seedens/encoder.hpp"
#include "seedens/heads.hpp"

namespace seedens {

// The seed-ensemble mechanism: n heads identical except for their init seed,
// each standing in for one annotator. Recovery turns their argmax votes into
// a distribution; prediction is the majority vote.

enum class Aggregation { vote_histogram, mean_softmax };

enum class ModelKind { single, seed_ensemble, bnn, ldl, multitask };

const char* model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(std::string_view name);

const char* aggregation_name(Aggregation mode);
std::optional<Aggregation> aggregation_from_name(std::string_view name);

struct EnsembleConfig {
  int n = 5;
  std::uint64_t master_seed = 0;
  std::optional<std::vector<std::uint64_t>> head_seeds;  // length n, distinct
  Aggregation aggregation = Aggregation::vote_histogram;

  // head_seeds when given (validated for length and distinctness), else
  // master_seed + i.
  std::vector<std::uint64_t> resolved_seeds() const;
};

struct EnsembleModel {
  EnsembleConfig config;
  std::vector<HeadParams> heads;
  EncoderConfig encoder_config;
};

// Heads train concurrently; each depends only on its seed and the shared
// data-order stream, so scheduling cannot change the result.
EnsembleModel train_ensemble(const std::vector<FeatureVector>& xs,
                             const std::vector<SoftTarget>& ts, const TrainConfig& train_config,
                             const EnsembleConfig& ens_config, const EncoderConfig& encoder_config);

// vote_histogram: per-head argmax counts / n. mean_softmax: average softmax.
LabelDistribution recover_distribution(const EnsembleModel& model, const FeatureVector& x);

// argmax of recover_distribution, ties to the lower canonical index.
EmotionLabel predict(const EnsembleModel& model, const FeatureVector& x);

// ---------------------------------------------------------------------------
// Unified dispatch over all model kinds.

struct ExampleSet {
  std::vector<std::string> ids;
  std::vector<FeatureVector> x;
  std::vector<LabeledExample> y;

  std::size_t size() const { return ids.size(); }
  bool has_true_dists() const;
  bool has_disagreements() const;
};

struct ModelConfigs {
  TrainConfig train;
  EnsembleConfig ensemble;
  BnnConfig bnn;
  double multitask_lambda = 1.0;
};

struct BnnModel {
  BnnParams params;
  std::uint64_t pred_seed = 0;  // stored so recovery replays identically
};

struct ModelBundle {
  ModelKind kind = ModelKind::single;
  EncoderConfig encoder_config;
  TrainConfig train_config;
  std::optional<EnsembleModel> ensemble;     // single / seed_ensemble / ldl
  std::optional<BnnModel> bnn;
  std::optional<MultiTaskParams> multitask;
};

struct SampleOutput {
  std::string sample_id;
  EmotionLabel predicted = EmotionLabel::happiness;
  LabelDistribution recovered;
  std::optional<double> predicted_disagreement;  // multitask only
};

// single: one head, hard targets, one-hot recovery. seed_ensemble: as
// configured. ldl: one head on soft targets, softmax recovery. bnn: weight
// samples as proxy annotators. ldl/multitask require oracle targets on the
// trainset and say so when they are missing.
ModelBundle train_model(ModelKind kind, const ExampleSet& trainset,
                        const EncoderConfig& encoder_config, const ModelConfigs& configs);

std::vector<SampleOutput> apply_model(const ModelBundle& bundle, const ExampleSet& testset);

std::vector<SampleOutput> run_model(ModelKind kind, const ExampleSet& trainset,
                                    const ExampleSet& testset, const EncoderConfig& encoder_config,
                                    const ModelConfigs& configs);

}  // namespace seedens
