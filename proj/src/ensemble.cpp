#include "seedens/ensemble.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "seedens/error.hpp"
#include "seedens/rng.hpp"

namespace seedens {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::single: return "single";
    case ModelKind::seed_ensemble: return "seed_ensemble";
    case ModelKind::bnn: return "bnn";
    case ModelKind::ldl: return "ldl";
    case ModelKind::multitask: return "multitask";
  }
  return "?";
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) {
  for (ModelKind kind : {ModelKind::single, ModelKind::seed_ensemble, ModelKind::bnn,
                         ModelKind::ldl, ModelKind::multitask}) {
    if (name == model_kind_name(kind)) return kind;
  }
  return std::nullopt;
}

const char* aggregation_name(Aggregation mode) {
  switch (mode) {
    case Aggregation::vote_histogram: return "vote_histogram";
    case Aggregation::mean_softmax: return "mean_softmax";
  }
  return "?";
}

std::optional<Aggregation> aggregation_from_name(std::string_view name) {
  for (Aggregation mode : {Aggregation::vote_histogram, Aggregation::mean_softmax}) {
    if (name == aggregation_name(mode)) return mode;
  }
  return std::nullopt;
}

std::vector<std::uint64_t> EnsembleConfig::resolved_seeds() const {
  if (n < 1) throw InputError("ensemble: n must be >= 1");
  if (head_seeds) {
    if (head_seeds->size() != static_cast<std::size_t>(n)) {
      throw InputError("ensemble: head_seeds has " + std::to_string(head_seeds->size()) +
                       " entries but n = " + std::to_string(n));
    }
    std::set<std::uint64_t> seen;
    for (auto s : *head_seeds) {
      if (!seen.insert(s).second) {
        throw InputError("ensemble: duplicate head seed " + std::to_string(s));
      }
    }
    return *head_seeds;
  }
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) seeds[static_cast<std::size_t>(i)] = master_seed + static_cast<std::uint64_t>(i);
  return seeds;
}

EnsembleModel train_ensemble(const std::vector<FeatureVector>& xs,
                             const std::vector<SoftTarget>& ts, const TrainConfig& train_config,
                             const EnsembleConfig& ens_config,
                             const EncoderConfig& encoder_config) {
  const auto seeds = ens_config.resolved_seeds();
  EnsembleModel model;
  model.config = ens_config;
  model.encoder_config = encoder_config;
  model.heads.resize(seeds.size());
  std::vector<std::future<HeadParams>> jobs;
  jobs.reserve(seeds.size());
  for (auto seed : seeds) {
    jobs.push_back(std::async(std::launch::async, [&, seed] {
      return train_head(xs, ts, train_config, seed);
    }));
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) model.heads[i] = jobs[i].get();
  return model;
}

LabelDistribution recover_distribution(const EnsembleModel& model, const FeatureVector& x) {
  if (model.heads.empty()) throw InputError("recover_distribution: model has no heads");
  LabelDistribution out;
  const double inv_n = 1.0 / static_cast<double>(model.heads.size());
  if (model.config.aggregation == Aggregation::vote_histogram) {
    for (const auto& head : model.heads) {
      out.p[static_cast<int>(argmax_label(forward(head, x)))] += inv_n;
    }
  } else {
    for (const auto& head : model.heads) {
      const auto dist = forward(head, x);
      for (int k = 0; k < kNumEmotions; ++k) out.p[k] += dist.p[k] * inv_n;
    }
  }
  return out;
}

EmotionLabel predict(const EnsembleModel& model, const FeatureVector& x) {
  return argmax_label(recover_distribution(model, x));
}

// ---------------------------------------------------------------------------

bool ExampleSet::has_true_dists() const {
  if (y.empty()) return false;
  return std::all_of(y.begin(), y.end(),
                     [](const LabeledExample& e) { return e.true_dist.has_value(); });
}

bool ExampleSet::has_disagreements() const {
  if (y.empty()) return false;
  return std::all_of(y.begin(), y.end(),
                     [](const LabeledExample& e) { return e.disagreement.has_value(); });
}

namespace {

void check_set(const ExampleSet& set, const char* which) {
  if (set.size() == 0) throw InputError(std::string(which) + " set is empty");
  if (set.x.size() != set.size() || set.y.size() != set.size()) {
    throw InputError(std::string(which) + " set has misaligned columns");
  }
}

std::vector<SoftTarget> gold_targets(const ExampleSet& set) {
  std::vector<SoftTarget> ts;
  ts.reserve(set.size());
  for (const auto& e : set.y) ts.push_back(hard_target(static_cast<int>(e.gold), kNumEmotions));
  return ts;
}

}  // namespace

ModelBundle train_model(ModelKind kind, const ExampleSet& trainset,
                        const EncoderConfig& encoder_config, const ModelConfigs& configs) {
  check_set(trainset, "train");
  ModelBundle bundle;
  bundle.kind = kind;
  bundle.encoder_config = encoder_config;
  bundle.train_config = configs.train;
  switch (kind) {
    case ModelKind::single: {
      EnsembleConfig cfg;
      cfg.n = 1;
      cfg.master_seed = configs.ensemble.master_seed;
      cfg.aggregation = Aggregation::vote_histogram;
      bundle.ensemble =
          train_ensemble(trainset.x, gold_targets(trainset), configs.train, cfg, encoder_config);
      break;
    }
    case ModelKind::seed_ensemble: {
      bundle.ensemble = train_ensemble(trainset.x, gold_targets(trainset), configs.train,
                                       configs.ensemble, encoder_config);
      break;
    }
    case ModelKind::ldl: {
      if (!trainset.has_true_dists()) {
        throw InputError(
            "ldl training needs a per-sample rating distribution for every train sample; "
            "aggregated labels alone do not carry one");
      }
      std::vector<SoftTarget> ts;
      ts.reserve(trainset.size());
      for (const auto& e : trainset.y) ts.push_back(soft_target(*e.true_dist));
      EnsembleConfig cfg;
      cfg.n = 1;
      cfg.master_seed = configs.ensemble.master_seed;
      cfg.aggregation = Aggregation::mean_softmax;
      bundle.ensemble = train_ensemble(trainset.x, ts, configs.train, cfg, encoder_config);
      break;
    }
    case ModelKind::bnn: {
      BnnModel model;
      model.params = train_bnn(trainset.x, gold_targets(trainset), configs.train,
                               configs.train.master_seed, configs.bnn);
      model.pred_seed = derive_seed(configs.train.master_seed, 0xbd);
      bundle.bnn = model;
      break;
    }
    case ModelKind::multitask: {
      if (!trainset.has_disagreements()) {
        throw InputError(
            "multitask training needs a disagreement target for every train sample; "
            "derive them with aggregate_gold");
      }
      std::vector<int> golds;
      std::vector<double> targets;
      golds.reserve(trainset.size());
      targets.reserve(trainset.size());
      for (const auto& e : trainset.y) {
        golds.push_back(static_cast<int>(e.gold));
        targets.push_back(*e.disagreement);
      }
      bundle.multitask = train_multitask(trainset.x, golds, targets, configs.train,
                                         configs.train.master_seed, configs.multitask_lambda);
      break;
    }
  }
  return bundle;
}

std::vector<SampleOutput> apply_model(const ModelBundle& bundle, const ExampleSet& testset) {
  check_set(testset, "test");
  std::vector<SampleOutput> outputs;
  outputs.reserve(testset.size());
  for (std::size_t i = 0; i < testset.size(); ++i) {
    SampleOutput out;
    out.sample_id = testset.ids[i];
    switch (bundle.kind) {
      case ModelKind::single:
      case ModelKind::seed_ensemble:
      case ModelKind::ldl: {
        if (!bundle.ensemble) throw InputError("model bundle is missing its heads");
        out.recovered = recover_distribution(*bundle.ensemble, testset.x[i]);
        out.predicted = argmax_label(out.recovered);
        break;
      }
      case ModelKind::bnn: {
        if (!bundle.bnn) throw InputError("model bundle is missing its weight posteriors");
        const auto pred = bnn_predict(bundle.bnn->params, testset.x[i],
                                      bundle.bnn->params.s_pred, bundle.bnn->pred_seed);
        out.recovered = pred.argmax_histogram;
        out.predicted = argmax_label(pred.mean);
        break;
      }
      case ModelKind::multitask: {
        if (!bundle.multitask) throw InputError("model bundle is missing its multitask head");
        const auto dist = forward(bundle.multitask->head, testset.x[i]);
        out.predicted = argmax_label(dist);
        out.recovered = LabelDistribution::one_hot(out.predicted);
        out.predicted_disagreement = multitask_predict_disagreement(*bundle.multitask,
                                                                    testset.x[i]);
        break;
      }
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

std::vector<SampleOutput> run_model(ModelKind kind, const ExampleSet& trainset,
                                    const ExampleSet& testset, const EncoderConfig& encoder_config,
                                    const ModelConfigs& configs) {
  return apply_model(train_model(kind, trainset, encoder_config, configs), testset);
}

}  // namespace seedens
