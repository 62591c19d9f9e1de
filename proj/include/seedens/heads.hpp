#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seedens/data.hpp"
#include "seedens/encoder.hpp"

namespace seedens {

// Trainable classification heads over frozen features: a plain linear-softmax
// head, a mean-field variational Bayesian head, and a multi-task head that
// also regresses annotator disagreement. Gradients are closed-form; training
// uses Adam throughout.

struct HeadParams {
  int d = 0;
  int K = 0;
  std::vector<double> W;  // K x d, row-major
  std::vector<double> b;  // K

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct HeadGrads {
  std::vector<double> W;
  std::vector<double> b;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 3;
  int batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t master_seed = 0;
  std::uint64_t data_order_seed = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Training target: a distribution over K classes. Hard labels are one-hot.
struct SoftTarget {
  std::vector<double> p;
};

SoftTarget hard_target(int label, int K);
SoftTarget soft_target(const LabelDistribution& dist);

// W ~ iid uniform(-a, a) with a = sqrt(6 / (d + K)), b = 0.
HeadParams init_head(std::uint64_t seed, int d, int K);

std::vector<double> forward_logits(const HeadParams& params, const FeatureVector& x);

// Max-subtracted softmax; output sums to 1 within 1e-12 for |logit| <= 700.
std::vector<double> softmax(const std::vector<double>& logits);

// softmax(Wx + b) as a LabelDistribution; params must have K = 6.
LabelDistribution forward(const HeadParams& params, const FeatureVector& x);

struct LossGrad {
  double loss = 0.0;
  HeadGrads grads;
};

// Mean cross-entropy over the batch, -sum_k t_k ln p_k; logit gradient p - t.
LossGrad ce_loss_grad(const HeadParams& params, const std::vector<FeatureVector>& xs,
                      const std::vector<SoftTarget>& ts);

// One Adam step with bias correction over a flat parameter vector.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const TrainConfig& config);

// Mini-batch order is drawn only from config.data_order_seed so ensemble
// members see identical batches; init comes only from init_seed.
HeadParams train_head(const std::vector<FeatureVector>& xs, const std::vector<SoftTarget>& ts,
                      const TrainConfig& config, std::uint64_t init_seed);

// ---------------------------------------------------------------------------
// Variational Bayesian head: q(w) = N(mu, sigma^2) per weight with
// sigma = softplus(rho), prior N(0, prior_sigma^2).

struct BnnConfig {
  double prior_sigma = 1.0;
  // KL weight beta; when unset it resolves to 1 / batches-per-epoch.
  std::optional<double> kl_weight;
  int s_train = 1;
  int s_pred = 30;
  double rho_init = -5.0;
};

struct BnnParams {
  int d = 0;
  int K = 0;
  std::vector<double> mu_W, rho_W;  // K x d
  std::vector<double> mu_b, rho_b;  // K
  double prior_sigma = 1.0;
  double kl_weight = 1.0;
  int s_train = 1;
  int s_pred = 30;

  friend bool operator==(const BnnParams&, const BnnParams&) = default;
};

struct BnnGrads {
  std::vector<double> mu_W, rho_W, mu_b, rho_b;
};

struct BnnLossGrad {
  double loss = 0.0;
  double kl = 0.0;  // KL(q || prior), unweighted
  BnnGrads grads;
};

double softplus(double x);
double sigmoid(double x);

// mu drawn like init_head, rho constant at rho_init.
BnnParams init_bnn(std::uint64_t seed, int d, int K, const BnnConfig& config);

// Total KL(q || prior): per weight ln(sp/s) + (s^2 + mu^2) / (2 sp^2) - 1/2.
double bnn_kl(const BnnParams& params);

// Reparameterized ELBO gradient: s_train weight samples drawn from noise_seed,
// CE averaged over them, plus kl_weight * KL with its closed-form gradient.
BnnLossGrad bnn_elbo_grad(const BnnParams& params, const std::vector<FeatureVector>& xs,
                          const std::vector<SoftTarget>& ts, std::uint64_t noise_seed);

struct BnnPrediction {
  LabelDistribution mean;                     // average softmax over samples
  std::vector<LabelDistribution> samples;     // one softmax per weight sample
  LabelDistribution argmax_histogram;         // argmax counts / s_pred
};

// s_pred forward passes with weights sampled from noise_seed. K must be 6.
BnnPrediction bnn_predict(const BnnParams& params, const FeatureVector& x, int s_pred,
                          std::uint64_t noise_seed);

// Adam on (mu_W, rho_W, mu_b, rho_b); per-step noise seeds derive from
// init_seed so a rerun is bit-identical.
BnnParams train_bnn(const std::vector<FeatureVector>& xs, const std::vector<SoftTarget>& ts,
                    const TrainConfig& config, std::uint64_t init_seed, const BnnConfig& bnn_config);

// ---------------------------------------------------------------------------
// Multi-task head: class logits plus a sigmoid disagreement output trained
// against the normalized-entropy target with squared error.

struct MultiTaskParams {
  HeadParams head;
  std::vector<double> w_g;  // d
  double b_g = 0.0;
  double lambda = 1.0;

  friend bool operator==(const MultiTaskParams&, const MultiTaskParams&) = default;
};

struct MultiTaskGrads {
  HeadGrads head;
  std::vector<double> w_g;
  double b_g = 0.0;
};

struct MultiTaskLossGrad {
  double loss = 0.0;
  MultiTaskGrads grads;
};

MultiTaskParams init_multitask(std::uint64_t seed, int d, int K, double lambda);

// loss = CE(gold) + lambda * mean (sigmoid(w_g x + b_g) - target)^2.
MultiTaskLossGrad multitask_loss_grad(const MultiTaskParams& params,
                                      const std::vector<FeatureVector>& xs,
                                      const std::vector<int>& golds,
                                      const std::vector<double>& disagreement_targets);

double multitask_predict_disagreement(const MultiTaskParams& params, const FeatureVector& x);

MultiTaskParams train_multitask(const std::vector<FeatureVector>& xs,
                                const std::vector<int>& golds,
                                const std::vector<double>& disagreement_targets,
                                const TrainConfig& config, std::uint64_t init_seed,
                                double lambda);

}  // namespace seedens
