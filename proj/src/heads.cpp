#include "seedens/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seedens/error.hpp"
#include "seedens/rng.hpp"

namespace seedens {

namespace {

void check_batch(std::size_t xs, std::size_t ts, const char* op) {
  if (xs == 0) throw InputError(std::string(op) + ": empty batch");
  if (xs != ts) throw InputError(std::string(op) + ": batch size mismatch");
}

void check_dim(const FeatureVector& x, int d, const char* op) {
  if (x.dim() != static_cast<std::size_t>(d)) {
    throw InputError(std::string(op) + ": feature dim " + std::to_string(x.dim()) +
                     " does not match head dim " + std::to_string(d));
  }
}

// log-softmax with max subtraction; returns log p and fills p.
std::vector<double> log_softmax(const std::vector<double>& logits, std::vector<double>& p) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> shifted(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    shifted[k] = logits[k] - mx;
    total += std::exp(shifted[k]);
  }
  const double log_total = std::log(total);
  std::vector<double> logp(logits.size());
  p.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    logp[k] = shifted[k] - log_total;
    p[k] = std::exp(logp[k]);
  }
  return logp;
}

// Mini-batch index order for one training run; depends only on order_seed.
std::vector<std::vector<std::size_t>> batch_plan(std::size_t n, int epochs, int batch_size,
                                                 std::uint64_t order_seed) {
  std::vector<std::vector<std::size_t>> batches;
  Rng order_rng(order_seed);
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  for (int e = 0; e < epochs; ++e) {
    order_rng.shuffle(indices);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(batch_size));
      batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(start),
                           indices.begin() + static_cast<std::ptrdiff_t>(stop));
    }
  }
  return batches;
}

void check_train_config(const TrainConfig& config) {
  if (config.learning_rate <= 0.0) throw InputError("train: learning_rate must be > 0");
  if (config.epochs < 1) throw InputError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw InputError("train: batch_size must be >= 1");
}

}  // namespace

SoftTarget hard_target(int label, int K) {
  if (label < 0 || label >= K) throw InputError("hard_target: label out of range");
  SoftTarget t;
  t.p.assign(static_cast<std::size_t>(K), 0.0);
  t.p[static_cast<std::size_t>(label)] = 1.0;
  return t;
}

SoftTarget soft_target(const LabelDistribution& dist) {
  SoftTarget t;
  t.p.assign(dist.p.begin(), dist.p.end());
  return t;
}

HeadParams init_head(std::uint64_t seed, int d, int K) {
  if (d < 1 || K < 1) throw InputError("init_head: d and K must be >= 1");
  HeadParams params;
  params.d = d;
  params.K = K;
  params.W.resize(static_cast<std::size_t>(K) * d);
  params.b.assign(static_cast<std::size_t>(K), 0.0);
  const double a = std::sqrt(6.0 / (d + K));
  Rng rng(seed);
  for (auto& w : params.W) w = rng.uniform(-a, a);
  return params;
}

std::vector<double> forward_logits(const HeadParams& params, const FeatureVector& x) {
  check_dim(x, params.d, "forward");
  std::vector<double> logits(static_cast<std::size_t>(params.K));
  for (int k = 0; k < params.K; ++k) {
    double z = params.b[static_cast<std::size_t>(k)];
    const double* row = params.W.data() + static_cast<std::size_t>(k) * params.d;
    for (int j = 0; j < params.d; ++j) z += row[j] * x.v[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(k)] = z;
  }
  return logits;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p;
  log_softmax(logits, p);
  return p;
}

LabelDistribution forward(const HeadParams& params, const FeatureVector& x) {
  if (params.K != kNumEmotions) {
    throw InputError("forward: head must have K = 6 to produce a LabelDistribution");
  }
  const auto p = softmax(forward_logits(params, x));
  LabelDistribution dist;
  std::copy(p.begin(), p.end(), dist.p.begin());
  return dist;
}

LossGrad ce_loss_grad(const HeadParams& params, const std::vector<FeatureVector>& xs,
                      const std::vector<SoftTarget>& ts) {
  check_batch(xs.size(), ts.size(), "ce_loss_grad");
  const std::size_t B = xs.size();
  LossGrad out;
  out.grads.W.assign(params.W.size(), 0.0);
  out.grads.b.assign(params.b.size(), 0.0);
  std::vector<double> p;
  for (std::size_t i = 0; i < B; ++i) {
    if (ts[i].p.size() != static_cast<std::size_t>(params.K)) {
      throw InputError("ce_loss_grad: target size mismatch");
    }
    const auto logits = forward_logits(params, xs[i]);
    const auto logp = log_softmax(logits, p);
    for (int k = 0; k < params.K; ++k) {
      const double t = ts[i].p[static_cast<std::size_t>(k)];
      if (t != 0.0) out.loss -= t * logp[static_cast<std::size_t>(k)];
      const double g = (p[static_cast<std::size_t>(k)] - t) / static_cast<double>(B);
      out.grads.b[static_cast<std::size_t>(k)] += g;
      double* grow = out.grads.W.data() + static_cast<std::size_t>(k) * params.d;
      for (int j = 0; j < params.d; ++j) grow[j] += g * xs[i].v[static_cast<std::size_t>(j)];
    }
  }
  out.loss /= static_cast<double>(B);
  return out;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw InputError("adam_step: shape mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
  }
}

HeadParams train_head(const std::vector<FeatureVector>& xs, const std::vector<SoftTarget>& ts,
                      const TrainConfig& config, std::uint64_t init_seed) {
  check_batch(xs.size(), ts.size(), "train_head");
  check_train_config(config);
  const int d = static_cast<int>(xs.front().dim());
  const int K = static_cast<int>(ts.front().p.size());
  HeadParams params = init_head(init_seed, d, K);

  std::vector<double> flat(params.W.size() + params.b.size());
  AdamState state(flat.size());
  std::vector<FeatureVector> bx;
  std::vector<SoftTarget> bt;
  for (const auto& batch : batch_plan(xs.size(), config.epochs, config.batch_size,
                                      config.data_order_seed)) {
    bx.clear();
    bt.clear();
    for (auto idx : batch) {
      bx.push_back(xs[idx]);
      bt.push_back(ts[idx]);
    }
    const auto lg = ce_loss_grad(params, bx, bt);
    std::copy(params.W.begin(), params.W.end(), flat.begin());
    std::copy(params.b.begin(), params.b.end(), flat.begin() + params.W.size());
    std::vector<double> gflat(flat.size());
    std::copy(lg.grads.W.begin(), lg.grads.W.end(), gflat.begin());
    std::copy(lg.grads.b.begin(), lg.grads.b.end(), gflat.begin() + params.W.size());
    adam_step(flat, gflat, state, config);
    std::copy(flat.begin(), flat.begin() + params.W.size(), params.W.begin());
    std::copy(flat.begin() + params.W.size(), flat.end(), params.b.begin());
  }
  return params;
}

// ---------------------------------------------------------------------------

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

BnnParams init_bnn(std::uint64_t seed, int d, int K, const BnnConfig& config) {
  if (d < 1 || K < 1) throw InputError("init_bnn: d and K must be >= 1");
  if (config.prior_sigma <= 0.0) throw InputError("init_bnn: prior_sigma must be > 0");
  if (config.s_train < 1 || config.s_pred < 1) {
    throw InputError("init_bnn: sample counts must be >= 1");
  }
  BnnParams params;
  params.d = d;
  params.K = K;
  params.prior_sigma = config.prior_sigma;
  params.kl_weight = config.kl_weight.value_or(1.0);
  params.s_train = config.s_train;
  params.s_pred = config.s_pred;
  const std::size_t nw = static_cast<std::size_t>(K) * d;
  params.mu_W.resize(nw);
  params.rho_W.assign(nw, config.rho_init);
  params.mu_b.assign(static_cast<std::size_t>(K), 0.0);
  params.rho_b.assign(static_cast<std::size_t>(K), config.rho_init);
  const double a = std::sqrt(6.0 / (d + K));
  Rng rng(seed);
  for (auto& w : params.mu_W) w = rng.uniform(-a, a);
  return params;
}

namespace {

double kl_per_weight(double mu, double sigma, double prior_sigma) {
  return std::log(prior_sigma / sigma) +
         (sigma * sigma + mu * mu) / (2.0 * prior_sigma * prior_sigma) - 0.5;
}

// One sampled weight matrix: eps drawn W row-major then b.
struct WeightSample {
  HeadParams realized;
  std::vector<double> eps_W;
  std::vector<double> eps_b;
};

WeightSample draw_weights(const BnnParams& params, const std::vector<double>& sigma_W,
                          const std::vector<double>& sigma_b, Rng& rng) {
  WeightSample s;
  s.realized.d = params.d;
  s.realized.K = params.K;
  s.realized.W.resize(params.mu_W.size());
  s.realized.b.resize(params.mu_b.size());
  s.eps_W.resize(params.mu_W.size());
  s.eps_b.resize(params.mu_b.size());
  for (std::size_t i = 0; i < params.mu_W.size(); ++i) {
    s.eps_W[i] = rng.normal();
    s.realized.W[i] = params.mu_W[i] + sigma_W[i] * s.eps_W[i];
  }
  for (std::size_t i = 0; i < params.mu_b.size(); ++i) {
    s.eps_b[i] = rng.normal();
    s.realized.b[i] = params.mu_b[i] + sigma_b[i] * s.eps_b[i];
  }
  return s;
}

}  // namespace

double bnn_kl(const BnnParams& params) {
  double kl = 0.0;
  for (std::size_t i = 0; i < params.mu_W.size(); ++i) {
    kl += kl_per_weight(params.mu_W[i], softplus(params.rho_W[i]), params.prior_sigma);
  }
  for (std::size_t i = 0; i < params.mu_b.size(); ++i) {
    kl += kl_per_weight(params.mu_b[i], softplus(params.rho_b[i]), params.prior_sigma);
  }
  return kl;
}

BnnLossGrad bnn_elbo_grad(const BnnParams& params, const std::vector<FeatureVector>& xs,
                          const std::vector<SoftTarget>& ts, std::uint64_t noise_seed) {
  check_batch(xs.size(), ts.size(), "bnn_elbo_grad");
  const std::size_t nw = params.mu_W.size();
  const std::size_t nb = params.mu_b.size();
  std::vector<double> sigma_W(nw), sigma_b(nb);
  for (std::size_t i = 0; i < nw; ++i) sigma_W[i] = softplus(params.rho_W[i]);
  for (std::size_t i = 0; i < nb; ++i) sigma_b[i] = softplus(params.rho_b[i]);

  BnnLossGrad out;
  out.grads.mu_W.assign(nw, 0.0);
  out.grads.rho_W.assign(nw, 0.0);
  out.grads.mu_b.assign(nb, 0.0);
  out.grads.rho_b.assign(nb, 0.0);

  Rng noise(noise_seed);
  double ce_total = 0.0;
  const double inv_s = 1.0 / static_cast<double>(params.s_train);
  for (int s = 0; s < params.s_train; ++s) {
    const auto sample = draw_weights(params, sigma_W, sigma_b, noise);
    const auto lg = ce_loss_grad(sample.realized, xs, ts);
    ce_total += lg.loss * inv_s;
    // Reparameterization path: dW flows to mu directly and to rho through
    // eps * d softplus/d rho.
    for (std::size_t i = 0; i < nw; ++i) {
      const double g = lg.grads.W[i] * inv_s;
      out.grads.mu_W[i] += g;
      out.grads.rho_W[i] += g * sample.eps_W[i] * sigmoid(params.rho_W[i]);
    }
    for (std::size_t i = 0; i < nb; ++i) {
      const double g = lg.grads.b[i] * inv_s;
      out.grads.mu_b[i] += g;
      out.grads.rho_b[i] += g * sample.eps_b[i] * sigmoid(params.rho_b[i]);
    }
  }

  out.kl = bnn_kl(params);
  out.loss = ce_total + params.kl_weight * out.kl;

  // Closed-form KL gradient: d/dmu = mu / sp^2, d/dsigma = sigma / sp^2 - 1 / sigma.
  const double inv_sp2 = 1.0 / (params.prior_sigma * params.prior_sigma);
  for (std::size_t i = 0; i < nw; ++i) {
    out.grads.mu_W[i] += params.kl_weight * params.mu_W[i] * inv_sp2;
    out.grads.rho_W[i] += params.kl_weight * (sigma_W[i] * inv_sp2 - 1.0 / sigma_W[i]) *
                          sigmoid(params.rho_W[i]);
  }
  for (std::size_t i = 0; i < nb; ++i) {
    out.grads.mu_b[i] += params.kl_weight * params.mu_b[i] * inv_sp2;
    out.grads.rho_b[i] += params.kl_weight * (sigma_b[i] * inv_sp2 - 1.0 / sigma_b[i]) *
                          sigmoid(params.rho_b[i]);
  }
  return out;
}

BnnPrediction bnn_predict(const BnnParams& params, const FeatureVector& x, int s_pred,
                          std::uint64_t noise_seed) {
  if (params.K != kNumEmotions) {
    throw InputError("bnn_predict: head must have K = 6");
  }
  if (s_pred < 1) throw InputError("bnn_predict: s_pred must be >= 1");
  const std::size_t nw = params.mu_W.size();
  const std::size_t nb = params.mu_b.size();
  std::vector<double> sigma_W(nw), sigma_b(nb);
  for (std::size_t i = 0; i < nw; ++i) sigma_W[i] = softplus(params.rho_W[i]);
  for (std::size_t i = 0; i < nb; ++i) sigma_b[i] = softplus(params.rho_b[i]);

  BnnPrediction out;
  out.samples.reserve(static_cast<std::size_t>(s_pred));
  std::array<double, kNumEmotions> votes{};
  Rng noise(noise_seed);
  for (int s = 0; s < s_pred; ++s) {
    const auto sample = draw_weights(params, sigma_W, sigma_b, noise);
    const LabelDistribution dist = forward(sample.realized, x);
    for (int k = 0; k < kNumEmotions; ++k) out.mean.p[k] += dist.p[k];
    votes[static_cast<int>(argmax_label(dist))] += 1.0;
    out.samples.push_back(dist);
  }
  for (int k = 0; k < kNumEmotions; ++k) {
    out.mean.p[k] /= static_cast<double>(s_pred);
    out.argmax_histogram.p[k] = votes[k] / static_cast<double>(s_pred);
  }
  return out;
}

BnnParams train_bnn(const std::vector<FeatureVector>& xs, const std::vector<SoftTarget>& ts,
                    const TrainConfig& config, std::uint64_t init_seed,
                    const BnnConfig& bnn_config) {
  check_batch(xs.size(), ts.size(), "train_bnn");
  check_train_config(config);
  const int d = static_cast<int>(xs.front().dim());
  const int K = static_cast<int>(ts.front().p.size());
  BnnParams params = init_bnn(init_seed, d, K, bnn_config);
  if (!bnn_config.kl_weight) {
    const std::size_t n_batches =
        (xs.size() + static_cast<std::size_t>(config.batch_size) - 1) /
        static_cast<std::size_t>(config.batch_size);
    params.kl_weight = 1.0 / static_cast<double>(n_batches);
  }

  const std::size_t nw = params.mu_W.size();
  const std::size_t nb = params.mu_b.size();
  std::vector<double> flat(2 * nw + 2 * nb);
  AdamState state(flat.size());
  const std::uint64_t noise_base = derive_seed(init_seed, 0xb11);

  std::vector<FeatureVector> bx;
  std::vector<SoftTarget> bt;
  long step = 0;
  for (const auto& batch : batch_plan(xs.size(), config.epochs, config.batch_size,
                                      config.data_order_seed)) {
    bx.clear();
    bt.clear();
    for (auto idx : batch) {
      bx.push_back(xs[idx]);
      bt.push_back(ts[idx]);
    }
    const auto lg = bnn_elbo_grad(params, bx, bt,
                                  derive_seed(noise_base, static_cast<std::uint64_t>(step)));
    ++step;

    auto pack = [&](const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<double>& c, const std::vector<double>& e,
                    std::vector<double>& dst) {
      std::size_t off = 0;
      std::copy(a.begin(), a.end(), dst.begin() + off);
      off += a.size();
      std::copy(b.begin(), b.end(), dst.begin() + off);
      off += b.size();
      std::copy(c.begin(), c.end(), dst.begin() + off);
      off += c.size();
      std::copy(e.begin(), e.end(), dst.begin() + off);
    };
    pack(params.mu_W, params.rho_W, params.mu_b, params.rho_b, flat);
    std::vector<double> gflat(flat.size());
    pack(lg.grads.mu_W, lg.grads.rho_W, lg.grads.mu_b, lg.grads.rho_b, gflat);
    adam_step(flat, gflat, state, config);
    std::size_t off = 0;
    std::copy(flat.begin() + off, flat.begin() + off + nw, params.mu_W.begin());
    off += nw;
    std::copy(flat.begin() + off, flat.begin() + off + nw, params.rho_W.begin());
    off += nw;
    std::copy(flat.begin() + off, flat.begin() + off + nb, params.mu_b.begin());
    off += nb;
    std::copy(flat.begin() + off, flat.begin() + off + nb, params.rho_b.begin());
  }
  return params;
}

// ---------------------------------------------------------------------------

MultiTaskParams init_multitask(std::uint64_t seed, int d, int K, double lambda) {
  MultiTaskParams params;
  params.head = init_head(seed, d, K);
  params.lambda = lambda;
  params.w_g.resize(static_cast<std::size_t>(d));
  // Disagreement row drawn from its own stream with the head's init scale.
  const double a = std::sqrt(6.0 / (d + K));
  Rng rng(derive_seed(seed, 1));
  for (auto& w : params.w_g) w = rng.uniform(-a, a);
  params.b_g = 0.0;
  return params;
}

MultiTaskLossGrad multitask_loss_grad(const MultiTaskParams& params,
                                      const std::vector<FeatureVector>& xs,
                                      const std::vector<int>& golds,
                                      const std::vector<double>& disagreement_targets) {
  check_batch(xs.size(), golds.size(), "multitask_loss_grad");
  if (disagreement_targets.size() != xs.size()) {
    throw InputError(
        "multitask_loss_grad: disagreement targets missing; derive them with aggregate_gold");
  }
  const std::size_t B = xs.size();
  std::vector<SoftTarget> hard;
  hard.reserve(B);
  for (int g : golds) hard.push_back(hard_target(g, params.head.K));
  const auto ce = ce_loss_grad(params.head, xs, hard);

  MultiTaskLossGrad out;
  out.grads.head = ce.grads;
  out.grads.w_g.assign(params.w_g.size(), 0.0);
  out.grads.b_g = 0.0;
  double mse = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    check_dim(xs[i], params.head.d, "multitask_loss_grad");
    double z = params.b_g;
    for (std::size_t j = 0; j < params.w_g.size(); ++j) z += params.w_g[j] * xs[i].v[j];
    const double s = sigmoid(z);
    const double e = s - disagreement_targets[i];
    mse += e * e / static_cast<double>(B);
    const double dz = params.lambda * 2.0 * e * s * (1.0 - s) / static_cast<double>(B);
    for (std::size_t j = 0; j < params.w_g.size(); ++j) out.grads.w_g[j] += dz * xs[i].v[j];
    out.grads.b_g += dz;
  }
  out.loss = ce.loss + params.lambda * mse;
  return out;
}

double multitask_predict_disagreement(const MultiTaskParams& params, const FeatureVector& x) {
  check_dim(x, params.head.d, "multitask_predict_disagreement");
  double z = params.b_g;
  for (std::size_t j = 0; j < params.w_g.size(); ++j) z += params.w_g[j] * x.v[j];
  return sigmoid(z);
}

MultiTaskParams train_multitask(const std::vector<FeatureVector>& xs, const std::vector<int>& golds,
                                const std::vector<double>& disagreement_targets,
                                const TrainConfig& config, std::uint64_t init_seed, double lambda) {
  check_batch(xs.size(), golds.size(), "train_multitask");
  if (disagreement_targets.size() != xs.size()) {
    throw InputError("train_multitask: disagreement targets missing; derive them with aggregate_gold");
  }
  check_train_config(config);
  const int d = static_cast<int>(xs.front().dim());
  MultiTaskParams params = init_multitask(init_seed, d, kNumEmotions, lambda);

  const std::size_t nw = params.head.W.size();
  const std::size_t nb = params.head.b.size();
  const std::size_t ng = params.w_g.size();
  std::vector<double> flat(nw + nb + ng + 1);
  AdamState state(flat.size());
  std::vector<FeatureVector> bx;
  std::vector<int> bg;
  std::vector<double> bd;
  for (const auto& batch : batch_plan(xs.size(), config.epochs, config.batch_size,
                                      config.data_order_seed)) {
    bx.clear();
    bg.clear();
    bd.clear();
    for (auto idx : batch) {
      bx.push_back(xs[idx]);
      bg.push_back(golds[idx]);
      bd.push_back(disagreement_targets[idx]);
    }
    const auto lg = multitask_loss_grad(params, bx, bg, bd);
    std::size_t off = 0;
    std::copy(params.head.W.begin(), params.head.W.end(), flat.begin() + off);
    off += nw;
    std::copy(params.head.b.begin(), params.head.b.end(), flat.begin() + off);
    off += nb;
    std::copy(params.w_g.begin(), params.w_g.end(), flat.begin() + off);
    off += ng;
    flat[off] = params.b_g;
    std::vector<double> gflat(flat.size());
    off = 0;
    std::copy(lg.grads.head.W.begin(), lg.grads.head.W.end(), gflat.begin() + off);
    off += nw;
    std::copy(lg.grads.head.b.begin(), lg.grads.head.b.end(), gflat.begin() + off);
    off += nb;
    std::copy(lg.grads.w_g.begin(), lg.grads.w_g.end(), gflat.begin() + off);
    off += ng;
    gflat[off] = lg.grads.b_g;
    adam_step(flat, gflat, state, config);
    off = 0;
    std::copy(flat.begin() + off, flat.begin() + off + nw, params.head.W.begin());
    off += nw;
    std::copy(flat.begin() + off, flat.begin() + off + nb, params.head.b.begin());
    off += nb;
    std::copy(flat.begin() + off, flat.begin() + off + ng, params.w_g.begin());
    off += ng;
    params.b_g = flat[off];
  }
  return params;
}

}  // namespace seedens
