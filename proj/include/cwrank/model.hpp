#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwrank/textenc.hpp"

namespace cwrank {

struct ModelDims {
  std::uint32_t vocab = 32768;     // V
  std::uint32_t embed = 64;        // d
  std::uint32_t hidden = 64;       // h, shared layer and head mid-layer width
  std::uint32_t classes_cwd = 2;
  std::uint32_t classes_li = 5;

  bool operator==(const ModelDims&) const = default;
};

// All weights stored row-major: embedding V x d, shared d x h, head mid
// h x h, head out h x C.
struct HeadParams {
  std::vector<double> w1, b1;  // h x h, h
  std::vector<double> w2, b2;  // h x C, C
};

struct ModelParams {
  ModelDims dims;
  std::vector<double> embedding;          // V x d
  std::vector<double> w_shared, b_shared; // d x h, h
  HeadParams cwd, li;
};

// Visits every parameter tensor in a fixed order (the serialization and
// optimizer order).
void for_each_tensor(ModelParams& p,
                     const std::function<void(std::vector<double>&)>& fn);
void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::vector<double>&)>& fn);

// Glorot-uniform matrices, zero biases, seeded.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& p);

struct HeadTrace {
  std::vector<double> mid;     // B x h, post-ReLU
  std::vector<double> scores;  // B x C, pre-softmax
  std::vector<double> probs;   // B x C
};

struct ForwardTrace {
  std::size_t batch_size = 0;
  ModelDims dims;
  std::vector<TokenSequence> batch;
  std::vector<double> pooled;  // B x d, masked mean of embeddings
  std::vector<double> shared;  // B x h, tanh
  HeadTrace cwd, li;
};

struct JointLossConfig {
  double alpha = 0.6;  // in [0, 1]
  std::vector<double> cwd_class_weights;  // empty = uniform
  std::vector<double> li_class_weights;
};

ForwardTrace forward(const ModelParams& params,
                     std::span<const TokenSequence> batch);

// Weighted mean negative log-likelihood (natural log) over the batch;
// normalized by the sum of per-sample weights.
double task_loss(const std::vector<double>& probs, std::size_t num_classes,
                 const std::vector<int>& gold,
                 const std::vector<double>& class_weights = {});

inline double joint_loss(double j_cwd, double j_li,
                         const JointLossConfig& config) {
  return config.alpha * j_cwd + (1.0 - config.alpha) * j_li;
}

// Exact gradient of the joint loss w.r.t. every parameter. At alpha
// boundaries the unused head's gradients are exact zeros.
ModelParams backward(const ForwardTrace& trace, const std::vector<int>& gold_cwd,
                     const std::vector<int>& gold_li,
                     const JointLossConfig& config, const ModelParams& params);

struct AdamWState {
  ModelParams m, v;  // moment accumulators, zero-initialized
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

AdamWState make_adamw_state(const ModelParams& params, double lr,
                            double weight_decay);

// Decoupled weight decay: weights are shrunk directly, the decay never
// enters the moment estimates. Throws on non-finite gradients without
// touching params.
void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state);

}  // namespace cwrank
