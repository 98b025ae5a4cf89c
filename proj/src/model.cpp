#include "cwrank/model.hpp"

#include <algorithm>
#include <cmath>

#include "cwrank/rng.hpp"

namespace cwrank {

void for_each_tensor(ModelParams& p,
                     const std::function<void(std::vector<double>&)>& fn) {
  fn(p.embedding);
  fn(p.w_shared);
  fn(p.b_shared);
  for (HeadParams* head : {&p.cwd, &p.li}) {
    fn(head->w1);
    fn(head->b1);
    fn(head->w2);
    fn(head->b2);
  }
}

void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::vector<double>&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(p),
                  [&](std::vector<double>& t) { fn(t); });
}

namespace {

void fill_glorot(std::vector<double>& m, std::size_t fan_in, std::size_t fan_out,
                 SplitMix64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : m) w = (2.0 * rng.next_unit() - 1.0) * a;
}

void check_dims(const ModelDims& d) {
  if (d.vocab < 2 || d.embed < 1 || d.hidden < 1 || d.classes_cwd != 2 ||
      d.classes_li < 2)
    throw std::invalid_argument("invalid model dimensions");
}

void softmax_row(const double* scores, double* probs, std::size_t n) {
  double mx = scores[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, scores[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::exp(scores[i] - mx);
    sum += probs[i];
  }
  for (std::size_t i = 0; i < n; ++i) probs[i] /= sum;
}

}  // namespace

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  check_dims(dims);
  ModelParams p;
  p.dims = dims;
  const std::size_t V = dims.vocab, d = dims.embed, h = dims.hidden;
  p.embedding.resize(V * d);
  p.w_shared.resize(d * h);
  p.b_shared.assign(h, 0.0);
  for (HeadParams* head : {&p.cwd, &p.li}) {
    const std::size_t C =
        head == &p.cwd ? dims.classes_cwd : dims.classes_li;
    head->w1.resize(h * h);
    head->b1.assign(h, 0.0);
    head->w2.resize(h * C);
    head->b2.assign(C, 0.0);
  }
  SplitMix64 rng(derive_seed(seed, 0x11));
  fill_glorot(p.embedding, V, d, rng);
  fill_glorot(p.w_shared, d, h, rng);
  fill_glorot(p.cwd.w1, h, h, rng);
  fill_glorot(p.cwd.w2, h, dims.classes_cwd, rng);
  fill_glorot(p.li.w1, h, h, rng);
  fill_glorot(p.li.w2, h, dims.classes_li, rng);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for_each_tensor(z, [](std::vector<double>& t) {
    std::fill(t.begin(), t.end(), 0.0);
  });
  return z;
}

ForwardTrace forward(const ModelParams& params,
                     std::span<const TokenSequence> batch) {
  if (batch.empty()) throw std::invalid_argument("forward: empty batch");
  const ModelDims& dims = params.dims;
  const std::size_t B = batch.size(), d = dims.embed, h = dims.hidden;

  ForwardTrace tr;
  tr.batch_size = B;
  tr.dims = dims;
  tr.batch.assign(batch.begin(), batch.end());
  tr.pooled.assign(B * d, 0.0);
  tr.shared.assign(B * h, 0.0);

  for (std::size_t b = 0; b < B; ++b) {
    const TokenSequence& seq = batch[b];
    if (seq.real_length < 1 || seq.real_length > kMaxTokens)
      throw std::invalid_argument("forward: token sequence with bad length");
    double* pooled = &tr.pooled[b * d];
    for (int t = 0; t < seq.real_length; ++t) {
      const std::uint32_t id = seq.ids[t];
      if (id >= dims.vocab)
        throw std::invalid_argument("forward: token id out of vocab range");
      const double* row = &params.embedding[static_cast<std::size_t>(id) * d];
      for (std::size_t j = 0; j < d; ++j) pooled[j] += row[j];
    }
    const double inv_len = 1.0 / static_cast<double>(seq.real_length);
    for (std::size_t j = 0; j < d; ++j) pooled[j] *= inv_len;

    double* shared = &tr.shared[b * h];
    for (std::size_t k = 0; k < h; ++k) {
      double z = params.b_shared[k];
      for (std::size_t j = 0; j < d; ++j)
        z += pooled[j] * params.w_shared[j * h + k];
      shared[k] = std::tanh(z);
    }
  }

  auto run_head = [&](const HeadParams& head, std::size_t C, HeadTrace& out) {
    out.mid.assign(B * h, 0.0);
    out.scores.assign(B * C, 0.0);
    out.probs.assign(B * C, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const double* shared = &tr.shared[b * h];
      double* mid = &out.mid[b * h];
      for (std::size_t k2 = 0; k2 < h; ++k2) {
        double z = head.b1[k2];
        for (std::size_t k = 0; k < h; ++k)
          z += shared[k] * head.w1[k * h + k2];
        mid[k2] = z > 0.0 ? z : 0.0;
      }
      double* scores = &out.scores[b * C];
      for (std::size_t c = 0; c < C; ++c) {
        double z = head.b2[c];
        for (std::size_t k2 = 0; k2 < h; ++k2)
          z += mid[k2] * head.w2[k2 * C + c];
        scores[c] = z;
      }
      softmax_row(scores, &out.probs[b * C], C);
    }
  };
  run_head(params.cwd, dims.classes_cwd, tr.cwd);
  run_head(params.li, dims.classes_li, tr.li);
  return tr;
}

double task_loss(const std::vector<double>& probs, std::size_t num_classes,
                 const std::vector<int>& gold,
                 const std::vector<double>& class_weights) {
  const std::size_t B = gold.size();
  if (probs.size() != B * num_classes)
    throw std::invalid_argument("task_loss: probs/gold size mismatch");
  double loss = 0.0, weight_sum = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const int y = gold[b];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw std::out_of_range("task_loss: gold index " + std::to_string(y) +
                              " out of range");
    const double w = class_weights.empty() ? 1.0 : class_weights.at(y);
    loss += w * -std::log(probs[b * num_classes + y]);
    weight_sum += w;
  }
  return loss / weight_sum;
}

ModelParams backward(const ForwardTrace& trace, const std::vector<int>& gold_cwd,
                     const std::vector<int>& gold_li,
                     const JointLossConfig& config, const ModelParams& params) {
  if (trace.dims != params.dims)
    throw std::invalid_argument("backward: trace/params dimension mismatch");
  if (gold_cwd.size() != trace.batch_size || gold_li.size() != trace.batch_size)
    throw std::invalid_argument("backward: gold size mismatch");

  const ModelDims& dims = params.dims;
  const std::size_t B = trace.batch_size, d = dims.embed, h = dims.hidden;
  ModelParams grads = zeros_like(params);
  std::vector<double> d_shared(B * h, 0.0);

  auto head_backward = [&](const HeadParams& head, HeadParams& ghead,
                           const HeadTrace& ht, std::size_t C,
                           const std::vector<int>& gold, double alpha_t,
                           const std::vector<double>& class_weights) {
    if (alpha_t == 0.0) return;  // exact zeros at the Eq. 1 boundary
    double weight_sum = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      weight_sum += class_weights.empty() ? 1.0 : class_weights.at(gold[b]);

    std::vector<double> d_mid(h);
    for (std::size_t b = 0; b < B; ++b) {
      const double scale =
          alpha_t * (class_weights.empty() ? 1.0 : class_weights.at(gold[b])) /
          weight_sum;
      const double* probs = &ht.probs[b * C];
      const double* mid = &ht.mid[b * h];
      const double* shared = &trace.shared[b * h];

      // softmax + NLL: d_score = scale * (p - onehot)
      std::vector<double> d_score(C);
      for (std::size_t c = 0; c < C; ++c)
        d_score[c] =
            scale * (probs[c] - (static_cast<int>(c) == gold[b] ? 1.0 : 0.0));

      for (std::size_t c = 0; c < C; ++c) {
        ghead.b2[c] += d_score[c];
        for (std::size_t k2 = 0; k2 < h; ++k2)
          ghead.w2[k2 * C + c] += mid[k2] * d_score[c];
      }
      for (std::size_t k2 = 0; k2 < h; ++k2) {
        double g = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          g += head.w2[k2 * C + c] * d_score[c];
        d_mid[k2] = mid[k2] > 0.0 ? g : 0.0;  // ReLU mask
      }
      for (std::size_t k2 = 0; k2 < h; ++k2) {
        ghead.b1[k2] += d_mid[k2];
        for (std::size_t k = 0; k < h; ++k)
          ghead.w1[k * h + k2] += shared[k] * d_mid[k2];
      }
      double* ds = &d_shared[b * h];
      for (std::size_t k = 0; k < h; ++k) {
        double g = 0.0;
        for (std::size_t k2 = 0; k2 < h; ++k2)
          g += head.w1[k * h + k2] * d_mid[k2];
        ds[k] += g;
      }
    }
  };

  head_backward(params.cwd, grads.cwd, trace.cwd, dims.classes_cwd, gold_cwd,
                config.alpha, config.cwd_class_weights);
  head_backward(params.li, grads.li, trace.li, dims.classes_li, gold_li,
                1.0 - config.alpha, config.li_class_weights);

  for (std::size_t b = 0; b < B; ++b) {
    const double* shared = &trace.shared[b * h];
    const double* pooled = &trace.pooled[b * d];
    const double* ds = &d_shared[b * h];
    std::vector<double> d_pre(h);
    for (std::size_t k = 0; k < h; ++k)
      d_pre[k] = ds[k] * (1.0 - shared[k] * shared[k]);  // tanh'

    for (std::size_t k = 0; k < h; ++k) {
      grads.b_shared[k] += d_pre[k];
      for (std::size_t j = 0; j < d; ++j)
        grads.w_shared[j * h + k] += pooled[j] * d_pre[k];
    }
    std::vector<double> d_pooled(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double g = 0.0;
      for (std::size_t k = 0; k < h; ++k)
        g += params.w_shared[j * h + k] * d_pre[k];
      d_pooled[j] = g;
    }
    const TokenSequence& seq = trace.batch[b];
    const double inv_len = 1.0 / static_cast<double>(seq.real_length);
    for (int t = 0; t < seq.real_length; ++t) {
      double* row =
          &grads.embedding[static_cast<std::size_t>(seq.ids[t]) * d];
      for (std::size_t j = 0; j < d; ++j) row[j] += d_pooled[j] * inv_len;
    }
  }
  return grads;
}

AdamWState make_adamw_state(const ModelParams& params, double lr,
                            double weight_decay) {
  AdamWState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  s.lr = lr;
  s.weight_decay = weight_decay;
  return s;
}

void adamw_step(ModelParams& params, const ModelParams& grads,
                AdamWState& state) {
  if (params.dims != grads.dims)
    throw std::invalid_argument("adamw_step: params/grads dimension mismatch");
  bool finite = true;
  for_each_tensor(grads, [&](const std::vector<double>& t) {
    for (double g : t)
      if (!std::isfinite(g)) finite = false;
  });
  if (!finite)
    throw std::runtime_error("adamw_step: non-finite gradient, step aborted");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  std::vector<std::vector<double>*> ws, gs, ms, vs;
  for_each_tensor(params, [&](std::vector<double>& t) { ws.push_back(&t); });
  for_each_tensor(const_cast<ModelParams&>(grads),
                  [&](std::vector<double>& t) { gs.push_back(&t); });
  for_each_tensor(state.m, [&](std::vector<double>& t) { ms.push_back(&t); });
  for_each_tensor(state.v, [&](std::vector<double>& t) { vs.push_back(&t); });

  for (std::size_t ti = 0; ti < ws.size(); ++ti) {
    std::vector<double>& w = *ws[ti];
    const std::vector<double>& g = *gs[ti];
    std::vector<double>& m = *ms[ti];
    std::vector<double>& v = *vs[ti];
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] *= 1.0 - state.lr * state.weight_decay;  // decoupled decay
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace cwrank
