#pragma once

// Independent oracles used by tests: brute-force ranking metrics, a
// straight-line reimplementation of the model forward pass, and central
// finite differences. None of these share code with the implementation
// they check.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cwrank/model.hpp"

namespace cwrank::testing {

// ---- brute-force ranking metrics -------------------------------------

struct OracleInstance {
  std::vector<std::string> ids;
  std::vector<double> scores;
  std::vector<int> labels;
};

// Walks the ranked order explicitly: sorts (score desc, id asc), then
// accumulates every metric by counting along the walk.
struct OracleMetrics {
  double map = 0.0;
  double r_rank = 0.0;
  double r_precision = 0.0;
  std::vector<double> p_at_k;  // for cutoffs 1,3,5,10,20,50
  bool defined = false;        // false when no positives
};

inline OracleMetrics oracle_evaluate(const OracleInstance& inst) {
  const std::size_t n = inst.ids.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (inst.scores[a] != inst.scores[b]) return inst.scores[a] > inst.scores[b];
    return inst.ids[a] < inst.ids[b];
  });

  std::vector<int> walk;
  for (std::size_t i : order) walk.push_back(inst.labels[i]);

  OracleMetrics out;
  std::size_t total_pos = 0;
  for (int l : walk) total_pos += l == 1;

  for (int k : {1, 3, 5, 10, 20, 50}) {
    int hits = 0;
    for (int r = 0; r < k && r < static_cast<int>(n); ++r) hits += walk[r] == 1;
    out.p_at_k.push_back(static_cast<double>(hits) / k);
  }
  if (total_pos == 0) return out;
  out.defined = true;

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (walk[r] == 1) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      if (hits == 1) out.r_rank = 1.0 / static_cast<double>(r + 1);
    }
  }
  out.map = ap / static_cast<double>(total_pos);

  std::size_t r_hits = 0;
  for (std::size_t r = 0; r < total_pos && r < n; ++r) r_hits += walk[r] == 1;
  out.r_precision = static_cast<double>(r_hits) / static_cast<double>(total_pos);
  return out;
}

// ---- straight-line forward oracle ------------------------------------

struct OracleForward {
  std::vector<double> probs_cwd;
  std::vector<double> probs_li;
};

// Recomputes the single-sample forward pass with naive loops and an
// unstabilized softmax (safe for small scores).
inline OracleForward oracle_forward_single(const ModelParams& p,
                                           const TokenSequence& seq) {
  const std::size_t d = p.dims.embed, h = p.dims.hidden;
  std::vector<double> pooled(d, 0.0);
  for (int t = 0; t < seq.real_length; ++t)
    for (std::size_t j = 0; j < d; ++j)
      pooled[j] += p.embedding[static_cast<std::size_t>(seq.ids[t]) * d + j];
  for (std::size_t j = 0; j < d; ++j) pooled[j] /= seq.real_length;

  std::vector<double> shared(h);
  for (std::size_t k = 0; k < h; ++k) {
    double z = p.b_shared[k];
    for (std::size_t j = 0; j < d; ++j) z += pooled[j] * p.w_shared[j * h + k];
    shared[k] = std::tanh(z);
  }

  auto head = [&](const HeadParams& hp, std::size_t C) {
    std::vector<double> mid(h);
    for (std::size_t k2 = 0; k2 < h; ++k2) {
      double z = hp.b1[k2];
      for (std::size_t k = 0; k < h; ++k) z += shared[k] * hp.w1[k * h + k2];
      mid[k2] = std::max(0.0, z);
    }
    std::vector<double> probs(C);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      double z = hp.b2[c];
      for (std::size_t k2 = 0; k2 < h; ++k2) z += mid[k2] * hp.w2[k2 * C + c];
      probs[c] = std::exp(z);
      sum += probs[c];
    }
    for (double& v : probs) v /= sum;
    return probs;
  };
  return {head(p.cwd, p.dims.classes_cwd), head(p.li, p.dims.classes_li)};
}

// ---- finite differences ----------------------------------------------

inline std::vector<double*> flatten(ModelParams& p) {
  std::vector<double*> out;
  for_each_tensor(p, [&](std::vector<double>& t) {
    for (double& v : t) out.push_back(&v);
  });
  return out;
}

// Central finite difference of a scalar function of the parameters.
template <typename LossFn>
double finite_difference(ModelParams& p, std::size_t index, LossFn&& loss,
                         double step = 1e-5) {
  std::vector<double*> flat = flatten(p);
  double* w = flat[index];
  const double saved = *w;
  *w = saved + step;
  const double up = loss(p);
  *w = saved - step;
  const double down = loss(p);
  *w = saved;
  return (up - down) / (2.0 * step);
}

inline double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

}  // namespace cwrank::testing
