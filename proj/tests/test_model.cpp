#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cwrank/model.hpp"
#include "cwrank/rng.hpp"
#include "support/oracles.hpp"

using namespace cwrank;
using namespace cwrank::testing;

namespace {

TokenSequence random_sequence(SplitMix64& rng, std::uint32_t vocab,
                              int max_len = 12) {
  TokenSequence seq;
  seq.real_length = 1 + static_cast<int>(rng.next_below(max_len));
  for (int t = 0; t < seq.real_length; ++t) {
    seq.ids[t] = 1 + static_cast<std::uint32_t>(rng.next_below(vocab - 1));
    seq.mask[t] = 1;
  }
  return seq;
}

ModelDims small_dims(std::uint32_t vocab = 97) {
  ModelDims d;
  d.vocab = vocab;
  d.embed = 8;
  d.hidden = 8;
  d.classes_li = 5;
  return d;
}

}  // namespace

TEST_CASE("forward with all-zero embeddings gives uniform probabilities") {
  ModelParams p = init_params(small_dims(), 3);
  std::fill(p.embedding.begin(), p.embedding.end(), 0.0);
  std::fill(p.b_shared.begin(), p.b_shared.end(), 0.0);
  for (HeadParams* head : {&p.cwd, &p.li}) {
    std::fill(head->b1.begin(), head->b1.end(), 0.0);
    std::fill(head->b2.begin(), head->b2.end(), 0.0);
  }
  SplitMix64 rng(1);
  const TokenSequence seq = random_sequence(rng, p.dims.vocab);
  const ForwardTrace tr = forward(p, std::vector<TokenSequence>{seq});
  // zero pooled vector -> zero shared -> zero mid -> zero scores -> uniform
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(tr.cwd.probs[c] == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(tr.li.probs[c] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("forward is per-sample deterministic within a batch") {
  ModelParams p = init_params(small_dims(), 5);
  SplitMix64 rng(2);
  const TokenSequence seq = random_sequence(rng, p.dims.vocab);
  const ForwardTrace tr = forward(p, std::vector<TokenSequence>{seq, seq});
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(tr.cwd.probs[c] == tr.cwd.probs[2 + c]);
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(tr.li.probs[c] == tr.li.probs[5 + c]);
}

TEST_CASE("forward matches the straight-line oracle") {
  ModelParams p = init_params(small_dims(), 7);
  SplitMix64 rng(7);
  const TokenSequence seq = random_sequence(rng, p.dims.vocab);
  const ForwardTrace tr = forward(p, std::vector<TokenSequence>{seq});
  const OracleForward oracle = oracle_forward_single(p, seq);
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(std::abs(tr.cwd.probs[c] - oracle.probs_cwd[c]) < 1e-12);
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(std::abs(tr.li.probs[c] - oracle.probs_li[c]) < 1e-12);
}

TEST_CASE("softmax rows sum to one and survive huge scores") {
  ModelParams p = init_params(small_dims(), 11);
  // blow up the output layer so scores reach +/-1e4
  for (double& w : p.cwd.b2) w = 1e4;
  p.cwd.b2[0] = -1e4;
  SplitMix64 rng(3);
  const ForwardTrace tr =
      forward(p, std::vector<TokenSequence>{random_sequence(rng, p.dims.vocab)});
  double sum = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(std::isfinite(tr.cwd.probs[c]));
    sum += tr.cwd.probs[c];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mean pooling ignores padding") {
  ModelParams p = init_params(small_dims(), 13);
  TokenSequence seq;
  seq.real_length = 4;
  for (int t = 0; t < 4; ++t) {
    seq.ids[t] = 10 + t;
    seq.mask[t] = 1;
  }
  TokenSequence padded = seq;  // same real tokens, pads already zero
  const ForwardTrace a = forward(p, std::vector<TokenSequence>{seq});
  const ForwardTrace b = forward(p, std::vector<TokenSequence>{padded});
  for (std::size_t c = 0; c < 2; ++c) CHECK(a.cwd.probs[c] == b.cwd.probs[c]);
}

TEST_CASE("task_loss closed forms") {
  SUBCASE("perfect prediction is zero loss") {
    CHECK(task_loss({1.0, 0.0}, 2, {0}) == doctest::Approx(0.0));
  }
  SUBCASE("uniform binary prediction is ln 2") {
    CHECK(task_loss({0.5, 0.5}, 2, {1}) == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("hand-computed two-row batch") {
    const double expected = -(std::log(0.9) + std::log(0.8)) / 2.0;
    CHECK(task_loss({0.9, 0.1, 0.2, 0.8}, 2, {0, 1}) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.1643).epsilon(1e-3));
  }
  SUBCASE("out-of-range gold index rejected") {
    CHECK_THROWS_AS(task_loss({0.5, 0.5}, 2, {2}), std::out_of_range);
  }
  SUBCASE("class weights reweight the mean") {
    // weight 3 on class 0: (3*l0 + 1*l1) / 4
    const double l0 = -std::log(0.9), l1 = -std::log(0.8);
    CHECK(task_loss({0.9, 0.1, 0.2, 0.8}, 2, {0, 1}, {3.0, 1.0}) ==
          doctest::Approx((3.0 * l0 + l1) / 4.0));
  }
}

TEST_CASE("joint_loss follows the alpha-weighted sum") {
  JointLossConfig cfg;
  cfg.alpha = 0.6;
  CHECK(joint_loss(1.0, 2.0, cfg) == doctest::Approx(1.4));
  cfg.alpha = 1.0;
  CHECK(joint_loss(3.5, 99.0, cfg) == 3.5);
  cfg.alpha = 0.0;
  CHECK(joint_loss(99.0, 3.5, cfg) == 3.5);
}

TEST_CASE("backward boundary alphas zero out the unused head") {
  ModelParams p = init_params(small_dims(), 17);
  SplitMix64 rng(17);
  std::vector<TokenSequence> batch = {random_sequence(rng, p.dims.vocab),
                                      random_sequence(rng, p.dims.vocab)};
  const ForwardTrace tr = forward(p, batch);

  JointLossConfig cfg;
  cfg.alpha = 1.0;
  ModelParams g = backward(tr, {0, 1}, {2, 4}, cfg, p);
  for (const std::vector<double>* t : {&g.li.w1, &g.li.b1, &g.li.w2, &g.li.b2})
    for (double v : *t) CHECK(v == 0.0);

  cfg.alpha = 0.0;
  g = backward(tr, {0, 1}, {2, 4}, cfg, p);
  for (const std::vector<double>* t : {&g.cwd.w1, &g.cwd.b1, &g.cwd.w2, &g.cwd.b2})
    for (double v : *t) CHECK(v == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    for (double alpha : {0.0, 0.37, 0.6, 1.0}) {
      ModelParams p = init_params(small_dims(), seed);
      SplitMix64 rng(seed * 31 + 7);
      std::vector<TokenSequence> batch;
      std::vector<int> gold_cwd, gold_li;
      for (int b = 0; b < 3; ++b) {
        batch.push_back(random_sequence(rng, p.dims.vocab));
        gold_cwd.push_back(static_cast<int>(rng.next_below(2)));
        gold_li.push_back(static_cast<int>(rng.next_below(5)));
      }
      JointLossConfig cfg;
      cfg.alpha = alpha;

      const ForwardTrace tr = forward(p, batch);
      ModelParams grads = backward(tr, gold_cwd, gold_li, cfg, p);

      auto loss_of = [&](const ModelParams& q) {
        const ForwardTrace t = forward(q, batch);
        return joint_loss(task_loss(t.cwd.probs, 2, gold_cwd),
                          task_loss(t.li.probs, 5, gold_li), cfg);
      };

      const std::vector<double*> flat_grads = flatten(grads);
      const std::size_t total = flat_grads.size();
      SplitMix64 pick(seed);
      double max_rel = 0.0;
      for (int trial = 0; trial < 60; ++trial) {
        const std::size_t i = pick.next_below(total);
        const double numeric = finite_difference(p, i, loss_of);
        const double analytic = *flat_grads[i];
        if (std::abs(numeric) < 1e-10 && std::abs(analytic) < 1e-10) continue;
        max_rel = std::max(max_rel, relative_error(numeric, analytic));
      }
      CHECK(max_rel <= 1e-4);
    }
  }
}

TEST_CASE("adamw_step reference behaviors") {
  ModelDims dims = small_dims(11);
  ModelParams p = init_params(dims, 23);
  const ModelParams before = p;

  SUBCASE("zero gradients, zero decay: fixed point") {
    AdamWState state = make_adamw_state(p, 1e-3, 0.0);
    adamw_step(p, zeros_like(p), state);
    bool identical = true;
    const std::vector<double*> a = flatten(p);
    ModelParams before_copy = before;
    const std::vector<double*> b = flatten(before_copy);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (*a[i] != *b[i]) identical = false;
    CHECK(identical);
  }
  SUBCASE("zero gradients with decay scales weights by (1 - lr*wd)") {
    AdamWState state = make_adamw_state(p, 1e-2, 0.5);
    adamw_step(p, zeros_like(p), state);
    CHECK(p.w_shared[0] ==
          doctest::Approx(before.w_shared[0] * (1.0 - 1e-2 * 0.5)).epsilon(1e-15));
  }
  SUBCASE("single-step hand computation") {
    // w=1, g=1, defaults, no decay: w' ~ 1 - lr = 0.999
    ModelParams w = p;
    std::fill(w.b_shared.begin(), w.b_shared.end(), 1.0);
    ModelParams g = zeros_like(p);
    std::fill(g.b_shared.begin(), g.b_shared.end(), 1.0);
    AdamWState state = make_adamw_state(w, 1e-3, 0.0);
    adamw_step(w, g, state);
    CHECK(w.b_shared[0] == doctest::Approx(0.999).epsilon(1e-6));
    CHECK(state.step == 1);
  }
  SUBCASE("non-finite gradient aborts without touching params") {
    ModelParams g = zeros_like(p);
    g.w_shared[3] = std::numeric_limits<double>::quiet_NaN();
    AdamWState state = make_adamw_state(p, 1e-3, 0.01);
    CHECK_THROWS_AS(adamw_step(p, g, state), std::runtime_error);
    CHECK(p.w_shared[3] == before.w_shared[3]);
    CHECK(state.step == 0);
  }
}
