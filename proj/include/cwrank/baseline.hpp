#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cwrank/corpus.hpp"
#include "cwrank/prediction.hpp"
#include "cwrank/textenc.hpp"

namespace cwrank {

struct UnigramVectorizer {
  std::map<std::string, std::size_t> vocabulary;  // indices lexicographic-dense
  int min_document_frequency = 2;
  EncoderConfig norm;  // only the normalize flags are used
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 1e-4;
};

struct SvmTrainResult {
  LinearModel model;
  std::vector<double> objective_trace;  // mean hinge + lambda/2 ||w||^2, per epoch
};

UnigramVectorizer fit_vectorizer(const Dataset& train, int min_document_frequency = 2);

// Sparse count features of known unigrams; unseen words ignored.
std::vector<std::pair<std::size_t, double>> vectorize(
    const UnigramVectorizer& vectorizer, const std::string& text);

// Primal hinge loss minimized by deterministic per-sample subgradient
// descent with step 1/(lambda*t), labels mapped to +/-1. Returns the
// epoch snapshot with the lowest objective.
SvmTrainResult train_svm(const Dataset& train, const UnigramVectorizer& vectorizer,
                         double lambda, int epochs, std::uint64_t seed);

double svm_objective(const LinearModel& model, const UnigramVectorizer& vectorizer,
                     const Dataset& data);

// Raw decision values w.x + b; ranking metrics only need the order.
std::vector<Prediction> svm_score(const LinearModel& model,
                                  const UnigramVectorizer& vectorizer,
                                  const Dataset& data);

}  // namespace cwrank
