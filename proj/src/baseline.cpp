#include "cwrank/baseline.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "cwrank/rng.hpp"

namespace cwrank {

namespace {

std::vector<std::string> normalized_words(const std::string& text,
                                          const EncoderConfig& norm) {
  std::vector<std::string> words;
  std::istringstream in(normalize(text, norm));
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

}  // namespace

UnigramVectorizer fit_vectorizer(const Dataset& train,
                                 int min_document_frequency) {
  if (train.empty())
    throw std::invalid_argument("fit_vectorizer: empty dataset");
  UnigramVectorizer v;
  v.min_document_frequency = min_document_frequency;

  std::map<std::string, int> document_frequency;
  for (const Sample& s : train.samples) {
    std::set<std::string> unique(
        [&] {
          auto ws = normalized_words(s.text, v.norm);
          return std::set<std::string>(ws.begin(), ws.end());
        }());
    for (const std::string& w : unique) ++document_frequency[w];
  }
  std::size_t index = 0;
  for (const auto& [word, df] : document_frequency)  // map is lexicographic
    if (df >= min_document_frequency) v.vocabulary.emplace(word, index++);
  return v;
}

std::vector<std::pair<std::size_t, double>> vectorize(
    const UnigramVectorizer& vectorizer, const std::string& text) {
  std::map<std::size_t, double> counts;
  for (const std::string& w : normalized_words(text, vectorizer.norm)) {
    auto it = vectorizer.vocabulary.find(w);
    if (it != vectorizer.vocabulary.end()) counts[it->second] += 1.0;
  }
  return {counts.begin(), counts.end()};
}

namespace {

double decision(const LinearModel& m,
                const std::vector<std::pair<std::size_t, double>>& x) {
  double z = m.bias;
  for (const auto& [i, v] : x) z += m.weights[i] * v;
  return z;
}

}  // namespace

double svm_objective(const LinearModel& model,
                     const UnigramVectorizer& vectorizer, const Dataset& data) {
  double hinge = 0.0;
  for (const Sample& s : data.samples) {
    const double y = *s.label == 1 ? 1.0 : -1.0;
    const double margin = y * decision(model, vectorize(vectorizer, s.text));
    hinge += std::max(0.0, 1.0 - margin);
  }
  hinge /= static_cast<double>(data.size());
  double norm2 = 0.0;
  for (double w : model.weights) norm2 += w * w;
  return hinge + 0.5 * model.lambda * norm2;
}

SvmTrainResult train_svm(const Dataset& train,
                         const UnigramVectorizer& vectorizer, double lambda,
                         int epochs, std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("train_svm: empty dataset");
  bool has_pos = false, has_neg = false;
  for (const Sample& s : train.samples) {
    if (!s.label)
      throw std::invalid_argument("train_svm: unlabeled sample '" + s.id + "'");
    (*s.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw std::invalid_argument("train_svm: single-class training data");

  std::vector<std::vector<std::pair<std::size_t, double>>> features;
  features.reserve(train.size());
  for (const Sample& s : train.samples)
    features.push_back(vectorize(vectorizer, s.text));

  SvmTrainResult result;
  result.model.weights.assign(vectorizer.vocabulary.size(), 0.0);
  result.model.lambda = lambda;
  LinearModel current = result.model;

  result.objective_trace.push_back(svm_objective(current, vectorizer, train));
  double best_objective = result.objective_trace.front();
  result.model = current;

  const std::size_t n = train.size();
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<std::size_t> order =
        shuffled_indices(n, derive_seed(seed, epoch));
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double y = *train.samples[i].label == 1 ? 1.0 : -1.0;
      const double margin = y * decision(current, features[i]);
      // regularizer subgradient shrinks every weight; bias unregularized
      const double shrink = 1.0 - eta * lambda;
      for (double& w : current.weights) w *= shrink;
      // the objective carries no bias term, so only the weights move
      if (margin < 1.0)
        for (const auto& [idx, v] : features[i])
          current.weights[idx] += eta * y * v;
    }
    const double objective = svm_objective(current, vectorizer, train);
    result.objective_trace.push_back(objective);
    if (objective < best_objective) {
      best_objective = objective;
      result.model = current;
    }
  }
  return result;
}

std::vector<Prediction> svm_score(const LinearModel& model,
                                  const UnigramVectorizer& vectorizer,
                                  const Dataset& data) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (const Sample& s : data.samples) {
    Prediction p;
    p.id = s.id;
    p.topic_id = s.topic_id;
    p.score = decision(model, vectorize(vectorizer, s.text));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace cwrank
