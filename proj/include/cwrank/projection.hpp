#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwrank/corpus.hpp"
#include "cwrank/train.hpp"

namespace cwrank {

struct EmbeddingMeta {
  std::string id;
  Language language = Language::en;
  std::optional<int> label;
};

struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major
  std::vector<EmbeddingMeta> meta;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct ProjectionResult {
  std::size_t rows = 0;
  std::vector<double> xy;  // n x 2 row-major
  std::string method;
  std::vector<double> explained_variance_ratio;  // PCA only, 2 entries
  std::vector<double> pca_axes;                  // PCA only, 2 x h row-major
  std::vector<std::pair<int, double>> kl_trace;  // T-SNE only: (iteration, KL)
  bool jitter_applied = false;
};

// Shared-layer activations, one row per sample. member = index, or -1 for
// the mean over members.
EmbeddingMatrix extract_embeddings(const EnsembleModel& model,
                                   const Dataset& data, int member = -1);

// Top-2 principal axes of the covariance matrix, eigendecomposed with
// cyclic Jacobi rotations (off-diagonal norm < 1e-10).
ProjectionResult pca_2d(const EmbeddingMatrix& embeddings);

// Exact O(n^2) T-SNE: per-point bandwidth by bisection to the target
// log-perplexity, early exaggeration 12 for 250 iterations, momentum
// 0.5 then 0.8.
ProjectionResult tsne_2d(const EmbeddingMatrix& embeddings,
                         double perplexity = 30.0, int iterations = 1000,
                         std::uint64_t seed = 1);

// For each language pair: fraction of the pair's points whose nearest
// neighbour in the projection belongs to the other language.
std::map<std::pair<Language, Language>, double> overlap_statistic(
    const ProjectionResult& result, const std::vector<EmbeddingMeta>& meta);

std::string embeddings_to_tsv(const EmbeddingMatrix& embeddings);
std::string projection_to_tsv(const ProjectionResult& result,
                              const std::vector<EmbeddingMeta>& meta);

}  // namespace cwrank
