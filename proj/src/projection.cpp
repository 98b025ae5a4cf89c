#include "cwrank/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cwrank/rng.hpp"

namespace cwrank {

EmbeddingMatrix extract_embeddings(const EnsembleModel& model,
                                   const Dataset& data, int member) {
  if (model.members.empty())
    throw std::invalid_argument("extract_embeddings: model has no members");
  if (member >= static_cast<int>(model.members.size()))
    throw std::out_of_range("extract_embeddings: member index " +
                            std::to_string(member) + " out of range");
  if (data.empty())
    throw std::invalid_argument("extract_embeddings: empty dataset");

  std::vector<TokenSequence> sequences;
  sequences.reserve(data.size());
  for (const Sample& s : data.samples)
    sequences.push_back(encode(s.text, model.encoder));

  const std::size_t h = model.members.front().dims.hidden;
  EmbeddingMatrix out;
  out.rows = data.size();
  out.cols = h;
  out.data.assign(out.rows * h, 0.0);
  for (const Sample& s : data.samples)
    out.meta.push_back({s.id, s.language, s.label});

  const auto accumulate = [&](const ModelParams& m, double scale) {
    const ForwardTrace trace = forward(m, sequences);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] += scale * trace.shared[i];
  };
  if (member >= 0) {
    accumulate(model.members[member], 1.0);
  } else {
    const double scale = 1.0 / static_cast<double>(model.members.size());
    for (const ModelParams& m : model.members) accumulate(m, scale);
  }
  return out;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues; eigenvectors land in the columns of vecs.
std::vector<double> jacobi_eigen(std::vector<double> a, std::size_t n,
                                 std::vector<double>& vecs) {
  vecs.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a[p * n + q] * a[p * n + q];
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() >= 1e-10; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vecs[k * n + p], vkq = vecs[k * n + q];
          vecs[k * n + p] = c * vkp - s * vkq;
          vecs[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> eigenvalues(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i * n + i];
  return eigenvalues;
}

std::vector<double> center_rows(const EmbeddingMatrix& e) {
  std::vector<double> x = e.data;
  for (std::size_t c = 0; c < e.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < e.rows; ++r) mean += e.at(r, c);
    mean /= static_cast<double>(e.rows);
    for (std::size_t r = 0; r < e.rows; ++r) x[r * e.cols + c] -= mean;
  }
  return x;
}

}  // namespace

ProjectionResult pca_2d(const EmbeddingMatrix& embeddings) {
  const std::size_t n = embeddings.rows, h = embeddings.cols;
  if (n < 3) throw std::invalid_argument("pca_2d: need at least 3 rows");
  if (h < 2) throw std::invalid_argument("pca_2d: need at least 2 columns");

  const std::vector<double> x = center_rows(embeddings);
  std::vector<double> cov(h * h, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = i; j < h; ++j)
        cov[i * h + j] += x[r * h + i] * x[r * h + j];
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = i; j < h; ++j) {
      cov[i * h + j] /= static_cast<double>(n - 1);
      cov[j * h + i] = cov[i * h + j];
    }

  double total_variance = 0.0;
  for (std::size_t i = 0; i < h; ++i) total_variance += cov[i * h + i];
  if (total_variance <= 0.0)
    throw std::invalid_argument("pca_2d: rank-0 data (all rows identical)");

  std::vector<double> vecs;
  const std::vector<double> eigenvalues = jacobi_eigen(cov, h, vecs);

  std::vector<std::size_t> order(h);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eigenvalues[a] > eigenvalues[b];
  });

  ProjectionResult result;
  result.rows = n;
  result.method = "pca";
  result.xy.assign(n * 2, 0.0);
  result.pca_axes.assign(2 * h, 0.0);
  for (int axis = 0; axis < 2; ++axis) {
    const std::size_t e = order[axis];
    result.explained_variance_ratio.push_back(
        std::max(0.0, eigenvalues[e]) / total_variance);
    for (std::size_t c = 0; c < h; ++c)
      result.pca_axes[axis * h + c] = vecs[c * h + e];
    for (std::size_t r = 0; r < n; ++r) {
      double proj = 0.0;
      for (std::size_t c = 0; c < h; ++c) proj += x[r * h + c] * vecs[c * h + e];
      result.xy[r * 2 + axis] = proj;
    }
  }
  return result;
}

namespace {

std::vector<double> pairwise_sq_dist(const std::vector<double>& x,
                                     std::size_t n, std::size_t dim) {
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = x[i * dim + c] - x[j * dim + c];
        s += diff * diff;
      }
      d2[i * n + j] = d2[j * n + i] = s;
    }
  return d2;
}

// Conditional distribution p_{j|i} for a given precision beta; returns the
// Shannon entropy in nats.
double fill_conditional(const std::vector<double>& d2, std::size_t n,
                        std::size_t i, double beta, std::vector<double>& p_row) {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    p_row[j] = j == i ? 0.0 : std::exp(-beta * d2[i * n + j]);
    sum += p_row[j];
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    p_row[j] /= sum;
    if (p_row[j] > 1e-300) entropy -= p_row[j] * std::log(p_row[j]);
  }
  return entropy;
}


}  // namespace

ProjectionResult tsne_2d(const EmbeddingMatrix& embeddings, double perplexity,
                         int iterations, std::uint64_t seed) {
  const std::size_t n = embeddings.rows, dim = embeddings.cols;
  if (n < 10) throw std::invalid_argument("tsne_2d: need at least 10 rows");
  if (perplexity < 3.0 || perplexity > static_cast<double>(n - 1) / 3.0)
    throw std::invalid_argument(
        "tsne_2d: perplexity must lie in [3, (n-1)/3], got " +
        std::to_string(perplexity));

  ProjectionResult result;
  result.rows = n;
  result.method = "tsne";

  std::vector<double> x = embeddings.data;
  std::vector<double> d2 = pairwise_sq_dist(x, n, dim);

  // duplicate points break the bandwidth search; break them with jitter
  bool has_duplicates = false;
  for (std::size_t i = 0; i < n && !has_duplicates; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d2[i * n + j] == 0.0) {
        has_duplicates = true;
        break;
      }
  if (has_duplicates) {
    SplitMix64 jitter(derive_seed(seed, 0xd1));
    for (double& v : x) v += 1e-8 * jitter.next_gaussian();
    d2 = pairwise_sq_dist(x, n, dim);
    result.jitter_applied = true;
  }

  // per-point precision by bisection against the target entropy
  const double target_entropy = std::log(perplexity);
  std::vector<double> p_joint(n * n, 0.0);
  {
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      double beta = 1.0, beta_lo = 0.0,
             beta_hi = std::numeric_limits<double>::infinity();
      double entropy = fill_conditional(d2, n, i, beta, row);
      for (int it = 0; it < 200 && std::abs(entropy - target_entropy) > 1e-5;
           ++it) {
        if (entropy > target_entropy) {
          beta_lo = beta;
          beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
        } else {
          beta_hi = beta;
          beta = (beta + beta_lo) / 2.0;
        }
        entropy = fill_conditional(d2, n, i, beta, row);
      }
      for (std::size_t j = 0; j < n; ++j) p_joint[i * n + j] = row[j];
    }
  }
  // symmetrize
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p =
          (p_joint[i * n + j] + p_joint[j * n + i]) / (2.0 * static_cast<double>(n));
      p_joint[i * n + j] = p_joint[j * n + i] = std::max(p, 1e-12);
    }
  for (std::size_t i = 0; i < n; ++i) p_joint[i * n + i] = 0.0;

  constexpr int kExaggerationIters = 250;
  constexpr double kExaggeration = 12.0;
  constexpr double kLearningRate = 200.0;

  SplitMix64 rng(derive_seed(seed, 0x75));
  std::vector<double> y(n * 2);
  for (double& v : y) v = 1e-4 * rng.next_gaussian();
  std::vector<double> velocity(n * 2, 0.0);
  std::vector<double> q(n * n, 0.0);
  std::vector<double> grad(n * 2, 0.0);

  auto compute_q = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i * 2] - y[j * 2];
        const double dy = y[i * 2 + 1] - y[j * 2 + 1];
        const double w = 1.0 / (1.0 + dx * dx + dy * dy);
        q[i * n + j] = q[j * n + i] = w;
        sum += 2.0 * w;
      }
    return sum;
  };

  auto record_kl = [&](int iteration) {
    const double sum = compute_q();
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double p = p_joint[i * n + j];
        const double qq = std::max(q[i * n + j] / sum, 1e-12);
        if (p > 1e-300) kl += p * std::log(p / qq);
      }
    result.kl_trace.emplace_back(iteration, kl);
  };

  record_kl(0);
  for (int iter = 0; iter < iterations; ++iter) {
    const double exaggeration = iter < kExaggerationIters ? kExaggeration : 1.0;
    const double momentum = iter < kExaggerationIters ? 0.5 : 0.8;
    const double q_sum = compute_q();

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = q[i * n + j];  // (1 + d^2)^-1
        const double coeff =
            4.0 * (exaggeration * p_joint[i * n + j] - w / q_sum) * w;
        grad[i * 2] += coeff * (y[i * 2] - y[j * 2]);
        grad[i * 2 + 1] += coeff * (y[i * 2 + 1] - y[j * 2 + 1]);
      }
    }
    for (std::size_t i = 0; i < 2 * n; ++i) {
      velocity[i] = momentum * velocity[i] - kLearningRate * grad[i];
      y[i] += velocity[i];
    }
    // keep the embedding centered
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean_x += y[i * 2];
      mean_y += y[i * 2 + 1];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i * 2] -= mean_x;
      y[i * 2 + 1] -= mean_y;
    }
    if ((iter + 1) % 50 == 0 || iter + 1 == iterations) record_kl(iter + 1);
  }

  result.xy = std::move(y);
  return result;
}

std::map<std::pair<Language, Language>, double> overlap_statistic(
    const ProjectionResult& result, const std::vector<EmbeddingMeta>& meta) {
  if (meta.size() != result.rows)
    throw std::invalid_argument("overlap_statistic: metadata/rows mismatch");

  std::vector<Language> present;
  for (const EmbeddingMeta& m : meta)
    if (std::find(present.begin(), present.end(), m.language) == present.end())
      present.push_back(m.language);
  if (present.size() < 2)
    throw std::invalid_argument("overlap_statistic: need at least 2 languages");
  std::sort(present.begin(), present.end());

  std::map<std::pair<Language, Language>, double> overlap;
  for (std::size_t a = 0; a < present.size(); ++a) {
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      std::vector<std::size_t> points;
      for (std::size_t i = 0; i < meta.size(); ++i)
        if (meta[i].language == present[a] || meta[i].language == present[b])
          points.push_back(i);

      std::size_t cross = 0;
      for (std::size_t i : points) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t nearest = i;
        for (std::size_t j : points) {
          if (j == i) continue;
          const double dx = result.xy[i * 2] - result.xy[j * 2];
          const double dy = result.xy[i * 2 + 1] - result.xy[j * 2 + 1];
          const double d = dx * dx + dy * dy;
          if (d < best) {
            best = d;
            nearest = j;
          }
        }
        cross += meta[nearest].language != meta[i].language;
      }
      overlap[{present[a], present[b]}] =
          static_cast<double>(cross) / static_cast<double>(points.size());
    }
  }
  return overlap;
}

std::string embeddings_to_tsv(const EmbeddingMatrix& embeddings) {
  std::ostringstream out;
  out.precision(17);
  out << "id\tlanguage\tlabel";
  for (std::size_t c = 0; c < embeddings.cols; ++c) out << "\tdim" << c;
  out << '\n';
  for (std::size_t r = 0; r < embeddings.rows; ++r) {
    const EmbeddingMeta& m = embeddings.meta[r];
    out << m.id << '\t' << to_string(m.language) << '\t'
        << (m.label ? std::to_string(*m.label) : "-");
    for (std::size_t c = 0; c < embeddings.cols; ++c)
      out << '\t' << embeddings.at(r, c);
    out << '\n';
  }
  return out.str();
}

std::string projection_to_tsv(const ProjectionResult& result,
                              const std::vector<EmbeddingMeta>& meta) {
  std::ostringstream out;
  out.precision(17);
  out << "id\tlanguage\tlabel\tx\ty\n";
  for (std::size_t r = 0; r < result.rows; ++r) {
    const EmbeddingMeta& m = meta[r];
    out << m.id << '\t' << to_string(m.language) << '\t'
        << (m.label ? std::to_string(*m.label) : "-") << '\t'
        << result.xy[r * 2] << '\t' << result.xy[r * 2 + 1] << '\n';
  }
  return out.str();
}

}  // namespace cwrank
