#include "cwrank/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace cwrank {

RankedList rank(const std::vector<Prediction>& predictions,
                const std::vector<GoldEntry>& gold) {
  std::unordered_map<std::string, int> labels;
  for (const GoldEntry& g : gold) {
    if (!labels.emplace(g.id, g.label).second)
      throw std::invalid_argument("rank: duplicate gold id '" + g.id + "'");
  }
  RankedList list;
  list.reserve(predictions.size());
  std::unordered_map<std::string, bool> seen;
  for (const Prediction& p : predictions) {
    auto it = labels.find(p.id);
    if (it == labels.end())
      throw std::invalid_argument("rank: prediction id '" + p.id +
                                  "' has no gold label");
    if (!seen.emplace(p.id, true).second)
      throw std::invalid_argument("rank: duplicate prediction id '" + p.id + "'");
    list.push_back({p.id, p.score, it->second});
  }
  std::sort(list.begin(), list.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return list;
}

namespace {

std::size_t count_positives(const RankedList& list) {
  std::size_t r = 0;
  for (const RankedItem& item : list) r += item.label == 1;
  return r;
}

[[noreturn]] void no_positives(const char* metric) {
  throw UndefinedMetricError(std::string(metric) +
                             ": undefined, gold list has no positives");
}

}  // namespace

double average_precision(const RankedList& list) {
  const std::size_t total_pos = count_positives(list);
  if (total_pos == 0) no_positives("average_precision");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].label == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_pos);
}

double reciprocal_rank(const RankedList& list) {
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i].label == 1) return 1.0 / static_cast<double>(i + 1);
  no_positives("reciprocal_rank");
}

double r_precision(const RankedList& list) {
  const std::size_t R = count_positives(list);
  if (R == 0) no_positives("r_precision");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(R, list.size()); ++i)
    hits += list[i].label == 1;
  return static_cast<double>(hits) / static_cast<double>(R);
}

double precision_at_k(const RankedList& list, int k) {
  if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
  std::size_t hits = 0;
  const std::size_t limit = std::min<std::size_t>(k, list.size());
  for (std::size_t i = 0; i < limit; ++i) hits += list[i].label == 1;
  // ranks past the end of a short list count as non-relevant
  return static_cast<double>(hits) / static_cast<double>(k);
}

MetricsReport evaluate(const std::vector<Prediction>& predictions,
                       const std::vector<GoldEntry>& gold) {
  const RankedList list = rank(predictions, gold);
  MetricsReport report;
  for (int k : precision_cutoffs())
    report.p_at_k.emplace_back(k, precision_at_k(list, k));
  if (count_positives(list) > 0) {
    report.map = average_precision(list);
    report.reciprocal_rank = reciprocal_rank(list);
    report.r_precision = r_precision(list);
  }
  return report;
}

std::string report_header_tsv() {
  std::ostringstream out;
  out << "MAP\tR-Rank\tR-Pr";
  for (int k : precision_cutoffs()) out << "\tP@" << k;
  return out.str();
}

std::string report_row_tsv(const MetricsReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  auto field = [&](const std::optional<double>& v) {
    if (v)
      out << *v;
    else
      out << "undefined";
  };
  field(report.map);
  out << '\t';
  field(report.reciprocal_rank);
  out << '\t';
  field(report.r_precision);
  for (const auto& [k, v] : report.p_at_k) out << '\t' << v;
  return out.str();
}

}  // namespace cwrank
