#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwrank/prediction.hpp"

namespace cwrank {

class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GoldEntry {
  std::string id;
  int label = 0;  // 1 = check-worthy
};

struct RankedItem {
  std::string id;
  double score = 0.0;
  int label = 0;
};

// Score descending, ties broken by ascending id.
using RankedList = std::vector<RankedItem>;

inline const std::vector<int>& precision_cutoffs() {
  static const std::vector<int> ks = {1, 3, 5, 10, 20, 50};
  return ks;
}

struct MetricsReport {
  // absent when the gold list has no positives
  std::optional<double> map;
  std::optional<double> reciprocal_rank;
  std::optional<double> r_precision;
  std::vector<std::pair<int, double>> p_at_k;  // cutoffs in precision_cutoffs() order
};

RankedList rank(const std::vector<Prediction>& predictions,
                const std::vector<GoldEntry>& gold);

double average_precision(const RankedList& list);
double reciprocal_rank(const RankedList& list);
double r_precision(const RankedList& list);
double precision_at_k(const RankedList& list, int k);

MetricsReport evaluate(const std::vector<Prediction>& predictions,
                       const std::vector<GoldEntry>& gold);

std::string report_header_tsv();
std::string report_row_tsv(const MetricsReport& report);

}  // namespace cwrank
