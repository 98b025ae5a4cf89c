#pragma once

#include <string>
#include <vector>

namespace cwrank {

struct Prediction {
  std::string id;
  std::string topic_id;
  double score = 0.0;                 // check-worthiness, higher = more worthy
  std::vector<double> member_scores;  // per ensemble member, empty for baselines
};

}  // namespace cwrank
