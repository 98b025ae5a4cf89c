#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwrank {

enum class Language { en, tr, bg, ar, es };
enum class Split { train, dev, test };

const char* to_string(Language lang);
const char* to_string(Split split);
Language language_from_string(const std::string& s);
Split split_from_string(const std::string& s);
constexpr int kNumLanguages = 5;

struct Sample {
  std::string id;
  std::string topic_id;  // may be empty
  std::string text;
  Language language = Language::en;
  std::optional<int> label;  // 1 = check-worthy, 0 = not; absent for unlabeled input
};

struct Dataset {
  std::vector<Sample> samples;
  Split split = Split::train;
  std::vector<std::string> provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// TSV column names; defaults follow the CLEF CheckThat! Task 1 layout.
// The URL column is accepted but ignored.
struct ColumnSchema {
  std::string topic = "topic_id";
  std::string id = "tweet_id";
  std::string url = "tweet_url";
  std::string text = "tweet_text";
  std::string label = "check_worthiness";
};

struct StatsCell {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double total_tokens = 0;  // whitespace tokens

  std::size_t total() const { return positives + negatives; }
  double avg_tokens() const {
    return total() == 0 ? 0.0 : total_tokens / static_cast<double>(total());
  }
};

struct DatasetStats {
  // keyed by (language, split); only cells with samples are present
  std::map<std::pair<Language, Split>, StatsCell> cells;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses a TSV file with a header row into a Dataset. One file carries one
// language. When require_label is true a missing label column is an error;
// otherwise labels are parsed only if the column exists.
Dataset load_dataset(const std::string& path, Language language, Split split,
                     const ColumnSchema& schema = {}, bool require_label = true);

// Concatenates datasets sharing a split tag. Colliding ids are namespaced
// as "<language>:<id>".
Dataset merge(const std::vector<Dataset>& datasets);

// Deterministic shuffle-and-slice partition into k chunks whose sizes
// differ by at most one (larger chunks first).
std::vector<Dataset> split_chunks(const Dataset& dataset, std::size_t k,
                                  std::uint64_t seed);

DatasetStats compute_stats(const std::vector<Dataset>& datasets);

// Renders stats as a TSV table, languages as columns.
std::string stats_to_tsv(const DatasetStats& stats);

}  // namespace cwrank
