#include "cwrank/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cwrank/rng.hpp"

namespace cwrank {

const char* to_string(Language lang) {
  switch (lang) {
    case Language::en: return "en";
    case Language::tr: return "tr";
    case Language::bg: return "bg";
    case Language::ar: return "ar";
    case Language::es: return "es";
  }
  return "?";
}

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Language language_from_string(const std::string& s) {
  if (s == "en") return Language::en;
  if (s == "tr") return Language::tr;
  if (s == "bg") return Language::bg;
  if (s == "ar") return Language::ar;
  if (s == "es") return Language::es;
  throw CorpusError("unknown language tag: '" + s + "' (expected en|tr|bg|ar|es)");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw CorpusError("unknown split tag: '" + s + "' (expected train|dev|test)");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::size_t whitespace_token_count(const std::string& text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

}  // namespace

Dataset load_dataset(const std::string& path, Language language, Split split,
                     const ColumnSchema& schema, bool require_label) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open dataset file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw CorpusError("empty file (no header): " + path);
  if (!header.empty() && header.back() == '\r') header.pop_back();

  const std::vector<std::string> columns = split_tabs(header);
  auto find_column = [&](const std::string& name) -> int {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
  };

  const int id_col = find_column(schema.id);
  const int text_col = find_column(schema.text);
  const int topic_col = find_column(schema.topic);
  const int label_col = find_column(schema.label);
  if (id_col < 0)
    throw CorpusError(path + ": missing id column '" + schema.id + "'");
  if (text_col < 0)
    throw CorpusError(path + ": missing text column '" + schema.text + "'");
  if (require_label && label_col < 0)
    throw CorpusError(path + ": missing label column '" + schema.label + "'");

  Dataset ds;
  ds.split = split;
  ds.provenance.push_back(path);

  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::vector<std::string> fields = split_tabs(line);
    const int needed = std::max({id_col, text_col, topic_col, label_col});
    if (static_cast<int>(fields.size()) <= needed)
      throw CorpusError(path + ":" + std::to_string(line_no) +
                        ": expected at least " + std::to_string(needed + 1) +
                        " fields, got " + std::to_string(fields.size()));

    Sample s;
    s.id = fields[id_col];
    s.text = fields[text_col];
    if (topic_col >= 0) s.topic_id = fields[topic_col];
    s.language = language;
    if (s.id.empty())
      throw CorpusError(path + ":" + std::to_string(line_no) + ": empty sample id");
    if (!seen_ids.insert(s.id).second)
      throw CorpusError(path + ":" + std::to_string(line_no) +
                        ": duplicate sample id '" + s.id + "'");
    if (label_col >= 0) {
      const std::string& raw = fields[label_col];
      if (raw != "0" && raw != "1")
        throw CorpusError(path + ":" + std::to_string(line_no) +
                          ": non-binary label value '" + raw + "'");
      s.label = raw == "1" ? 1 : 0;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset merge(const std::vector<Dataset>& datasets) {
  Dataset out;
  if (datasets.empty()) return out;
  out.split = datasets.front().split;

  for (const Dataset& ds : datasets) {
    if (ds.split != out.split)
      throw CorpusError(std::string("merge: split-tag mismatch (") +
                        to_string(ds.split) + " vs " + to_string(out.split) + ")");
    out.provenance.insert(out.provenance.end(), ds.provenance.begin(),
                          ds.provenance.end());
  }

  // Count id occurrences across the union; colliding ids get a language prefix.
  std::unordered_map<std::string, int> id_count;
  for (const Dataset& ds : datasets)
    for (const Sample& s : ds.samples) ++id_count[s.id];

  std::unordered_set<std::string> final_ids;
  for (const Dataset& ds : datasets) {
    for (Sample s : ds.samples) {
      if (id_count[s.id] > 1)
        s.id = std::string(to_string(s.language)) + ":" + s.id;
      if (!final_ids.insert(s.id).second)
        throw CorpusError("merge: id '" + s.id + "' still duplicated after "
                          "language namespacing");
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Dataset> split_chunks(const Dataset& dataset, std::size_t k,
                                  std::uint64_t seed) {
  if (k < 1) throw CorpusError("split_chunks: k must be >= 1");
  const std::size_t n = dataset.size();
  if (k > n)
    throw CorpusError("split_chunks: k=" + std::to_string(k) +
                      " exceeds dataset size " + std::to_string(n));

  std::vector<std::size_t> order = shuffled_indices(n, seed);
  std::vector<Dataset> chunks(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;  // first `extra` chunks get one more
  std::size_t cursor = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    std::vector<std::size_t> slice(order.begin() + cursor,
                                   order.begin() + cursor + len);
    cursor += len;
    std::sort(slice.begin(), slice.end());  // keep file order inside a chunk
    chunks[c].split = dataset.split;
    chunks[c].provenance = dataset.provenance;
    for (std::size_t i : slice) chunks[c].samples.push_back(dataset.samples[i]);
  }
  return chunks;
}

DatasetStats compute_stats(const std::vector<Dataset>& datasets) {
  DatasetStats stats;
  for (const Dataset& ds : datasets) {
    for (const Sample& s : ds.samples) {
      if (!s.label)
        throw CorpusError("compute_stats: unlabeled sample '" + s.id + "'");
      StatsCell& cell = stats.cells[{s.language, ds.split}];
      if (*s.label == 1)
        ++cell.positives;
      else
        ++cell.negatives;
      cell.total_tokens += static_cast<double>(whitespace_token_count(s.text));
    }
  }
  return stats;
}

std::string stats_to_tsv(const DatasetStats& stats) {
  static const Language langs[] = {Language::en, Language::tr, Language::bg,
                                   Language::ar, Language::es};
  static const Split splits[] = {Split::train, Split::dev, Split::test};

  std::ostringstream out;
  out << "Properties";
  for (Language l : langs) out << '\t' << to_string(l);
  out << '\n';

  auto cell = [&](Language l, Split s) -> const StatsCell* {
    auto it = stats.cells.find({l, s});
    return it == stats.cells.end() ? nullptr : &it->second;
  };
  for (Split s : splits) {
    out << "Pos-Class (" << to_string(s) << ")";
    for (Language l : langs) {
      const StatsCell* c = cell(l, s);
      out << '\t' << (c ? std::to_string(c->positives) : "-");
    }
    out << '\n';
    out << "Neg-Class (" << to_string(s) << ")";
    for (Language l : langs) {
      const StatsCell* c = cell(l, s);
      out << '\t' << (c ? std::to_string(c->negatives) : "-");
    }
    out << '\n';
  }
  out.setf(std::ios::fixed);
  out.precision(2);
  for (Split s : splits) {
    out << "Avg. Tokens (" << to_string(s) << ")";
    for (Language l : langs) {
      const StatsCell* c = cell(l, s);
      if (c)
        out << '\t' << c->avg_tokens();
      else
        out << "\t-";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cwrank
