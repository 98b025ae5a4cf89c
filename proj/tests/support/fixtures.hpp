#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cwrank/corpus.hpp"
#include "cwrank/rng.hpp"

namespace cwrank::testing {

inline Sample make_sample(std::string id, std::string text, Language lang,
                          int label) {
  Sample s;
  s.id = std::move(id);
  s.text = std::move(text);
  s.language = lang;
  s.label = label;
  return s;
}

inline Dataset make_dataset(std::vector<Sample> samples, Split split) {
  Dataset d;
  d.samples = std::move(samples);
  d.split = split;
  return d;
}

// One row of the CheckThat! statistics table.
struct CorpusCell {
  Language language;
  Split split;
  std::size_t positives;
  std::size_t negatives;
  double avg_tokens;
};

inline const std::vector<CorpusCell>& checkthat_cells() {
  static const std::vector<CorpusCell> cells = {
      {Language::en, Split::train, 290, 532, 31.69},
      {Language::tr, Split::train, 729, 1170, 19.11},
      {Language::bg, Split::train, 392, 2608, 20.27},
      {Language::ar, Split::train, 921, 2798, 27.85},
      {Language::es, Split::train, 200, 2295, 36.73},
      {Language::en, Split::dev, 60, 80, 34.71},
      {Language::tr, Split::dev, 146, 242, 18.22},
      {Language::bg, Split::dev, 62, 288, 16.66},
      {Language::ar, Split::dev, 107, 279, 36.68},
      {Language::es, Split::dev, 109, 1138, 36.19},
      {Language::en, Split::test, 19, 331, 35.33},
      {Language::tr, Split::test, 183, 830, 23.72},
      {Language::bg, Split::test, 76, 281, 17.02},
      {Language::ar, Split::test, 242, 358, 23.47},
      {Language::es, Split::test, 120, 1128, 36.21},
  };
  return cells;
}

// Writes a CLEF-shaped TSV for one cell: exact class counts, every text
// carrying round(avg_tokens) whitespace tokens.
inline std::string write_corpus_file(const CorpusCell& cell,
                                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string name = std::string("dataset_") + to_string(cell.split) +
                           "_" + to_string(cell.language) + ".tsv";
  const std::filesystem::path path = dir / name;
  std::ofstream out(path, std::ios::trunc);
  out << "topic_id\ttweet_id\ttweet_url\ttweet_text\tcheck_worthiness\n";
  const int tokens = static_cast<int>(cell.avg_tokens + 0.5);
  const std::size_t total = cell.positives + cell.negatives;
  SplitMix64 words(fnv1a64(name.data(), name.size()));
  for (std::size_t i = 0; i < total; ++i) {
    std::string text;
    for (int t = 0; t < tokens; ++t) {
      if (t) text += ' ';
      text += "w" + std::to_string(words.next_below(5000));
    }
    out << "topic-" << to_string(cell.language) << '\t' << (i + 1)
        << "\thttps://example.com/" << (i + 1) << '\t' << text << '\t'
        << (i < cell.positives ? 1 : 0) << '\n';
  }
  return path.string();
}

// Two-language corpus where a single marker word decides check-worthiness.
// Positives contain "factcheckme"; each language has its own filler words.
inline Dataset synthetic_separable(std::size_t n, double positive_rate,
                                   Split split, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    const Language lang = i % 2 == 0 ? Language::en : Language::tr;
    const bool positive =
        rng.next_unit() < positive_rate;
    std::string text;
    const char* fillers_en[] = {"sunny", "weather", "lunch", "music", "park"};
    const char* fillers_tr[] = {"hava", "yemek", "muzik", "sokak", "deniz"};
    for (int t = 0; t < 8; ++t) {
      if (t) text += ' ';
      const std::size_t w = rng.next_below(5);
      text += lang == Language::en ? fillers_en[w] : fillers_tr[w];
    }
    if (positive) text += " factcheckme claim";
    samples.push_back(make_sample(std::string(to_string(split)) + "-" +
                                      std::to_string(i),
                                  text, lang, positive ? 1 : 0));
  }
  return make_dataset(std::move(samples), split);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("cwrank_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() { std::filesystem::remove_all(dir_); }
  const std::filesystem::path& path() const { return dir_; }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

}  // namespace cwrank::testing
