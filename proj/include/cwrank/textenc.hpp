#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cwrank {

constexpr int kMaxTokens = 128;

struct EncoderConfig {
  std::uint32_t hash_vocab_size = 32768;  // power of two, >= 2
  std::uint64_t hash_seed = 0x4b5c6d7e8f901a2bULL;
  std::vector<int> char_ngram_orders = {3};  // each >= 2
  bool lowercase = true;
  bool replace_urls = true;
  bool replace_mentions = true;

  bool valid() const;
};

struct TokenSequence {
  std::array<std::uint32_t, kMaxTokens> ids{};  // 0 = padding
  std::array<std::uint8_t, kMaxTokens> mask{};  // 1 = real token
  int real_length = 0;
};

// NFC-composed input assumed; applies case folding (ASCII, Latin-1,
// Latin Extended-A, Cyrillic), URL and @mention replacement, and
// whitespace collapse.
std::string normalize(const std::string& text, const EncoderConfig& config = {});

// Whitespace words plus per-word character n-grams, hashed into [1, V).
// Truncates at 128 tokens, pads with id 0. Empty input yields the
// reserved "<empty>" token.
TokenSequence tokenize(const std::string& normalized_text,
                       const EncoderConfig& config);

// Seeded 64-bit token hash reduced modulo the vocab size; 0 remaps to 1
// so padding id 0 is never produced for a real token.
std::uint32_t hash_token(const std::string& token, const EncoderConfig& config);

TokenSequence encode(const std::string& raw_text, const EncoderConfig& config);

}  // namespace cwrank
