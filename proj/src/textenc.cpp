#include "cwrank/textenc.hpp"

#include <stdexcept>

#include "cwrank/rng.hpp"

namespace cwrank {

bool EncoderConfig::valid() const {
  if (hash_vocab_size < 2) return false;
  if ((hash_vocab_size & (hash_vocab_size - 1)) != 0) return false;
  for (int n : char_ngram_orders)
    if (n < 2) return false;
  return true;
}

namespace {

// Decodes one UTF-8 codepoint; malformed bytes pass through as U+FFFD
// with length 1 so normalization never throws.
std::uint32_t decode_utf8(const std::string& s, std::size_t pos,
                          std::size_t* len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t off) -> int {
    if (pos + off >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + off]);
    return (b & 0xc0) == 0x80 ? (b & 0x3f) : -1;
  };
  if (b0 < 0x80) {
    *len = 1;
    return b0;
  }
  if ((b0 & 0xe0) == 0xc0) {
    int c1 = cont(1);
    if (c1 >= 0) {
      *len = 2;
      return ((b0 & 0x1fu) << 6) | static_cast<unsigned>(c1);
    }
  } else if ((b0 & 0xf0) == 0xe0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      *len = 3;
      return ((b0 & 0x0fu) << 12) | (static_cast<unsigned>(c1) << 6) |
             static_cast<unsigned>(c2);
    }
  } else if ((b0 & 0xf8) == 0xf0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      *len = 4;
      return ((b0 & 0x07u) << 18) | (static_cast<unsigned>(c1) << 12) |
             (static_cast<unsigned>(c2) << 6) | static_cast<unsigned>(c3);
    }
  }
  *len = 1;
  return 0xfffd;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else {
    out += static_cast<char>(0xf0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
}

// Simple case fold covering the scripts in the corpus: ASCII, Latin-1,
// Latin Extended-A (incl. Turkish dotted/dotless I) and Cyrillic.
std::uint32_t fold_codepoint(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;  // Latin-1
  if (cp >= 0x100 && cp <= 0x137 && (cp & 1) == 0) return cp == 0x130 ? 0x69 : cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && (cp & 1) == 1) return cp + 1;
  if (cp >= 0x14a && cp <= 0x177 && (cp & 1) == 0) return cp + 1;
  if (cp == 0x178) return 0xff;
  if (cp >= 0x179 && cp <= 0x17e && (cp & 1) == 1) return cp + 1;
  if (cp >= 0x410 && cp <= 0x42f) return cp + 0x20;  // Cyrillic А-Я
  if (cp >= 0x400 && cp <= 0x40f) return cp + 0x50;  // Ѐ-Џ
  return cp;
}

bool is_space_codepoint(std::uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x0b ||
         cp == 0x0c || cp == 0xa0 || cp == 0x2028 || cp == 0x2029 ||
         (cp >= 0x2000 && cp <= 0x200a) || cp == 0x3000;
}

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

bool is_handle_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

std::vector<std::string> split_on_unicode_space(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = 0;
    std::uint32_t cp = decode_utf8(text, pos, &len);
    if (is_space_codepoint(cp)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.append(text, pos, len);
    }
    pos += len;
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string fold_case(const std::string& word) {
  std::string out;
  out.reserve(word.size());
  std::size_t pos = 0;
  while (pos < word.size()) {
    std::size_t len = 0;
    std::uint32_t cp = decode_utf8(word, pos, &len);
    append_utf8(out, fold_codepoint(cp));
    pos += len;
  }
  return out;
}

}  // namespace

std::string normalize(const std::string& text, const EncoderConfig& config) {
  std::vector<std::string> words = split_on_unicode_space(text);
  std::string out;
  for (std::string& w : words) {
    if (config.replace_urls &&
        (starts_with(w, "http://") || starts_with(w, "https://") ||
         starts_with(w, "www."))) {
      w = "<url>";
    } else if (config.replace_mentions && w.size() >= 2 && w[0] == '@' &&
               is_handle_char(w[1])) {
      w = "<user>";
    } else if (config.lowercase) {
      w = fold_case(w);
    }
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::uint32_t hash_token(const std::string& token, const EncoderConfig& config) {
  std::uint64_t h = fnv1a64(token.data(), token.size(),
                            0xcbf29ce484222325ULL ^ config.hash_seed);
  // final avalanche so the seed diffuses into low bits
  SplitMix64 mixer(h);
  std::uint32_t id =
      static_cast<std::uint32_t>(mixer.next() % config.hash_vocab_size);
  return id == 0 ? 1u : id;
}

TokenSequence tokenize(const std::string& normalized_text,
                       const EncoderConfig& config) {
  if (!config.valid())
    throw std::invalid_argument("tokenize: invalid encoder config");

  TokenSequence seq;
  auto push = [&](const std::string& token) {
    if (seq.real_length >= kMaxTokens) return;  // truncate at 128
    seq.ids[seq.real_length] = hash_token(token, config);
    seq.mask[seq.real_length] = 1;
    ++seq.real_length;
  };

  const std::vector<std::string> words =
      split_on_unicode_space(normalized_text);
  for (const std::string& word : words) {
    push(word);
    // codepoint offsets for n-gram extraction
    std::vector<std::size_t> offsets;
    std::size_t pos = 0;
    while (pos < word.size()) {
      offsets.push_back(pos);
      std::size_t len = 0;
      decode_utf8(word, pos, &len);
      pos += len;
    }
    offsets.push_back(word.size());
    const std::size_t cp_count = offsets.size() - 1;
    for (int n : config.char_ngram_orders) {
      if (cp_count <= static_cast<std::size_t>(n)) continue;  // word itself covers it
      for (std::size_t i = 0; i + n <= cp_count; ++i)
        push(word.substr(offsets[i], offsets[i + n] - offsets[i]));
    }
  }
  if (seq.real_length == 0) push("<empty>");
  return seq;
}

TokenSequence encode(const std::string& raw_text, const EncoderConfig& config) {
  return tokenize(normalize(raw_text, config), config);
}

}  // namespace cwrank
