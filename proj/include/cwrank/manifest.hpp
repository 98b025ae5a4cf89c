#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace cwrank {

// Line-oriented key=value run manifest; sufficient to reproduce a run.
struct RunManifest {
  std::map<std::string, std::string> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, long long value);

  std::string render() const;       // sorted key=value lines
  std::uint64_t checksum() const;   // over the rendered text
  void write(const std::string& path) const;

  static RunManifest read(const std::string& path);
};

}  // namespace cwrank
