#include "cwrank/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cwrank/rng.hpp"

namespace cwrank {

void RunManifest::set(const std::string& key, const std::string& value) {
  entries[key] = value;
}

void RunManifest::set(const std::string& key, double value) {
  std::ostringstream ss;
  ss.precision(17);
  ss << value;
  entries[key] = ss.str();
}

void RunManifest::set(const std::string& key, std::uint64_t value) {
  entries[key] = std::to_string(value);
}

void RunManifest::set(const std::string& key, long long value) {
  entries[key] = std::to_string(value);
}

std::string RunManifest::render() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  return out.str();
}

std::uint64_t RunManifest::checksum() const {
  const std::string text = render();
  return fnv1a64(text.data(), text.size());
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << render();
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  RunManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    m.entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

}  // namespace cwrank
