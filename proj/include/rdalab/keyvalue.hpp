#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rdalab/errors.hpp"

namespace rdalab {

/// Flat "key = value" text with optional "[section]" headers and '#' comments.
/// Keys before the first header belong to the section "".
class KeyValueDocument {
public:
  using Section = std::map<std::string, std::string>;

  static KeyValueDocument parse(std::string_view text) {
    KeyValueDocument doc;
    std::string current;
    doc.sections_[current];
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
        current = trim(line.substr(1, line.size() - 2));
        if (doc.sections_.count(current) && !doc.sections_[current].empty())
          throw ConfigError("duplicate section [" + current + "]");
        doc.sections_[current];
        doc.order_.push_back(current);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      auto& section = doc.sections_[current];
      if (section.count(key)) throw ConfigError("duplicate key '" + key + "'");
      section[key] = trim(line.substr(eq + 1));
    }
    return doc;
  }

  static KeyValueDocument load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
  }

  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }

  const Section& section(const std::string& name) const {
    const auto it = sections_.find(name);
    if (it == sections_.end()) throw ConfigError("missing section [" + name + "]");
    return it->second;
  }

  static std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
  }

private:
  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
};

inline const std::string& require(const KeyValueDocument::Section& s, const std::string& key) {
  const auto it = s.find(key);
  if (it == s.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(KeyValueDocument::trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

} // namespace rdalab
