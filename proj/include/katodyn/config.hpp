#pragma once

// Scenario files: a line-oriented key = value format with [section] and
// [section.sub] headers. Full grammar in README.md.
//
//   # comment
//   name = e2_constant
//   operation = norm
//   [model]
//   descriptor = euclidean(2)
//   [params]
//   t = [0.1, 0.5]

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "katodyn/error.hpp"

namespace katodyn {

class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& where, const std::string& msg) : InvalidArgument(where + ": " + msg) {}
};

struct ConfigSection {
  std::string name;  // "" for keys before the first header
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> lines;  // source line of each entry (0 when built in code)

  bool operator==(const ConfigSection& o) const { return name == o.name && entries == o.entries; }
};

class Config {
 public:
  std::vector<ConfigSection> sections;
  std::string source = "<config>";

  bool operator==(const Config& o) const { return sections == o.sections; }

  const ConfigSection* section(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  ConfigSection& section_mut(const std::string& name) {
    for (auto& s : sections)
      if (s.name == name) return s;
    if (name.empty()) return *sections.insert(sections.begin(), ConfigSection{"", {}, {}});
    sections.push_back({name, {}, {}});
    return sections.back();
  }

  const std::string* find(const std::string& sec, const std::string& key) const {
    const ConfigSection* s = section(sec);
    if (!s) return nullptr;
    for (const auto& [k, v] : s->entries)
      if (k == key) return &v;
    return nullptr;
  }
  bool has(const std::string& sec, const std::string& key) const { return find(sec, key) != nullptr; }

  void set(const std::string& sec, const std::string& key, const std::string& value) {
    ConfigSection& s = section_mut(sec);
    for (auto& [k, v] : s.entries)
      if (k == key) {
        v = value;
        return;
      }
    s.entries.emplace_back(key, value);
    s.lines.push_back(0);
  }

  // "file:line" of an entry, or "file [section] key" when built in code.
  std::string where(const std::string& sec, const std::string& key) const {
    if (const ConfigSection* s = section(sec))
      for (std::size_t i = 0; i < s->entries.size(); ++i)
        if (s->entries[i].first == key && i < s->lines.size() && s->lines[i] > 0)
          return source + ":" + std::to_string(s->lines[i]) + " [" + sec + "] " + key;
    return source + " [" + sec + "] " + key;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_name(const std::string& s, bool dotted) {
  if (s.empty()) return false;
  bool prev_dot = true;
  for (char c : s) {
    if (c == '.' && dotted) {
      if (prev_dot) return false;
      prev_dot = true;
      continue;
    }
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    prev_dot = false;
  }
  return !prev_dot;
}

}  // namespace detail

inline Config parse_config(const std::string& text, const std::string& source = "<config>") {
  Config cfg;
  cfg.source = source;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  ConfigSection* cur = nullptr;
  auto at = [&](int l) { return source + ":" + std::to_string(l); };
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s[0] == '[') {
      if (s.back() != ']') throw ConfigError(at(line), "section header must end with ']'");
      const std::string name = detail::trim(s.substr(1, s.size() - 2));
      if (!detail::valid_name(name, true)) throw ConfigError(at(line), "bad section name '" + name + "'");
      if (cfg.section(name)) throw ConfigError(at(line), "duplicate section [" + name + "]");
      cfg.sections.push_back({name, {}, {}});
      cur = &cfg.sections.back();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at(line), "expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (!detail::valid_name(key, false)) throw ConfigError(at(line), "bad key '" + key + "'");
    if (!cur) {
      if (!cfg.section("")) cfg.sections.insert(cfg.sections.begin(), ConfigSection{"", {}, {}});
      cur = &cfg.sections.front();
    }
    for (const auto& [k, v] : cur->entries)
      if (k == key) throw ConfigError(at(line), "duplicate key '" + key + "'");
    cur->entries.emplace_back(key, value);
    cur->lines.push_back(line);
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

inline std::string emit_config(const Config& cfg) {
  std::string out;
  if (const ConfigSection* root = cfg.section(""))
    for (const auto& [k, v] : root->entries) out += k + " = " + v + "\n";
  for (const auto& s : cfg.sections) {
    if (s.name.empty()) continue;
    if (!out.empty()) out += "\n";
    out += "[" + s.name + "]\n";
    for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace katodyn
