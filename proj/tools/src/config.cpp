#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ringmod/error.hpp"
#include "ringmod/expression.hpp"

namespace ringmod::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

/// Shortest text that reads back to the same double.
std::string show_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + show_number(v[i]);
  return out;
}

}  // namespace

double parse_number(const std::string& text, const std::string& where) {
  try {
    const double v = Expression::parse(text, {}).evaluate({});
    if (std::isnan(v)) throw ConfigError(where + ": '" + text + "' is not a number");
    return v;
  } catch (const ParseError& e) {
    throw ConfigError(where + ": cannot parse '" + text + "': " + e.what());
  }
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.origin_ = origin;
  std::istringstream is(text);
  std::string section = "run";
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ConfigError(where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      cfg.raw_[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.raw_[section].count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.raw_[section][key] = value;
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path);
}

const std::string* RunConfig::find(const std::string& section, const std::string& key) const {
  const auto s = raw_.find(section);
  if (s == raw_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool RunConfig::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

void RunConfig::record(const std::string& section, const std::string& key, const std::string& value) {
  effective_[section][key] = value;
  used_.insert({section, key});
}

void RunConfig::set(const std::string& section, const std::string& key, std::string value) {
  raw_[section][key] = std::move(value);
}

std::string RunConfig::text(const std::string& section, const std::string& key, const std::string& fallback) {
  const std::string* v = find(section, key);
  const std::string out = v ? *v : fallback;
  record(section, key, out);
  return out;
}

std::string RunConfig::text(const std::string& section, const std::string& key) {
  const std::string* v = find(section, key);
  if (!v) throw ConfigError("missing required key [" + section + "] " + key);
  record(section, key, *v);
  return *v;
}

double RunConfig::number(const std::string& section, const std::string& key, double fallback) {
  const std::string* v = find(section, key);
  if (!v) {
    record(section, key, show_number(fallback));
    return fallback;
  }
  record(section, key, *v);
  return parse_number(*v, "[" + section + "] " + key);
}

double RunConfig::number(const std::string& section, const std::string& key) {
  return parse_number(text(section, key), "[" + section + "] " + key);
}

int RunConfig::integer(const std::string& section, const std::string& key, int fallback) {
  const double v = number(section, key, fallback);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError("[" + section + "] " + key + " must be an integer");
  }
  return static_cast<int>(v);
}

bool RunConfig::boolean(const std::string& section, const std::string& key, bool fallback) {
  const std::string v = text(section, key, fallback ? "true" : "false");
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> RunConfig::numbers(const std::string& section, const std::string& key,
                                       const std::vector<double>& fallback) {
  if (!find(section, key)) {
    record(section, key, join_numbers(fallback));
    return fallback;
  }
  return numbers(section, key);
}

std::vector<double> RunConfig::numbers(const std::string& section, const std::string& key) {
  std::vector<double> out;
  for (const std::string& w : split_words(text(section, key))) {
    out.push_back(parse_number(w, "[" + section + "] " + key));
  }
  return out;
}

std::vector<std::string> RunConfig::words(const std::string& section, const std::string& key,
                                          const std::vector<std::string>& fallback) {
  std::string joined;
  for (std::size_t i = 0; i < fallback.size(); ++i) joined += (i ? " " : "") + fallback[i];
  return split_words(text(section, key, joined));
}

std::vector<std::string> RunConfig::unused() const {
  std::vector<std::string> out;
  for (const auto& [section, keys] : raw_) {
    for (const auto& [key, value] : keys) {
      if (!used_.count({section, key})) out.push_back(section + "." + key);
    }
  }
  return out;
}

}  // namespace ringmod::cli
