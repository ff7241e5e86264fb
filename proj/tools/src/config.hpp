#pragma once

// Line-oriented run configuration.
//
//   # comment            ; comment
//   [section]
//   key = value          values run to the end of the line
//
// Keys before the first section header belong to the section "run". Numeric
// values are constant expressions ("e^2", "2*pi", "1e-3"). Lists are
// whitespace separated. Every lookup records the value it returned, defaults
// included, so a report can echo the effective configuration.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ringmod::cli {

class RunConfig {
 public:
  using Section = std::map<std::string, std::string>;

  static RunConfig parse(const std::string& text, const std::string& origin = "<string>");
  static RunConfig load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return raw_.count(section) != 0; }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback);
  /// Throws ConfigError when the key is absent.
  std::string text(const std::string& section, const std::string& key);
  double number(const std::string& section, const std::string& key, double fallback);
  double number(const std::string& section, const std::string& key);
  int integer(const std::string& section, const std::string& key, int fallback);
  bool boolean(const std::string& section, const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& section, const std::string& key,
                              const std::vector<double>& fallback);
  std::vector<double> numbers(const std::string& section, const std::string& key);
  std::vector<std::string> words(const std::string& section, const std::string& key,
                                 const std::vector<std::string>& fallback);

  /// Overrides (or adds) a value, as a command line flag would.
  void set(const std::string& section, const std::string& key, std::string value);

  const std::map<std::string, Section>& effective() const noexcept { return effective_; }
  /// Keys present in the file that no lookup asked for, as "section.key".
  std::vector<std::string> unused() const;
  const std::string& origin() const noexcept { return origin_; }

 private:
  const std::string* find(const std::string& section, const std::string& key) const;
  void record(const std::string& section, const std::string& key, const std::string& value);

  std::string origin_;
  std::map<std::string, Section> raw_;
  std::map<std::string, Section> effective_;
  std::set<std::pair<std::string, std::string>> used_;
};

/// Parses a constant numeric expression. Throws ConfigError.
double parse_number(const std::string& text, const std::string& where);

}  // namespace ringmod::cli
