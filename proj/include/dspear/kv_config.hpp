#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dspear {

// Versioned `key = value` text. '#' starts a comment; a `version = N` line is
// required and must match the supported version.
class KvConfig {
 public:
  static constexpr int kVersion = 1;

  static KvConfig parse(std::string_view text, const std::string& source = "<string>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::vector<std::string> keys() const;
  const std::string& source() const { return source_; }

  // Throws ConfigError naming the first key that matches none of `allowed`.
  // A pattern ending in '*' matches any key with that prefix.
  void require_known(const std::vector<std::string>& allowed) const;

  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

}  // namespace dspear
