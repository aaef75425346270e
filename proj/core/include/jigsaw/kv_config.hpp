#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace jigsaw {

// Plain-text "key = value" settings; '#' starts a comment. Later assignments
// override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(const std::string& text);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // Sorted "key=value" lines.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace jigsaw
