#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rlmpc {

// Flat `key = value` text format. Blank lines and `#` comments are ignored;
// keys may carry dotted section prefixes (plant.mr, mpc.horizon, ...).
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile load(const std::filesystem::path& path);
  static KeyValueFile parse(std::string_view text, std::string origin = "<memory>");

  bool has(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);

  // Keys starting with `prefix`, with the prefix stripped.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  const std::string& origin() const { return origin_; }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace rlmpc
