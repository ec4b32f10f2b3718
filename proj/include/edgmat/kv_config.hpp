#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edgmat {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text, one entry per line, `#` starts a comment.
/// Keys keep file order; a repeated key overwrites the earlier value in place.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text, std::string_view origin = "<text>");
  static KvConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;

  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }

  std::string serialize() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string origin_ = "<config>";
};

std::string_view trim(std::string_view s) noexcept;
/// Splits on `sep` and trims each piece; an all-blank input yields no pieces.
std::vector<std::string> split_list(std::string_view s, char sep = ',');

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace edgmat
