#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphsched {

// Line-based "key = value" configuration format shared by the cost-model,
// descriptor, cache-hierarchy and benchmark-matrix files.  '#' starts a
// comment, blank lines are ignored, keys may repeat.
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_text(std::string_view text, const std::string& origin = "<text>");

  bool has(std::string_view key) const;

  // Single-valued accessors use the last occurrence of the key.
  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;
  std::int64_t get_int(std::string_view key) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;

  // All values recorded for a repeated key, in file order.
  std::vector<std::string> get_all(std::string_view key) const;
  // Comma-separated list split from the (single) value of `key`.
  std::vector<std::string> get_list(std::string_view key) const;

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries_;
  std::string origin_;

  const std::string* find_last(std::string_view key) const;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

}  // namespace graphsched
