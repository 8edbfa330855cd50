#include "graphsched/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace graphsched {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) next = s.size();
    std::string item = trim(s.substr(pos, next - pos));
    if (!item.empty()) out.push_back(std::move(item));
    pos = next + 1;
  }
  return out;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_text(std::string_view text, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected 'key = value', got '" + stripped + "'");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    kv.entries_.push_back({std::move(key), std::move(value)});
  }
  return kv;
}

const std::string* KeyValueFile::find_last(std::string_view key) const {
  const std::string* found = nullptr;
  for (const Entry& e : entries_) {
    if (e.key == key) found = &e.value;
  }
  return found;
}

bool KeyValueFile::has(std::string_view key) const { return find_last(key) != nullptr; }

std::string KeyValueFile::get_string(std::string_view key) const {
  const std::string* v = find_last(key);
  if (!v) throw std::runtime_error(origin_ + ": missing key '" + std::string(key) + "'");
  return *v;
}

std::string KeyValueFile::get_string(std::string_view key, const std::string& fallback) const {
  const std::string* v = find_last(key);
  return v ? *v : fallback;
}

namespace {

template <typename T>
T parse_number(const std::string& origin, std::string_view key, const std::string& raw) {
  T value{};
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error(origin + ": key '" + std::string(key) + "' has non-numeric value '" +
                             raw + "'");
  }
  return value;
}

}  // namespace

std::int64_t KeyValueFile::get_int(std::string_view key) const {
  return parse_number<std::int64_t>(origin_, key, get_string(key));
}

std::int64_t KeyValueFile::get_int(std::string_view key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueFile::get_uint(std::string_view key) const {
  return parse_number<std::uint64_t>(origin_, key, get_string(key));
}

std::uint64_t KeyValueFile::get_uint(std::string_view key, std::uint64_t fallback) const {
  return has(key) ? get_uint(key) : fallback;
}

double KeyValueFile::get_double(std::string_view key) const {
  const std::string raw = get_string(key);
  try {
    size_t idx = 0;
    double v = std::stod(raw, &idx);
    if (idx != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": key '" + std::string(key) + "' has non-numeric value '" +
                             raw + "'");
  }
}

double KeyValueFile::get_double(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::vector<std::string> KeyValueFile::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const Entry& e : entries_) {
    if (e.key == key) out.push_back(e.value);
  }
  return out;
}

std::vector<std::string> KeyValueFile::get_list(std::string_view key) const {
  return split_list(get_string(key));
}

}  // namespace graphsched
