#pragma once

#include "tvpursuit/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tvp {

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);
/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Comma-separated output with a versioned schema line:
///   # schema: tvpursuit/<kind>/v1
///   # generated_at=<timestamp>
///   # <extra comment lines>
///   col1,col2,...
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::string kind, std::vector<std::string> columns,
            const std::vector<std::string>& comments = {});

  void row(const std::vector<std::string>& cells);
  std::size_t columns() const { return columns_.size(); }

 private:
  std::ostream& os_;
  std::vector<std::string> columns_;
};

/// Parsed CSV body: comment lines (without "# "), header, rows.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};
CsvTable parse_csv(std::string_view text);

/// Flat key=value text with '#' comments. Later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  /// Applies "key=value".
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of integers; "a:b" or "a:b:step" expands to a range.
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Keys never read through a getter; used to reject typos.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> read_;
  void mark(const std::string& key) const { read_[key] = true; }
};

/// Binary container: "TVPC" magic, u32 version, u64 header length, JSON header,
/// then the arrays listed in the header as little-endian f64 in column-major
/// order. The header carries {"meta": {...}, "arrays": [{"name", "rows", "cols"}]}.
struct NamedArray {
  std::string name;
  Matrix data;
};

struct Container {
  std::string meta_json = "{}";
  std::vector<NamedArray> arrays;

  const Matrix& get(std::string_view name) const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

void write_container(std::ostream& os, const Container& c);
Container read_container(std::istream& is);
void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

}  // namespace tvp
