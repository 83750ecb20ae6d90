// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctlio/errors.hpp"
#include "ctlio/geometry.hpp"

namespace ctlio {

/// Flat `key = value` text file with '#' comments. Order of first appearance
/// is preserved for echo-style output (manifests).
class KeyValueFile {
public:
  KeyValueFile() = default;

  static KeyValueFile load(const std::string& path);
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  void save(const std::string& path) const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double v);
  void set_int(const std::string& key, long v);
  void set_vec3(const std::string& key, const Vec3& v);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;

  const std::vector<std::string>& keys() const { return order_; }

  /// Throws ConfigError naming the first key not in `known`.
  void require_known_keys(const std::vector<std::string>& known) const;

private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Splits one CSV line; no quoting, plain comma separation.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a CSV file with a mandatory header; returns rows of doubles.
/// Throws IoError when the header does not match or a cell fails to parse.
std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::string& expected_header);

bool file_exists(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace ctlio
