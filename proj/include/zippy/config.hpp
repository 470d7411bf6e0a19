#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zippy/params.hpp"
#include "zippy/terrain.hpp"

namespace zippy {

/// Sectioned key-value configuration text:
///
///   # comment
///   [section]
///   key = value
///   list = 1.0, 2.0, 3.0
///
/// Values keep their raw text; typed accessors parse on demand and throw
/// ConfigError with the offending section/key on failure. All physical
/// quantities are SI (meters, kilograms, radians, volts).
class ConfigDoc {
public:
  static ConfigDoc parse_file(const std::string& path);
  static ConfigDoc parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;
  Vec3 get_vec3(const std::string& section, const std::string& key) const;
  /// Symmetric tensor from 6 entries: xx yy zz xy xz yz.
  Mat3 get_sym3(const std::string& section, const std::string& key) const;

  /// Raw file text as read, for provenance echo and hashing.
  const std::string& raw_text() const { return raw_; }
  const std::string& origin() const { return origin_; }

private:
  std::string raw_;
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;

  const std::string* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& why) const;
};

/// Builds WalkerParams from the [walker], [feet], [hip], [cg], [bodies],
/// [motor] and [contact] sections, starting from built-in defaults for any
/// key not present. Validates before returning.
WalkerParams walker_from_config(const ConfigDoc& doc);

/// Builds the terrain from the [terrain] section; flat ground when absent.
Terrain terrain_from_config(const ConfigDoc& doc);

/// FNV-1a 64-bit content hash, hex-encoded; used as the provenance
/// fingerprint of configuration text in result files.
std::string content_hash(const std::string& text);

}  // namespace zippy
