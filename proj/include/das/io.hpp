#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

#include "json.hpp"

namespace das {

/// Version stamped into every structured file the toolkit writes.
inline constexpr int kSchemaVersion = 1;

nlohmann::json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes; throws das::Error if the path is unwritable.
void write_text(const std::filesystem::path& path, std::string_view text);

/// Throws unless `j` carries {"schema": kind, "version": kSchemaVersion}.
void check_schema(const nlohmann::json& j, std::string_view kind);

/// 64-bit FNV-1a; stable across platforms, used for manifest fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form of a double, locale independent.
std::string fmt_double(double v);

/// Seeded generator with a portable output sequence. std distributions are
/// implementation-defined, so uniforms are derived from raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Exponential with the given mean.
  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace das
