#pragma once

// File plumbing shared by the runner: atomic writes, JSON sidecars, stable
// hashing and timestamps.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

namespace topsync {

inline constexpr const char* kSoftwareVersion = "topsync 0.3.0";

/// Writes through a temporary file and renames it into place, so a failing
/// job never leaves a truncated artifact behind.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

/// UTC, ISO 8601, second resolution.
std::string utc_timestamp();

/// Full-precision double for CSV payloads (shortest round-trip form).
std::string format_double(double x);

}  // namespace topsync
