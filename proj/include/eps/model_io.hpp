#pragma once

#include "eps/detector.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace eps {

inline constexpr int kModelFormatMajor = 1;
inline constexpr int kModelFormatMinor = 0;

struct LoadOptions {
    // Refuse files whose padding mode differs.
    std::optional<Padding> expected_padding;
};

// Text format:
//   EPSMODEL <major>.<minor>
//   header <one-line JSON, fixed key order>
//   param|buffer <name> <dims...>
//   <values, space separated, shortest round-trip decimal>
//   ...
//   end
//   checksum <FNV-1a 64 of every preceding byte, 16 hex digits>
std::string serialize_model(const EpsModel& model);

// Errors: CorruptFile (syntax, checksum, counts), VersionMismatch (other major),
// ShapeMismatch (architecture or tensor shapes).
EpsModel parse_model(std::string_view text, const LoadOptions& options = {});

void save_model(const EpsModel& model, const std::filesystem::path& path);
EpsModel load_model(const std::filesystem::path& path, const LoadOptions& options = {});

std::string_view to_string(Padding p);
Padding parse_padding(std::string_view s);

}  // namespace eps
