// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mtr {

/// Insertion-ordered so that emitted files keep the key order they were built with.
using json = nlohmann::ordered_json;

std::string trim(std::string_view text);

/// Removes a surrounding markdown code fence (```lang ... ```), if any.
std::string strip_code_fences(std::string_view text);

/// Cuts leading and trailing prose around the outermost JSON array or object.
/// The first of '[' / '{' decides which bracket pair is kept.
std::string extract_json_span(std::string_view text);

/// Escapes raw control characters that appear inside string literals.
/// Model output frequently wraps long string arguments across lines.
std::string escape_raw_controls_in_strings(std::string_view text);

/// Strict parse first; on failure retries after fence/prose stripping and
/// control-character repair. Returns nullopt if nothing parses.
std::optional<json> parse_json_lenient(std::string_view text);

/// Key-sorted dump with integral floating values rendered as integers, so that
/// 2, 2.0 and 2e0 compare equal.
std::string canonical_json(const json& value);

/// Single-line dump; invalid UTF-8 is replaced rather than thrown on.
std::string dump_compact(const json& value);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<json>& rows);

} // namespace mtr
