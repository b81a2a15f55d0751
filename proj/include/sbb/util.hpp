#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Small shared helpers: error types, string munging, hashing, file I/O.
namespace sbb {

// Base error for anything the toolkit raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string & msg) : std::runtime_error(msg) {}
};

// A broken invariant in user-supplied data (catalogs, configs, stores).
struct ValidationError : Error {
    explicit ValidationError(const std::string & msg) : Error(msg) {}
};

// I/O failures (missing files, malformed stores, refused loads).
struct IoError : Error {
    explicit IoError(const std::string & msg) : Error(msg) {}
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool        starts_with_ci(std::string_view text, std::string_view prefix);
std::string replace_all(std::string_view text, std::string_view from, std::string_view to);
// Count non-overlapping occurrences of `needle` in `haystack`.
size_t      count_occurrences(std::string_view haystack, std::string_view needle);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string> & parts, std::string_view sep);

// "a Healthcare Scammer!" -> "a-healthcare-scammer"
std::string slugify(std::string_view text);

// FNV-1a 64-bit over bytes; used for content hashes and seed derivation.
std::uint64_t fnv1a64(std::string_view bytes);
std::string   hex_u64(std::uint64_t v);

std::string read_text_file(const std::string & path);
// Write via temp file + rename so readers never observe a torn file.
void        write_text_file_atomic(const std::string & path, std::string_view content);
void        ensure_dir(const std::string & path);
bool        file_exists(const std::string & path);

std::string iso8601_utc_now();

// Data directory resolution: $SBB_DATA_DIR if set, else the shipped default.
std::string default_data_dir();

}  // namespace sbb
