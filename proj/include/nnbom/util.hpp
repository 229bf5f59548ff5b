#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nnbom::util {

// Hex-encoded SHA-256 of the exact byte sequence.
std::string sha256_hex(std::string_view data);

// "2021-06-01T12:00:00Z" <-> unix seconds. UTC only, second resolution.
std::string iso_utc(int64_t unix_seconds);
std::optional<int64_t> parse_iso_utc(std::string_view text);
int year_of(int64_t unix_seconds);

std::string to_lower(std::string s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::string& path, std::string_view data);

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs argv[0] (resolved via PATH) without a shell. extra_env entries are
// "KEY=value" strings appended to the current environment.
CommandResult run_command(const std::vector<std::string>& argv,
                          const std::string& cwd = {},
                          const std::vector<std::string>& extra_env = {});

}  // namespace nnbom::util
