#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace memloop {

struct UnreadableFileError : std::runtime_error {
    explicit UnreadableFileError(const std::string& what) : std::runtime_error(what) {}
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Reads a JSONL file; blank lines are skipped, unparseable lines are returned
// as discarded (the caller decides whether that is an error).
struct JsonlResult {
    std::vector<nlohmann::json> rows;
    std::size_t bad_lines = 0;
};
JsonlResult read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

}  // namespace memloop
