#include "memloop/io.hpp"

#include <fstream>
#include <sstream>

namespace memloop {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadableFileError("cannot open file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UnreadableFileError("cannot open file for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

JsonlResult read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open file: " + path.string());
    JsonlResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto parsed = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded()) {
            ++result.bad_lines;
        } else {
            result.rows.push_back(std::move(parsed));
        }
    }
    return result;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    std::string body;
    for (const auto& row : rows) {
        body += row.dump();
        body += '\n';
    }
    write_file(path, body);
}

}  // namespace memloop
