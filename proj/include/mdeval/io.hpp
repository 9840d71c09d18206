#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mdeval {

using json = nlohmann::json;

// Whole file; throws Error(MissingFile) when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, std::string_view content);

// Lines with trailing '\r' stripped; the final empty line after a newline is dropped.
std::vector<std::string> split_lines(std::string_view text);

// One CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

std::string csv_escape(std::string_view field);

std::string_view trim(std::string_view s);

std::string to_lower(std::string_view s);

// Parses one JSON value per nonblank line. Throws Error(ParseError) naming the line.
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Fixed-precision decimal, "%.{digits}f".
std::string fixed(double value, int digits);

// Signed percentage with two decimals: 0.03 -> "+3.00%".
std::string signed_percent(double fraction);

// Append-only line-delimited JSON writer; thread-safe, one line per append.
class JsonlWriter {
public:
    JsonlWriter() = default;
    explicit JsonlWriter(const std::filesystem::path& path, bool truncate = true);

    void append(const json& record);
    [[nodiscard]] bool is_open() const { return out_.is_open(); }
    void flush();

private:
    std::mutex mutex_;
    std::ofstream out_;
};

}  // namespace mdeval
