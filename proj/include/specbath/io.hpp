// io.hpp - small readers and writers shared by the data modules.
#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace specbath {

/// Malformed input data; `line()` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Reads a numeric CSV with exactly `columns` fields per row. Blank lines and
/// lines starting with '#' are skipped; a single non-numeric first row is
/// treated as a header.
std::vector<std::vector<double>> read_numeric_csv(std::istream& in, std::size_t columns);
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace specbath
