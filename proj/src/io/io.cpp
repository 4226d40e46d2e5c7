#include "specbath/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace specbath {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& field, double& out) {
    const std::string f = trim(field);
    if (f.empty()) return false;
    const char* end = f.data() + f.size();
    auto [ptr, ec] = std::from_chars(f.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<std::vector<double>> read_numeric_csv(std::istream& in, std::size_t columns) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!t.empty() && t.back() == ',') fields.emplace_back();
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_double(fields[k], row[k]);
        if (!numeric && header_allowed) {
            header_allowed = false;
            continue;
        }
        header_allowed = false;
        if (!numeric) throw DataError("non-numeric field in '" + t + "'", lineno);
        if (row.size() != columns)
            throw DataError("expected " + std::to_string(columns) + " columns, found " + std::to_string(row.size()),
                            lineno);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_numeric_csv(in, columns);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace specbath
