#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/io/ini.hpp"

namespace porecat {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw IoError("'" + path.string() + "' is empty");
    t.header = detail::split(line, ',');
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != t.header.size())
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header.size()) + " columns, got " + std::to_string(cells.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size())
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace porecat
