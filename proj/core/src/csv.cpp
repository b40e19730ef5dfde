#include "bellman/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bellman {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");

    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = cells;
            first = false;
            continue;
        }
        if (cells.size() != table.header.size())
            throw IoError(path + ": row has " + std::to_string(cells.size()) +
                          " fields, header has " + std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str() || *end != '\0')
                throw IoError(path + ": cannot parse numeric field '" + c + "'");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (first) throw IoError(path + ": missing header row");
    return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);  // binary keeps newlines UNIX on any host
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < table.header.size(); ++i)
        out << (i == 0 ? "" : ",") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i == 0 ? "" : ",") << format_double(row[i]);
        out << '\n';
    }
    if (!out) throw IoError("write to " + path + " failed");
}

std::vector<Vector> extract_observations(const CsvTable& table, int obs_dim) {
    std::vector<int> y_cols;
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i].rfind("y_", 0) == 0) y_cols.push_back(static_cast<int>(i));
    if (y_cols.empty()) {
        for (std::size_t i = 0; i < table.header.size(); ++i)
            if (table.header[i] != "t") y_cols.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(y_cols.size()) != obs_dim)
        throw ConfigError("data has " + std::to_string(y_cols.size()) +
                          " observation columns, model expects " + std::to_string(obs_dim));

    std::vector<Vector> data;
    data.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        Vector y(obs_dim);
        for (int i = 0; i < obs_dim; ++i) y(i) = row[y_cols[i]];
        data.push_back(std::move(y));
    }
    return data;
}

}  // namespace bellman
