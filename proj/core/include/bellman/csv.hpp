#pragma once

#include <string>
#include <vector>

#include "bellman/linalg.hpp"

namespace bellman {

/// Numeric CSV table: one header row, comma separators, UNIX newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Doubles serialized with 17 significant digits, so parse(format(v)) == v
/// for every finite double.
std::string format_double(double v);

CsvTable read_csv(const std::string& path);            // IoError on read/parse failure
void write_csv(const std::string& path, const CsvTable& table);

/// Pulls the observation columns out of a table: the y_1..y_k columns when
/// the header carries them (e.g. simulator output), otherwise all non-"t"
/// columns, which must then number exactly obs_dim.
std::vector<Vector> extract_observations(const CsvTable& table, int obs_dim);

}  // namespace bellman
