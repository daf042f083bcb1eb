#pragma once
#include "mpm/bayes_linear.hpp"

#include <string>
#include <vector>

namespace mpm {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Comma-separated numbers with a mandatory header row. `source` names the input in error messages.
CsvTable parse_csv(const std::string &text, const std::string &source = "input");
CsvTable read_csv(const std::string &path);

struct LoadedData {
    Dataset data;
    Variables common; // positions of the requested common columns (and the intercept, if added)
};

/// Builds a dataset with `response` as y and the remaining columns, in file order, as X.
/// With `intercept`, a column of ones named "c" is prepended and treated as common.
LoadedData dataset_from_table(const CsvTable &table, const std::string &response,
                              const std::vector<std::string> &common, bool intercept);
LoadedData load_csv(const std::string &path, const std::string &response, const std::vector<std::string> &common = {},
                    bool intercept = false);

/// Whole file as a string; throws ConfigError if it cannot be read.
std::string read_file(const std::string &path);

} // namespace mpm
