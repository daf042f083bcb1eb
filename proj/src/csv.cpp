#include "mpm/csv.hpp"
#include "mpm/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mpm {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable parse_csv(const std::string &text, const std::string &source) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            std::set<std::string> seen;
            for (const auto &h : cells) {
                if (h.empty()) throw ParseError(fmt::format("{}: line {}: empty column name", source, line_no));
                if (!seen.insert(h).second) throw DuplicateHeader(fmt::format("{}: column '{}' appears twice", source, h));
            }
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError(fmt::format("{}: line {}: expected {} fields, found {}", source, line_no, t.header.size(), cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto &c = cells[j];
            if (c.empty())
                throw ParseError(fmt::format("{}: line {}, column '{}': empty cell", source, line_no, t.header[j]));
            const char *first = c.data();
            const char *last = c.data() + c.size();
            if (*first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, row[j]);
            if (ec != std::errc() || ptr != last)
                throw NonNumericCell(fmt::format("{}: line {}, column '{}': '{}' is not a number", source, line_no, t.header[j], c));
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ParseError(source + ": no header row");
    if (t.rows.empty()) throw ParseError(source + ": no data rows");
    return t;
}

CsvTable read_csv(const std::string &path) { return parse_csv(read_file(path), path); }

LoadedData dataset_from_table(const CsvTable &table, const std::string &response, const std::vector<std::string> &common,
                              bool intercept) {
    const auto rit = std::find(table.header.begin(), table.header.end(), response);
    if (rit == table.header.end()) throw ConfigError("response column '" + response + "' not found");
    const auto rcol = static_cast<std::size_t>(rit - table.header.begin());
    std::vector<std::string> names;
    std::vector<std::size_t> src;
    if (intercept) {
        if (std::find(table.header.begin(), table.header.end(), "c") != table.header.end())
            throw DuplicateHeader("column 'c' clashes with the automatic intercept");
        names.push_back("c");
    }
    for (std::size_t j = 0; j < table.header.size(); ++j)
        if (j != rcol) {
            names.push_back(table.header[j]);
            src.push_back(j);
        }
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto k = static_cast<Eigen::Index>(names.size());
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &row = table.rows[static_cast<std::size_t>(i)];
        y(i) = row[rcol];
        Eigen::Index c = 0;
        if (intercept) X(i, c++) = 1.0;
        for (auto j : src) X(i, c++) = row[j];
    }
    LoadedData out{Dataset(X, y, names, response), {}};
    if (intercept) out.common.push_back(0);
    for (const auto &name : common) {
        if (name == response) throw ConfigError("the response cannot be a common covariate");
        out.common.push_back(out.data.column(name));
    }
    std::sort(out.common.begin(), out.common.end());
    out.common.erase(std::unique(out.common.begin(), out.common.end()), out.common.end());
    return out;
}

LoadedData load_csv(const std::string &path, const std::string &response, const std::vector<std::string> &common,
                    bool intercept) {
    return dataset_from_table(read_csv(path), response, common, intercept);
}

} // namespace mpm
