#include "wy/data_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wy/errors.hpp"

namespace wy {

std::vector<double> DataMatrix::response_levels() const {
    std::set<double> levels(response.begin(), response.end());
    return {levels.begin(), levels.end()};
}

std::vector<std::uint32_t> DataMatrix::columns_with_response(double level) const {
    std::vector<std::uint32_t> cols;
    for (std::size_t i = 0; i < n; ++i) {
        if (response[i] == level) cols.push_back(static_cast<std::uint32_t>(i));
    }
    return cols;
}

void DataMatrix::validate() const {
    if (n < 2) throw input_error("data matrix needs at least 2 samples, got " + std::to_string(n));
    if (m < 1) throw input_error("data matrix needs at least 1 feature row");
    if (response.size() != n) throw input_error("response length does not match sample count");
    if (features.size() != m * n) throw input_error("feature storage does not match m*n");
}

DataMatrix make_data_matrix(std::vector<double> response,
                            std::vector<double> features,
                            ResponseKind kind) {
    DataMatrix w;
    w.n = response.size();
    w.response = std::move(response);
    if (w.n == 0) throw input_error("empty response");
    if (features.size() % w.n != 0) {
        throw input_error("feature row length does not divide evenly by sample count");
    }
    w.m = features.size() / w.n;
    w.features = std::move(features);
    w.response_kind = kind;
    w.validate();
    return w;
}

DataMatrix permute_response(const DataMatrix& w, std::span<const std::uint32_t> g) {
    if (g.size() != w.n) {
        throw input_error("permutation length " + std::to_string(g.size()) +
                          " does not match sample count " + std::to_string(w.n));
    }
    DataMatrix out = w;
    for (std::size_t i = 0; i < w.n; ++i) {
        if (g[i] >= w.n) throw input_error("permutation index out of range");
        out.response[i] = w.response[g[i]];
    }
    return out;
}

namespace {

char detect_delimiter(const std::string& line) {
    const auto tabs = std::count(line.begin(), line.end(), '\t');
    const auto commas = std::count(line.begin(), line.end(), ',');
    return tabs > commas ? '\t' : ',';
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream stream(line);
    while (std::getline(stream, field, delim)) fields.push_back(field);
    if (!line.empty() && line.back() == delim) fields.emplace_back();
    return fields;
}

std::string trimmed(const std::string& s) {
    auto begin = s.find_first_not_of(" \r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \r\n");
    return s.substr(begin, end - begin + 1);
}

bool is_missing_token(const std::string& t) {
    return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan" || t == "?";
}

bool looks_categorical(const std::vector<double>& values, std::size_t n) {
    std::set<double> distinct(values.begin(), values.end());
    if (distinct.size() > std::max<std::size_t>(2, std::min<std::size_t>(10, n / 2))) return false;
    return std::all_of(distinct.begin(), distinct.end(),
                       [](double v) { return std::floor(v) == v; });
}

} // namespace

DataMatrix parse_delimited(const std::string& text, bool skip_header,
                           ResponseKind kind_override, bool auto_detect_kind) {
    std::vector<std::string> lines;
    {
        std::stringstream stream(text);
        std::string line;
        while (std::getline(stream, line)) {
            if (!trimmed(line).empty()) lines.push_back(line);
        }
    }
    std::size_t first_row = skip_header ? 1 : 0;
    if (lines.size() < first_row + 2) {
        throw input_error("input needs a response row and at least one feature row");
    }
    const char delim = detect_delimiter(lines[first_row]);

    std::vector<std::vector<double>> rows;
    std::size_t n = 0;
    for (std::size_t r = first_row; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r], delim);
        if (r == first_row) {
            n = fields.size();
        } else if (fields.size() != n) {
            throw input_error("row " + std::to_string(r + 1) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(n));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string token = trimmed(fields[c]);
            if (is_missing_token(token)) {
                throw input_error("missing value at row " + std::to_string(r + 1) +
                                  ", column " + std::to_string(c + 1));
            }
            try {
                std::size_t consumed = 0;
                double value = std::stod(token, &consumed);
                if (consumed != token.size()) throw std::invalid_argument(token);
                row.push_back(value);
            } catch (const std::exception&) {
                throw input_error("non-numeric value '" + token + "' at row " +
                                  std::to_string(r + 1) + ", column " + std::to_string(c + 1));
            }
        }
        rows.push_back(std::move(row));
    }

    std::vector<double> response = rows.front();
    std::vector<double> features;
    features.reserve((rows.size() - 1) * n);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        features.insert(features.end(), rows[r].begin(), rows[r].end());
    }
    ResponseKind kind = kind_override;
    if (auto_detect_kind) {
        kind = looks_categorical(response, n) ? ResponseKind::categorical : ResponseKind::numeric;
    }
    return make_data_matrix(std::move(response), std::move(features), kind);
}

DataMatrix read_delimited(const std::string& path, bool skip_header,
                          ResponseKind kind_override, bool auto_detect_kind) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open data file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_delimited(buffer.str(), skip_header, kind_override, auto_detect_kind);
}

} // namespace wy
