#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wy {

enum class ResponseKind { numeric, categorical };

// Data matrix: one response row over n samples plus m feature rows.
// Column i is sample i. Immutable after construction.
struct DataMatrix {
    std::vector<double> response;   // length n
    std::vector<double> features;   // row-major, m * n
    std::size_t n = 0;
    std::size_t m = 0;
    ResponseKind response_kind = ResponseKind::numeric;

    std::span<const double> feature_row(std::size_t j) const {
        return {features.data() + j * n, n};
    }
    std::span<double> feature_row(std::size_t j) {
        return {features.data() + j * n, n};
    }

    // Distinct response values in ascending order.
    std::vector<double> response_levels() const;

    // Column indices carrying the given response value.
    std::vector<std::uint32_t> columns_with_response(double level) const;

    void validate() const;
};

DataMatrix make_data_matrix(std::vector<double> response,
                            std::vector<double> features,
                            ResponseKind kind = ResponseKind::numeric);

// Returns a copy whose response row is reordered as y'[i] = y[g[i]].
// Feature rows are untouched. g must be a bijection on {0,...,n-1}.
DataMatrix permute_response(const DataMatrix& w, std::span<const std::uint32_t> g);

// Delimited-text ingestion: first data row is the response, each subsequent
// row one feature. Delimiter (comma or tab) is auto-detected; `skip_header`
// drops a leading column-name row. Missing or non-numeric fields are
// reported with 1-based row/column coordinates.
DataMatrix read_delimited(const std::string& path,
                          bool skip_header = false,
                          ResponseKind kind_override = ResponseKind::numeric,
                          bool auto_detect_kind = true);

DataMatrix parse_delimited(const std::string& text,
                           bool skip_header = false,
                           ResponseKind kind_override = ResponseKind::numeric,
                           bool auto_detect_kind = true);

} // namespace wy
