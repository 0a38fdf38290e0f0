#pragma once

#include "pcaewc/monitoring.hpp"
#include "pcaewc/types.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pcaewc {

namespace detail {

/// Full-precision, locale-independent float formatting.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    return out;
}

}  // namespace detail

/// Data block as CSV with header x1..xm and an optional trailing label column.
inline void write_data_csv(const std::filesystem::path& path, const DataMatrix& X,
                           const std::vector<std::uint8_t>* labels = nullptr) {
    if (labels && static_cast<Index>(labels->size()) != X.n_samples())
        throw LengthMismatch("write_data_csv: label count mismatch");
    auto out = detail::open_out(path);
    for (Index j = 0; j < X.n_vars(); ++j) out << (j ? "," : "") << "x" << (j + 1);
    if (labels) out << ",label";
    out << "\n";
    for (Index i = 0; i < X.n_samples(); ++i) {
        for (Index j = 0; j < X.n_vars(); ++j)
            out << (j ? "," : "") << detail::fmt_g17(X.values(i, j));
        if (labels) out << "," << static_cast<int>((*labels)[static_cast<std::size_t>(i)]);
        out << "\n";
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

struct CsvData {
    DataMatrix data;
    std::optional<std::vector<std::uint8_t>> labels;
};

/// Read a data CSV written by write_data_csv (or any x1..xm[,label] file).
inline CsvData read_data_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoFailure("empty csv: " + path.string());

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    bool has_label = !header.empty() && header.back() == "label";
    const std::size_t n_vars = header.size() - (has_label ? 1 : 0);
    if (n_vars == 0) throw IoFailure("csv has no data columns: " + path.string());

    std::vector<double> values;
    std::vector<std::uint8_t> labels;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str())
                throw IoFailure("csv parse error at row " + std::to_string(n_rows + 2) + ": '" +
                                cell + "'");
            if (col < n_vars)
                values.push_back(v);
            else
                labels.push_back(v != 0.0 ? 1 : 0);
            ++col;
        }
        if (col != header.size())
            throw IoFailure("csv row " + std::to_string(n_rows + 2) + " has " +
                            std::to_string(col) + " cells, expected " +
                            std::to_string(header.size()));
        ++n_rows;
    }
    Matrix m(static_cast<Index>(n_rows), static_cast<Index>(n_vars));
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < n_vars; ++j)
            m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * n_vars + j];
    CsvData out{DataMatrix(std::move(m)), std::nullopt};
    if (has_label) out.labels = std::move(labels);
    return out;
}

/// Statistic series CSV: sample_index, t2, spe, t2_limit, spe_limit, alarm.
inline void write_series_csv(const std::filesystem::path& path, const StatisticSeries& series,
                             const ControlLimits& limits) {
    auto out = detail::open_out(path);
    out << "sample_index,t2,spe,t2_limit,spe_limit,alarm\n";
    for (std::size_t i = 0; i < series.t2.size(); ++i)
        out << (i + 1) << "," << detail::fmt_g17(series.t2[i]) << ","
            << detail::fmt_g17(series.spe[i]) << "," << detail::fmt_g17(limits.t2_limit) << ","
            << detail::fmt_g17(limits.spe_limit) << "," << static_cast<int>(series.alarms[i])
            << "\n";
    if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace pcaewc
