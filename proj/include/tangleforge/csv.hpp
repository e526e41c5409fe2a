#pragma once

#include "tangleforge/causal.hpp"
#include "tangleforge/faultsim.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

// Plain comma-separated values; no quoting (none of the formats here
// carries commas inside fields).
inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            std::size_t b = cell.find_first_not_of(" \t");
            std::size_t e = cell.find_last_not_of(" \t");
            row.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<std::vector<std::string>> read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return read_csv_rows(f);
}

inline double csv_number(const std::string& cell, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(what + ": bad number '" + cell + "'");
    }
}

/// Header row of series names, one row per time step.
inline TimeSeriesPanel read_panel_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    TimeSeriesPanel panel;
    if (rows.empty()) throw std::runtime_error(path + ": empty panel");
    panel.names = rows[0];
    const int k = static_cast<int>(panel.names.size());
    panel.data.resize(static_cast<int>(rows.size()) - 1, k);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != k)
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) + " has " +
                                     std::to_string(rows[r].size()) + " cells, expected " +
                                     std::to_string(k));
        for (int c = 0; c < k; ++c)
            panel.data(static_cast<int>(r) - 1, c) = csv_number(rows[r][static_cast<std::size_t>(c)], path);
    }
    return panel;
}

inline std::string write_panel_csv(const TimeSeriesPanel& panel) {
    std::string out;
    for (std::size_t i = 0; i < panel.names.size(); ++i)
        out += (i ? "," : "") + panel.names[i];
    out += "\n";
    for (int t = 0; t < panel.length(); ++t) {
        for (int c = 0; c < panel.series(); ++c)
            out += (c ? "," : "") + format_double(panel.data(t, c));
        out += "\n";
    }
    return out;
}

/**
 * Estimator stream format: t, stream id, mean components, covariance
 * entries row-major. The dimension d is inferred from the column count
 * (2 + d + d^2). An optional header row is skipped.
 */
inline std::map<std::string, std::vector<GaussianEstimator>> read_stream_csv(
    const std::string& path) {
    const auto rows = read_csv_file(path);
    std::map<std::string, std::vector<std::pair<double, GaussianEstimator>>> streams;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() < 4) throw std::runtime_error(path + ": too few columns");
        if (r == 0 && row[0] == "t") continue;  // header
        int d = -1;
        for (int cand = 1; 2 + cand + cand * cand <= static_cast<int>(row.size()); ++cand)
            if (2 + cand + cand * cand == static_cast<int>(row.size())) d = cand;
        if (d < 0)
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) +
                                     " does not match t,stream,mean...,cov... layout");
        const double t = csv_number(row[0], path);
        GaussianEstimator e;
        e.mean.resize(d);
        for (int i = 0; i < d; ++i) e.mean[i] = csv_number(row[static_cast<std::size_t>(2 + i)], path);
        e.cov.resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                e.cov(i, j) = csv_number(row[static_cast<std::size_t>(2 + d + i * d + j)], path);
        streams[row[1]].emplace_back(t, std::move(e));
    }
    std::map<std::string, std::vector<GaussianEstimator>> out;
    for (auto& [name, seq] : streams) {
        std::stable_sort(seq.begin(), seq.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [t, e] : seq) out[name].push_back(std::move(e));
    }
    return out;
}

/// Fault schedule: rows of t, code — codes over {000,00X,0X0,X00,X0X,0XX}.
inline std::vector<FaultCode> read_fault_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    std::vector<std::pair<double, FaultCode>> seq;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2) throw std::runtime_error(path + ": fault rows are t,code");
        if (r == 0 && row[0] == "t") continue;
        seq.emplace_back(csv_number(row[0], path), parse_fault_code(row[1]));
    }
    std::stable_sort(seq.begin(), seq.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<FaultCode> out;
    for (const auto& [t, c] : seq) out.push_back(c);
    return out;
}

} // namespace tangleforge
