#pragma once

// Canonical text artifacts: JSON with a stable digest, CSV tables, and
// hand-emitted SVG scatter plots.
//
// Everything written here round-trips through its own reader, and a rerun
// with the same inputs produces byte-identical output. The one deliberate
// exception is the SVG generation-time comment, which can be disabled for
// byte-exact comparisons.
//
// Canonical JSON means: object keys sorted, compact separators, floats
// printed with "%.12g", no locale dependence. Config digests are FNV-1a 64
// over this canonical form, so two configs that differ only in field order
// share a digest.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vardiv/errors.hpp"

namespace vardiv {

std::string canonical_json(const nlohmann::json& j);
uint64_t    fnv1a64(const std::string& text);
std::string digest_hex(const nlohmann::json& j); // 16 lowercase hex chars

// The one float format used in every text artifact.
std::string format_number(double v); // "%.12g"

// CSV with minimal quoting: fields containing comma, quote, or newline are
// quoted and embedded quotes doubled. encode/decode are exact inverses.
using CsvTable = std::vector<std::vector<std::string>>;
std::string csv_encode(const CsvTable& rows);
CsvTable    csv_decode(const std::string& text);

// One plotted series; `connect` additionally draws a polyline through the
// points in order (used for Pareto fronts).
struct PlotSeries {
    std::string label;
    std::string color = "#000000";
    bool connect = false;
    std::vector<std::pair<double, double>> points;
};

struct PlotOptions {
    int width  = 640;
    int height = 480;
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    bool timestamp = true; // emit a generation-time comment
};

// Hand-emitted scatter plot. Every point's circle carries data-x / data-y
// attributes holding the "%.12g" source values, so plots can be parsed back
// and checked against the CSV they were drawn from.
std::string svg_scatter(const std::vector<PlotSeries>& series, const PlotOptions& options);

// The data-x/data-y pairs of every plotted point, in document order.
std::vector<std::pair<double, double>> svg_extract_points(const std::string& svg);

} // namespace vardiv
