#include "vardiv/textio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace vardiv {

namespace {

void append_canonical(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            out += "null";
            break;
        case nlohmann::json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case nlohmann::json::value_t::number_integer:
            out += std::to_string(j.get<int64_t>());
            break;
        case nlohmann::json::value_t::number_unsigned:
            out += std::to_string(j.get<uint64_t>());
            break;
        case nlohmann::json::value_t::number_float:
            out += format_number(j.get<double>());
            break;
        case nlohmann::json::value_t::string:
            out += nlohmann::json(j.get<std::string>()).dump(); // library escaping
            break;
        case nlohmann::json::value_t::array: {
            out += '[';
            bool first = true;
            for (const nlohmann::json& item : j) {
                if (!first) out += ',';
                first = false;
                append_canonical(item, out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::object: {
            // nlohmann objects iterate in key order already.
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(it.key()).dump();
                out += ':';
                append_canonical(it.value(), out);
            }
            out += '}';
            break;
        }
        default:
            throw ConfigError("canonical_json: unsupported value type");
    }
}

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\n\r") != std::string::npos;
}

// Map data coordinates into the plot rectangle, y flipped for SVG.
struct Mapper {
    double x_min, x_span, y_min, y_span;
    double px, py, pw, ph; // plot rectangle in svg units

    double x(double v) const { return px + (v - x_min) / x_span * pw; }
    double y(double v) const { return py + ph - (v - y_min) / y_span * ph; }
};

std::string svg_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

std::string canonical_json(const nlohmann::json& j) {
    std::string out;
    append_canonical(j, out);
    return out;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string digest_hex(const nlohmann::json& j) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_json(j))));
    return buf;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string csv_encode(const CsvTable& rows) {
    std::string out;
    for (const std::vector<std::string>& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            if (needs_quoting(row[i])) {
                out += '"';
                for (char c : row[i]) {
                    out += c;
                    if (c == '"') out += '"';
                }
                out += '"';
            } else {
                out += row[i];
            }
        }
        out += '\n';
    }
    return out;
}

CsvTable csv_decode(const std::string& text) {
    CsvTable rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_started = true;
                break;
            case '\n':
                if (row_started || !field.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                    row_started = false;
                }
                break;
            case '\r':
                break; // tolerate CRLF input; output is always LF
            default:
                field += c;
                row_started = true;
        }
    }
    if (in_quotes) {
        throw ConfigError("csv_decode: unterminated quoted field");
    }
    if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string svg_scatter(const std::vector<PlotSeries>& series, const PlotOptions& options) {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool any = false;
    for (const PlotSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!any) {
                x_min = x_max = x;
                y_min = y_max = y;
                any = true;
            } else {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
    }
    // Pad the range; keep degenerate axes drawable.
    const double x_pad = (x_max - x_min) > 0 ? 0.05 * (x_max - x_min) : 0.5;
    const double y_pad = (y_max - y_min) > 0 ? 0.05 * (y_max - y_min) : 0.5;
    Mapper map{x_min - x_pad, (x_max - x_min) + 2 * x_pad,
               y_min - y_pad, (y_max - y_min) + 2 * y_pad,
               60.0, 40.0, options.width - 90.0, options.height - 100.0};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width
        << "\" height=\"" << options.height << "\">\n";
    if (options.timestamp) {
        char stamp[64];
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        out << "<!-- generated " << stamp << " -->\n";
    }
    if (!options.title.empty()) {
        out << "<text x=\"" << options.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-size=\"16\">" << xml_escape(options.title) << "</text>\n";
    }

    // Axes with end-value tick labels.
    out << "<rect x=\"" << svg_coord(map.px) << "\" y=\"" << svg_coord(map.py)
        << "\" width=\"" << svg_coord(map.pw) << "\" height=\"" << svg_coord(map.ph)
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << svg_coord(map.px) << "\" y=\"" << svg_coord(map.py + map.ph + 16)
        << "\" font-size=\"11\">" << format_number(map.x_min) << "</text>\n";
    out << "<text x=\"" << svg_coord(map.px + map.pw) << "\" y=\""
        << svg_coord(map.py + map.ph + 16) << "\" text-anchor=\"end\" font-size=\"11\">"
        << format_number(map.x_min + map.x_span) << "</text>\n";
    out << "<text x=\"" << svg_coord(map.px - 6) << "\" y=\"" << svg_coord(map.py + map.ph)
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_number(map.y_min)
        << "</text>\n";
    out << "<text x=\"" << svg_coord(map.px - 6) << "\" y=\"" << svg_coord(map.py + 10)
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_number(map.y_min + map.y_span)
        << "</text>\n";
    out << "<text x=\"" << options.width / 2 << "\" y=\"" << options.height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(options.x_label)
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << options.height / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << options.height / 2 << ")\">" << xml_escape(options.y_label) << "</text>\n";

    int legend_row = 0;
    for (const PlotSeries& s : series) {
        if (s.connect && s.points.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
            for (size_t i = 0; i < s.points.size(); ++i) {
                if (i > 0) out << ' ';
                out << svg_coord(map.x(s.points[i].first)) << ','
                    << svg_coord(map.y(s.points[i].second));
            }
            out << "\"/>\n";
        }
        for (const auto& [x, y] : s.points) {
            out << "<circle cx=\"" << svg_coord(map.x(x)) << "\" cy=\"" << svg_coord(map.y(y))
                << "\" r=\"3\" fill=\"" << s.color << "\" data-x=\"" << format_number(x)
                << "\" data-y=\"" << format_number(y) << "\"/>\n";
        }
        const double ly = 40.0 + 16.0 * legend_row++;
        out << "<circle cx=\"" << svg_coord(options.width - 150.0) << "\" cy=\""
            << svg_coord(ly - 4) << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
        out << "<text x=\"" << svg_coord(options.width - 140.0) << "\" y=\"" << svg_coord(ly)
            << "\" font-size=\"12\">" << xml_escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<std::pair<double, double>> svg_extract_points(const std::string& svg) {
    std::vector<std::pair<double, double>> out;
    size_t pos = 0;
    while (true) {
        const size_t x_at = svg.find("data-x=\"", pos);
        if (x_at == std::string::npos) break;
        const size_t x_end = svg.find('"', x_at + 8);
        const size_t y_at = svg.find("data-y=\"", x_end);
        if (x_end == std::string::npos || y_at == std::string::npos) {
            throw ConfigError("svg_extract_points: malformed point attributes");
        }
        const size_t y_end = svg.find('"', y_at + 8);
        if (y_end == std::string::npos) {
            throw ConfigError("svg_extract_points: malformed point attributes");
        }
        out.emplace_back(std::stod(svg.substr(x_at + 8, x_end - x_at - 8)),
                         std::stod(svg.substr(y_at + 8, y_end - y_at - 8)));
        pos = y_end + 1;
    }
    return out;
}

} // namespace vardiv
