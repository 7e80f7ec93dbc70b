// Text artifacts: canonical JSON digests, CSV round-trips, SVG scatter
// emission and point recovery.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "vardiv/textio.hpp"

using namespace vardiv;
using nlohmann::json;

// -------- canonical JSON + digest --------

TEST_CASE("canonical form sorts keys and uses compact separators") {
    json a;
    a["zeta"] = 1;
    a["alpha"] = true;
    a["mid"] = json::array({1, "two", nullptr});
    CHECK(canonical_json(a) == R"({"alpha":true,"mid":[1,"two",null],"zeta":1})");
}

TEST_CASE("field insertion order does not change the canonical form or digest") {
    json a, b;
    a["sigma"] = 1.0;
    a["k_max"] = 3;
    a["method"] = "anneal";
    b["method"] = "anneal";
    b["k_max"] = 3;
    b["sigma"] = 1.0;
    CHECK(canonical_json(a) == canonical_json(b));
    CHECK(digest_hex(a) == digest_hex(b));

    b["sigma"] = 0.5; // any value change must move the digest
    CHECK(digest_hex(a) != digest_hex(b));
}

TEST_CASE("floats are rendered with twelve significant digits") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(1e-9) == "1e-09");
    CHECK(canonical_json(json(0.25)) == "0.25");
    CHECK(canonical_json(json::parse("[0.5, 2, -3]")) == "[0.5,2,-3]");
}

TEST_CASE("strings are escaped through the JSON library") {
    json j;
    j["text"] = "a\"b\nc";
    CHECK(canonical_json(j) == "{\"text\":\"a\\\"b\\nc\"}");
}

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
    CHECK(digest_hex(json::object()).size() == 16);
}

// -------- CSV --------

TEST_CASE("csv encode/decode are exact inverses on plain tables") {
    const CsvTable t = {{"condition_id", "method", "mpd_pix"},
                        {"0", "baseline", "0.125"},
                        {"1", "scale_travel", "0.25"}};
    const std::string text = csv_encode(t);
    CHECK(csv_decode(text) == t);
    CHECK(csv_encode(csv_decode(text)) == text);
}

TEST_CASE("fields containing commas, quotes, and newlines survive quoting") {
    const CsvTable t = {{"plain", "a,b", "say \"hi\"", "two\nlines", ""}};
    const std::string text = csv_encode(t);
    CHECK(text == "plain,\"a,b\",\"say \"\"hi\"\"\",\"two\nlines\",\n");
    CHECK(csv_decode(text) == t);
}

TEST_CASE("decoding tolerates CRLF and missing trailing newline") {
    CHECK(csv_decode("a,b\r\nc,d") == CsvTable{{"a", "b"}, {"c", "d"}});
    CHECK(csv_decode("") == CsvTable{});
    CHECK_THROWS_AS(csv_decode("\"unclosed"), ConfigError);
}

// -------- SVG scatter --------

TEST_CASE("plotted points round-trip through the data attributes") {
    PlotSeries front;
    front.label = "front";
    front.color = "#cc2222";
    front.connect = true;
    front.points = {{1.0, 0.5}, {2.25, 0.4}, {3.5, 0.125}};
    PlotSeries cloud;
    cloud.label = "cloud";
    cloud.color = "#2244cc";
    cloud.points = {{1.5, 0.1}, {0.333333333333, 0.2}};

    PlotOptions opt;
    opt.title = "diversity vs quality";
    opt.x_label = "Vendi_pix";
    opt.y_label = "Q_proxy";
    opt.timestamp = false;
    const std::string svg = svg_scatter({front, cloud}, opt);

    const auto pts = svg_extract_points(svg);
    REQUIRE(pts.size() == 5);
    CHECK(pts[0] == std::pair<double, double>{1.0, 0.5});
    CHECK(pts[3] == std::pair<double, double>{1.5, 0.1});
    CHECK(pts[4].first == doctest::Approx(1.0 / 3.0).epsilon(1e-11));

    // Exactly one polyline: the connected front, not the scatter cloud.
    size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++count;
        pos += 9;
    }
    CHECK(count == 1);
    CHECK(svg.find("diversity vs quality") != std::string::npos);
    CHECK(svg.find("Vendi_pix") != std::string::npos);
    CHECK(svg.find("front") != std::string::npos);
    CHECK(svg.find("cloud") != std::string::npos);
}

TEST_CASE("disabling the timestamp makes reruns byte-identical") {
    PlotSeries s;
    s.label = "points";
    s.points = {{0.0, 0.0}, {1.0, 1.0}};
    PlotOptions opt;
    opt.timestamp = false;
    CHECK(svg_scatter({s}, opt) == svg_scatter({s}, opt));
    CHECK(svg_scatter({s}, opt).find("<!--") == std::string::npos);

    opt.timestamp = true;
    CHECK(svg_scatter({s}, opt).find("<!-- generated ") != std::string::npos);
}

TEST_CASE("degenerate single-point plots still emit a drawable viewport") {
    PlotSeries s;
    s.label = "one";
    s.points = {{2.0, 2.0}};
    PlotOptions opt;
    opt.timestamp = false;
    const std::string svg = svg_scatter({s}, opt);
    const auto pts = svg_extract_points(svg);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0] == std::pair<double, double>{2.0, 2.0});
}

TEST_CASE("labels are XML escaped") {
    PlotSeries s;
    s.label = "a<b & c";
    s.points = {{0, 0}, {1, 1}};
    PlotOptions opt;
    opt.timestamp = false;
    const std::string svg = svg_scatter({s}, opt);
    CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
    CHECK(svg.find("a<b") == std::string::npos);
}
