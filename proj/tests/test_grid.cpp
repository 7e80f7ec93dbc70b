// Feature grids and the align-corners resampler: hand-derived interpolation
// values, exactness guarantees (constants, identity copy), linearity, and the
// collapsed-axis mean rule.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vardiv/grid.hpp"
#include "vardiv/rng.hpp"

using namespace vardiv;

namespace {

FeatureGrid random_grid(int h, int w, int d, RngStream& rng, double lo = -1.0, double hi = 1.0) {
    FeatureGrid g(h, w, d);
    for (double& v : g.values) {
        v = lo + (hi - lo) * rng.next_unit();
    }
    return g;
}

} // namespace

TEST_CASE("resample: 1x1 broadcast to 4x4 is constant") {
    FeatureGrid g(1, 1, 2);
    g.at(0, 0, 0) = 3.25;
    g.at(0, 0, 1) = -7.0;
    const FeatureGrid out = resample(g, 4, 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(out.at(i, j, 0) == 3.25);
            CHECK(out.at(i, j, 1) == -7.0);
        }
    }
}

TEST_CASE("resample: constant 8x8 downsamples to constant 2x2 exactly") {
    const double c = 0.1234567890123;
    FeatureGrid g(8, 8, 3, c);
    const FeatureGrid out = resample(g, 2, 2);
    REQUIRE(out.height == 2);
    REQUIRE(out.width == 2);
    for (double v : out.values) {
        CHECK(v == c);
    }
}

TEST_CASE("resample: 2x2 ramp to 3x3, hand-computed align-corners values") {
    FeatureGrid g(2, 2, 1);
    g.at(0, 0, 0) = 0.0;
    g.at(0, 1, 0) = 1.0;
    g.at(1, 0, 0) = 2.0;
    g.at(1, 1, 0) = 3.0;
    const FeatureGrid out = resample(g, 3, 3);
    // source coords per output cell: {0, 0.5, 1} on both axes
    const double expected[9] = {0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0};
    for (int i = 0; i < 9; ++i) {
        CHECK(out.values[static_cast<size_t>(i)] == doctest::Approx(expected[i]).epsilon(1e-15));
    }
    CHECK(out.at(1, 1, 0) == doctest::Approx(1.5).epsilon(1e-15)); // center = mean of all four
}

TEST_CASE("resample: same dims is a bit-exact copy") {
    RngStream rng(7, 1);
    const FeatureGrid g = random_grid(5, 9, 4, rng);
    const FeatureGrid out = resample(g, 5, 9);
    CHECK(out.values == g.values);
}

TEST_CASE("resample: constants preserved exactly for arbitrary targets") {
    const double c = 0.7398412356789012; // full-mantissa value
    FeatureGrid g(6, 7, 2, c);
    for (auto [th, tw] : {std::pair{1, 1}, {1, 5}, {5, 1}, {3, 3}, {7, 2}, {16, 16}, {6, 7}}) {
        const FeatureGrid out = resample(g, th, tw);
        for (double v : out.values) {
            CHECK(v == c); // exact, not approximate
        }
    }
}

TEST_CASE("resample: linear in its input") {
    RngStream rng(11, 2);
    const FeatureGrid x = random_grid(6, 6, 3, rng);
    const FeatureGrid y = random_grid(6, 6, 3, rng);
    const double a = 1.75, b = -0.5;
    const FeatureGrid lhs = resample(grid_add(grid_scale(x, a), grid_scale(y, b)), 9, 4);
    const FeatureGrid rhs = grid_add(grid_scale(resample(x, 9, 4), a), grid_scale(resample(y, 9, 4), b));
    for (size_t i = 0; i < lhs.values.size(); ++i) {
        CHECK(lhs.values[i] == doctest::Approx(rhs.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("resample: collapsed axis takes the uniform mean of the source axis") {
    FeatureGrid g(3, 4, 1);
    // rows: [1 2 3 4], [5 6 7 8], [9 10 11 12]
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) {
            g.at(i, j, 0) = 1.0 + i * 4 + j;
        }
    }
    const FeatureGrid cols = resample(g, 3, 1); // collapse width
    CHECK(cols.at(0, 0, 0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(cols.at(1, 0, 0) == doctest::Approx(6.5).epsilon(1e-15));
    CHECK(cols.at(2, 0, 0) == doctest::Approx(10.5).epsilon(1e-15));
    const FeatureGrid rows = resample(g, 1, 4); // collapse height
    CHECK(rows.at(0, 0, 0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(rows.at(0, 3, 0) == doctest::Approx(8.0).epsilon(1e-15));
    const FeatureGrid both = resample(g, 1, 1);
    CHECK(both.at(0, 0, 0) == doctest::Approx(6.5).epsilon(1e-15)); // global mean
}

TEST_CASE("resample: upsample then exact-copy on non-degenerate axis only") {
    // 1xN input stays constant along the degenerate axis when upsampled.
    FeatureGrid g(1, 3, 1);
    g.at(0, 0, 0) = 1.0;
    g.at(0, 1, 0) = 2.0;
    g.at(0, 2, 0) = 4.0;
    const FeatureGrid out = resample(g, 4, 3);
    for (int i = 0; i < 4; ++i) {
        CHECK(out.at(i, 0, 0) == 1.0);
        CHECK(out.at(i, 1, 0) == 2.0);
        CHECK(out.at(i, 2, 0) == 4.0);
    }
}

TEST_CASE("resample and grid constructors reject bad input") {
    FeatureGrid g(2, 2, 1, 0.0);
    CHECK_THROWS_AS(resample(g, 0, 2), ConfigError);
    CHECK_THROWS_AS(resample(g, 2, -1), ConfigError);
    CHECK_THROWS_AS(FeatureGrid(0, 1, 1), ConfigError);
    CHECK_THROWS_AS(FeatureGrid(2, 2, 1, std::vector<double>{1.0, 2.0, 3.0}), ConfigError);
    CHECK_THROWS_AS(FeatureGrid(1, 1, 1, std::vector<double>{std::nan("")}), ConfigError);
}

TEST_CASE("grid helpers: add/sub/scale/guided/mse") {
    FeatureGrid a(1, 2, 1, {1.0, 2.0});
    FeatureGrid b(1, 2, 1, {0.5, -1.0});
    CHECK(grid_add(a, b).values == std::vector<double>{1.5, 1.0});
    CHECK(grid_sub(a, b).values == std::vector<double>{0.5, 3.0});
    CHECK(grid_scale(a, 2.0).values == std::vector<double>{2.0, 4.0});
    // (1+w)a - wb with w = 1: 2a - b
    CHECK(grid_guided(a, b, 1.0).values == std::vector<double>{1.5, 5.0});
    CHECK(grid_mse(a, b) == doctest::Approx((0.25 + 9.0) / 2.0));
    FeatureGrid c(2, 1, 1, {0.0, 0.0});
    CHECK_THROWS_AS(grid_add(a, c), ConfigError);
}

TEST_CASE("scale schedule: validation and accessors") {
    const ScaleSchedule s = ScaleSchedule::desk7();
    CHECK(s.stages() == 7);
    CHECK(s.scale(1) == std::pair{1, 1});
    CHECK(s.final_scale() == std::pair{16, 16});
    CHECK_THROWS_AS(s.scale(0), ConfigError);
    CHECK_THROWS_AS(s.scale(8), ConfigError);
    CHECK_THROWS_AS(ScaleSchedule(std::vector<std::pair<int, int>>{}), ConfigError);
    CHECK_THROWS_AS(ScaleSchedule({{2, 2}, {1, 1}}), ConfigError);
    CHECK_THROWS_AS(ScaleSchedule({{0, 1}}), ConfigError);
}
