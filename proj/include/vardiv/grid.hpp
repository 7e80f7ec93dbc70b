#pragma once

// Dense feature grids, scale schedules and bilinear resampling.
//
// A FeatureGrid is an (height, width, channels) block of doubles stored
// row-major; it is the working representation for canvases, residuals and
// decoded feature maps everywhere in the pipeline.
//
// Resampling convention (frozen):
//   * align-corners: output cell i on an axis maps to source coordinate
//     i * (N_src - 1) / (N_out - 1) when N_out > 1;
//   * a collapsed axis (N_out == 1) takes the uniform mean over the source
//     axis ("grid centroid");
//   * interpolation is separable (rows, then columns) and uses the anchored
//     form a + f * (b - a), so constant grids are preserved bit-exactly and
//     resampling to the source dims is an exact copy.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vardiv/errors.hpp"

namespace vardiv {

struct FeatureGrid {
    int height   = 0;
    int width    = 0;
    int channels = 0;
    std::vector<double> values; // row-major (h, w, d)

    FeatureGrid() = default;
    FeatureGrid(int h, int w, int d, double fill = 0.0) : height(h), width(w), channels(d) {
        if (h <= 0 || w <= 0 || d <= 0) {
            throw ConfigError("FeatureGrid: dims must be positive, got " + dims_str(h, w, d));
        }
        values.assign(static_cast<size_t>(h) * w * d, fill);
    }
    FeatureGrid(int h, int w, int d, std::vector<double> data) : height(h), width(w), channels(d), values(std::move(data)) {
        if (h <= 0 || w <= 0 || d <= 0) {
            throw ConfigError("FeatureGrid: dims must be positive, got " + dims_str(h, w, d));
        }
        if (values.size() != static_cast<size_t>(h) * w * d) {
            throw ConfigError("FeatureGrid: payload size " + std::to_string(values.size()) + " does not match dims " + dims_str(h, w, d));
        }
        validate_finite();
    }

    double& at(int i, int j, int d) {
        return values[(static_cast<size_t>(i) * width + j) * channels + d];
    }
    double at(int i, int j, int d) const {
        return values[(static_cast<size_t>(i) * width + j) * channels + d];
    }

    size_t size() const { return values.size(); }

    bool same_dims(const FeatureGrid& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }

    void validate_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw ConfigError("FeatureGrid: non-finite value");
            }
        }
    }

    static std::string dims_str(int h, int w, int d) {
        return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(d);
    }
};

// Elementwise helpers used by the codec and sampler.
FeatureGrid grid_add(const FeatureGrid& a, const FeatureGrid& b);
FeatureGrid grid_sub(const FeatureGrid& a, const FeatureGrid& b);
FeatureGrid grid_scale(const FeatureGrid& a, double s);
// (1 + w) * a - w * b, the guidance combination on raw grids.
FeatureGrid grid_guided(const FeatureGrid& a, const FeatureGrid& b, double w);
double grid_max_abs(const FeatureGrid& a);
double grid_mse(const FeatureGrid& a, const FeatureGrid& b);

// Monotone list of (h_k, w_k) scales; stage indices k are 1-based and the
// final stage defines the full canvas resolution.
struct ScaleSchedule {
    std::vector<std::pair<int, int>> scales;

    ScaleSchedule() = default;
    explicit ScaleSchedule(std::vector<std::pair<int, int>> s) : scales(std::move(s)) { validate(); }

    int stages() const { return static_cast<int>(scales.size()); }
    std::pair<int, int> scale(int k) const {
        if (k < 1 || k > stages()) {
            throw ConfigError("ScaleSchedule: stage " + std::to_string(k) + " out of range [1, " + std::to_string(stages()) + "]");
        }
        return scales[static_cast<size_t>(k) - 1];
    }
    std::pair<int, int> final_scale() const { return scale(stages()); }

    void validate() const {
        if (scales.empty()) {
            throw ConfigError("ScaleSchedule: empty");
        }
        for (size_t i = 0; i < scales.size(); ++i) {
            if (scales[i].first <= 0 || scales[i].second <= 0) {
                throw ConfigError("ScaleSchedule: non-positive scale at stage " + std::to_string(i + 1));
            }
            if (i > 0 && (scales[i].first < scales[i - 1].first || scales[i].second < scales[i - 1].second)) {
                throw ConfigError("ScaleSchedule: scales must be non-decreasing (stage " + std::to_string(i + 1) + ")");
            }
        }
    }

    bool operator==(const ScaleSchedule& o) const { return scales == o.scales; }

    // 7-stage desk pyramid up to 16x16.
    static ScaleSchedule desk7() {
        return ScaleSchedule({{1, 1}, {2, 2}, {3, 3}, {4, 4}, {6, 6}, {8, 8}, {16, 16}});
    }
    // 13-stage pyramid up to 32x32, used by the paper-style presets.
    static ScaleSchedule tall13() {
        return ScaleSchedule({{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {8, 8}, {10, 10}, {13, 13}, {16, 16}, {20, 20}, {26, 26}, {32, 32}});
    }
};

// Bilinear align-corners resample to (target_h, target_w); see the convention
// block at the top of this header.
FeatureGrid resample(const FeatureGrid& src, int target_h, int target_w);

} // namespace vardiv
