#include "vardiv/grid.hpp"

namespace vardiv {

namespace {

void require_same_dims(const FeatureGrid& a, const FeatureGrid& b, const char* op) {
    if (!a.same_dims(b)) {
        throw ConfigError(std::string(op) + ": dim mismatch " +
                          FeatureGrid::dims_str(a.height, a.width, a.channels) + " vs " +
                          FeatureGrid::dims_str(b.height, b.width, b.channels));
    }
}

// One separable pass along the row axis: (h_in, w, d) -> (h_out, w, d).
// Column pass reuses this by operating on a transposed view, see resample().
FeatureGrid resample_rows(const FeatureGrid& src, int h_out) {
    if (h_out == src.height) {
        return src;
    }
    FeatureGrid out(h_out, src.width, src.channels);
    const size_t row_stride = static_cast<size_t>(src.width) * src.channels;

    if (h_out == 1) {
        // Collapsed axis: anchored mean over source rows, exact on constants.
        const double inv_n = 1.0 / src.height;
        for (size_t c = 0; c < row_stride; ++c) {
            const double anchor = src.values[c];
            double acc = 0.0;
            for (int i = 1; i < src.height; ++i) {
                acc += src.values[static_cast<size_t>(i) * row_stride + c] - anchor;
            }
            out.values[c] = anchor + acc * inv_n;
        }
        return out;
    }

    const double step = static_cast<double>(src.height - 1) / (h_out - 1);
    for (int i = 0; i < h_out; ++i) {
        const double pos = i * step;
        int lo = static_cast<int>(std::floor(pos));
        if (lo > src.height - 2) {
            lo = src.height - 2; // pos == height-1 lands exactly on the last row
        }
        if (lo < 0) {
            lo = 0;
        }
        const double f = pos - lo;
        const double* row_lo = &src.values[static_cast<size_t>(lo) * row_stride];
        const double* row_hi = &src.values[static_cast<size_t>(lo + 1) * row_stride];
        double* dst = &out.values[static_cast<size_t>(i) * row_stride];
        if (f == 0.0) {
            for (size_t c = 0; c < row_stride; ++c) {
                dst[c] = row_lo[c];
            }
        } else {
            for (size_t c = 0; c < row_stride; ++c) {
                dst[c] = row_lo[c] + f * (row_hi[c] - row_lo[c]);
            }
        }
    }
    return out;
}

FeatureGrid transpose(const FeatureGrid& g) {
    FeatureGrid out(g.width, g.height, g.channels);
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            for (int d = 0; d < g.channels; ++d) {
                out.at(j, i, d) = g.at(i, j, d);
            }
        }
    }
    return out;
}

} // namespace

FeatureGrid grid_add(const FeatureGrid& a, const FeatureGrid& b) {
    require_same_dims(a, b, "grid_add");
    FeatureGrid out = a;
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] += b.values[i];
    }
    return out;
}

FeatureGrid grid_sub(const FeatureGrid& a, const FeatureGrid& b) {
    require_same_dims(a, b, "grid_sub");
    FeatureGrid out = a;
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] -= b.values[i];
    }
    return out;
}

FeatureGrid grid_scale(const FeatureGrid& a, double s) {
    FeatureGrid out = a;
    for (double& v : out.values) {
        v *= s;
    }
    return out;
}

FeatureGrid grid_guided(const FeatureGrid& a, const FeatureGrid& b, double w) {
    require_same_dims(a, b, "grid_guided");
    FeatureGrid out = a;
    for (size_t i = 0; i < out.values.size(); ++i) {
        // (1 + w) * a - w * b, arranged so w = 0 and a == b return a exactly.
        out.values[i] = a.values[i] + w * (a.values[i] - b.values[i]);
    }
    return out;
}

double grid_max_abs(const FeatureGrid& a) {
    double m = 0.0;
    for (double v : a.values) {
        m = std::max(m, std::fabs(v));
    }
    return m;
}

double grid_mse(const FeatureGrid& a, const FeatureGrid& b) {
    require_same_dims(a, b, "grid_mse");
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.values.size());
}

FeatureGrid resample(const FeatureGrid& src, int target_h, int target_w) {
    if (target_h <= 0 || target_w <= 0) {
        throw ConfigError("resample: target dims must be positive, got " +
                          std::to_string(target_h) + "x" + std::to_string(target_w));
    }
    if (src.values.empty()) {
        throw ConfigError("resample: empty source grid");
    }
    if (target_h == src.height && target_w == src.width) {
        return src; // exact copy
    }
    FeatureGrid rows = resample_rows(src, target_h);
    if (target_w == rows.width) {
        return rows;
    }
    return transpose(resample_rows(transpose(rows), target_w));
}

} // namespace vardiv
