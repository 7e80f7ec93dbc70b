#include "vardiv/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vardiv {

namespace {

void require_canvas_dims(const FeatureGrid& z, const ScaleSchedule& schedule, int dim, const char* op) {
    const auto [H, W] = schedule.final_scale();
    if (z.height != H || z.width != W || z.channels != dim) {
        throw ConfigError(std::string(op) + ": canvas dims " +
                          FeatureGrid::dims_str(z.height, z.width, z.channels) +
                          " do not match schedule/codebook " + FeatureGrid::dims_str(H, W, dim));
    }
}

} // namespace

Codebook::Codebook(QuantizeMode mode_, int dim_, std::vector<double> table_)
    : mode(mode_), dim(dim_), table(std::move(table_)) {
    if (dim <= 0) {
        throw ConfigError("Codebook: dim must be positive");
    }
    if (mode == QuantizeMode::vq) {
        if (table.empty() || table.size() % dim != 0) {
            throw ConfigError("Codebook: vq table must be a non-empty multiple of dim");
        }
        for (double v : table) {
            if (!std::isfinite(v)) {
                throw ConfigError("Codebook: non-finite entry");
            }
        }
    } else if (!table.empty()) {
        throw ConfigError("Codebook: identity mode takes no table");
    }
}

void TokenPyramid::validate(const Codebook& cb) const {
    if (grids.empty()) {
        throw ConfigError("TokenPyramid: empty");
    }
    if (stages_present() > schedule.stages()) {
        throw ConfigError("TokenPyramid: more grids than schedule stages");
    }
    for (int k = 1; k <= stages_present(); ++k) {
        const TokenGrid& g = grids[static_cast<size_t>(k) - 1];
        const auto [h, w] = schedule.scale(k);
        if (g.scale_index != k) {
            throw ConfigError("TokenPyramid: grid " + std::to_string(k) + " has scale_index " + std::to_string(g.scale_index));
        }
        if (g.height != h || g.width != w) {
            throw ConfigError("TokenPyramid: grid " + std::to_string(k) + " dims do not match schedule");
        }
        if (g.mode != cb.mode || g.dim != cb.dim) {
            throw ConfigError("TokenPyramid: grid " + std::to_string(k) + " mode/dim does not match codebook");
        }
        if (g.mode == QuantizeMode::vq) {
            for (int32_t idx : g.indices) {
                if (idx < 0 || idx >= cb.size()) {
                    throw ConfigError("TokenPyramid: token index out of codebook range");
                }
            }
        }
    }
}

TokenGrid quantize(const FeatureGrid& residual, const Codebook& cb, int scale_index) {
    if (residual.channels != cb.dim) {
        throw ConfigError("quantize: residual channels " + std::to_string(residual.channels) +
                          " != codebook dim " + std::to_string(cb.dim));
    }
    TokenGrid out;
    out.scale_index = scale_index;
    out.height = residual.height;
    out.width  = residual.width;
    out.dim    = cb.dim;
    out.mode   = cb.mode;

    if (cb.mode == QuantizeMode::identity) {
        out.vectors = residual.values;
        return out;
    }

    const int V = cb.size();
    out.indices.resize(out.cells());
    for (size_t cell = 0; cell < out.cells(); ++cell) {
        const double* x = &residual.values[cell * cb.dim];
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int v = 0; v < V; ++v) {
            const double* e = cb.row(v);
            double d = 0.0;
            for (int c = 0; c < cb.dim; ++c) {
                const double diff = x[c] - e[c];
                d += diff * diff;
            }
            if (d < best_d) { // strict < keeps the lowest index on ties
                best_d = d;
                best = v;
            }
        }
        out.indices[cell] = best;
    }
    return out;
}

FeatureGrid dequantize(const TokenGrid& tokens, const Codebook& cb) {
    if (tokens.mode != cb.mode || tokens.dim != cb.dim) {
        throw ConfigError("dequantize: token grid does not match codebook mode/dim");
    }
    FeatureGrid out(tokens.height, tokens.width, cb.dim);
    if (cb.mode == QuantizeMode::identity) {
        if (tokens.vectors.size() != out.values.size()) {
            throw ConfigError("dequantize: identity payload size mismatch");
        }
        out.values = tokens.vectors;
        return out;
    }
    if (tokens.indices.size() != tokens.cells()) {
        throw ConfigError("dequantize: vq payload size mismatch");
    }
    for (size_t cell = 0; cell < tokens.cells(); ++cell) {
        const int32_t v = tokens.indices[cell];
        if (v < 0 || v >= cb.size()) {
            throw ConfigError("dequantize: token index " + std::to_string(v) + " out of range");
        }
        const double* e = cb.row(v);
        std::copy(e, e + cb.dim, &out.values[cell * cb.dim]);
    }
    return out;
}

FeatureGrid accumulate_canvas(const TokenPyramid& pyr, const Codebook& cb, int prefix) {
    pyr.validate(cb);
    const int upto = prefix < 0 ? pyr.stages_present() : prefix;
    if (upto < 1 || upto > pyr.stages_present()) {
        throw ConfigError("accumulate_canvas: prefix " + std::to_string(prefix) + " out of range");
    }
    const auto [H, W] = pyr.schedule.final_scale();
    FeatureGrid canvas(H, W, cb.dim, 0.0);
    for (int k = 1; k <= upto; ++k) { // ascending stage order, frozen
        const FeatureGrid up = resample(dequantize(pyr.grids[static_cast<size_t>(k) - 1], cb), H, W);
        for (size_t i = 0; i < canvas.values.size(); ++i) {
            canvas.values[i] += up.values[i];
        }
    }
    return canvas;
}

namespace {

// Shared loop body of the encoder and scale_travel: encode stages 1..m of
// `target` into grids, accumulating the canvas exactly as accumulate_canvas
// would (same summation order, so prefixes agree bit-for-bit).
TokenPyramid encode_stages(const FeatureGrid& target, const ScaleSchedule& schedule, int m, const Codebook& cb, const char* op) {
    require_canvas_dims(target, schedule, cb.dim, op);
    if (m < 1 || m > schedule.stages()) {
        throw ConfigError(std::string(op) + ": stage count " + std::to_string(m) + " out of range [1, " +
                          std::to_string(schedule.stages()) + "]");
    }
    const auto [H, W] = schedule.final_scale();

    TokenPyramid pyr;
    pyr.schedule = schedule;
    pyr.grids.reserve(static_cast<size_t>(m));

    FeatureGrid canvas(H, W, cb.dim, 0.0);
    for (int k = 1; k <= m; ++k) {
        const auto [h, w] = schedule.scale(k);
        const FeatureGrid residual = resample(grid_sub(target, canvas), h, w);
        TokenGrid r = quantize(residual, cb, k);
        const FeatureGrid up = resample(dequantize(r, cb), H, W);
        for (size_t i = 0; i < canvas.values.size(); ++i) {
            canvas.values[i] += up.values[i];
        }
        pyr.grids.push_back(std::move(r));
    }
    return pyr;
}

} // namespace

TokenPyramid multi_scale_encode(const FeatureGrid& target, const ScaleSchedule& schedule, const Codebook& cb) {
    return encode_stages(target, schedule, schedule.stages(), cb, "multi_scale_encode");
}

TokenPyramid scale_travel(const FeatureGrid& canvas, const ScaleSchedule& schedule, int m, const Codebook& cb) {
    return encode_stages(canvas, schedule, m, cb, "scale_travel");
}

ChannelDecoder ChannelDecoder::identity_rgb() {
    ChannelDecoder dec;
    dec.dim = 3;
    dec.weight = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    dec.bias = {0, 0, 0};
    return dec;
}

Image decode_image(const FeatureGrid& canvas, const ChannelDecoder& dec) {
    if (canvas.channels != dec.dim) {
        throw ConfigError("decode_image: canvas channels != decoder dim");
    }
    if (dec.weight.size() != static_cast<size_t>(3 * dec.dim) || dec.bias.size() != 3) {
        throw ConfigError("decode_image: decoder weight/bias shape");
    }
    Image img(canvas.height, canvas.width);
    for (int i = 0; i < canvas.height; ++i) {
        for (int j = 0; j < canvas.width; ++j) {
            for (int c = 0; c < 3; ++c) {
                double v = dec.bias[c];
                for (int d = 0; d < dec.dim; ++d) {
                    v += dec.weight[static_cast<size_t>(c) * dec.dim + d] * canvas.at(i, j, d);
                }
                img.at(i, j, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

Codebook fit_codebook(const std::vector<double>& samples, int dim, int centroids, int iterations, RngStream& rng) {
    if (dim <= 0 || centroids <= 0 || iterations < 0) {
        throw ConfigError("fit_codebook: dim/centroids must be positive, iterations >= 0");
    }
    if (samples.empty() || samples.size() % dim != 0) {
        throw ConfigError("fit_codebook: sample buffer must be a non-empty multiple of dim");
    }
    const size_t n = samples.size() / dim;
    if (n < static_cast<size_t>(centroids)) {
        throw ConfigError("fit_codebook: need at least " + std::to_string(centroids) + " samples, got " + std::to_string(n));
    }

    auto dist2 = [&](const double* a, const double* b) {
        double d = 0.0;
        for (int c = 0; c < dim; ++c) {
            const double diff = a[c] - b[c];
            d += diff * diff;
        }
        return d;
    };
    auto sample_at = [&](size_t i) { return &samples[i * dim]; };

    // k-means++ seeding.
    std::vector<double> means(static_cast<size_t>(centroids) * dim);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    {
        const size_t first = static_cast<size_t>(rng.next_unit() * static_cast<double>(n)) % n;
        std::copy(sample_at(first), sample_at(first) + dim, means.begin());
    }
    for (int c = 1; c < centroids; ++c) {
        const double* prev = &means[static_cast<size_t>(c - 1) * dim];
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], dist2(sample_at(i), prev));
            total += best[i];
        }
        size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.next_unit() * total;
            double acc = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += best[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<size_t>(rng.next_u64() % n); // all mass collapsed; any sample works
        }
        std::copy(sample_at(pick), sample_at(pick) + dim, &means[static_cast<size_t>(c) * dim]);
    }

    // Lloyd iterations, fixed count; empty clusters keep their centroid.
    std::vector<int> assign(n, 0);
    std::vector<double> sums(static_cast<size_t>(centroids) * dim);
    std::vector<size_t> counts(static_cast<size_t>(centroids));
    for (int it = 0; it < iterations; ++it) {
        for (size_t i = 0; i < n; ++i) {
            int bc = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < centroids; ++c) {
                const double d = dist2(sample_at(i), &means[static_cast<size_t>(c) * dim]);
                if (d < bd) {
                    bd = d;
                    bc = c;
                }
            }
            assign[i] = bc;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            double* s = &sums[static_cast<size_t>(assign[i]) * dim];
            const double* x = sample_at(i);
            for (int c = 0; c < dim; ++c) {
                s[c] += x[c];
            }
            ++counts[static_cast<size_t>(assign[i])];
        }
        for (int c = 0; c < centroids; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) {
                continue;
            }
            const double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
            for (int d = 0; d < dim; ++d) {
                means[static_cast<size_t>(c) * dim + d] = sums[static_cast<size_t>(c) * dim + d] * inv;
            }
        }
    }

    means.insert(means.end(), static_cast<size_t>(dim), 0.0); // reserved zero row
    return Codebook(QuantizeMode::vq, dim, std::move(means));
}

} // namespace vardiv
