#pragma once

// Multi-scale residual pyramid codec.
//
// A target feature map Z is encoded as K token grids r_1..r_K over a scale
// schedule s_1..s_K. Stage k quantizes the downsampled residual between Z and
// the running canvas, and the canvas accumulates the upsampled dequantized
// grids in ascending stage order:
//
//     r_k = quantize(down(Z - Z_{k-1}, s_k))
//     Z_k = sum_{i<=k} up(dequantize(r_i), s_K)
//
// Two quantizer modes share this loop. "vq" snaps each residual vector to its
// nearest codebook row (ties -> lowest index). "identity" stores the raw
// residual and exists as a verification instrument: with it the encode loop
// reconstructs Z to floating-point accuracy, which pins down the loop algebra
// independently of any codebook.
//
// scale_travel re-runs the same loop body on an existing canvas for the first
// m stages only, recovering a coarse token prefix from fine content.

#include <cstdint>
#include <vector>

#include "vardiv/grid.hpp"
#include "vardiv/image.hpp"
#include "vardiv/rng.hpp"

namespace vardiv {

enum class QuantizeMode : uint8_t { vq = 0, identity = 1 };

struct Codebook {
    QuantizeMode mode = QuantizeMode::vq;
    int dim = 0;
    std::vector<double> table; // (size, dim) row-major; empty in identity mode

    Codebook() = default;
    Codebook(QuantizeMode mode_, int dim_, std::vector<double> table_ = {});

    int size() const { return dim > 0 ? static_cast<int>(table.size()) / dim : 0; }
    const double* row(int v) const { return &table[static_cast<size_t>(v) * dim]; }

    static Codebook identity(int dim_) { return Codebook(QuantizeMode::identity, dim_); }

    bool operator==(const Codebook& o) const {
        return mode == o.mode && dim == o.dim && table == o.table;
    }
};

// Tokens for one stage. vq mode carries codebook indices; identity mode
// carries the raw residual vectors.
struct TokenGrid {
    int scale_index = 0; // 1-based stage this grid belongs to
    int height = 0;
    int width  = 0;
    int dim    = 0;
    QuantizeMode mode = QuantizeMode::vq;
    std::vector<int32_t> indices; // vq payload, (h, w)
    std::vector<double>  vectors; // identity payload, (h, w, dim)

    size_t cells() const { return static_cast<size_t>(height) * width; }

    bool operator==(const TokenGrid& o) const {
        return scale_index == o.scale_index && height == o.height && width == o.width &&
               dim == o.dim && mode == o.mode && indices == o.indices && vectors == o.vectors;
    }
};

// Prefix-structured stack of token grids: grids[i] is stage i+1. The schedule
// always covers the full K stages even when only a prefix is present.
struct TokenPyramid {
    ScaleSchedule schedule;
    std::vector<TokenGrid> grids;

    int stages_present() const { return static_cast<int>(grids.size()); }
    void validate(const Codebook& cb) const;

    bool operator==(const TokenPyramid& o) const {
        return schedule == o.schedule && grids == o.grids;
    }
};

TokenGrid   quantize(const FeatureGrid& residual, const Codebook& cb, int scale_index = 0);
FeatureGrid dequantize(const TokenGrid& tokens, const Codebook& cb);

// Canvas at the final scale from the first `prefix` grids (all, if < 0).
FeatureGrid accumulate_canvas(const TokenPyramid& pyr, const Codebook& cb, int prefix = -1);

TokenPyramid multi_scale_encode(const FeatureGrid& target, const ScaleSchedule& schedule, const Codebook& cb);

// Coarse prefix r~_1..r~_m recovered from an existing canvas (same loop body
// as the encoder, truncated at stage m).
TokenPyramid scale_travel(const FeatureGrid& canvas, const ScaleSchedule& schedule, int m, const Codebook& cb);

// Affine channel map feature canvas -> RGB, clamped to [0, 1].
struct ChannelDecoder {
    int  dim = 0;
    std::vector<double> weight; // (3, dim) row-major
    std::vector<double> bias;   // (3)

    static ChannelDecoder identity_rgb(); // dim 3, unit weight, zero bias
};

Image decode_image(const FeatureGrid& canvas, const ChannelDecoder& dec);

// k-means (k-means++ seeding, fixed iteration count) over residual sample
// vectors; a zero row is appended so the final stage can always leave small
// residuals untouched. Result has centroids + 1 rows.
Codebook fit_codebook(const std::vector<double>& samples, int dim, int centroids, int iterations, RngStream& rng);

} // namespace vardiv
