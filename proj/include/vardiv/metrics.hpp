#pragma once

// Diversity and quality measurement on pixel-space features.
//
// All four numbers are pixel-space stand-ins for the usual pretrained-network
// metrics, and reports label them as such (MPD_pix, Vendi_pix, Frechet_pix,
// Q_proxy) so absolute values are never mistaken for LPIPS/FID/ImageReward
// scores. Only comparisons between runs of this artifact are meaningful.
//
//   * mean_pairwise_distance — mean over unordered image pairs of
//     ||a - b||_2 / sqrt(#components), so all-black vs all-white is 1.0;
//   * vendi_score — exp(entropy of the eigenvalues of S/n) for the cosine
//     similarity matrix S of the flattened images: the effective number of
//     dissimilar elements, in [1, n];
//   * frechet_distance — Gaussian-approximation distance between two feature
//     sets using population covariances regularized by +1e-8 I;
//   * quality_proxy — negative normalized distance to the nearest reference
//     image (0 is perfect, lower is worse).
//
// The symmetric eigensolver behind Vendi and Frechet is a cyclic Jacobi
// iteration, plenty at the n <= 64 set sizes this artifact works with.

#include <cstdint>
#include <string>
#include <vector>

#include "vardiv/errors.hpp"
#include "vardiv/image.hpp"
#include "vardiv/rng.hpp"

namespace vardiv {

// A group of same-sized images generated for one condition.
struct SampleSet {
    int condition_id = -1;
    std::vector<Image> images;
    std::string extractor = "pixel"; // feature tag recorded in reports

    // Requires n >= 2 and identical dimensions throughout.
    void validate() const;
};

// One row of measurements for a sample set.
struct MetricsReport {
    double mpd     = 0.0; // MPD_pix
    double vendi   = 1.0; // Vendi_pix, in [1, n]
    double frechet = 0.0; // Frechet_pix vs the condition's references
    double quality = 0.0; // Q_proxy, mean over the set
    int    n       = 0;
};

// A (diversity, quality) point from one swept configuration.
struct ParetoPoint {
    std::string digest;   // canonical digest of the configuration
    double diversity = 0.0;
    double quality   = 0.0;
    bool   dominated = false;
};

// Eigendecomposition of a symmetric matrix: A = V diag(values) V^T with
// eigenvalues ascending and eigenvector j stored as column j of `vectors`
// (n x n row-major).
struct EigenResult {
    int n = 0;
    std::vector<double> values;
    std::vector<double> vectors;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
// 1e-10 * max(1, ||A||_F), capped at 100 sweeps.
EigenResult jacobi_eigen(const std::vector<double>& sym, int n);

// Mean over all n(n-1)/2 unordered pairs of normalized pixel L2 distance.
double mean_pairwise_distance(const SampleSet& set);

// Effective number of dissimilar elements under the cosine kernel. Zero
// images are treated as mutually identical (similarity 1) and orthogonal to
// everything else, which keeps the kernel PSD with a unit diagonal.
double vendi_score(const SampleSet& set);

// || mu_A - mu_B ||^2 + tr(S_A + S_B - 2 (S_A^{1/2} S_B S_A^{1/2})^{1/2})
// over feature vectors (each set >= 2 vectors, equal dimension).
double frechet_distance(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b);

// Negative normalized pixel L2 distance to the nearest reference.
double quality_proxy(const Image& image, const std::vector<Image>& references);

// Marks every point's dominated flag in place (dominated iff some other point
// is >= on both axes and > on at least one), then returns the non-dominated
// subset sorted by ascending diversity (ties by quality, then digest).
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint>& points);

// Flattened image pixels as feature vectors.
std::vector<double> pixel_features(const Image& image);
std::vector<std::vector<double>> pixel_features(const std::vector<Image>& images);

// Seeded Gaussian random projection of the pixels down to `dim` components.
// Both sides of a Frechet comparison must use the same seed and dim.
std::vector<std::vector<double>> projected_features(const std::vector<Image>& images,
                                                    int dim, uint64_t seed);

} // namespace vardiv
