#include "vardiv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace vardiv {

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double frobenius(const std::vector<double>& m) {
    return norm2(m);
}

// Distance between two equally-sized images, normalized so that the maximum
// possible distance on [0, 1] pixels is 1.
double normalized_distance(const Image& a, const Image& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = a.rgb[i] - b.rgb[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.rgb.size()));
}

void check_same_dims(const Image& a, const Image& b, const char* what) {
    if (a.height != b.height || a.width != b.width) {
        throw ConfigError(std::string(what) + ": image dimensions differ (" +
                          std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                          std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
    }
}

// mu and population covariance (divide by n) of a feature set, flattened
// row-major; covariance regularized by +1e-8 I.
struct Moments {
    int dim = 0;
    std::vector<double> mean;
    std::vector<double> cov;
};

Moments moments_of(const std::vector<std::vector<double>>& feats, const char* side) {
    if (feats.size() < 2) {
        throw ConfigError(std::string("frechet_distance: set ") + side +
                          " needs >= 2 vectors, got " + std::to_string(feats.size()));
    }
    const int dim = static_cast<int>(feats[0].size());
    Moments m;
    m.dim = dim;
    m.mean.assign(dim, 0.0);
    for (const std::vector<double>& f : feats) {
        if (static_cast<int>(f.size()) != dim) {
            throw ConfigError("frechet_distance: inconsistent feature dimension within a set");
        }
        for (int i = 0; i < dim; ++i) m.mean[i] += f[i];
    }
    const double inv_n = 1.0 / static_cast<double>(feats.size());
    for (double& v : m.mean) v *= inv_n;

    m.cov.assign(static_cast<size_t>(dim) * dim, 0.0);
    for (const std::vector<double>& f : feats) {
        for (int i = 0; i < dim; ++i) {
            const double di = f[i] - m.mean[i];
            for (int j = 0; j < dim; ++j) {
                m.cov[static_cast<size_t>(i) * dim + j] += di * (f[j] - m.mean[j]);
            }
        }
    }
    for (double& v : m.cov) v *= inv_n;
    for (int i = 0; i < dim; ++i) {
        m.cov[static_cast<size_t>(i) * dim + i] += 1e-8;
    }
    return m;
}

// Symmetric PSD square root via eigendecomposition; negative eigenvalues
// (numerical noise) are clamped to zero.
std::vector<double> sqrtm_psd(const std::vector<double>& m, int n) {
    const EigenResult eig = jacobi_eigen(m, n);
    std::vector<double> root(static_cast<size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double lam = std::sqrt(std::max(0.0, eig.values[k]));
        if (lam == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            const double vi = eig.vectors[static_cast<size_t>(i) * n + k];
            for (int j = 0; j < n; ++j) {
                root[static_cast<size_t>(i) * n + j] +=
                    lam * vi * eig.vectors[static_cast<size_t>(j) * n + k];
            }
        }
    }
    return root;
}

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, int n) {
    std::vector<double> out(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const double aik = a[static_cast<size_t>(i) * n + k];
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                out[static_cast<size_t>(i) * n + j] += aik * b[static_cast<size_t>(k) * n + j];
            }
        }
    }
    return out;
}

double trace(const std::vector<double>& m, int n) {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += m[static_cast<size_t>(i) * n + i];
    return t;
}

} // namespace

void SampleSet::validate() const {
    if (images.size() < 2) {
        throw ConfigError("SampleSet: need >= 2 images, got " + std::to_string(images.size()));
    }
    for (size_t i = 1; i < images.size(); ++i) {
        check_same_dims(images[0], images[i], "SampleSet");
    }
}

EigenResult jacobi_eigen(const std::vector<double>& sym, int n) {
    if (n <= 0 || sym.size() != static_cast<size_t>(n) * n) {
        throw ConfigError("jacobi_eigen: matrix size does not match n = " + std::to_string(n));
    }
    std::vector<double> a = sym;
    std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;

    const double tol = 1e-10 * std::max(1.0, frobenius(a));
    auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j) off += at(i, j) * at(i, j);
            }
        }
        if (std::sqrt(off) <= tol) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (int j = 0; j < n; ++j) {
                    const double apj = at(p, j), aqj = at(q, j);
                    at(p, j) = c * apj - s * aqj;
                    at(q, j) = s * apj + c * aqj;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v[static_cast<size_t>(i) * n + p];
                    const double viq = v[static_cast<size_t>(i) * n + q];
                    v[static_cast<size_t>(i) * n + p] = c * vip - s * viq;
                    v[static_cast<size_t>(i) * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    // Sort eigenpairs ascending for a deterministic layout.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return at(x, x) < at(y, y); });

    EigenResult out;
    out.n = n;
    out.values.resize(n);
    out.vectors.assign(static_cast<size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        out.values[k] = at(order[k], order[k]);
        for (int i = 0; i < n; ++i) {
            out.vectors[static_cast<size_t>(i) * n + k] =
                v[static_cast<size_t>(i) * n + order[k]];
        }
    }
    return out;
}

double mean_pairwise_distance(const SampleSet& set) {
    set.validate();
    const size_t n = set.images.size();
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            sum += normalized_distance(set.images[i], set.images[j]);
        }
    }
    return sum / (static_cast<double>(n) * (n - 1) / 2.0);
}

double vendi_score(const SampleSet& set) {
    set.validate();
    const int n = static_cast<int>(set.images.size());

    std::vector<std::vector<double>> feats = pixel_features(set.images);
    std::vector<double> norms(n);
    for (int i = 0; i < n; ++i) norms[i] = norm2(feats[i]);

    std::vector<double> s(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        s[static_cast<size_t>(i) * n + i] = 1.0;
        for (int j = i + 1; j < n; ++j) {
            double sim;
            if (norms[i] == 0.0 && norms[j] == 0.0) {
                sim = 1.0; // two empty images are identical
            } else if (norms[i] == 0.0 || norms[j] == 0.0) {
                sim = 0.0; // an empty image shares nothing with a non-empty one
            } else {
                double dot = 0.0;
                for (size_t k = 0; k < feats[i].size(); ++k) dot += feats[i][k] * feats[j][k];
                sim = dot / (norms[i] * norms[j]);
            }
            if (!std::isfinite(sim)) {
                throw ConfigError("vendi_score: non-finite kernel entry");
            }
            s[static_cast<size_t>(i) * n + j] = sim;
            s[static_cast<size_t>(j) * n + i] = sim;
        }
    }

    for (double& x : s) x /= static_cast<double>(n);
    const EigenResult eig = jacobi_eigen(s, n);
    double entropy = 0.0;
    for (double lam : eig.values) {
        if (lam > 0.0) entropy -= lam * std::log(lam);
    }
    return std::exp(entropy);
}

double frechet_distance(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b) {
    const Moments ma = moments_of(a, "A");
    const Moments mb = moments_of(b, "B");
    if (ma.dim != mb.dim) {
        throw ConfigError("frechet_distance: feature dimensions differ (" +
                          std::to_string(ma.dim) + " vs " + std::to_string(mb.dim) + ")");
    }
    const int d = ma.dim;

    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = ma.mean[i] - mb.mean[i];
        mean_term += diff * diff;
    }

    const std::vector<double> root_a = sqrtm_psd(ma.cov, d);
    std::vector<double> inner = matmul(matmul(root_a, mb.cov, d), root_a, d);
    for (int i = 0; i < d; ++i) { // symmetrize away accumulation noise
        for (int j = i + 1; j < d; ++j) {
            const double avg = 0.5 * (inner[static_cast<size_t>(i) * d + j] +
                                      inner[static_cast<size_t>(j) * d + i]);
            inner[static_cast<size_t>(i) * d + j] = avg;
            inner[static_cast<size_t>(j) * d + i] = avg;
        }
    }
    const std::vector<double> cross_root = sqrtm_psd(inner, d);

    const double value =
        mean_term + trace(ma.cov, d) + trace(mb.cov, d) - 2.0 * trace(cross_root, d);
    return std::max(0.0, value); // distances never go negative; clip fp residue
}

double quality_proxy(const Image& image, const std::vector<Image>& references) {
    if (references.empty()) {
        throw ConfigError("quality_proxy: empty reference set");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Image& ref : references) {
        check_same_dims(image, ref, "quality_proxy");
        best = std::min(best, normalized_distance(image, ref));
    }
    return -best;
}

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint>& points) {
    if (points.empty()) {
        throw ConfigError("pareto_front: empty point set");
    }
    for (ParetoPoint& p : points) {
        p.dominated = false;
        for (const ParetoPoint& o : points) {
            if (o.diversity >= p.diversity && o.quality >= p.quality &&
                (o.diversity > p.diversity || o.quality > p.quality)) {
                p.dominated = true;
                break;
            }
        }
    }
    std::vector<ParetoPoint> front;
    for (const ParetoPoint& p : points) {
        if (!p.dominated) front.push_back(p);
    }
    std::sort(front.begin(), front.end(), [](const ParetoPoint& x, const ParetoPoint& y) {
        return std::tie(x.diversity, x.quality, x.digest) <
               std::tie(y.diversity, y.quality, y.digest);
    });
    return front;
}

std::vector<double> pixel_features(const Image& image) {
    return image.rgb;
}

std::vector<std::vector<double>> pixel_features(const std::vector<Image>& images) {
    std::vector<std::vector<double>> out;
    out.reserve(images.size());
    for (const Image& img : images) out.push_back(img.rgb);
    return out;
}

std::vector<std::vector<double>> projected_features(const std::vector<Image>& images,
                                                    int dim, uint64_t seed) {
    if (dim <= 0) {
        throw ConfigError("projected_features: dim must be positive");
    }
    if (images.empty()) {
        return {};
    }
    const size_t src = images[0].rgb.size();
    RngStream rng(seed, derive_stream({0x70726F6Au, static_cast<uint64_t>(dim)}));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<double> proj(static_cast<size_t>(dim) * src);
    for (double& p : proj) p = scale * rng.next_gaussian();

    std::vector<std::vector<double>> out;
    out.reserve(images.size());
    for (const Image& img : images) {
        if (img.rgb.size() != src) {
            throw ConfigError("projected_features: images have differing sizes");
        }
        std::vector<double> f(dim, 0.0);
        for (int r = 0; r < dim; ++r) {
            const double* row = &proj[static_cast<size_t>(r) * src];
            double acc = 0.0;
            for (size_t c = 0; c < src; ++c) acc += row[c] * img.rgb[c];
            f[r] = acc;
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace vardiv
