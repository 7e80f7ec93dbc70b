#pragma once

// RGB images in [0, 1] plus binary PPM (P6, maxval 255) reading/writing.
// PPM is the interchange format for corpus and generated images; writes are
// byte-deterministic so reruns with the same seed produce identical files.

#include <string>
#include <vector>

#include "vardiv/errors.hpp"

namespace vardiv {

struct Image {
    int height = 0;
    int width  = 0;
    std::vector<double> rgb; // row-major (h, w, 3), values in [0, 1]

    Image() = default;
    Image(int h, int w, double fill = 0.0) : height(h), width(w) {
        if (h <= 0 || w <= 0) {
            throw ConfigError("Image: dims must be positive");
        }
        rgb.assign(static_cast<size_t>(h) * w * 3, fill);
    }

    double& at(int i, int j, int c) {
        return rgb[(static_cast<size_t>(i) * width + j) * 3 + c];
    }
    double at(int i, int j, int c) const {
        return rgb[(static_cast<size_t>(i) * width + j) * 3 + c];
    }

    bool same_dims(const Image& o) const { return height == o.height && width == o.width; }

    // Flat pixel vector, used by metric kernels.
    const std::vector<double>& flat() const { return rgb; }
};

// Serialize to P6 bytes (header + one byte per channel, round-to-nearest).
std::vector<unsigned char> ppm_encode(const Image& img);
Image ppm_decode(const std::vector<unsigned char>& bytes);

void  write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

} // namespace vardiv
