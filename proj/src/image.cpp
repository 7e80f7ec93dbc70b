#include "vardiv/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace vardiv {

namespace {

unsigned char to_byte(double v) {
    if (v <= 0.0) return 0;
    if (v >= 1.0) return 255;
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

} // namespace

std::vector<unsigned char> ppm_encode(const Image& img) {
    if (img.rgb.empty()) {
        throw ConfigError("ppm_encode: empty image");
    }
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<unsigned char> out(header, header + n);
    out.reserve(out.size() + img.rgb.size());
    for (double v : img.rgb) {
        out.push_back(to_byte(v));
    }
    return out;
}

Image ppm_decode(const std::vector<unsigned char>& bytes) {
    // Minimal P6 reader for our own output: "P6\n<w> <h>\n255\n" + payload.
    size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size() && std::isspace(bytes[pos])) {
            ++pos;
        }
        if (pos < bytes.size() && bytes[pos] == '#') { // comment line
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
            while (pos < bytes.size() && std::isspace(bytes[pos])) {
                ++pos;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) {
            tok.push_back(static_cast<char>(bytes[pos++]));
        }
        return tok;
    };

    if (next_token() != "P6") {
        throw ConfigError("ppm_decode: not a P6 file");
    }
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw ConfigError("ppm_decode: malformed header");
    }
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw ConfigError("ppm_decode: unsupported header");
    }
    ++pos; // single whitespace byte after maxval
    const size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - pos < need) {
        throw ConfigError("ppm_decode: truncated payload");
    }
    Image img(h, w);
    for (size_t i = 0; i < need; ++i) {
        img.rgb[i] = static_cast<double>(bytes[pos + i]) / 255.0;
    }
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    const auto bytes = ppm_encode(img);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw MissingInputError("write_ppm: cannot open '" + path + "' for writing");
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw MissingInputError("write_ppm: short write to '" + path + "'");
    }
}

Image read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw MissingInputError("read_ppm: cannot open '" + path + "'");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return ppm_decode(bytes);
}

} // namespace vardiv
