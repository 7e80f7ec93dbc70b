#include "vardiv/codec_io.hpp"

#include <cstring>
#include <fstream>

namespace vardiv {

namespace {

constexpr uint32_t kPyramidVersion  = 1;
constexpr uint32_t kCodebookVersion = 1;

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

void put_i32(std::vector<unsigned char>& out, int32_t v) {
    put_u32(out, static_cast<uint32_t>(v));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFF));
    }
}

struct Reader {
    const std::vector<unsigned char>& bytes;
    size_t pos = 0;
    const char* what;

    void need(size_t n) const {
        if (bytes.size() - pos < n) {
            throw ConfigError(std::string(what) + ": truncated stream");
        }
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        }
        pos += 4;
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    double f64() {
        need(8);
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
        }
        pos += 8;
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    void magic(const char* m) {
        need(4);
        if (std::memcmp(&bytes[pos], m, 4) != 0) {
            throw ConfigError(std::string(what) + ": bad magic");
        }
        pos += 4;
    }
};

std::vector<unsigned char> slurp(const std::string& path, const char* op) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw MissingInputError(std::string(op) + ": cannot open '" + path + "'");
    }
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<unsigned char>& bytes, const char* op) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw MissingInputError(std::string(op) + ": cannot open '" + path + "' for writing");
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw MissingInputError(std::string(op) + ": short write to '" + path + "'");
    }
}

} // namespace

std::vector<unsigned char> pyramid_encode(const TokenPyramid& pyr, const Codebook& cb) {
    pyr.validate(cb);
    std::vector<unsigned char> out = {'V', 'A', 'R', 'P'};
    put_u32(out, kPyramidVersion);
    put_u32(out, static_cast<uint32_t>(pyr.schedule.stages()));
    for (const auto& [h, w] : pyr.schedule.scales) {
        put_u32(out, static_cast<uint32_t>(h));
        put_u32(out, static_cast<uint32_t>(w));
    }
    put_u32(out, static_cast<uint32_t>(cb.dim));
    put_u32(out, static_cast<uint32_t>(cb.mode == QuantizeMode::vq ? cb.size() : 0));
    out.push_back(static_cast<unsigned char>(cb.mode));
    put_u32(out, static_cast<uint32_t>(pyr.stages_present()));
    for (const TokenGrid& g : pyr.grids) {
        if (g.mode == QuantizeMode::vq) {
            for (int32_t idx : g.indices) {
                put_i32(out, idx);
            }
        } else {
            for (double v : g.vectors) {
                put_f64(out, v);
            }
        }
    }
    return out;
}

TokenPyramid pyramid_decode(const std::vector<unsigned char>& bytes, const Codebook& cb) {
    Reader r{bytes, 0, "pyramid_decode"};
    r.magic("VARP");
    if (r.u32() != kPyramidVersion) {
        throw ConfigError("pyramid_decode: unsupported version");
    }
    const uint32_t K = r.u32();
    if (K == 0 || K > 64) {
        throw ConfigError("pyramid_decode: implausible stage count");
    }
    std::vector<std::pair<int, int>> scales;
    scales.reserve(K);
    for (uint32_t k = 0; k < K; ++k) {
        const int h = static_cast<int>(r.u32());
        const int w = static_cast<int>(r.u32());
        scales.emplace_back(h, w);
    }
    const uint32_t dim = r.u32();
    const uint32_t vocab = r.u32();
    const auto mode = static_cast<QuantizeMode>(r.u8());
    if (mode != cb.mode || static_cast<int>(dim) != cb.dim) {
        throw ConfigError("pyramid_decode: stream mode/dim does not match codebook");
    }
    if (mode == QuantizeMode::vq && static_cast<int>(vocab) != cb.size()) {
        throw ConfigError("pyramid_decode: stream vocab does not match codebook");
    }
    const uint32_t present = r.u32();
    if (present == 0 || present > K) {
        throw ConfigError("pyramid_decode: bad grid count");
    }

    TokenPyramid pyr;
    pyr.schedule = ScaleSchedule(std::move(scales));
    for (uint32_t k = 1; k <= present; ++k) {
        const auto [h, w] = pyr.schedule.scale(static_cast<int>(k));
        TokenGrid g;
        g.scale_index = static_cast<int>(k);
        g.height = h;
        g.width  = w;
        g.dim    = cb.dim;
        g.mode   = mode;
        if (mode == QuantizeMode::vq) {
            g.indices.resize(g.cells());
            for (auto& idx : g.indices) {
                idx = r.i32();
            }
        } else {
            g.vectors.resize(g.cells() * static_cast<size_t>(cb.dim));
            for (auto& v : g.vectors) {
                v = r.f64();
            }
        }
        pyr.grids.push_back(std::move(g));
    }
    if (r.pos != bytes.size()) {
        throw ConfigError("pyramid_decode: trailing bytes");
    }
    pyr.validate(cb);
    return pyr;
}

void write_pyramid(const std::string& path, const TokenPyramid& pyr, const Codebook& cb) {
    spit(path, pyramid_encode(pyr, cb), "write_pyramid");
}

TokenPyramid read_pyramid(const std::string& path, const Codebook& cb) {
    return pyramid_decode(slurp(path, "read_pyramid"), cb);
}

std::vector<unsigned char> codebook_encode(const Codebook& cb) {
    std::vector<unsigned char> out = {'V', 'A', 'R', 'C'};
    put_u32(out, kCodebookVersion);
    put_u32(out, static_cast<uint32_t>(cb.mode == QuantizeMode::vq ? cb.size() : 0));
    put_u32(out, static_cast<uint32_t>(cb.dim));
    out.push_back(static_cast<unsigned char>(cb.mode));
    for (double v : cb.table) {
        put_f64(out, v);
    }
    return out;
}

Codebook codebook_decode(const std::vector<unsigned char>& bytes) {
    Reader r{bytes, 0, "codebook_decode"};
    r.magic("VARC");
    if (r.u32() != kCodebookVersion) {
        throw ConfigError("codebook_decode: unsupported version");
    }
    const uint32_t rows = r.u32();
    const uint32_t dim = r.u32();
    const auto mode = static_cast<QuantizeMode>(r.u8());
    if (mode == QuantizeMode::identity) {
        if (rows != 0 || r.pos != bytes.size()) {
            throw ConfigError("codebook_decode: identity stream carries a table");
        }
        return Codebook::identity(static_cast<int>(dim));
    }
    std::vector<double> table(static_cast<size_t>(rows) * dim);
    for (auto& v : table) {
        v = r.f64();
    }
    if (r.pos != bytes.size()) {
        throw ConfigError("codebook_decode: trailing bytes");
    }
    return Codebook(QuantizeMode::vq, static_cast<int>(dim), std::move(table));
}

void write_codebook(const std::string& path, const Codebook& cb) {
    spit(path, codebook_encode(cb), "write_codebook");
}

Codebook read_codebook(const std::string& path) {
    return codebook_decode(slurp(path, "read_codebook"));
}

} // namespace vardiv
