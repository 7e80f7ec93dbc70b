#include "vardiv/schedules.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

namespace vardiv {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_piecewise(CfgVariant v) {
    return v == CfgVariant::constant || v == CfgVariant::constant_inverse;
}

// Ramp gamma(k) on [1, k_max] for the interpolation family.
double interp_gamma(CfgVariant v, int k, int k_max) {
    if (k > k_max) {
        return 1.0; // clamp strictly beyond k_max, all variants
    }
    const double t = static_cast<double>(k - 1) / static_cast<double>(k_max - 1);
    switch (v) {
        case CfgVariant::cosine: return 1.0 - 0.5 * (std::cos(kPi * t) + 1.0);
        case CfgVariant::cosine_inverse: return 0.5 * (std::cos(kPi * t) + 1.0);
        case CfgVariant::linear: return t;
        case CfgVariant::linear_inverse: return 1.0 - t;
        case CfgVariant::interp_constant: return 0.5;
        default: throw InternalError("interp_gamma: piecewise variant in interpolation family");
    }
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw ConfigError(std::string("schedule: non-finite ") + what);
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        out.push_back(cur);
    }
    return out;
}

double parse_num(const std::string& key, const std::string& val) {
    try {
        size_t used = 0;
        const double d = std::stod(val, &used);
        if (used != val.size()) {
            throw std::invalid_argument("trailing");
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError("schedule: bad numeric value for '" + key + "': '" + val + "'");
    }
}

int parse_int(const std::string& key, const std::string& val) {
    const double d = parse_num(key, val);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) {
        throw ConfigError("schedule: '" + key + "' must be an integer, got '" + val + "'");
    }
    return i;
}

// Strips an optional "name=" routing tag, returns ':'-separated fields.
std::vector<std::string> schedule_fields(const std::string& text, const char* tag) {
    std::string body = text;
    const std::string prefix = std::string(tag) + "=";
    if (body.rfind(prefix, 0) == 0) {
        body = body.substr(prefix.size());
    }
    auto fields = split(body, ':');
    if (fields.empty()) {
        throw ConfigError(std::string("schedule: empty ") + tag + " spec");
    }
    return fields;
}

std::map<std::string, std::string> keyed_fields(const std::vector<std::string>& fields, size_t from, const std::string& ctx) {
    std::map<std::string, std::string> kv;
    for (size_t i = from; i < fields.size(); ++i) {
        const size_t eq = fields[i].find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("schedule: expected key=value, got '" + fields[i] + "' in " + ctx);
        }
        kv[fields[i].substr(0, eq)] = fields[i].substr(eq + 1);
    }
    return kv;
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void CfgSchedule::validate(int K) const {
    check_finite(w1, "w1");
    check_finite(wK, "wK");
    if (K < 1) {
        throw ConfigError("CfgSchedule: K must be >= 1");
    }
    if (k_min < 1 || k_min > k_max || k_max > K) {
        throw ConfigError("CfgSchedule: need 1 <= k_min <= k_max <= K, got k_min=" + std::to_string(k_min) +
                          " k_max=" + std::to_string(k_max) + " K=" + std::to_string(K));
    }
    if (family == CfgFamily::interpolation) {
        if (is_piecewise(variant)) {
            throw ConfigError("CfgSchedule: variant belongs to the piecewise family");
        }
        if (k_max == 1) {
            throw ConfigError("CfgSchedule: interpolation family requires k_max >= 2");
        }
    } else if (!is_piecewise(variant)) {
        throw ConfigError("CfgSchedule: variant belongs to the interpolation family");
    }
}

double cfg_weight(const CfgSchedule& s, int k, int K) {
    s.validate(K);
    if (k < 1 || k > K) {
        throw ConfigError("cfg_weight: stage " + std::to_string(k) + " out of range [1, " + std::to_string(K) + "]");
    }
    if (s.family == CfgFamily::piecewise_constant) {
        return (k >= s.k_min && k <= s.k_max) ? s.w1 : s.wK;
    }
    const double g = interp_gamma(s.variant, k, s.k_max);
    return (1.0 - g) * s.w1 + g * s.wK;
}

void AnnealSchedule::validate() const {
    check_finite(sigma, "sigma");
    if (sigma < 0.0 || sigma > 1.0) {
        throw ConfigError("AnnealSchedule: sigma must lie in [0, 1], got " + fmt_num(sigma));
    }
    if (k_max < 1) {
        throw ConfigError("AnnealSchedule: k_max must be >= 1");
    }
    if (k_max == 1 && variant != AnnealVariant::constant) {
        throw ConfigError("AnnealSchedule: k_max = 1 requires the constant variant");
    }
}

double anneal_level(const AnnealSchedule& s, int k) {
    s.validate();
    if (k < 1) {
        throw ConfigError("anneal_level: stage must be >= 1, got " + std::to_string(k));
    }
    if (k > s.k_max) {
        return 0.0;
    }
    switch (s.variant) {
        case AnnealVariant::constant: return s.sigma;
        case AnnealVariant::linear: return s.sigma * (1.0 - static_cast<double>(k - 1) / static_cast<double>(s.k_max - 1));
        case AnnealVariant::cosine: return 0.5 * s.sigma * (std::cos(kPi * static_cast<double>(k - 1) / static_cast<double>(s.k_max - 1)) + 1.0);
    }
    throw InternalError("anneal_level: unknown variant");
}

CfgSchedule parse_cfg_schedule(const std::string& text) {
    const auto fields = schedule_fields(text, "cfg");
    if (fields.size() < 2) {
        throw ConfigError("cfg schedule: expected family:variant:..., got '" + text + "'");
    }
    CfgSchedule s;
    const std::string& family = fields[0];
    const std::string& variant = fields[1];
    if (family == "pw" || family == "piecewise") {
        s.family = CfgFamily::piecewise_constant;
        if (variant == "constant") {
            s.variant = CfgVariant::constant;
        } else if (variant == "constant_inverse") {
            s.variant = CfgVariant::constant_inverse;
        } else {
            throw ConfigError("cfg schedule: unknown piecewise variant '" + variant + "'");
        }
    } else if (family == "interp" || family == "interpolation") {
        s.family = CfgFamily::interpolation;
        if (variant == "cosine") {
            s.variant = CfgVariant::cosine;
        } else if (variant == "cosine_inverse") {
            s.variant = CfgVariant::cosine_inverse;
        } else if (variant == "linear") {
            s.variant = CfgVariant::linear;
        } else if (variant == "linear_inverse") {
            s.variant = CfgVariant::linear_inverse;
        } else if (variant == "constant") {
            s.variant = CfgVariant::interp_constant;
        } else {
            throw ConfigError("cfg schedule: unknown interpolation variant '" + variant + "'");
        }
    } else {
        throw ConfigError("cfg schedule: unknown family '" + family + "'");
    }

    bool saw_kmax = false;
    for (const auto& [key, val] : keyed_fields(fields, 2, text)) {
        if (key == "w1") {
            s.w1 = parse_num(key, val);
        } else if (key == "wK") {
            s.wK = parse_num(key, val);
        } else if (key == "kmin") {
            s.k_min = parse_int(key, val);
        } else if (key == "kmax") {
            s.k_max = parse_int(key, val);
            saw_kmax = true;
        } else {
            throw ConfigError("cfg schedule: unknown key '" + key + "'");
        }
    }
    if (!saw_kmax) {
        throw ConfigError("cfg schedule: missing kmax in '" + text + "'");
    }
    s.validate(s.k_max >= s.k_min ? s.k_max : s.k_min); // structural check; full check happens at use with real K
    return s;
}

AnnealSchedule parse_anneal_schedule(const std::string& text) {
    const auto fields = schedule_fields(text, "anneal");
    AnnealSchedule s;
    const std::string& variant = fields[0];
    if (variant == "linear") {
        s.variant = AnnealVariant::linear;
    } else if (variant == "cosine") {
        s.variant = AnnealVariant::cosine;
    } else if (variant == "constant") {
        s.variant = AnnealVariant::constant;
    } else {
        throw ConfigError("anneal schedule: unknown variant '" + variant + "'");
    }

    bool saw_sigma = false, saw_kmax = false;
    for (const auto& [key, val] : keyed_fields(fields, 1, text)) {
        if (key == "sigma") {
            s.sigma = parse_num(key, val);
            saw_sigma = true;
        } else if (key == "kmax") {
            s.k_max = parse_int(key, val);
            saw_kmax = true;
        } else if (key == "target") {
            if (val == "text") {
                s.target = AnnealTarget::text_embedding;
            } else if (val == "sos") {
                s.target = AnnealTarget::sos_token;
            } else {
                throw ConfigError("anneal schedule: unknown target '" + val + "'");
            }
        } else {
            throw ConfigError("anneal schedule: unknown key '" + key + "'");
        }
    }
    if (!saw_sigma || !saw_kmax) {
        throw ConfigError("anneal schedule: missing sigma or kmax in '" + text + "'");
    }
    s.validate();
    return s;
}

std::string to_string(const CfgSchedule& s) {
    std::string out;
    if (s.family == CfgFamily::piecewise_constant) {
        out = "pw:";
        out += (s.variant == CfgVariant::constant) ? "constant" : "constant_inverse";
    } else {
        out = "interp:";
        switch (s.variant) {
            case CfgVariant::cosine: out += "cosine"; break;
            case CfgVariant::cosine_inverse: out += "cosine_inverse"; break;
            case CfgVariant::linear: out += "linear"; break;
            case CfgVariant::linear_inverse: out += "linear_inverse"; break;
            case CfgVariant::interp_constant: out += "constant"; break;
            default: throw InternalError("to_string: bad cfg variant");
        }
    }
    out += ":w1=" + fmt_num(s.w1) + ":wK=" + fmt_num(s.wK);
    if (s.family == CfgFamily::piecewise_constant) {
        out += ":kmin=" + std::to_string(s.k_min);
    }
    out += ":kmax=" + std::to_string(s.k_max);
    return out;
}

std::string to_string(const AnnealSchedule& s) {
    std::string out;
    switch (s.variant) {
        case AnnealVariant::linear: out = "linear"; break;
        case AnnealVariant::cosine: out = "cosine"; break;
        case AnnealVariant::constant: out = "constant"; break;
    }
    out += ":sigma=" + fmt_num(s.sigma) + ":kmax=" + std::to_string(s.k_max);
    out += ":target=";
    out += (s.target == AnnealTarget::text_embedding) ? "text" : "sos";
    return out;
}

} // namespace vardiv
