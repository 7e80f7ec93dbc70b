#include "vardiv/harness.hpp"

#include "vardiv/codec_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace vardiv {

namespace {

// Projection dimension and seed for Frechet features, shared by every run so
// distances stay comparable across methods and sweeps.
constexpr int      kFrechetDim  = 8;
constexpr uint64_t kFrechetSeed = 0x46454154; // "FEAT"

// Stream tags for the harness's own deterministic draws.
constexpr uint64_t kTagKey      = 0x6B6579;   // prototype key vectors
constexpr uint64_t kTagCodebook = 0x636268;   // k-means seeding
constexpr uint64_t kTagSosProj  = 0x736F73;   // start-token projection
constexpr uint64_t kTagLinear   = 0x6C696E;   // linear-model init

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingInputError("cannot open " + path +
                                " (run the producing subcommand first)");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw MissingInputError("cannot write " + path);
    }
    out << text;
}

nlohmann::json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
}

std::vector<double> normalized(std::vector<double> v, const char* what) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (!(n > 1e-12)) {
        throw InternalError(std::string(what) + ": vector norm vanished");
    }
    for (double& x : v) x /= n;
    return v;
}

FeatureGrid feature_map(const Image& img, double gain) {
    FeatureGrid f(img.height, img.width, 3);
    f.values = img.rgb;
    for (double& v : f.values) v *= gain;
    return f;
}

ChannelDecoder scaled_rgb_decoder(double gain) {
    ChannelDecoder dec = ChannelDecoder::identity_rgb();
    for (double& w : dec.weight) w /= gain;
    return dec;
}

// ---- named little-endian f64 parameter blocks ----

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct ByteReader {
    const std::string& bytes;
    size_t pos = 0;
    std::string path;

    void need(size_t n) const {
        if (pos + n > bytes.size()) {
            throw ConfigError("truncated parameter file " + path);
        }
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
};

using ParamBlocks = std::map<std::string, std::vector<double>>;

void write_params(const std::string& path, const ParamBlocks& blocks) {
    std::string out = "VARB";
    put_u32(out, 1); // version
    put_u32(out, static_cast<uint32_t>(blocks.size()));
    for (const auto& [name, values] : blocks) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u64(out, values.size());
        for (double v : values) put_f64(out, v);
    }
    write_text_file(path, out);
}

ParamBlocks read_params(const std::string& path) {
    const std::string bytes = read_text_file(path);
    ByteReader r{bytes, 0, path};
    r.need(4);
    if (bytes.compare(0, 4, "VARB") != 0) {
        throw ConfigError("bad magic in parameter file " + path);
    }
    r.pos = 4;
    if (r.u32() != 1) {
        throw ConfigError("unsupported parameter file version in " + path);
    }
    const uint32_t count = r.u32();
    ParamBlocks blocks;
    for (uint32_t b = 0; b < count; ++b) {
        const uint32_t name_len = r.u32();
        r.need(name_len);
        std::string name = bytes.substr(r.pos, name_len);
        r.pos += name_len;
        const uint64_t n = r.u64();
        std::vector<double> values(n);
        for (uint64_t i = 0; i < n; ++i) values[i] = r.f64();
        blocks.emplace(std::move(name), std::move(values));
    }
    return blocks;
}

const std::vector<double>& block_of(const ParamBlocks& blocks, const std::string& name,
                                    const std::string& path) {
    const auto it = blocks.find(name);
    if (it == blocks.end()) {
        throw ConfigError("parameter file " + path + " is missing block \"" + name + "\"");
    }
    return it->second;
}

// ---- JSON field helpers with friendly errors ----

template <typename T>
T field_or(const nlohmann::json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field \"") + name + "\": " + e.what());
    }
}

AnnealVariant anneal_variant_from(const std::string& name) {
    if (name == "linear") return AnnealVariant::linear;
    if (name == "cosine") return AnnealVariant::cosine;
    if (name == "constant") return AnnealVariant::constant;
    throw ConfigError("unknown anneal variant \"" + name + "\" (linear|cosine|constant)");
}

std::string corpus_image_name(int cid, int p) {
    return "c" + std::to_string(cid) + "_p" + std::to_string(p) + ".ppm";
}

std::string pyramid_name(int cid, int p) {
    return "pyramids/c" + std::to_string(cid) + "_p" + std::to_string(p) + ".varp";
}

nlohmann::json schedule_to_json(const ScaleSchedule& s) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [h, w] : s.scales) out.push_back(nlohmann::json::array({h, w}));
    return out;
}

ScaleSchedule schedule_from_json(const nlohmann::json& j) {
    std::vector<std::pair<int, int>> scales;
    for (const nlohmann::json& item : j) {
        scales.emplace_back(item.at(0).get<int>(), item.at(1).get<int>());
    }
    return ScaleSchedule(scales);
}

MetricsReport mean_of(const std::vector<ConditionMetrics>& rows) {
    MetricsReport mean;
    if (rows.empty()) return mean;
    mean.mpd = mean.vendi = mean.frechet = mean.quality = 0.0;
    for (const ConditionMetrics& r : rows) {
        mean.mpd += r.report.mpd;
        mean.vendi += r.report.vendi;
        mean.frechet += r.report.frechet;
        mean.quality += r.report.quality;
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    mean.mpd *= inv;
    mean.vendi *= inv;
    mean.frechet *= inv;
    mean.quality *= inv;
    mean.n = rows.front().report.n;
    return mean;
}

std::vector<std::string> metrics_row(int condition_id, const std::string& method,
                                     const MetricsReport& r, const std::string& digest) {
    return {std::to_string(condition_id), method,          format_number(r.mpd),
            format_number(r.vendi),       format_number(r.frechet),
            format_number(r.quality),     std::to_string(r.n), digest};
}

const std::vector<std::string> kMetricsHeader = {
    "condition_id", "method", "mpd_pix", "vendi_pix", "frechet_pix", "q_proxy", "n", "digest"};

// Per-condition metrics for a block of generated images, `seeds` per
// condition, laid out condition-major.
std::vector<ConditionMetrics> score_conditions(const std::vector<Image>& images,
                                               const Corpus& corpus, int seeds) {
    std::vector<ConditionMetrics> rows;
    rows.reserve(corpus.conditions.size());
    for (size_t c = 0; c < corpus.conditions.size(); ++c) {
        const CorpusCondition& cond = corpus.conditions[c];
        SampleSet set;
        set.condition_id = cond.id;
        set.images.assign(images.begin() + static_cast<long>(c) * seeds,
                          images.begin() + static_cast<long>(c + 1) * seeds);

        ConditionMetrics row;
        row.condition_id = cond.id;
        row.report.n = seeds;
        row.report.mpd = mean_pairwise_distance(set);
        row.report.vendi = vendi_score(set);
        row.report.frechet =
            frechet_distance(projected_features(set.images, kFrechetDim, kFrechetSeed),
                             projected_features(cond.references, kFrechetDim, kFrechetSeed));
        double q = 0.0;
        for (const Image& img : set.images) q += quality_proxy(img, cond.references);
        row.report.quality = q / seeds;
        rows.push_back(std::move(row));
    }
    return rows;
}

// Generate `seeds` samples for every condition, condition-major, in parallel.
std::vector<Image> generate_block(Method method, const ExperimentConfig& cfg,
                                  const Corpus& corpus, const ModelBundle& bundle,
                                  int workers) {
    const int K = bundle.model.schedule_.stages();
    const int n = static_cast<int>(corpus.conditions.size()) * cfg.seeds;
    std::vector<Image> images(n);
    parallel_for(n, workers, [&](int i) {
        const CorpusCondition& cond = corpus.conditions[i / cfg.seeds];
        const int s = i % cfg.seeds;
        const ConditionEmbedding c =
            ConditionEmbedding::unit(bundle.embeddings.at(cond.id), cond.id);
        const GenerationConfig gen =
            method_generation_config(cfg, method, K, cfg.seed + static_cast<uint64_t>(s));
        const GenerationResult result =
            method == Method::scale_travel
                ? diversify_then_refine(bundle.model, bundle.decoder, c, gen)
                : generate(bundle.model, bundle.decoder, c, gen);
        images[i] = result.image;
    });
    return images;
}

} // namespace

// -------- presets --------

ScaleSchedule schedule_preset(const std::string& name) {
    if (name == "desk7") return ScaleSchedule::desk7();
    if (name == "tall13") return ScaleSchedule::tall13();
    throw ConfigError("unknown schedule preset \"" + name + "\" (desk7|tall13)");
}

// -------- corpus --------

void CorpusSpec::validate() const {
    if (conditions < 1) {
        throw ConfigError("corpus: conditions must be >= 1, got " + std::to_string(conditions));
    }
    if (prototypes < 2) {
        throw ConfigError("corpus: prototypes must be >= 2, got " + std::to_string(prototypes));
    }
    if (height <= 0 || width <= 0 || embed_dim <= 0) {
        throw ConfigError("corpus: dims and embed_dim must be positive");
    }
}

Image render_reference(const CorpusSpec& spec, int condition, int prototype) {
    const double lo = 0.12, hi = 0.88;
    // Condition-keyed palette: the low bits pick an RGB corner, higher groups
    // darken it so many conditions stay tellable apart.
    const double shade = 1.0 / (1.0 + 0.35 * (condition / 8));
    const double base[3] = {((condition & 1) ? hi : lo) * shade,
                            ((condition & 2) ? hi : lo) * shade,
                            ((condition & 4) ? hi : lo) * shade};
    // Prototype identity is carried at two scale bands. Fine: a bright stripe
    // pattern on a dark ground, with disjoint phases per prototype, so
    // same-condition prototypes are nearly orthogonal in pixel space while
    // their coarse means stay close. Coarse: a faint per-prototype quadrant
    // tint, the signature that survives downsampling and anchors prototype
    // selection from a coarse canvas.
    double stripe[3];
    for (int c = 0; c < 3; ++c) stripe[c] = 0.45 + 0.55 * base[(c + prototype) % 3];
    const int    dir   = prototype % 4;
    const double twist = 1.0 / (1.0 + 0.3 * (prototype / 4));
    const int    phases = spec.prototypes;
    const int    band   = std::max(1, spec.height / (2 * phases));
    const int    phase  = prototype % phases;
    const int    qi = (prototype & 2) ? 1 : 0, qj = prototype & 1;
    // A second, mid-scale signature: one brightened cell of a 3x3 partition,
    // distinct per prototype.
    const int    ti = prototype % 3, tj = (prototype / 3 + prototype) % 3;

    Image img(spec.height, spec.width);
    for (int i = 0; i < spec.height; ++i) {
        for (int j = 0; j < spec.width; ++j) {
            const double u = spec.height > 1 ? static_cast<double>(i) / (spec.height - 1) : 0.0;
            const double v = spec.width > 1 ? static_cast<double>(j) / (spec.width - 1) : 0.0;
            double t = 0.0;
            switch (dir) {
                case 0: t = v; break;
                case 1: t = u; break;
                case 2: t = 0.5 * (u + v); break;
                case 3: t = 0.5 * (u + 1.0 - v); break;
            }
            const bool on_stripe = (i / band) % phases == phase;
            const bool in_quadrant =
                (2 * i) / spec.height == qi && (2 * j) / spec.width == qj;
            const bool in_cell =
                (3 * i) / spec.height == ti && (3 * j) / spec.width == tj;
            for (int c = 0; c < 3; ++c) {
                double val = on_stripe ? stripe[c] * (0.82 + 0.18 * t) : 0.05 + 0.07 * t;
                if (in_quadrant) val += 0.08 * (1.0 - val);
                if (in_cell) val += 0.10 * (1.0 - val);
                val = std::clamp(val * twist, 0.0, 1.0);
                // Snap to the 8-bit grid PPM uses so disk round-trips are exact.
                img.at(i, j, c) = std::round(val * 255.0) / 255.0;
            }
        }
    }
    return img;
}

Corpus synth_corpus(const CorpusSpec& spec, uint64_t seed) {
    spec.validate();
    Corpus corpus;
    corpus.spec = spec;
    corpus.seed = seed;
    for (int cid = 0; cid < spec.conditions; ++cid) {
        CorpusCondition cond;
        cond.id = cid;
        std::vector<double> key_sum(spec.embed_dim, 0.0);
        for (int p = 0; p < spec.prototypes; ++p) {
            RngStream rng(seed, derive_stream({kTagKey, static_cast<uint64_t>(cid),
                                               static_cast<uint64_t>(p)}));
            std::vector<double> key =
                normalized(gaussian(static_cast<size_t>(spec.embed_dim), rng), "corpus key");
            for (int d = 0; d < spec.embed_dim; ++d) key_sum[d] += key[d];
            cond.keys.push_back(std::move(key));
            cond.references.push_back(render_reference(spec, cid, p));
        }
        cond.embedding = normalized(std::move(key_sum), "condition embedding");
        corpus.conditions.push_back(std::move(cond));
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["spec"] = {{"conditions", corpus.spec.conditions},
                        {"prototypes", corpus.spec.prototypes},
                        {"height", corpus.spec.height},
                        {"width", corpus.spec.width},
                        {"embed_dim", corpus.spec.embed_dim}};
    manifest["seed"] = corpus.seed;
    nlohmann::json conds = nlohmann::json::array();
    for (const CorpusCondition& cond : corpus.conditions) {
        nlohmann::json jc;
        jc["id"] = cond.id;
        jc["embedding"] = cond.embedding;
        nlohmann::json protos = nlohmann::json::array();
        for (size_t p = 0; p < cond.keys.size(); ++p) {
            const std::string name = corpus_image_name(cond.id, static_cast<int>(p));
            write_ppm((fs::path(dir) / name).string(), cond.references[p]);
            protos.push_back({{"index", p}, {"key", cond.keys[p]}, {"image", name}});
        }
        jc["prototypes"] = std::move(protos);
        conds.push_back(std::move(jc));
    }
    manifest["conditions"] = std::move(conds);
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Corpus read_corpus(const std::string& dir) {
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    const nlohmann::json manifest = parse_json_file(manifest_path);
    Corpus corpus;
    try {
        const nlohmann::json& spec = manifest.at("spec");
        corpus.spec.conditions = spec.at("conditions").get<int>();
        corpus.spec.prototypes = spec.at("prototypes").get<int>();
        corpus.spec.height = spec.at("height").get<int>();
        corpus.spec.width = spec.at("width").get<int>();
        corpus.spec.embed_dim = spec.at("embed_dim").get<int>();
        corpus.seed = manifest.at("seed").get<uint64_t>();
        for (const nlohmann::json& jc : manifest.at("conditions")) {
            CorpusCondition cond;
            cond.id = jc.at("id").get<int>();
            cond.embedding = jc.at("embedding").get<std::vector<double>>();
            for (const nlohmann::json& jp : jc.at("prototypes")) {
                cond.keys.push_back(jp.at("key").get<std::vector<double>>());
                cond.references.push_back(
                    read_ppm((fs::path(dir) / jp.at("image").get<std::string>()).string()));
            }
            corpus.conditions.push_back(std::move(cond));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("corpus manifest " + manifest_path + ": " + e.what());
    }
    corpus.spec.validate();
    return corpus;
}

// -------- experiment configuration --------

Method method_from_name(const std::string& name) {
    if (name == "baseline") return Method::baseline;
    if (name == "anneal") return Method::anneal;
    if (name == "scale_travel") return Method::scale_travel;
    throw ConfigError("unknown method \"" + name + "\" (baseline|anneal|scale_travel)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::anneal: return "anneal";
        case Method::scale_travel: return "scale_travel";
    }
    throw InternalError("method_name: unhandled enum value");
}

void ExperimentConfig::validate() const {
    corpus.validate();
    const ScaleSchedule sched = schedule_preset(schedule);
    const int K = sched.stages();
    if (methods.empty()) {
        throw ConfigError("config: method list is empty");
    }
    if (seeds < 2) {
        throw ConfigError("config: seeds must be >= 2 for diversity metrics, got " +
                          std::to_string(seeds));
    }
    if (codebook_size < 1 || codebook_iters < 1) {
        throw ConfigError("config: codebook_size and codebook_iters must be >= 1");
    }
    const auto [fh, fw] = sched.final_scale();
    if (corpus.height != fh || corpus.width != fw) {
        throw ConfigError("config: corpus dims " + std::to_string(corpus.height) + "x" +
                          std::to_string(corpus.width) + " must match the schedule's final scale " +
                          std::to_string(fh) + "x" + std::to_string(fw));
    }
    AnnealSchedule anneal{anneal_variant_from(anneal_variant), AnnealTarget::text_embedding,
                          sigma, k_max};
    anneal.validate();
    if (k_max > K) {
        throw ConfigError("config: anneal k_max exceeds the schedule's stage count");
    }
    if (!(tau > 0.0) || !(top_p > 0.0) || top_p > 1.0) {
        throw ConfigError("config: need tau > 0 and top_p in (0, 1]");
    }
    if (travel_m < 1 || travel_m >= travel_l || travel_l > K) {
        throw ConfigError("config: scale travel needs 1 <= m < l <= K");
    }
    if (lambda_sel < 0.0 || lambda_canvas < 0.0 || !(t_logit > 0.0)) {
        throw ConfigError("config: lambdas must be >= 0 and t_logit > 0");
    }
    if (!(feature_gain > 0.0)) {
        throw ConfigError("config: feature_gain must be positive");
    }
    if (train_epochs < 0 || train_lr < 0.0) {
        throw ConfigError("config: training epochs and learning rate must be >= 0");
    }
    if (bench_samples < 1) {
        throw ConfigError("config: bench_samples must be >= 1");
    }
    for (int m : sweep.m) {
        if (m < 1 || m >= travel_l) {
            throw ConfigError("config: swept m=" + std::to_string(m) +
                              " violates 1 <= m < l for l=" + std::to_string(travel_l));
        }
    }
    for (int k : sweep.k_max) {
        if (k < 1 || k > K) {
            throw ConfigError("config: swept k_max=" + std::to_string(k) + " outside [1, K]");
        }
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["corpus"] = {{"conditions", corpus.conditions},
                   {"prototypes", corpus.prototypes},
                   {"height", corpus.height},
                   {"width", corpus.width},
                   {"embed_dim", corpus.embed_dim}};
    j["schedule"] = schedule;
    j["codebook_size"] = codebook_size;
    j["codebook_iters"] = codebook_iters;
    nlohmann::json names = nlohmann::json::array();
    for (Method m : methods) names.push_back(method_name(m));
    j["methods"] = std::move(names);
    j["seeds"] = seeds;
    j["anneal_variant"] = anneal_variant;
    j["sigma"] = sigma;
    j["k_max"] = k_max;
    j["anneal_sos"] = anneal_sos;
    j["omega"] = omega;
    j["tau"] = tau;
    j["top_p"] = top_p;
    j["travel_l"] = travel_l;
    j["travel_m"] = travel_m;
    j["lambda_sel"] = lambda_sel;
    j["lambda_canvas"] = lambda_canvas;
    j["t_logit"] = t_logit;
    j["feature_gain"] = feature_gain;
    j["train_epochs"] = train_epochs;
    j["train_lr"] = train_lr;
    j["sweep"] = {{"sigma", sweep.sigma}, {"k_max", sweep.k_max},   {"m", sweep.m},
                  {"omega", sweep.omega}, {"tau", sweep.tau},       {"top_p", sweep.top_p}};
    j["bench_samples"] = bench_samples;
    j["bench_skip_null"] = bench_skip_null;
    j["svg_timestamp"] = svg_timestamp;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg; // field defaults are the desk preset
    if (j.contains("corpus")) {
        const nlohmann::json& c = j.at("corpus");
        cfg.corpus.conditions = field_or(c, "conditions", cfg.corpus.conditions);
        cfg.corpus.prototypes = field_or(c, "prototypes", cfg.corpus.prototypes);
        cfg.corpus.height = field_or(c, "height", cfg.corpus.height);
        cfg.corpus.width = field_or(c, "width", cfg.corpus.width);
        cfg.corpus.embed_dim = field_or(c, "embed_dim", cfg.corpus.embed_dim);
    }
    cfg.schedule = field_or<std::string>(j, "schedule", cfg.schedule);
    cfg.codebook_size = field_or(j, "codebook_size", cfg.codebook_size);
    cfg.codebook_iters = field_or(j, "codebook_iters", cfg.codebook_iters);
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const nlohmann::json& name : j.at("methods")) {
            cfg.methods.push_back(method_from_name(name.get<std::string>()));
        }
    }
    cfg.seeds = field_or(j, "seeds", cfg.seeds);
    cfg.anneal_variant = field_or<std::string>(j, "anneal_variant", cfg.anneal_variant);
    cfg.sigma = field_or(j, "sigma", cfg.sigma);
    cfg.k_max = field_or(j, "k_max", cfg.k_max);
    cfg.anneal_sos = field_or(j, "anneal_sos", cfg.anneal_sos);
    cfg.omega = field_or(j, "omega", cfg.omega);
    cfg.tau = field_or(j, "tau", cfg.tau);
    cfg.top_p = field_or(j, "top_p", cfg.top_p);
    cfg.travel_l = field_or(j, "travel_l", cfg.travel_l);
    cfg.travel_m = field_or(j, "travel_m", cfg.travel_m);
    cfg.lambda_sel = field_or(j, "lambda_sel", cfg.lambda_sel);
    cfg.lambda_canvas = field_or(j, "lambda_canvas", cfg.lambda_canvas);
    cfg.t_logit = field_or(j, "t_logit", cfg.t_logit);
    cfg.feature_gain = field_or(j, "feature_gain", cfg.feature_gain);
    cfg.train_epochs = field_or(j, "train_epochs", cfg.train_epochs);
    cfg.train_lr = field_or(j, "train_lr", cfg.train_lr);
    if (j.contains("sweep")) {
        const nlohmann::json& s = j.at("sweep");
        cfg.sweep.sigma = field_or(s, "sigma", cfg.sweep.sigma);
        cfg.sweep.k_max = field_or(s, "k_max", cfg.sweep.k_max);
        cfg.sweep.m = field_or(s, "m", cfg.sweep.m);
        cfg.sweep.omega = field_or(s, "omega", cfg.sweep.omega);
        cfg.sweep.tau = field_or(s, "tau", cfg.sweep.tau);
        cfg.sweep.top_p = field_or(s, "top_p", cfg.sweep.top_p);
    }
    cfg.bench_samples = field_or(j, "bench_samples", cfg.bench_samples);
    cfg.bench_skip_null = field_or(j, "bench_skip_null", cfg.bench_skip_null);
    cfg.svg_timestamp = field_or(j, "svg_timestamp", cfg.svg_timestamp);
    cfg.seed = field_or(j, "seed", cfg.seed);
    cfg.out_dir = field_or<std::string>(j, "out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

std::string ExperimentConfig::digest() const {
    nlohmann::json j = to_json();
    j.erase("out_dir");
    return digest_hex(j);
}

ExperimentConfig load_config(const std::string& path) {
    return ExperimentConfig::from_json(parse_json_file(path));
}

// -------- model assembly and persistence --------

Codebook fit_corpus_codebook(const Corpus& corpus, const ScaleSchedule& schedule,
                             double feature_gain, int centroids, int iterations,
                             uint64_t seed) {
    if (!(feature_gain > 0.0)) {
        throw ConfigError("fit codebook: feature_gain must be positive");
    }
    const Codebook identity = Codebook::identity(3);
    const auto [fh, fw] = schedule.final_scale();
    std::vector<double> samples;
    for (const CorpusCondition& cond : corpus.conditions) {
        for (const Image& ref : cond.references) {
            const TokenPyramid pyr =
                multi_scale_encode(feature_map(ref, feature_gain), schedule, identity);
            for (const TokenGrid& grid : pyr.grids) {
                // Scale-balanced sampling: duplicate coarse-stage vectors by
                // their upsampling factor so every stage contributes equal
                // mass. Plain pooling would starve the coarse value range of
                // centroids, and re-encoding a canvas (the rewind path) needs
                // good coverage exactly there.
                const int copies =
                    std::max(1, (fh * fw) / std::max(1, grid.height * grid.width));
                for (int rep = 0; rep < copies; ++rep) {
                    samples.insert(samples.end(), grid.vectors.begin(), grid.vectors.end());
                }
            }
        }
    }
    RngStream rng(seed, derive_stream({kTagCodebook}));
    return fit_codebook(samples, 3, centroids, iterations, rng);
}

ModelBundle build_prototype_model(const Corpus& corpus, const ScaleSchedule& schedule,
                                  const Codebook& codebook, const ExperimentConfig& cfg) {
    const auto [fh, fw] = schedule.final_scale();
    if (corpus.spec.height != fh || corpus.spec.width != fw) {
        throw ConfigError("build model: corpus images are " + std::to_string(corpus.spec.height) +
                          "x" + std::to_string(corpus.spec.width) +
                          " but the schedule tops out at " + std::to_string(fh) + "x" +
                          std::to_string(fw));
    }
    ModelBundle bundle;
    bundle.model.schedule_ = schedule;
    bundle.model.codebook_ = codebook;
    bundle.model.lambda_sel = cfg.lambda_sel;
    bundle.model.lambda_canvas = cfg.lambda_canvas;
    bundle.model.t_logit = cfg.t_logit;
    bundle.model.embed_dim_ = corpus.spec.embed_dim;
    RngStream sos_rng(cfg.seed, derive_stream({kTagSosProj}));
    bundle.model.sos_proj =
        gaussian(static_cast<size_t>(codebook.dim) * corpus.spec.embed_dim, sos_rng);
    for (double& v : bundle.model.sos_proj) v *= 0.1;

    for (const CorpusCondition& cond : corpus.conditions) {
        std::vector<TokenPyramid> teachers;
        for (const Image& ref : cond.references) {
            teachers.push_back(
                multi_scale_encode(feature_map(ref, cfg.feature_gain), schedule, codebook));
        }
        bundle.model.add_condition(cond.id, std::move(teachers), cond.keys);
        bundle.embeddings[cond.id] = cond.embedding;
    }
    bundle.model.prepare();
    bundle.decoder = scaled_rgb_decoder(cfg.feature_gain);
    return bundle;
}

void save_model(const ModelBundle& bundle, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "pyramids");
    write_codebook((fs::path(dir) / "codebook.varc").string(), bundle.model.codebook_);

    ParamBlocks params;
    params["sos_proj"] = bundle.model.sos_proj;
    params["decoder_weight"] = bundle.decoder.weight;
    params["decoder_bias"] = bundle.decoder.bias;

    nlohmann::json manifest;
    manifest["type"] = "prototype";
    manifest["schedule"] = schedule_to_json(bundle.model.schedule_);
    manifest["embed_dim"] = bundle.model.embed_dim_;
    manifest["lambda_sel"] = bundle.model.lambda_sel;
    manifest["lambda_canvas"] = bundle.model.lambda_canvas;
    manifest["t_logit"] = bundle.model.t_logit;
    manifest["codebook"] = "codebook.varc";
    manifest["params"] = "params.bin";
    nlohmann::json conditions = nlohmann::json::array();
    for (const auto& [cid, bank] : bundle.model.banks) {
        nlohmann::json jc;
        jc["id"] = cid;
        nlohmann::json paths = nlohmann::json::array();
        for (size_t p = 0; p < bank.teachers.size(); ++p) {
            const std::string rel = pyramid_name(cid, static_cast<int>(p));
            write_pyramid((fs::path(dir) / rel).string(), bank.teachers[p],
                          bundle.model.codebook_);
            paths.push_back(rel);
            params["key/" + std::to_string(cid) + "/" + std::to_string(p)] = bank.keys[p];
        }
        jc["pyramids"] = std::move(paths);
        conditions.push_back(std::move(jc));
        params["embedding/" + std::to_string(cid)] = bundle.embeddings.at(cid);
    }
    manifest["conditions"] = std::move(conditions);
    write_params((fs::path(dir) / "params.bin").string(), params);
    write_text_file((fs::path(dir) / "model.json").string(), manifest.dump(2) + "\n");
}

ModelBundle load_model(const std::string& dir) {
    const std::string manifest_path = (fs::path(dir) / "model.json").string();
    const nlohmann::json manifest = parse_json_file(manifest_path);
    ModelBundle bundle;
    try {
        if (manifest.at("type").get<std::string>() != "prototype") {
            throw ConfigError(manifest_path + ": not a prototype model manifest");
        }
        bundle.model.schedule_ = schedule_from_json(manifest.at("schedule"));
        bundle.model.embed_dim_ = manifest.at("embed_dim").get<int>();
        bundle.model.lambda_sel = manifest.at("lambda_sel").get<double>();
        bundle.model.lambda_canvas = manifest.at("lambda_canvas").get<double>();
        bundle.model.t_logit = manifest.at("t_logit").get<double>();
        bundle.model.codebook_ = read_codebook(
            (fs::path(dir) / manifest.at("codebook").get<std::string>()).string());
        const std::string params_path =
            (fs::path(dir) / manifest.at("params").get<std::string>()).string();
        const ParamBlocks params = read_params(params_path);
        bundle.model.sos_proj = block_of(params, "sos_proj", params_path);

        for (const nlohmann::json& jc : manifest.at("conditions")) {
            const int cid = jc.at("id").get<int>();
            std::vector<TokenPyramid> teachers;
            std::vector<std::vector<double>> keys;
            int p = 0;
            for (const nlohmann::json& rel : jc.at("pyramids")) {
                teachers.push_back(read_pyramid(
                    (fs::path(dir) / rel.get<std::string>()).string(), bundle.model.codebook_));
                keys.push_back(block_of(
                    params, "key/" + std::to_string(cid) + "/" + std::to_string(p), params_path));
                ++p;
            }
            bundle.model.add_condition(cid, std::move(teachers), std::move(keys));
            bundle.embeddings[cid] =
                block_of(params, "embedding/" + std::to_string(cid), params_path);
        }
        bundle.decoder.dim = bundle.model.codebook_.dim;
        bundle.decoder.weight = block_of(params, "decoder_weight", params_path);
        bundle.decoder.bias = block_of(params, "decoder_bias", params_path);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model manifest " + manifest_path + ": " + e.what());
    }
    bundle.model.prepare();
    return bundle;
}

std::vector<TrainingExample> linear_dataset(const Corpus& corpus, const LinearModel& model,
                                            double feature_gain) {
    std::vector<TrainingExample> dataset;
    for (const CorpusCondition& cond : corpus.conditions) {
        const ConditionEmbedding c = ConditionEmbedding::unit(cond.embedding, cond.id);
        const SosToken sos = model.sos_for(c);
        for (const Image& ref : cond.references) {
            const TokenPyramid teacher = multi_scale_encode(feature_map(ref, feature_gain),
                                                            model.schedule_, model.codebook_);
            const auto [fh, fw] = model.schedule_.final_scale();
            for (int k = 1; k <= model.schedule_.stages(); ++k) {
                TrainingExample ex;
                // Stage 1 sees the empty canvas, exactly like the sampler.
                ex.canvas = k == 1 ? FeatureGrid(fh, fw, model.codebook_.dim, 0.0)
                                   : accumulate_canvas(teacher, model.codebook_, k - 1);
                ex.teacher = teacher.grids[static_cast<size_t>(k) - 1];
                ex.condition = c;
                ex.sos = sos;
                dataset.push_back(std::move(ex));
            }
        }
    }
    return dataset;
}

TrainResult train_linear_on_corpus(const Corpus& corpus, const Codebook& codebook,
                                   const ScaleSchedule& schedule, const ExperimentConfig& cfg) {
    RngStream init_rng(cfg.seed, derive_stream({kTagLinear, 0}));
    TrainResult result{LinearModel::init(schedule, codebook, corpus.spec.embed_dim, init_rng), {}};
    const std::vector<TrainingExample> dataset =
        linear_dataset(corpus, result.model, cfg.feature_gain);
    RngStream train_rng(cfg.seed, derive_stream({kTagLinear, 1}));
    result.epoch_ce =
        train_linear(result.model, dataset, cfg.train_epochs, cfg.train_lr, train_rng);
    return result;
}

void save_linear(const LinearModel& model, const std::string& dir) {
    fs::create_directories(dir);
    write_codebook((fs::path(dir) / "codebook.varc").string(), model.codebook_);
    ParamBlocks params;
    params["sos_proj"] = model.sos_proj;
    params["weight"] = model.weight;
    params["bias"] = model.bias;
    write_params((fs::path(dir) / "params.bin").string(), params);

    nlohmann::json manifest;
    manifest["type"] = "linear";
    manifest["schedule"] = schedule_to_json(model.schedule_);
    manifest["embed_dim"] = model.embed_dim_;
    manifest["codebook"] = "codebook.varc";
    manifest["params"] = "params.bin";
    write_text_file((fs::path(dir) / "model.json").string(), manifest.dump(2) + "\n");
}

LinearModel load_linear(const std::string& dir) {
    const std::string manifest_path = (fs::path(dir) / "model.json").string();
    const nlohmann::json manifest = parse_json_file(manifest_path);
    try {
        if (manifest.at("type").get<std::string>() != "linear") {
            throw ConfigError(manifest_path + ": not a linear model manifest");
        }
        const Codebook cb = read_codebook(
            (fs::path(dir) / manifest.at("codebook").get<std::string>()).string());
        RngStream dummy(0, 0);
        LinearModel model = LinearModel::init(schedule_from_json(manifest.at("schedule")), cb,
                                              manifest.at("embed_dim").get<int>(), dummy);
        const std::string params_path =
            (fs::path(dir) / manifest.at("params").get<std::string>()).string();
        const ParamBlocks params = read_params(params_path);
        model.sos_proj = block_of(params, "sos_proj", params_path);
        model.weight = block_of(params, "weight", params_path);
        model.bias = block_of(params, "bias", params_path);
        if (model.weight.size() !=
                static_cast<size_t>(cb.size()) * static_cast<size_t>(model.feature_count()) ||
            model.bias.size() != static_cast<size_t>(cb.size())) {
            throw ConfigError(params_path + ": parameter block sizes do not match the manifest");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model manifest " + manifest_path + ": " + e.what());
    }
}

// -------- runs --------

GenerationConfig method_generation_config(const ExperimentConfig& cfg, Method method,
                                          int total_stages, uint64_t sample_seed) {
    GenerationConfig g;
    g.cfg = CfgSchedule{CfgFamily::piecewise_constant, CfgVariant::constant,
                        cfg.omega,                   cfg.omega,
                        1,                           total_stages};
    g.tau = cfg.tau;
    g.top_p = cfg.top_p;
    g.seed = sample_seed;
    g.total_stages = total_stages;
    g.skip_null_when_unguided = cfg.bench_skip_null;
    if (method != Method::baseline) {
        g.text_anneal = AnnealSchedule{anneal_variant_from(cfg.anneal_variant),
                                       AnnealTarget::text_embedding, cfg.sigma, cfg.k_max};
        if (cfg.anneal_sos) {
            g.sos_anneal = AnnealSchedule{anneal_variant_from(cfg.anneal_variant),
                                          AnnealTarget::sos_token, cfg.sigma, cfg.k_max};
        }
    }
    if (method == Method::scale_travel) {
        g.travel = ScaleTravelSpec{cfg.travel_l, cfg.travel_m};
    }
    return g;
}

RunRecord run_method(Method method, const ExperimentConfig& cfg, const Corpus& corpus,
                     const ModelBundle& bundle, int workers, const std::string* samples_dir) {
    cfg.validate();
    RunRecord record;
    record.method = method;
    record.digest = cfg.digest();

    const double t0 = now_ms();
    const std::vector<Image> images = generate_block(method, cfg, corpus, bundle, workers);
    record.wall_ms_generate = now_ms() - t0;

    if (samples_dir != nullptr) {
        fs::create_directories(*samples_dir);
        for (size_t c = 0; c < corpus.conditions.size(); ++c) {
            for (int s = 0; s < cfg.seeds; ++s) {
                const std::string name = "c" + std::to_string(corpus.conditions[c].id) + "_s" +
                                         std::to_string(s) + ".ppm";
                write_ppm((fs::path(*samples_dir) / name).string(),
                          images[c * static_cast<size_t>(cfg.seeds) + s]);
                record.sample_paths.push_back(name);
            }
        }
    }

    const double t1 = now_ms();
    record.rows = score_conditions(images, corpus, cfg.seeds);
    record.mean = mean_of(record.rows);
    record.wall_ms_metrics = now_ms() - t1;
    return record;
}

CsvTable metrics_table(const RunRecord& record) {
    CsvTable table = {kMetricsHeader};
    for (const ConditionMetrics& row : record.rows) {
        table.push_back(
            metrics_row(row.condition_id, method_name(record.method), row.report, record.digest));
    }
    return table;
}

void write_run_record(const RunRecord& record, const std::string& dir) {
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "metrics.csv").string(), csv_encode(metrics_table(record)));

    nlohmann::json j;
    j["method"] = method_name(record.method);
    j["digest"] = record.digest;
    j["n"] = record.mean.n;
    j["mean"] = {{"mpd_pix", record.mean.mpd},
                 {"vendi_pix", record.mean.vendi},
                 {"frechet_pix", record.mean.frechet},
                 {"q_proxy", record.mean.quality}};
    nlohmann::json rows = nlohmann::json::array();
    for (const ConditionMetrics& row : record.rows) {
        rows.push_back({{"condition_id", row.condition_id},
                        {"mpd_pix", row.report.mpd},
                        {"vendi_pix", row.report.vendi},
                        {"frechet_pix", row.report.frechet},
                        {"q_proxy", row.report.quality},
                        {"n", row.report.n}});
    }
    j["rows"] = std::move(rows);
    j["wall_ms"] = {{"generate", record.wall_ms_generate}, {"metrics", record.wall_ms_metrics}};
    j["samples"] = record.sample_paths;
    write_text_file((fs::path(dir) / "record.json").string(), j.dump(2) + "\n");
}

RunRecord read_run_record(const std::string& dir) {
    const std::string path = (fs::path(dir) / "record.json").string();
    const nlohmann::json j = parse_json_file(path);
    RunRecord record;
    try {
        record.method = method_from_name(j.at("method").get<std::string>());
        record.digest = j.at("digest").get<std::string>();
        record.mean.n = j.at("n").get<int>();
        record.mean.mpd = j.at("mean").at("mpd_pix").get<double>();
        record.mean.vendi = j.at("mean").at("vendi_pix").get<double>();
        record.mean.frechet = j.at("mean").at("frechet_pix").get<double>();
        record.mean.quality = j.at("mean").at("q_proxy").get<double>();
        for (const nlohmann::json& row : j.at("rows")) {
            ConditionMetrics cm;
            cm.condition_id = row.at("condition_id").get<int>();
            cm.report.mpd = row.at("mpd_pix").get<double>();
            cm.report.vendi = row.at("vendi_pix").get<double>();
            cm.report.frechet = row.at("frechet_pix").get<double>();
            cm.report.quality = row.at("q_proxy").get<double>();
            cm.report.n = row.at("n").get<int>();
            record.rows.push_back(cm);
        }
        record.wall_ms_generate = j.at("wall_ms").at("generate").get<double>();
        record.wall_ms_metrics = j.at("wall_ms").at("metrics").get<double>();
        if (j.contains("samples")) {
            record.sample_paths = j.at("samples").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("run record " + path + ": " + e.what());
    }
    return record;
}

// -------- sweep --------

namespace {

template <typename T>
std::vector<T> axis_or(const std::vector<T>& axis, T fallback) {
    return axis.empty() ? std::vector<T>{fallback} : axis;
}

std::string point_digest(const ExperimentConfig& cfg, const SweepPoint& p) {
    nlohmann::json j;
    j["base"] = cfg.digest();
    j["method"] = method_name(p.method);
    j["sigma"] = p.sigma;
    j["k_max"] = p.k_max;
    j["m"] = p.m;
    j["omega"] = p.omega;
    j["tau"] = p.tau;
    j["top_p"] = p.top_p;
    return digest_hex(j);
}

const char* kMethodColors[] = {"#5577cc", "#cc8833", "#33aa55"};

} // namespace

SweepResult sweep(const ExperimentConfig& cfg, const Corpus& corpus, const ModelBundle& bundle,
                  int workers) {
    cfg.validate();
    const std::vector<double> sigmas = axis_or(cfg.sweep.sigma, cfg.sigma);
    const std::vector<int> k_maxes = axis_or(cfg.sweep.k_max, cfg.k_max);
    const std::vector<int> ms = axis_or(cfg.sweep.m, cfg.travel_m);
    const std::vector<double> omegas = axis_or(cfg.sweep.omega, cfg.omega);
    const std::vector<double> taus = axis_or(cfg.sweep.tau, cfg.tau);
    const std::vector<double> top_ps = axis_or(cfg.sweep.top_p, cfg.top_p);

    SweepResult result;
    for (Method method : cfg.methods) {
        for (double sigma : sigmas) {
            for (int k_max : k_maxes) {
                for (int m : ms) {
                    for (double omega : omegas) {
                        for (double tau : taus) {
                            for (double top_p : top_ps) {
                                SweepPoint point;
                                point.method = method;
                                point.sigma = sigma;
                                point.k_max = k_max;
                                point.m = m;
                                point.omega = omega;
                                point.tau = tau;
                                point.top_p = top_p;
                                point.digest = point_digest(cfg, point);

                                ExperimentConfig varied = cfg;
                                varied.sigma = sigma;
                                varied.k_max = k_max;
                                varied.travel_m = m;
                                varied.omega = omega;
                                varied.tau = tau;
                                varied.top_p = top_p;
                                const std::vector<Image> images =
                                    generate_block(method, varied, corpus, bundle, workers);
                                point.rows = score_conditions(images, corpus, cfg.seeds);
                                point.mean = mean_of(point.rows);
                                result.points.push_back(std::move(point));
                            }
                        }
                    }
                }
            }
        }
    }

    std::vector<ParetoPoint> all;
    for (const SweepPoint& p : result.points) {
        all.push_back({p.digest, p.mean.vendi, p.mean.quality, false});
    }
    for (Method method : cfg.methods) {
        std::vector<ParetoPoint> mine;
        for (const SweepPoint& p : result.points) {
            if (p.method == method) {
                mine.push_back({p.digest, p.mean.vendi, p.mean.quality, false});
            }
        }
        result.method_fronts[method_name(method)] = pareto_front(mine);
    }
    result.global_front = pareto_front(all);
    return result;
}

CsvTable sweep_points_table(const SweepResult& result) {
    CsvTable table = {{"method", "sigma", "k_max", "m", "omega", "tau", "top_p", "vendi_pix",
                       "q_proxy", "digest"}};
    for (const SweepPoint& p : result.points) {
        table.push_back({method_name(p.method), format_number(p.sigma), std::to_string(p.k_max),
                         std::to_string(p.m), format_number(p.omega), format_number(p.tau),
                         format_number(p.top_p), format_number(p.mean.vendi),
                         format_number(p.mean.quality), p.digest});
    }
    return table;
}

CsvTable sweep_metrics_table(const SweepResult& result) {
    CsvTable table = {kMetricsHeader};
    for (const SweepPoint& p : result.points) {
        for (const ConditionMetrics& row : p.rows) {
            table.push_back(
                metrics_row(row.condition_id, method_name(p.method), row.report, p.digest));
        }
    }
    return table;
}

CsvTable pareto_table(const std::vector<ParetoPoint>& front) {
    CsvTable table = {{"digest", "vendi_pix", "q_proxy"}};
    for (const ParetoPoint& p : front) {
        table.push_back({p.digest, format_number(p.diversity), format_number(p.quality)});
    }
    return table;
}

std::string sweep_svg(const SweepResult& result, bool timestamp) {
    std::vector<PlotSeries> series;
    int color = 0;
    for (const auto& [name, front] : result.method_fronts) {
        PlotSeries cloud;
        cloud.label = name;
        cloud.color = kMethodColors[color % 3];
        for (const SweepPoint& p : result.points) {
            if (method_name(p.method) == name) {
                cloud.points.emplace_back(p.mean.vendi, p.mean.quality);
            }
        }
        series.push_back(std::move(cloud));

        PlotSeries line;
        line.label = name + " front";
        line.color = kMethodColors[color % 3];
        line.connect = true;
        for (const ParetoPoint& p : front) line.points.emplace_back(p.diversity, p.quality);
        series.push_back(std::move(line));
        ++color;
    }
    PlotSeries global;
    global.label = "global front";
    global.color = "#111111";
    global.connect = true;
    for (const ParetoPoint& p : result.global_front) {
        global.points.emplace_back(p.diversity, p.quality);
    }
    series.push_back(std::move(global));

    PlotOptions opt;
    opt.title = "diversity vs quality";
    opt.x_label = "Vendi_pix";
    opt.y_label = "Q_proxy";
    opt.timestamp = timestamp;
    return svg_scatter(series, opt);
}

void write_sweep(const SweepResult& result, const std::string& dir, bool timestamp) {
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "points.csv").string(),
                    csv_encode(sweep_points_table(result)));
    write_text_file((fs::path(dir) / "metrics.csv").string(),
                    csv_encode(sweep_metrics_table(result)));
    write_text_file((fs::path(dir) / "pareto_global.csv").string(),
                    csv_encode(pareto_table(result.global_front)));
    for (const auto& [name, front] : result.method_fronts) {
        write_text_file((fs::path(dir) / ("pareto_" + name + ".csv")).string(),
                        csv_encode(pareto_table(front)));
    }
    write_text_file((fs::path(dir) / "pareto.svg").string(), sweep_svg(result, timestamp));
}

// -------- benchmark --------

BenchResult bench_overhead(const ExperimentConfig& cfg, const Corpus& corpus,
                           const ModelBundle& bundle) {
    cfg.validate();
    BenchResult result;
    result.samples = std::max(100, cfg.bench_samples);
    const int K = bundle.model.schedule_.stages();
    const int C = static_cast<int>(corpus.conditions.size());
    const Method order[] = {Method::baseline, Method::anneal, Method::scale_travel};

    auto one_sample = [&](Method method, int i) {
        const CorpusCondition& cond = corpus.conditions[i % C];
        const ConditionEmbedding c =
            ConditionEmbedding::unit(bundle.embeddings.at(cond.id), cond.id);
        const GenerationConfig gen =
            method_generation_config(cfg, method, K, cfg.seed + static_cast<uint64_t>(i / C));
        if (method == Method::scale_travel) {
            diversify_then_refine(bundle.model, bundle.decoder, c, gen);
        } else {
            generate(bundle.model, bundle.decoder, c, gen);
        }
    };

    // Warm caches and clock governors, then interleave the methods so every
    // one samples the same machine state; blocked timing would charge CPU
    // ramp-up to whichever method happened to run first.
    for (Method method : order) one_sample(method, 0);
    std::map<std::string, double> total_ms;
    for (int i = 0; i < result.samples; ++i) {
        for (Method method : order) {
            const double t0 = now_ms();
            one_sample(method, i);
            total_ms[method_name(method)] += now_ms() - t0;
        }
    }
    for (const auto& [name, total] : total_ms) {
        result.mean_ms[name] = total / result.samples;
    }
    const double base = result.mean_ms.at("baseline");
    for (const auto& [name, ms] : result.mean_ms) {
        result.ratio[name] = ms / base;
    }
    return result;
}

// -------- report --------

ReportResult report(const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) {
        throw ConfigError("report: need at least one run directory");
    }
    std::vector<RunRecord> records;
    records.reserve(run_dirs.size());
    for (const std::string& dir : run_dirs) {
        records.push_back(read_run_record(dir));
    }
    // Deltas are taken against the baseline row when one exists.
    size_t ref = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].method == Method::baseline) {
            ref = i;
            break;
        }
    }
    const MetricsReport& base = records[ref].mean;
    auto delta_pct = [](double v, double r) {
        return 100.0 * (v - r) / std::max(std::abs(r), 1e-12);
    };

    ReportResult out;
    std::ostringstream md;
    md << "# Method summary\n\n";
    md << "Pixel-space stand-in metrics; deltas are relative to the "
       << method_name(records[ref].method) << " row.\n\n";
    md << "| method | MPD_pix | Vendi_pix | Frechet_pix | Q_proxy | dMPD% | dVendi% | "
          "dFrechet% | dQ% |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    out.csv.push_back({"method", "mpd_pix", "vendi_pix", "frechet_pix", "q_proxy", "n", "digest",
                       "delta_mpd_pct", "delta_vendi_pct", "delta_frechet_pct", "delta_q_pct"});
    for (const RunRecord& r : records) {
        const double d_mpd = delta_pct(r.mean.mpd, base.mpd);
        const double d_vendi = delta_pct(r.mean.vendi, base.vendi);
        const double d_frechet = delta_pct(r.mean.frechet, base.frechet);
        const double d_q = delta_pct(r.mean.quality, base.quality);
        md << "| " << method_name(r.method) << " | " << format_number(r.mean.mpd) << " | "
           << format_number(r.mean.vendi) << " | " << format_number(r.mean.frechet) << " | "
           << format_number(r.mean.quality) << " | " << format_number(d_mpd) << " | "
           << format_number(d_vendi) << " | " << format_number(d_frechet) << " | "
           << format_number(d_q) << " |\n";
        out.csv.push_back({method_name(r.method), format_number(r.mean.mpd),
                           format_number(r.mean.vendi), format_number(r.mean.frechet),
                           format_number(r.mean.quality), std::to_string(r.mean.n), r.digest,
                           format_number(d_mpd), format_number(d_vendi), format_number(d_frechet),
                           format_number(d_q)});
    }
    out.markdown = md.str();
    return out;
}

// -------- worker pool --------

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace vardiv
