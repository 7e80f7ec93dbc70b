#include "vardiv/sampler.hpp"

#include <chrono>
#include <cmath>

#include "vardiv/errors.hpp"

namespace vardiv {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

} // namespace

RngStream stage_stream(int condition_id, uint64_t seed, int stage, uint64_t role) {
    const uint64_t id = derive_stream({static_cast<uint64_t>(static_cast<int64_t>(condition_id)),
                                       seed, static_cast<uint64_t>(stage), role});
    return RngStream(seed, id);
}

void GenerationConfig::validate() const {
    if (total_stages < 1) throw ConfigError("GenerationConfig: total_stages must be >= 1");
    cfg.validate(total_stages);
    if (text_anneal) {
        text_anneal->validate();
        if (text_anneal->k_max > total_stages) {
            throw ConfigError("GenerationConfig: text anneal k_max beyond the last stage");
        }
    }
    if (sos_anneal) {
        sos_anneal->validate();
        if (sos_anneal->k_max > total_stages) {
            throw ConfigError("GenerationConfig: sos anneal k_max beyond the last stage");
        }
    }
    if (!(tau > 0.0)) throw ConfigError("GenerationConfig: tau must be positive");
    if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("GenerationConfig: top_p must be in (0, 1]");
    if (travel) {
        if (travel->m < 1 || travel->m >= travel->l || travel->l > total_stages) {
            throw ConfigError("GenerationConfig: scale travel requires 1 <= m < l <= K");
        }
    }
}

ConditionEmbedding anneal_condition(const ConditionEmbedding& c, double alpha, RngStream& rng) {
    if (!(alpha >= 0.0) || alpha > 1.0) throw ConfigError("anneal_condition: level outside [0, 1]");
    if (c.null_flag || alpha == 0.0) return c; // exact passthrough, no draws
    const double keep = std::sqrt(1.0 - alpha);
    const double mix = std::sqrt(alpha);
    std::vector<double> v(c.values.size());
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] = keep * c.values[i] + mix * rng.next_gaussian();
    }
    return ConditionEmbedding::raw(std::move(v), c.condition_id);
}

SosToken anneal_sos(const SosToken& s, double beta, RngStream& rng) {
    if (!(beta >= 0.0) || beta > 1.0) throw ConfigError("anneal_sos: level outside [0, 1]");
    if (beta == 0.0) return s;
    const double keep = std::sqrt(1.0 - beta);
    const double mix = std::sqrt(beta);
    SosToken out;
    out.values.resize(s.values.size());
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = keep * s.values[i] + mix * rng.next_gaussian();
    }
    return out;
}

namespace {

// Shared loop body for stages [from_k, to_k]: anneal, predict both branches,
// guide, draw, accumulate. Appends one token grid and one trace row per stage.
// refine_phase disables annealing and switches the draw stream role.
void run_stages(const Predictor& model, const ConditionEmbedding& condition,
                const GenerationConfig& config, bool refine_phase, int from_k, int to_k,
                TokenPyramid& pyramid, FeatureGrid& canvas, std::vector<StageTrace>& trace) {
    const ScaleSchedule& schedule = model.schedule();
    const Codebook& cb = model.codebook();
    const int K = schedule.stages();
    const ConditionEmbedding null_c =
        ConditionEmbedding::null_for(condition.condition_id, model.embed_dim());
    const SosToken clean_sos = model.sos_for(condition);

    for (int k = from_k; k <= to_k; ++k) {
        const auto t0 = std::chrono::steady_clock::now();

        double alpha = 0.0;
        double beta = 0.0;
        if (!refine_phase) {
            if (config.text_anneal) alpha = anneal_level(*config.text_anneal, k);
            if (config.sos_anneal) beta = anneal_level(*config.sos_anneal, k);
        }

        ConditionEmbedding c_hat = condition;
        if (alpha > 0.0) {
            RngStream noise =
                stage_stream(condition.condition_id, config.seed, k, rng_role::condition_noise);
            c_hat = anneal_condition(condition, alpha, noise);
        }
        SosToken s_hat = clean_sos;
        if (beta > 0.0) {
            RngStream noise =
                stage_stream(condition.condition_id, config.seed, k, rng_role::sos_noise);
            s_hat = anneal_sos(clean_sos, beta, noise);
        }

        const double omega = cfg_weight(config.cfg, k, K);
        const StagePrediction q_c = model.predict_stage(canvas, c_hat, s_hat, k);
        std::optional<StagePrediction> q_n;
        if (!(config.skip_null_when_unguided && omega == 0.0)) {
            q_n = model.predict_stage(canvas, null_c, s_hat, k);
        }

        RngStream draw = stage_stream(condition.condition_id, config.seed, k,
                                      refine_phase ? rng_role::refine : rng_role::sample);
        TokenGrid r_k;
        if (q_c.mode == QuantizeMode::vq) {
            const LogitGrid guided =
                q_n ? cfg_combine(q_c.logits, q_n->logits, omega) : q_c.logits;
            r_k = sample_tokens(guided, config.tau, config.top_p, draw, k, cb.dim);
        } else {
            // Identity mode: the prediction is the emission mean; temperature
            // scales additive Gaussian noise, with the same greedy cutoff as
            // the categorical path.
            FeatureGrid mean = q_n ? grid_guided(q_c.target, q_n->target, omega) : q_c.target;
            if (config.tau >= 1e-6) {
                for (double& v : mean.values) v += config.tau * draw.next_gaussian();
            }
            r_k.scale_index = k;
            r_k.height = mean.height;
            r_k.width = mean.width;
            r_k.dim = cb.dim;
            r_k.mode = QuantizeMode::identity;
            r_k.vectors = std::move(mean.values);
        }

        canvas = grid_add(canvas, resample(dequantize(r_k, cb), canvas.height, canvas.width));
        pyramid.grids.push_back(std::move(r_k));

        StageTrace row;
        row.k = k;
        row.phase = refine_phase ? StagePhase::refined : StagePhase::sampled;
        row.omega = omega;
        row.alpha = alpha;
        row.beta = beta;
        row.prototype = q_c.selected_prototype;
        row.wall_ms = ms_since(t0);
        trace.push_back(row);
    }
}

void check_model_config(const Predictor& model, const GenerationConfig& config) {
    config.validate();
    if (model.schedule().stages() != config.total_stages) {
        throw ConfigError("generation: config.total_stages does not match the model schedule");
    }
}

} // namespace

GenerationResult generate(const Predictor& model, const ChannelDecoder& decoder,
                          const ConditionEmbedding& condition, const GenerationConfig& config) {
    check_model_config(model, config);
    const ScaleSchedule& schedule = model.schedule();
    const auto [fh, fw] = schedule.final_scale();

    GenerationResult out;
    out.pyramid.schedule = schedule;
    out.canvas = FeatureGrid(fh, fw, model.codebook().dim);
    run_stages(model, condition, config, /*refine_phase=*/false, 1, schedule.stages(),
               out.pyramid, out.canvas, out.trace);
    out.image = decode_image(out.canvas, decoder);
    return out;
}

GenerationResult diversify_then_refine(const Predictor& model, const ChannelDecoder& decoder,
                                       const ConditionEmbedding& condition,
                                       const GenerationConfig& config) {
    check_model_config(model, config);
    if (!config.travel) throw ConfigError("diversify_then_refine: config.travel is required");
    const int l = config.travel->l;
    const int m = config.travel->m;
    const ScaleSchedule& schedule = model.schedule();
    const Codebook& cb = model.codebook();
    const int K = schedule.stages();
    const auto [fh, fw] = schedule.final_scale();

    GenerationResult out;
    out.trace.reserve(static_cast<size_t>(l + K));

    // Stage A: annealed generation through stage l.
    TokenPyramid coarse;
    coarse.schedule = schedule;
    FeatureGrid canvas_a(fh, fw, cb.dim);
    run_stages(model, condition, config, /*refine_phase=*/false, 1, l, coarse, canvas_a,
               out.trace);

    // Stage B: rewind — re-encode the intermediate canvas into a coarse
    // token prefix and rebuild the canvas from it.
    const auto t0 = std::chrono::steady_clock::now();
    out.pyramid = scale_travel(canvas_a, schedule, m, cb);
    out.canvas = accumulate_canvas(out.pyramid, cb);
    const double travel_ms = ms_since(t0) / m;
    for (int k = 1; k <= m; ++k) {
        StageTrace row;
        row.k = k;
        row.phase = StagePhase::traveled;
        row.wall_ms = travel_ms; // re-encode cost split evenly across the prefix
        out.trace.push_back(row);
    }

    // Stage C: clean refinement from m + 1 to K.
    run_stages(model, condition, config, /*refine_phase=*/true, m + 1, K, out.pyramid,
               out.canvas, out.trace);
    out.image = decode_image(out.canvas, decoder);
    return out;
}

} // namespace vardiv
