#pragma once

// The full next-scale generation loop, plus the two diversity mechanisms:
//
//   * condition annealing — per-stage noise injected into the condition
//     embedding (and optionally the start token) before prediction,
//       c_hat = sqrt(1 - alpha) * c + sqrt(alpha) * eps,  eps fresh per stage;
//   * diversify-then-refine — run the annealed loop through stage l, rewind
//     the canvas to a coarse token prefix of length m by re-encoding, then
//     resume sampling cleanly (no annealing) from stage m + 1 to K.
//
// Every random draw comes from a stream keyed by (condition, seed, stage,
// role), so generations are bit-reproducible and independent of how the
// harness schedules work across threads.

#include <cstdint>
#include <optional>
#include <vector>

#include "vardiv/codec.hpp"
#include "vardiv/image.hpp"
#include "vardiv/predictor.hpp"
#include "vardiv/schedules.hpp"

namespace vardiv {

// Stream roles under one (condition, seed, stage) key.
namespace rng_role {
inline constexpr uint64_t condition_noise = 1; // annealing eps for the condition embedding
inline constexpr uint64_t sos_noise       = 2; // annealing eps for the start token
inline constexpr uint64_t sample          = 3; // token draws in the plain / diversify pass
inline constexpr uint64_t refine          = 4; // token draws in the refine pass
} // namespace rng_role

RngStream stage_stream(int condition_id, uint64_t seed, int stage, uint64_t role);

struct ScaleTravelSpec {
    int l = 0; // stage reached before rewinding
    int m = 0; // prefix length recovered by re-encoding (1 <= m < l)
};

struct GenerationConfig {
    CfgSchedule cfg;
    std::optional<AnnealSchedule> text_anneal;
    std::optional<AnnealSchedule> sos_anneal;
    double   tau   = 1.0;
    double   top_p = 1.0;
    uint64_t seed  = 0;
    std::optional<ScaleTravelSpec> travel;
    int  total_stages = 0; // K; must match the model's schedule
    bool skip_null_when_unguided = false; // benchmark knob: skip Q_null when omega == 0

    void validate() const;
};

enum class StagePhase { sampled, traveled, refined };

struct StageTrace {
    int        k = 0;
    StagePhase phase = StagePhase::sampled;
    double omega = 0.0;   // guidance weight used
    double alpha = 0.0;   // condition noise level used (0 when clean)
    double beta  = 0.0;   // start-token noise level used
    int    prototype = -1; // selected prototype when the model reports one
    double wall_ms = 0.0;
};

// Trace layout: generate() emits one row per stage. diversify_then_refine()
// emits the stage-A rows (phase sampled, k = 1..l), then the rewind rows
// (traveled, k = 1..m), then the refine rows (refined, k = m+1..K); the last
// row for a given k describes the provenance of the result pyramid's grid k.
struct GenerationResult {
    TokenPyramid pyramid;
    FeatureGrid  canvas;
    Image        image;
    std::vector<StageTrace> trace;
};

// Noise injection. Levels outside [0, 1] are rejected; level 0 and null
// conditions pass through unchanged without consuming any draws.
ConditionEmbedding anneal_condition(const ConditionEmbedding& c, double alpha, RngStream& rng);
SosToken anneal_sos(const SosToken& s, double beta, RngStream& rng);

// Plain generation: all K stages with the config's annealing and guidance.
GenerationResult generate(const Predictor& model, const ChannelDecoder& decoder,
                          const ConditionEmbedding& condition, const GenerationConfig& config);

// Diversify-then-refine: annealed generation to stage l, canvas rewind to a
// coarse prefix of length m, clean resume to stage K. Requires config.travel.
GenerationResult diversify_then_refine(const Predictor& model, const ChannelDecoder& decoder,
                                       const ConditionEmbedding& condition,
                                       const GenerationConfig& config);

} // namespace vardiv
