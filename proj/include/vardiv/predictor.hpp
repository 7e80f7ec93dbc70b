#pragma once

// Stage predictors: given the running canvas and conditioning, produce
// per-position token logits for stage k.
//
// PrototypeModel is a transparent stand-in for a learned next-scale model,
// built so mode collapse is reproducible and selection is auditable. Each
// condition owns P teacher pyramids (encodings of reference feature maps) and
// P unit key vectors. A stage prediction scores prototypes by
//
//     score_p = lambda_sel * <c_hat, u_p>
//             + lambda_canvas * ( -||Z_{k-1} - Z^(p)_{k-1}||^2 / (H W D) )
//
// softmaxes the scores into weights w_p, picks p* = argmax w_p (ties -> lowest
// index; null conditions use exactly uniform w_p), and emits logits
//
//     logits[i,j,v] = -||e_v - teacher_vec^(p*)_k[i,j]||^2 / t_logit.
//
// With an identity codebook there is no vocabulary; the prediction instead
// carries the selected prototype's raw stage-k grid, and the sampler treats it
// as the mean of the emission. That path exists for verification: greedy
// no-noise generation then collapses to encoder replay.
//
// LinearModel is a trainable alternative over the same interface: a single
// affine map from [canvas patch | c_hat | s_hat | stage one-hot] to vocabulary
// logits, trained by teacher-forced cross-entropy SGD.

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "vardiv/codec.hpp"
#include "vardiv/grid.hpp"
#include "vardiv/rng.hpp"

namespace vardiv {

struct ConditionEmbedding {
    std::vector<double> values;
    int  condition_id = -1;
    bool null_flag    = false;

    int dim() const { return static_cast<int>(values.size()); }

    // Unit-normalized embedding (the canonical constructor for real conditions).
    static ConditionEmbedding unit(std::vector<double> v, int id);
    // Raw values, e.g. annealed embeddings which are intentionally off-sphere.
    static ConditionEmbedding raw(std::vector<double> v, int id);
    // Unconditional marker; keeps the condition id so the model knows which
    // prototype bank is in scope.
    static ConditionEmbedding null_for(int id, int dim);
};

struct SosToken {
    std::vector<double> values;
    int dim() const { return static_cast<int>(values.size()); }
};

struct LogitGrid {
    int height = 0;
    int width  = 0;
    int vocab  = 0;
    std::vector<double> values; // (h, w, vocab)

    LogitGrid() = default;
    LogitGrid(int h, int w, int v) : height(h), width(w), vocab(v) {
        if (h <= 0 || w <= 0 || v <= 0) {
            throw ConfigError("LogitGrid: dims must be positive");
        }
        values.assign(static_cast<size_t>(h) * w * v, 0.0);
    }
    double& at(int i, int j, int v) {
        return values[(static_cast<size_t>(i) * width + j) * vocab + v];
    }
    double at(int i, int j, int v) const {
        return values[(static_cast<size_t>(i) * width + j) * vocab + v];
    }
    bool same_dims(const LogitGrid& o) const {
        return height == o.height && width == o.width && vocab == o.vocab;
    }
};

// One stage prediction. vq models fill `logits`; identity-mode prototype
// models fill `target` instead. Selection metadata is exposed for traces and
// for oracle tests.
struct StagePrediction {
    QuantizeMode mode = QuantizeMode::vq;
    LogitGrid    logits;
    FeatureGrid  target;
    int          selected_prototype = -1;
    std::vector<double> weights;
};

// Common interface the sampler drives.
struct Predictor {
    virtual ~Predictor() = default;
    virtual StagePrediction predict_stage(const FeatureGrid& canvas, const ConditionEmbedding& c,
                                          const SosToken& s, int k) const = 0;
    virtual const ScaleSchedule& schedule() const = 0;
    virtual const Codebook& codebook() const = 0;
    virtual int embed_dim() const = 0;
    // Start token derived from the condition (fixed projection).
    virtual SosToken sos_for(const ConditionEmbedding& c) const = 0;
};

struct PrototypeBank {
    std::vector<TokenPyramid> teachers;          // P teacher pyramids
    std::vector<std::vector<double>> keys;       // P unit key vectors (embed_dim)
    // caches filled by PrototypeModel::prepare()
    std::vector<std::vector<FeatureGrid>> stage_grids;  // [p][k-1] dequantized teacher grid
    std::vector<std::vector<FeatureGrid>> canvases;     // [p][k]   canvas prefix after k stages (k = 0..K)
};

struct PrototypeModel final : Predictor {
    ScaleSchedule schedule_;
    Codebook      codebook_;
    double lambda_sel    = 8.0;
    double lambda_canvas = 4.0;
    double t_logit       = 0.05;
    int    embed_dim_    = 0;
    std::vector<double> sos_proj; // (feature_dim, embed_dim) row-major
    std::map<int, PrototypeBank> banks;

    void add_condition(int condition_id, std::vector<TokenPyramid> teachers, std::vector<std::vector<double>> keys);
    // Validates everything and fills caches; call once after the last add.
    void prepare();

    StagePrediction predict_stage(const FeatureGrid& canvas, const ConditionEmbedding& c,
                                  const SosToken& s, int k) const override;
    const ScaleSchedule& schedule() const override { return schedule_; }
    const Codebook& codebook() const override { return codebook_; }
    int embed_dim() const override { return embed_dim_; }
    SosToken sos_for(const ConditionEmbedding& c) const override;

private:
    bool prepared_ = false;
    std::vector<double> code_dist2_; // (V, V) pairwise squared distances
};

// -------- trainable linear predictor --------

struct TrainingExample {
    FeatureGrid        canvas;  // full-resolution canvas prefix Z_{k-1}
    TokenGrid          teacher; // stage-k tokens, scale_index = k
    ConditionEmbedding condition;
    SosToken           sos;
};

struct LinearModel final : Predictor {
    ScaleSchedule schedule_;
    Codebook      codebook_; // vq only
    int embed_dim_ = 0;
    std::vector<double> sos_proj; // (feature_dim, embed_dim)
    std::vector<double> weight;   // (vocab, feature_count)
    std::vector<double> bias;     // (vocab)

    // feature layout: [canvas patch (D) | c_hat (embed) | s_hat (D) | stage one-hot (K)]
    int feature_count() const {
        return 2 * codebook_.dim + embed_dim_ + schedule_.stages();
    }

    static LinearModel init(const ScaleSchedule& schedule, Codebook codebook, int embed_dim, RngStream& rng);

    StagePrediction predict_stage(const FeatureGrid& canvas, const ConditionEmbedding& c,
                                  const SosToken& s, int k) const override;
    const ScaleSchedule& schedule() const override { return schedule_; }
    const Codebook& codebook() const override { return codebook_; }
    int embed_dim() const override { return embed_dim_; }
    SosToken sos_for(const ConditionEmbedding& c) const override;
};

// Mean teacher-forced cross-entropy and its gradient for one example
// (exposed so finite-difference checks can audit the training step).
struct LinearGrad {
    double loss = 0.0;
    std::vector<double> d_weight;
    std::vector<double> d_bias;
};
LinearGrad linear_loss_grad(const LinearModel& model, const TrainingExample& ex);

// Plain SGD over shuffled examples; returns the mean cross-entropy per epoch.
std::vector<double> train_linear(LinearModel& model, const std::vector<TrainingExample>& dataset,
                                 int epochs, double learning_rate, RngStream& rng);

// -------- stage-level operations --------

// Conditional logits for stage k (vq models only; identity-mode prototype
// models have no vocabulary to score).
LogitGrid predict(const Predictor& model, const FeatureGrid& canvas, const ConditionEmbedding& c,
                  const SosToken& s, int k);

// Classifier-free guidance combine: (1 + w) * conditional - w * unconditional.
LogitGrid cfg_combine(const LogitGrid& conditional, const LogitGrid& unconditional, double w);

// Temperature + nucleus sampling per position. tau below 1e-6 switches to
// argmax; the nucleus is the smallest probability-sorted prefix reaching
// top_p (ties by lower index), renormalized before the draw. scale_index and
// dim are stamped onto the returned grid.
TokenGrid sample_tokens(const LogitGrid& logits, double tau, double top_p, RngStream& rng,
                        int scale_index = 0, int dim = 0);

} // namespace vardiv
