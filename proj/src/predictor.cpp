#include "vardiv/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "vardiv/errors.hpp"

namespace vardiv {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Stable softmax in place.
void softmax(std::vector<double>& v) {
    double hi = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double& x : v) {
        x = std::exp(x - hi);
        total += x;
    }
    for (double& x : v) x /= total;
}

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[i] > v[best]) best = i; // strict: ties keep the lowest index
    }
    return best;
}

} // namespace

ConditionEmbedding ConditionEmbedding::unit(std::vector<double> v, int id) {
    if (v.empty()) throw ConfigError("ConditionEmbedding: empty vector");
    if (!all_finite(v)) throw ConfigError("ConditionEmbedding: non-finite value");
    double norm = std::sqrt(dot(v, v));
    if (norm <= 0.0) throw ConfigError("ConditionEmbedding: zero vector cannot be normalized");
    for (double& x : v) x /= norm;
    ConditionEmbedding c;
    c.values = std::move(v);
    c.condition_id = id;
    return c;
}

ConditionEmbedding ConditionEmbedding::raw(std::vector<double> v, int id) {
    if (v.empty()) throw ConfigError("ConditionEmbedding: empty vector");
    if (!all_finite(v)) throw ConfigError("ConditionEmbedding: non-finite value");
    ConditionEmbedding c;
    c.values = std::move(v);
    c.condition_id = id;
    return c;
}

ConditionEmbedding ConditionEmbedding::null_for(int id, int dim) {
    if (dim <= 0) throw ConfigError("ConditionEmbedding: dim must be positive");
    ConditionEmbedding c;
    c.values.assign(static_cast<size_t>(dim), 0.0);
    c.condition_id = id;
    c.null_flag = true;
    return c;
}

// -------- PrototypeModel --------

void PrototypeModel::add_condition(int condition_id, std::vector<TokenPyramid> teachers,
                                   std::vector<std::vector<double>> keys) {
    if (prepared_) throw ConfigError("PrototypeModel: add_condition after prepare");
    if (teachers.size() < 2) throw ConfigError("PrototypeModel: condition needs at least two prototypes");
    if (teachers.size() != keys.size()) {
        throw ConfigError("PrototypeModel: teacher/key count mismatch");
    }
    if (banks.count(condition_id)) {
        throw ConfigError("PrototypeModel: duplicate condition id");
    }
    PrototypeBank bank;
    bank.teachers = std::move(teachers);
    bank.keys = std::move(keys);
    banks.emplace(condition_id, std::move(bank));
}

void PrototypeModel::prepare() {
    if (prepared_) throw ConfigError("PrototypeModel: prepare called twice");
    if (schedule_.stages() == 0) throw ConfigError("PrototypeModel: empty schedule");
    if (embed_dim_ <= 0) throw ConfigError("PrototypeModel: embed_dim must be positive");
    if (!(lambda_sel >= 0.0) || !(lambda_canvas >= 0.0)) {
        throw ConfigError("PrototypeModel: selection weights must be non-negative");
    }
    if (!(t_logit > 0.0)) throw ConfigError("PrototypeModel: t_logit must be positive");
    if (sos_proj.size() != static_cast<size_t>(codebook_.dim) * embed_dim_) {
        throw ConfigError("PrototypeModel: sos_proj must be feature_dim x embed_dim");
    }
    if (banks.empty()) throw ConfigError("PrototypeModel: no conditions");

    const int K = schedule_.stages();
    auto [fh, fw] = schedule_.scale(K);

    for (auto& [cid, bank] : banks) {
        (void)cid;
        bank.stage_grids.clear();
        bank.canvases.clear();
        for (const auto& key : bank.keys) {
            if (static_cast<int>(key.size()) != embed_dim_) {
                throw ConfigError("PrototypeModel: key dim mismatch");
            }
            double norm = std::sqrt(dot(key, key));
            if (std::abs(norm - 1.0) > 1e-6) {
                throw ConfigError("PrototypeModel: keys must be unit vectors");
            }
        }
        for (const auto& teacher : bank.teachers) {
            teacher.validate(codebook_);
            if (teacher.schedule.scales != schedule_.scales) {
                throw ConfigError("PrototypeModel: teacher schedule mismatch");
            }
            if (static_cast<int>(teacher.grids.size()) != K) {
                throw ConfigError("PrototypeModel: teacher must cover all stages");
            }
            std::vector<FeatureGrid> stages;
            std::vector<FeatureGrid> prefixes;
            prefixes.push_back(FeatureGrid(fh, fw, codebook_.dim)); // empty canvas
            for (int k = 1; k <= K; ++k) {
                stages.push_back(dequantize(teacher.grids[k - 1], codebook_));
                prefixes.push_back(accumulate_canvas(teacher, codebook_, k));
            }
            bank.stage_grids.push_back(std::move(stages));
            bank.canvases.push_back(std::move(prefixes));
        }
    }

    if (codebook_.mode == QuantizeMode::vq) {
        const int V = codebook_.size();
        code_dist2_.assign(static_cast<size_t>(V) * V, 0.0);
        for (int u = 0; u < V; ++u) {
            for (int v = u + 1; v < V; ++v) {
                double d2 = 0.0;
                for (int c = 0; c < codebook_.dim; ++c) {
                    double diff = codebook_.table[static_cast<size_t>(u) * codebook_.dim + c] -
                                  codebook_.table[static_cast<size_t>(v) * codebook_.dim + c];
                    d2 += diff * diff;
                }
                code_dist2_[static_cast<size_t>(u) * V + v] = d2;
                code_dist2_[static_cast<size_t>(v) * V + u] = d2;
            }
        }
    }
    prepared_ = true;
}

StagePrediction PrototypeModel::predict_stage(const FeatureGrid& canvas, const ConditionEmbedding& c,
                                              const SosToken& s, int k) const {
    (void)s; // prototype selection ignores the start token; it exists for interface parity
    if (!prepared_) throw ConfigError("PrototypeModel: predict_stage before prepare");
    const int K = schedule_.stages();
    if (k < 1 || k > K) throw ConfigError("PrototypeModel: stage out of range");
    auto [fh, fw] = schedule_.scale(K);
    if (canvas.height != fh || canvas.width != fw || canvas.channels != codebook_.dim) {
        throw ConfigError("PrototypeModel: canvas dims must match the final scale");
    }
    if (c.dim() != embed_dim_) throw ConfigError("PrototypeModel: condition dim mismatch");
    auto it = banks.find(c.condition_id);
    if (it == banks.end()) throw ConfigError("PrototypeModel: unknown condition id");
    const PrototypeBank& bank = it->second;
    const int P = static_cast<int>(bank.teachers.size());

    StagePrediction out;
    out.mode = codebook_.mode;
    out.weights.assign(static_cast<size_t>(P), 1.0 / P);
    if (!c.null_flag) {
        std::vector<double> scores(P);
        for (int p = 0; p < P; ++p) {
            double fit = -grid_mse(canvas, bank.canvases[p][k - 1]);
            scores[p] = lambda_sel * dot(c.values, bank.keys[p]) + lambda_canvas * fit;
        }
        softmax(scores);
        out.weights = std::move(scores);
    }
    out.selected_prototype = argmax_lowest(out.weights);

    const TokenGrid& teacher = bank.teachers[out.selected_prototype].grids[k - 1];
    if (codebook_.mode == QuantizeMode::vq) {
        const int V = codebook_.size();
        out.logits = LogitGrid(teacher.height, teacher.width, V);
        for (size_t cell = 0; cell < teacher.cells(); ++cell) {
            const int t = teacher.indices[cell];
            const double* row = &code_dist2_[static_cast<size_t>(t) * V];
            double* dst = &out.logits.values[static_cast<size_t>(cell) * V];
            for (int v = 0; v < V; ++v) dst[v] = -row[v] / t_logit;
        }
    } else {
        out.target = bank.stage_grids[out.selected_prototype][k - 1];
    }
    return out;
}

SosToken PrototypeModel::sos_for(const ConditionEmbedding& c) const {
    if (c.dim() != embed_dim_) throw ConfigError("PrototypeModel: condition dim mismatch");
    SosToken s;
    s.values.assign(static_cast<size_t>(codebook_.dim), 0.0);
    for (int i = 0; i < codebook_.dim; ++i) {
        double acc = 0.0;
        for (int e = 0; e < embed_dim_; ++e) {
            acc += sos_proj[static_cast<size_t>(i) * embed_dim_ + e] * c.values[e];
        }
        s.values[i] = acc;
    }
    return s;
}

// -------- LinearModel --------

LinearModel LinearModel::init(const ScaleSchedule& schedule, Codebook codebook, int embed_dim,
                              RngStream& rng) {
    if (codebook.mode != QuantizeMode::vq) {
        throw ConfigError("LinearModel: requires a vq codebook");
    }
    if (schedule.stages() == 0) throw ConfigError("LinearModel: empty schedule");
    if (embed_dim <= 0) throw ConfigError("LinearModel: embed_dim must be positive");
    LinearModel m;
    m.schedule_ = schedule;
    m.codebook_ = std::move(codebook);
    m.embed_dim_ = embed_dim;
    m.sos_proj.assign(static_cast<size_t>(m.codebook_.dim) * embed_dim, 0.0);
    for (double& x : m.sos_proj) x = 0.1 * rng.next_gaussian();
    const int V = m.codebook_.size();
    m.weight.assign(static_cast<size_t>(V) * m.feature_count(), 0.0);
    for (double& x : m.weight) x = 0.01 * rng.next_gaussian();
    m.bias.assign(static_cast<size_t>(V), 0.0);
    return m;
}

namespace {

// Assemble the per-position feature vector at (i, j) of the stage-k patch.
void linear_features(const LinearModel& m, const FeatureGrid& patch, const ConditionEmbedding& c,
                     const SosToken& s, int k, int i, int j, std::vector<double>& out) {
    const int D = m.codebook_.dim;
    const int K = m.schedule_.stages();
    out.assign(static_cast<size_t>(m.feature_count()), 0.0);
    size_t pos = 0;
    for (int ch = 0; ch < D; ++ch) out[pos++] = patch.at(i, j, ch);
    if (!c.null_flag) {
        for (int e = 0; e < m.embed_dim_; ++e) out[pos + e] = c.values[e];
    }
    pos += m.embed_dim_;
    for (int ch = 0; ch < D; ++ch) out[pos++] = s.values[ch];
    out[pos + (k - 1)] = 1.0;
    (void)K;
}

void check_linear_inputs(const LinearModel& m, const FeatureGrid& canvas, const ConditionEmbedding& c,
                         const SosToken& s, int k) {
    const int K = m.schedule_.stages();
    if (k < 1 || k > K) throw ConfigError("LinearModel: stage out of range");
    auto [fh, fw] = m.schedule_.scale(K);
    if (canvas.height != fh || canvas.width != fw || canvas.channels != m.codebook_.dim) {
        throw ConfigError("LinearModel: canvas dims must match the final scale");
    }
    if (c.dim() != m.embed_dim_) throw ConfigError("LinearModel: condition dim mismatch");
    if (s.dim() != m.codebook_.dim) throw ConfigError("LinearModel: start token dim mismatch");
}

} // namespace

StagePrediction LinearModel::predict_stage(const FeatureGrid& canvas, const ConditionEmbedding& c,
                                           const SosToken& s, int k) const {
    check_linear_inputs(*this, canvas, c, s, k);
    auto [h, w] = schedule_.scale(k);
    FeatureGrid patch = resample(canvas, h, w);
    const int V = codebook_.size();
    const int F = feature_count();

    StagePrediction out;
    out.mode = QuantizeMode::vq;
    out.logits = LogitGrid(h, w, V);
    std::vector<double> x;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            linear_features(*this, patch, c, s, k, i, j, x);
            for (int v = 0; v < V; ++v) {
                const double* row = &weight[static_cast<size_t>(v) * F];
                double acc = bias[v];
                for (int f = 0; f < F; ++f) acc += row[f] * x[f];
                out.logits.at(i, j, v) = acc;
            }
        }
    }
    return out;
}

SosToken LinearModel::sos_for(const ConditionEmbedding& c) const {
    if (c.dim() != embed_dim_) throw ConfigError("LinearModel: condition dim mismatch");
    SosToken s;
    s.values.assign(static_cast<size_t>(codebook_.dim), 0.0);
    for (int i = 0; i < codebook_.dim; ++i) {
        double acc = 0.0;
        for (int e = 0; e < embed_dim_; ++e) {
            acc += sos_proj[static_cast<size_t>(i) * embed_dim_ + e] * c.values[e];
        }
        s.values[i] = acc;
    }
    return s;
}

LinearGrad linear_loss_grad(const LinearModel& model, const TrainingExample& ex) {
    if (ex.teacher.mode != QuantizeMode::vq) {
        throw ConfigError("linear_loss_grad: teacher grid must be vq");
    }
    const int k = ex.teacher.scale_index;
    const int K = model.schedule_.stages();
    if (k < 1 || k > K) throw ConfigError("linear_loss_grad: teacher scale_index out of range");
    auto [h, w] = model.schedule_.scale(k);
    if (ex.teacher.height != h || ex.teacher.width != w) {
        throw ConfigError("linear_loss_grad: teacher dims do not match its scale_index");
    }
    check_linear_inputs(model, ex.canvas, ex.condition, ex.sos, k);

    const int V = model.codebook_.size();
    const int F = model.feature_count();
    FeatureGrid patch = resample(ex.canvas, h, w);

    LinearGrad g;
    g.d_weight.assign(static_cast<size_t>(V) * F, 0.0);
    g.d_bias.assign(static_cast<size_t>(V), 0.0);
    const double inv_n = 1.0 / (static_cast<double>(h) * w);

    std::vector<double> x;
    std::vector<double> logits(V);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            linear_features(model, patch, ex.condition, ex.sos, k, i, j, x);
            for (int v = 0; v < V; ++v) {
                const double* row = &model.weight[static_cast<size_t>(v) * F];
                double acc = model.bias[v];
                for (int f = 0; f < F; ++f) acc += row[f] * x[f];
                logits[v] = acc;
            }
            softmax(logits);
            const int t = ex.teacher.indices[static_cast<size_t>(i) * w + j];
            if (t < 0 || t >= V) throw ConfigError("linear_loss_grad: teacher token out of range");
            g.loss += -std::log(std::max(logits[t], 1e-300)) * inv_n;
            for (int v = 0; v < V; ++v) {
                const double dlogit = (logits[v] - (v == t ? 1.0 : 0.0)) * inv_n;
                g.d_bias[v] += dlogit;
                double* drow = &g.d_weight[static_cast<size_t>(v) * F];
                for (int f = 0; f < F; ++f) drow[f] += dlogit * x[f];
            }
        }
    }
    return g;
}

std::vector<double> train_linear(LinearModel& model, const std::vector<TrainingExample>& dataset,
                                 int epochs, double learning_rate, RngStream& rng) {
    if (epochs < 0) throw ConfigError("train_linear: epochs must be non-negative");
    if (learning_rate < 0.0) throw ConfigError("train_linear: learning rate must be non-negative");
    if (dataset.empty()) throw ConfigError("train_linear: empty dataset");

    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<double> epoch_ce;
    epoch_ce.reserve(static_cast<size_t>(epochs));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Fisher-Yates with the provided stream keeps the pass deterministic.
        for (size_t i = order.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
        double total = 0.0;
        for (size_t idx : order) {
            LinearGrad g = linear_loss_grad(model, dataset[idx]);
            total += g.loss;
            for (size_t i = 0; i < model.weight.size(); ++i) {
                model.weight[i] -= learning_rate * g.d_weight[i];
            }
            for (size_t i = 0; i < model.bias.size(); ++i) {
                model.bias[i] -= learning_rate * g.d_bias[i];
            }
        }
        epoch_ce.push_back(total / static_cast<double>(dataset.size()));
    }
    return epoch_ce;
}

// -------- stage-level operations --------

LogitGrid predict(const Predictor& model, const FeatureGrid& canvas, const ConditionEmbedding& c,
                  const SosToken& s, int k) {
    StagePrediction p = model.predict_stage(canvas, c, s, k);
    if (p.mode != QuantizeMode::vq) {
        throw ConfigError("predict: model has no vocabulary to score (identity mode)");
    }
    return std::move(p.logits);
}

LogitGrid cfg_combine(const LogitGrid& conditional, const LogitGrid& unconditional, double w) {
    if (!conditional.same_dims(unconditional)) {
        throw ConfigError("cfg_combine: logit grid dims mismatch");
    }
    LogitGrid out(conditional.height, conditional.width, conditional.vocab);
    for (size_t i = 0; i < out.values.size(); ++i) {
        // (1 + w) * Qc - w * Qn, arranged so w = 0 and Qc == Qn return Qc
        // bit-exactly rather than merely close.
        out.values[i] = conditional.values[i] + w * (conditional.values[i] - unconditional.values[i]);
    }
    return out;
}

TokenGrid sample_tokens(const LogitGrid& logits, double tau, double top_p, RngStream& rng,
                        int scale_index, int dim) {
    if (logits.height <= 0 || logits.width <= 0 || logits.vocab <= 0) {
        throw ConfigError("sample_tokens: empty logit grid");
    }
    if (!(tau > 0.0)) throw ConfigError("sample_tokens: tau must be positive");
    if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("sample_tokens: top_p must be in (0, 1]");

    TokenGrid out;
    out.scale_index = scale_index;
    out.height = logits.height;
    out.width = logits.width;
    out.dim = dim;
    out.mode = QuantizeMode::vq;
    out.indices.assign(static_cast<size_t>(out.height) * out.width, 0);

    const int V = logits.vocab;
    const bool greedy = tau < 1e-6;
    std::vector<double> probs(V);
    std::vector<int> order(V);

    for (int cell = 0; cell < out.height * out.width; ++cell) {
        const double* row = &logits.values[static_cast<size_t>(cell) * V];
        if (greedy) {
            int best = 0;
            for (int v = 1; v < V; ++v) {
                if (row[v] > row[best]) best = v;
            }
            out.indices[cell] = best;
            continue;
        }
        for (int v = 0; v < V; ++v) probs[v] = row[v] / tau;
        softmax(probs);
        // Sort by probability, descending; ties resolved toward lower index.
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (probs[a] != probs[b]) return probs[a] > probs[b];
            return a < b;
        });
        // Smallest prefix whose mass reaches top_p (everything when top_p == 1).
        int kept = V;
        if (top_p < 1.0) {
            double cum = 0.0;
            for (int r = 0; r < V; ++r) {
                cum += probs[order[r]];
                if (cum >= top_p) {
                    kept = r + 1;
                    break;
                }
            }
        }
        double mass = 0.0;
        for (int r = 0; r < kept; ++r) mass += probs[order[r]];
        const double u = rng.next_unit() * mass;
        double acc = 0.0;
        int pick = order[kept - 1];
        for (int r = 0; r < kept; ++r) {
            acc += probs[order[r]];
            if (u < acc) {
                pick = order[r];
                break;
            }
        }
        out.indices[cell] = pick;
    }
    return out;
}

} // namespace vardiv
