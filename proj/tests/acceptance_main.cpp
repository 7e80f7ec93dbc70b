// Acceptance gate: eleven checks covering codec exactness, schedule closed
// forms, guidance and annealing identities, metric axioms, the training
// gradient, the desk-scale diversity/quality trends, Pareto participation,
// overhead, and worker-count determinism. One PASS/FAIL line per criterion;
// exit status 0 only when every criterion holds. All tolerances are pinned
// here as named constants.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "vardiv/codec.hpp"
#include "vardiv/harness.hpp"
#include "vardiv/metrics.hpp"
#include "vardiv/predictor.hpp"
#include "vardiv/rng.hpp"
#include "vardiv/sampler.hpp"
#include "vardiv/schedules.hpp"

using namespace vardiv;

namespace {

// -------- pinned tolerances and limits --------
constexpr double kCodecTol = 1e-6;         // identity round-trip, travel prefix
constexpr double kScheduleTol = 1e-12;     // closed-form schedule values
constexpr double kMomentTol = 0.05;        // annealing mean/variance (±5%)
constexpr double kMetricTol = 1e-6;        // metric axioms
constexpr double kGradTol = 1e-4;          // relative gradient error
constexpr double kBaselineVendiMax = 1.2;  // mode collapse ceiling
constexpr double kAnnealVendiMin = 2.0;    // diversification floor
constexpr double kTravelVendiFrac = 0.7;   // travel keeps >= 70% of anneal's Vendi
constexpr double kOverheadMax = 1.5;       // travel wall-time ratio ceiling
constexpr double kCodecTimeLimitS = 5.0;
constexpr double kTravelTimeLimitS = 10.0;
constexpr double kTrendTimeLimitS = 120.0;
constexpr double kSweepTimeLimitS = 600.0;

int failures = 0;

void line(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %s (%s)\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
    if (!ok) ++failures;
}

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

FeatureGrid random_grid(int h, int w, int d, RngStream& rng) {
    FeatureGrid g(h, w, d);
    for (double& v : g.values) v = rng.next_gaussian();
    return g;
}

// -------- criteria 1-2: codec exactness and travel prefixes --------

void criterion_codec() {
    const ScaleSchedule schedule = ScaleSchedule::desk7();
    const Codebook identity = Codebook::identity(4);
    RngStream rng(20250401, 1);

    std::vector<FeatureGrid> maps;
    std::vector<TokenPyramid> pyramids;
    const double t0 = now_s();
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        FeatureGrid z = random_grid(16, 16, 4, rng);
        TokenPyramid pyr = multi_scale_encode(z, schedule, identity);
        const FeatureGrid back = accumulate_canvas(pyr, identity);
        const double scale = std::max(1.0, grid_max_abs(z));
        worst = std::max(worst, grid_max_abs(grid_sub(back, z)) / scale);
        maps.push_back(std::move(z));
        pyramids.push_back(std::move(pyr));
    }
    const double t_codec = now_s() - t0;
    line(1, "identity codec round-trip on 50 random maps",
         worst <= kCodecTol && t_codec < kCodecTimeLimitS,
         "max rel err " + fmt(worst) + ", " + fmt(t_codec) + " s");

    const double t1 = now_s();
    double worst_prefix = 0.0;
    for (size_t i = 0; i < maps.size(); ++i) {
        const FeatureGrid canvas = accumulate_canvas(pyramids[i], identity);
        for (int m = 1; m <= schedule.stages(); ++m) {
            const TokenPyramid travel = scale_travel(canvas, schedule, m, identity);
            for (int k = 0; k < m; ++k) {
                const std::vector<double>& a = travel.grids[static_cast<size_t>(k)].vectors;
                const std::vector<double>& b = pyramids[i].grids[static_cast<size_t>(k)].vectors;
                for (size_t j = 0; j < a.size(); ++j) {
                    worst_prefix = std::max(worst_prefix, std::abs(a[j] - b[j]));
                }
            }
        }
    }
    const double t_travel = now_s() - t1;
    line(2, "scale-travel recovers every encoder prefix",
         worst_prefix <= kCodecTol && t_travel < kTravelTimeLimitS,
         "max err " + fmt(worst_prefix) + ", " + fmt(t_travel) + " s");
}

// -------- criterion 3: schedule closed forms --------

double oracle_gamma(CfgVariant variant, int k, int k_max) {
    if (k > k_max) return 1.0;
    const double ramp = (k_max == 1) ? 0.0
                                     : static_cast<double>(k - 1) / static_cast<double>(k_max - 1);
    switch (variant) {
        case CfgVariant::cosine: return 1.0 - (std::cos(M_PI * ramp) + 1.0) / 2.0;
        case CfgVariant::cosine_inverse: return (std::cos(M_PI * ramp) + 1.0) / 2.0;
        case CfgVariant::linear: return ramp;
        case CfgVariant::linear_inverse: return 1.0 - ramp;
        default: return 0.5; // interp_constant
    }
}

void criterion_schedules() {
    const int K = 10;
    double worst = 0.0;

    // Piecewise-constant family: w1 inside [k_min, k_max], wK outside.
    const CfgVariant pw[] = {CfgVariant::constant, CfgVariant::constant_inverse};
    const double pw_params[][4] = {{2.0, 0.0, 2, 5}, {1.5, 0.5, 1, 8}, {3.0, 1.0, 4, 10}};
    for (CfgVariant variant : pw) {
        for (const double* p : pw_params) {
            CfgSchedule s{CfgFamily::piecewise_constant, variant,
                          p[0],                          p[1],
                          static_cast<int>(p[2]),        static_cast<int>(p[3])};
            s.validate(K);
            for (int k = 1; k <= K; ++k) {
                const double want = (k >= s.k_min && k <= s.k_max) ? s.w1 : s.wK;
                worst = std::max(worst, std::abs(cfg_weight(s, k, K) - want));
            }
        }
    }

    // Interpolation family: omega = (1 - gamma) w1 + gamma wK.
    const CfgVariant interp[] = {CfgVariant::cosine, CfgVariant::cosine_inverse,
                                 CfgVariant::linear, CfgVariant::linear_inverse,
                                 CfgVariant::interp_constant};
    const double in_params[][3] = {{0.0, 2.0, 6}, {1.0, 3.0, 10}, {0.5, 2.5, 4}};
    for (CfgVariant variant : interp) {
        for (const double* p : in_params) {
            CfgSchedule s{CfgFamily::interpolation, variant, p[0], p[1], 1,
                          static_cast<int>(p[2])};
            s.validate(K);
            for (int k = 1; k <= K; ++k) {
                const double g = oracle_gamma(variant, k, s.k_max);
                const double want = (1.0 - g) * s.w1 + g * s.wK;
                worst = std::max(worst, std::abs(cfg_weight(s, k, K) - want));
            }
        }
    }

    // Annealing levels: zero past k_max, variant formula inside.
    const AnnealVariant anneal[] = {AnnealVariant::linear, AnnealVariant::cosine,
                                    AnnealVariant::constant};
    const double an_params[][2] = {{1.0, 4}, {0.5, 7}, {0.8, 10}};
    for (AnnealVariant variant : anneal) {
        for (const double* p : an_params) {
            AnnealSchedule s{variant, AnnealTarget::text_embedding, p[0],
                             static_cast<int>(p[1])};
            s.validate();
            for (int k = 1; k <= K; ++k) {
                double want = 0.0;
                if (k <= s.k_max) {
                    const double ramp = (s.k_max == 1)
                                            ? 0.0
                                            : static_cast<double>(k - 1) /
                                                  static_cast<double>(s.k_max - 1);
                    if (variant == AnnealVariant::linear) want = s.sigma * (1.0 - ramp);
                    if (variant == AnnealVariant::cosine) {
                        want = s.sigma / 2.0 * (std::cos(M_PI * ramp) + 1.0);
                    }
                    if (variant == AnnealVariant::constant) want = s.sigma;
                }
                worst = std::max(worst, std::abs(anneal_level(s, k) - want));
            }
        }
    }

    line(3, "schedule closed forms at k = 1..10, 3 parameterizations each", worst <= kScheduleTol,
         "max err " + fmt(worst));
}

// -------- criterion 4: guidance identities --------

void criterion_cfg_identity() {
    RngStream rng(20250402, 1);
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
        LogitGrid qc(4, 4, 16);
        LogitGrid qn(4, 4, 16);
        for (double& v : qc.values) v = rng.next_gaussian();
        for (double& v : qn.values) v = rng.next_gaussian();

        const LogitGrid unguided = cfg_combine(qc, qn, 0.0);
        ok = ok && unguided.values == qc.values;

        const double w = 0.25 + trial;
        const LogitGrid self = cfg_combine(qc, qc, w);
        ok = ok && self.values == qc.values;
    }
    line(4, "guidance identities: omega = 0 and Qc = Qnull return Qc exactly", ok,
         ok ? "bit-exact" : "mismatch");
}

// -------- criterion 5: annealing moments --------

void criterion_anneal_moments() {
    const int dim = 16;
    const int draws = 10000;
    RngStream key_rng(20250403, 1);
    const ConditionEmbedding c = ConditionEmbedding::unit(gaussian(dim, key_rng), 0);

    double worst_mean = 0.0;
    double worst_var = 0.0;
    for (double alpha : {0.0, 0.5, 1.0}) {
        RngStream rng(20250403, 2 + static_cast<uint64_t>(alpha * 10.0));
        std::vector<double> mean(dim, 0.0);
        double sq = 0.0;
        for (int i = 0; i < draws; ++i) {
            const ConditionEmbedding hat = anneal_condition(c, alpha, rng);
            for (int d = 0; d < dim; ++d) mean[static_cast<size_t>(d)] += hat.values[d];
            for (int d = 0; d < dim; ++d) {
                const double centered =
                    hat.values[d] - std::sqrt(1.0 - alpha) * c.values[static_cast<size_t>(d)];
                sq += centered * centered;
            }
        }
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) {
            dot += mean[static_cast<size_t>(d)] / draws * c.values[static_cast<size_t>(d)];
        }
        worst_mean = std::max(worst_mean, std::abs(dot - std::sqrt(1.0 - alpha)));
        worst_var = std::max(worst_var, std::abs(sq / (draws * dim) - alpha));
    }
    line(5, "annealing moments at alpha in {0, 0.5, 1} over 10^4 draws",
         worst_mean <= kMomentTol && worst_var <= kMomentTol,
         "mean err " + fmt(worst_mean) + ", var err " + fmt(worst_var));
}

// -------- criterion 6: metric axioms --------

void criterion_metric_axioms() {
    bool ok = true;
    std::string detail;

    Image base(4, 4);
    for (size_t i = 0; i < base.rgb.size(); ++i) base.rgb[i] = (i % 7) / 7.0;
    SampleSet identical;
    identical.condition_id = 0;
    identical.images.assign(5, base);
    ok = ok && std::abs(vendi_score(identical) - 1.0) <= kMetricTol;
    ok = ok && mean_pairwise_distance(identical) == 0.0;

    const int n = 4;
    SampleSet orthogonal;
    orthogonal.condition_id = 0;
    for (int i = 0; i < n; ++i) {
        Image img(2, 2);
        img.rgb[static_cast<size_t>(i) * 3] = 1.0; // one disjoint bright pixel each
        orthogonal.images.push_back(img);
    }
    const double v_orth = vendi_score(orthogonal);
    ok = ok && std::abs(v_orth - n) <= kMetricTol;

    RngStream rng(20250404, 1);
    SampleSet random_set;
    random_set.condition_id = 0;
    for (int i = 0; i < 6; ++i) {
        Image img(4, 4);
        for (double& v : img.rgb) v = std::abs(rng.next_gaussian()) / 4.0;
        random_set.images.push_back(img);
    }
    const double v_rand = vendi_score(random_set);
    ok = ok && v_rand >= 1.0 - kMetricTol && v_rand <= 6.0 + kMetricTol;

    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 8; ++i) {
        feats.push_back({rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()});
    }
    const double self = frechet_distance(feats, feats);
    ok = ok && self <= kMetricTol;

    // Population moments: {-1, 1} is N(0, 1), {-1, 3} is N(1, 4); the
    // 1-D closed form gives (1-2)^2 offset... mu term 1 + variance term 1.
    const double scalar = frechet_distance({{-1.0}, {1.0}}, {{-1.0}, {3.0}});
    ok = ok && std::abs(scalar - 2.0) <= kMetricTol;

    line(6, "metric axioms: Vendi range/extremes, MPD zero, Frechet forms", ok,
         "Vendi orth " + fmt(v_orth) + ", Frechet self " + fmt(self) + ", scalar " +
             fmt(scalar));
}

// -------- criterion 7: gradient check --------

void criterion_gradient() {
    const ScaleSchedule schedule(std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {4, 4}});
    RngStream rng(20250405, 1);
    std::vector<double> table(5 * 2);
    for (double& v : table) v = rng.next_gaussian() / 3.0;
    const Codebook cb(QuantizeMode::vq, 2, table);
    LinearModel model = LinearModel::init(schedule, cb, 4, rng);

    TrainingExample ex;
    ex.canvas = random_grid(4, 4, 2, rng);
    ex.teacher.scale_index = 2;
    ex.teacher.height = 2;
    ex.teacher.width = 2;
    ex.teacher.dim = 2;
    ex.teacher.mode = QuantizeMode::vq;
    ex.teacher.indices = {0, 3, 1, 4};
    ex.condition = ConditionEmbedding::unit(gaussian(4, rng), 0);
    ex.sos = model.sos_for(ex.condition);

    const LinearGrad grad = linear_loss_grad(model, ex);

    // Probe the ten largest-magnitude weight gradients with central
    // differences; a sign or scale bug cannot hide in coordinates that carry
    // the update.
    std::vector<size_t> order(grad.d_weight.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::abs(grad.d_weight[a]) > std::abs(grad.d_weight[b]);
    });

    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const size_t idx = order[static_cast<size_t>(i)];
        LinearModel plus = model;
        LinearModel minus = model;
        plus.weight[idx] += h;
        minus.weight[idx] -= h;
        const double numeric =
            (linear_loss_grad(plus, ex).loss - linear_loss_grad(minus, ex).loss) / (2.0 * h);
        const double analytic = grad.d_weight[idx];
        const double rel = std::abs(numeric - analytic) /
                           std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, rel);
    }
    line(7, "linear cross-entropy gradient vs central differences", worst <= kGradTol,
         "max rel err " + fmt(worst));
}

// -------- criteria 8-11: desk-scale trends, Pareto, overhead, determinism --------

struct DeskArtifacts {
    ExperimentConfig cfg;
    Corpus corpus;
    ModelBundle bundle;
};

DeskArtifacts build_desk() {
    DeskArtifacts d;
    const ScaleSchedule schedule = schedule_preset(d.cfg.schedule);
    d.corpus = synth_corpus(d.cfg.corpus, d.cfg.seed);
    const Codebook codebook = fit_corpus_codebook(d.corpus, schedule, d.cfg.feature_gain,
                                                  d.cfg.codebook_size, d.cfg.codebook_iters,
                                                  d.cfg.seed);
    d.bundle = build_prototype_model(d.corpus, schedule, codebook, d.cfg);
    return d;
}

int main_desk() {
    const DeskArtifacts desk = build_desk();

    // 8: the trend triple, single-threaded.
    const double t0 = now_s();
    const RunRecord base = run_method(Method::baseline, desk.cfg, desk.corpus, desk.bundle, 1);
    const RunRecord ann = run_method(Method::anneal, desk.cfg, desk.corpus, desk.bundle, 1);
    const RunRecord trav = run_method(Method::scale_travel, desk.cfg, desk.corpus, desk.bundle, 1);
    const double t_trend = now_s() - t0;
    const bool collapse = base.mean.vendi <= kBaselineVendiMax;
    const bool diversify = ann.mean.vendi >= kAnnealVendiMin && ann.mean.quality < base.mean.quality;
    const bool refine = trav.mean.quality > ann.mean.quality &&
                        trav.mean.vendi >= kTravelVendiFrac * ann.mean.vendi &&
                        trav.mean.vendi > base.mean.vendi;
    line(8, "collapse -> diversify -> refine trend (C=8, P=4, 10 seeds)",
         collapse && diversify && refine && t_trend < kTrendTimeLimitS,
         "Vendi " + fmt(base.mean.vendi) + "/" + fmt(ann.mean.vendi) + "/" +
             fmt(trav.mean.vendi) + ", Q " + fmt(base.mean.quality) + "/" +
             fmt(ann.mean.quality) + "/" + fmt(trav.mean.quality) + ", " + fmt(t_trend) + " s");

    // 9: Pareto participation over the fixed grid.
    ExperimentConfig sweep_cfg = desk.cfg;
    sweep_cfg.sweep.sigma = {0.5, 1.0};
    sweep_cfg.sweep.k_max = {2, 3};
    sweep_cfg.sweep.m = {2, 3};
    const double t1 = now_s();
    const SweepResult swept = sweep(sweep_cfg, desk.corpus, desk.bundle, 8);
    const double t_sweep = now_s() - t1;

    int travel_on_front = 0;
    for (const ParetoPoint& fp : swept.global_front) {
        for (const SweepPoint& p : swept.points) {
            if (p.digest == fp.digest && p.method == Method::scale_travel) ++travel_on_front;
        }
    }
    bool anneal_dominates_all = false;
    for (const SweepPoint& a : swept.points) {
        if (a.method != Method::anneal) continue;
        bool dominates_every_travel = true;
        for (const SweepPoint& t : swept.points) {
            if (t.method != Method::scale_travel) continue;
            const bool dominates =
                a.mean.vendi >= t.mean.vendi && a.mean.quality >= t.mean.quality &&
                (a.mean.vendi > t.mean.vendi || a.mean.quality > t.mean.quality);
            if (!dominates) {
                dominates_every_travel = false;
                break;
            }
        }
        if (dominates_every_travel) anneal_dominates_all = true;
    }
    line(9, "scale-travel participates in the global Pareto front",
         travel_on_front >= 1 && !anneal_dominates_all && t_sweep < kSweepTimeLimitS,
         fmt(travel_on_front) + " travel point(s) on front, " + fmt(t_sweep) + " s");

    // 10: overhead bound.
    const BenchResult bench = bench_overhead(desk.cfg, desk.corpus, desk.bundle);
    const double ratio = bench.ratio.at("scale_travel");
    line(10, "scale-travel overhead ratio over 100 samples", ratio <= kOverheadMax,
         "x" + fmt(ratio) + " vs baseline");

    // 11: byte-identical CSVs for worker counts 1 and 8.
    bool identical = true;
    const RunRecord base8 = run_method(Method::baseline, desk.cfg, desk.corpus, desk.bundle, 8);
    const RunRecord ann8 = run_method(Method::anneal, desk.cfg, desk.corpus, desk.bundle, 8);
    const RunRecord trav8 =
        run_method(Method::scale_travel, desk.cfg, desk.corpus, desk.bundle, 8);
    identical = identical && csv_encode(metrics_table(base)) == csv_encode(metrics_table(base8));
    identical = identical && csv_encode(metrics_table(ann)) == csv_encode(metrics_table(ann8));
    identical = identical && csv_encode(metrics_table(trav)) == csv_encode(metrics_table(trav8));
    const SweepResult swept1 = sweep(sweep_cfg, desk.corpus, desk.bundle, 1);
    identical = identical && csv_encode(sweep_points_table(swept)) ==
                                 csv_encode(sweep_points_table(swept1));
    identical = identical && csv_encode(sweep_metrics_table(swept)) ==
                                 csv_encode(sweep_metrics_table(swept1));
    line(11, "metrics CSVs byte-identical for workers 1 and 8", identical,
         identical ? "runs and sweep match" : "mismatch");
    return 0;
}

} // namespace

int main() {
    criterion_codec();
    criterion_schedules();
    criterion_cfg_identity();
    criterion_anneal_moments();
    criterion_metric_axioms();
    criterion_gradient();
    main_desk();

    std::printf("acceptance: %d/11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
