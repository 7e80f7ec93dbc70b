#pragma once

// Experiment orchestration: synthetic corpus generation, codebook fitting,
// model assembly and persistence, per-method generation runs with metrics,
// hyperparameter sweeps with Pareto extraction, overhead benchmarks, and
// summary reports.
//
// Everything is driven by one ExperimentConfig (JSON round-trippable). Its
// digest is computed over the canonical form with the output directory
// removed, so the same experiment keeps one identity no matter where it
// runs. Generation work is distributed over a deterministic worker pool:
// tasks write into preassigned slots and results are reduced in fixed order,
// so every CSV is byte-identical across worker counts and reruns.
//
// Filesystem layout under the output directory:
//   corpus/manifest.json + c<cid>_p<p>.ppm      (synth)
//   codebook.varc                               (fit-codebook)
//   model/model.json + params.bin + codebook.varc + pyramids/*.varp
//   linear/model.json + params.bin, train/loss.csv      (train)
//   runs/<method>/metrics.csv + record.json + samples/*.ppm   (run)
//   sweep/points.csv + metrics.csv + pareto_*.csv + pareto.svg
//   bench/bench.json                             (bench)
//   report/summary.md + summary.csv              (report)

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vardiv/codec.hpp"
#include "vardiv/image.hpp"
#include "vardiv/metrics.hpp"
#include "vardiv/predictor.hpp"
#include "vardiv/sampler.hpp"
#include "vardiv/textio.hpp"

namespace vardiv {

// Named scale schedules. "desk7" is the working default: K = 7 up to 16x16.
// "tall13" mirrors the shape of a production pyramid (K = 13 up to 32x32)
// for configs that exercise deeper rewinds.
ScaleSchedule schedule_preset(const std::string& name);

// -------- corpus --------

struct CorpusSpec {
    int conditions = 8; // C
    int prototypes = 4; // P per condition
    int height     = 16;
    int width      = 16;
    int embed_dim  = 16; // D_c

    void validate() const; // C >= 1, P >= 2, positive dims
};

struct CorpusCondition {
    int id = -1;
    std::vector<double> embedding;           // unit, embed_dim
    std::vector<std::vector<double>> keys;   // P unit vectors
    std::vector<Image> references;           // P images
};

struct Corpus {
    CorpusSpec spec;
    uint64_t seed = 0;
    std::vector<CorpusCondition> conditions;
};

// Procedural reference image for (condition, prototype): a condition-keyed
// palette, a prototype-keyed bright stripe pattern with disjoint phases on a
// dark gradient ground, and a faint per-prototype quadrant tint as the
// coarse-scale signature. Values are snapped to the 8-bit grid so the
// in-memory image equals its PPM round-trip exactly.
Image render_reference(const CorpusSpec& spec, int condition, int prototype);

// Deterministic corpus: keys are seeded random unit vectors; the condition
// embedding is the normalized mean of its prototype keys, which equalizes
// the clean-condition affinity across prototypes and leaves selection to the
// canvas term (and, under annealing, to the noise).
Corpus synth_corpus(const CorpusSpec& spec, uint64_t seed);

void   write_corpus(const Corpus& corpus, const std::string& dir);
Corpus read_corpus(const std::string& dir);

// -------- experiment configuration --------

enum class Method { baseline, anneal, scale_travel };
Method      method_from_name(const std::string& name);
std::string method_name(Method m);

// Swept value sets; an empty axis falls back to the config's single value.
struct SweepAxes {
    std::vector<double> sigma;
    std::vector<int>    k_max;
    std::vector<int>    m;
    std::vector<double> omega;
    std::vector<double> tau;
    std::vector<double> top_p;
};

struct ExperimentConfig {
    CorpusSpec  corpus;
    std::string schedule = "desk7";
    int codebook_size  = 64; // k-means centroids (a zero row is appended)
    int codebook_iters = 25;
    std::vector<Method> methods = {Method::baseline, Method::anneal, Method::scale_travel};
    int seeds = 10; // samples per condition

    // method hyperparameters (desk defaults)
    std::string anneal_variant = "constant"; // linear | cosine | constant
    double sigma = 1.0;
    int    k_max = 3;
    bool   anneal_sos = false; // also anneal the start token
    double omega = 0.0;        // constant guidance weight
    double tau   = 1.0;
    double top_p = 0.97;
    int travel_l = 6;
    int travel_m = 2;

    // predictor calibration constants
    double lambda_sel    = 8.0;
    double lambda_canvas = 4.0;
    double t_logit       = 0.05;
    // Feature-space scale: corpus images are embedded as gain * RGB and the
    // decoder divides it back out. Reconstruction error in RGB is unchanged,
    // but codeword distances (and so emission logit gaps) scale by gain^2,
    // which is what makes clean generation collapse to its prototype.
    double feature_gain  = 12.0;

    // linear-model training
    int    train_epochs = 30;
    double train_lr     = 0.05;

    SweepAxes sweep;
    int  bench_samples  = 100;
    bool bench_skip_null = false; // skip the unconditional branch when omega == 0
    bool svg_timestamp   = true;

    uint64_t seed = 0;
    std::string out_dir = "out";

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    // Canonical digest; out_dir is excluded so relocation keeps the identity.
    std::string digest() const;
};

ExperimentConfig load_config(const std::string& path); // names the file on parse errors

// -------- model assembly and persistence --------

struct ModelBundle {
    PrototypeModel model;
    ChannelDecoder decoder;
    std::map<int, std::vector<double>> embeddings; // per condition, unit
};

// k-means over the identity-encode residuals of every reference map,
// embedded at the given feature gain.
Codebook fit_corpus_codebook(const Corpus& corpus, const ScaleSchedule& schedule,
                             double feature_gain, int centroids, int iterations,
                             uint64_t seed);

ModelBundle build_prototype_model(const Corpus& corpus, const ScaleSchedule& schedule,
                                  const Codebook& codebook, const ExperimentConfig& cfg);

// model.json manifest (relative paths) + params.bin (named little-endian f64
// blocks) + codebook.varc + pyramids/*.varp.
void        save_model(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_model(const std::string& dir);

// Teacher-forced training set over every (condition, prototype, stage).
std::vector<TrainingExample> linear_dataset(const Corpus& corpus, const LinearModel& model,
                                            double feature_gain);

struct TrainResult {
    LinearModel model;
    std::vector<double> epoch_ce;
};
TrainResult train_linear_on_corpus(const Corpus& corpus, const Codebook& codebook,
                                   const ScaleSchedule& schedule, const ExperimentConfig& cfg);

void        save_linear(const LinearModel& model, const std::string& dir);
LinearModel load_linear(const std::string& dir);

// -------- runs, sweeps, benchmarks, reports --------

// The per-sample generation settings a method implies under a config.
GenerationConfig method_generation_config(const ExperimentConfig& cfg, Method method,
                                          int total_stages, uint64_t sample_seed);

struct ConditionMetrics {
    int condition_id = -1;
    MetricsReport report;
};

struct RunRecord {
    Method method = Method::baseline;
    std::string digest;
    std::vector<ConditionMetrics> rows; // ascending condition_id
    MetricsReport mean;                 // means across conditions
    double wall_ms_generate = 0.0;
    double wall_ms_metrics  = 0.0;
    std::vector<std::string> sample_paths; // when samples were persisted
};

// Generates seeds x conditions samples, computes per-condition metrics, and
// (when samples_dir is set) persists each sample as PPM.
RunRecord run_method(Method method, const ExperimentConfig& cfg, const Corpus& corpus,
                     const ModelBundle& bundle, int workers,
                     const std::string* samples_dir = nullptr);

// Frozen metrics CSV: condition_id, method, mpd_pix, vendi_pix, frechet_pix,
// q_proxy, n, digest.
CsvTable metrics_table(const RunRecord& record);

void      write_run_record(const RunRecord& record, const std::string& dir);
RunRecord read_run_record(const std::string& dir); // names the file on parse errors

// One swept configuration of one method.
struct SweepPoint {
    Method method = Method::baseline;
    double sigma = 0.0;
    int    k_max = 0;
    int    m     = 0;
    double omega = 0.0;
    double tau   = 0.0;
    double top_p = 0.0;
    std::string digest;
    MetricsReport mean;
    std::vector<ConditionMetrics> rows;
};

struct SweepResult {
    std::vector<SweepPoint> points;                        // method-major order
    std::map<std::string, std::vector<ParetoPoint>> method_fronts;
    std::vector<ParetoPoint> global_front;
};

SweepResult sweep(const ExperimentConfig& cfg, const Corpus& corpus,
                  const ModelBundle& bundle, int workers);

CsvTable sweep_points_table(const SweepResult& result);
CsvTable sweep_metrics_table(const SweepResult& result);
CsvTable pareto_table(const std::vector<ParetoPoint>& front);
// Scatter of every method's points with the fronts drawn as polylines.
std::string sweep_svg(const SweepResult& result, bool timestamp);

void write_sweep(const SweepResult& result, const std::string& dir, bool timestamp);

struct BenchResult {
    int samples = 0;
    std::map<std::string, double> mean_ms;   // per method name
    std::map<std::string, double> ratio;     // vs baseline
};

BenchResult bench_overhead(const ExperimentConfig& cfg, const Corpus& corpus,
                           const ModelBundle& bundle);

struct ReportResult {
    std::string markdown;
    CsvTable csv;
};

// Summary table over persisted run records with relative deltas against the
// baseline row (or the first record when no baseline is present).
ReportResult report(const std::vector<std::string>& run_dirs);

// Deterministic work distribution: tasks 0..n-1 are claimed via an atomic
// counter; exceptions propagate to the caller after all workers join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

} // namespace vardiv
