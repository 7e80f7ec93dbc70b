// Command-line driver. Subcommands cover the whole pipeline — synth,
// fit-codebook, build-model, train, generate, run, sweep, bench, report —
// and share one output-directory layout, so a full experiment is a sequence
// of invocations against the same --out root.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 missing input,
// 4 violated internal invariant.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vardiv/codec_io.hpp"
#include "vardiv/harness.hpp"
#include "vardiv/sampler.hpp"

using namespace vardiv;
namespace fs = std::filesystem;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    int workers = 0; // 0 = hardware concurrency
};

ExperimentConfig resolve_config(const GlobalArgs& args) {
    ExperimentConfig cfg =
        args.config_path.empty() ? ExperimentConfig{} : load_config(args.config_path);
    if (args.seed.has_value()) cfg.seed = *args.seed;
    if (args.out.has_value()) cfg.out_dir = *args.out;
    cfg.validate();
    return cfg;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::string subdir(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void write_file(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw MissingInputError("cannot write " + path);
    out << text;
}

Corpus corpus_of(const ExperimentConfig& cfg) { return read_corpus(subdir(cfg, "corpus")); }

ModelBundle model_of(const ExperimentConfig& cfg) { return load_model(subdir(cfg, "model")); }

const char* phase_name(StagePhase phase) {
    switch (phase) {
        case StagePhase::sampled: return "sampled";
        case StagePhase::traveled: return "traveled";
        default: return "refined";
    }
}

// -------- subcommand bodies --------

void cmd_synth(const ExperimentConfig& cfg) {
    const Corpus corpus = synth_corpus(cfg.corpus, cfg.seed);
    write_corpus(corpus, subdir(cfg, "corpus"));
    std::cout << "corpus: " << cfg.corpus.conditions << " conditions x " << cfg.corpus.prototypes
              << " prototypes at " << cfg.corpus.height << "x" << cfg.corpus.width << " -> "
              << subdir(cfg, "corpus") << "\n";
}

void cmd_fit_codebook(const ExperimentConfig& cfg) {
    const Corpus corpus = corpus_of(cfg);
    const ScaleSchedule schedule = schedule_preset(cfg.schedule);
    const Codebook codebook = fit_corpus_codebook(corpus, schedule, cfg.feature_gain,
                                                  cfg.codebook_size, cfg.codebook_iters, cfg.seed);
    const std::string path = subdir(cfg, "codebook.varc");
    write_codebook(path, codebook);
    std::cout << "codebook: " << codebook.size() << " codes, dim " << codebook.dim << " -> "
              << path << "\n";
}

void cmd_build_model(const ExperimentConfig& cfg) {
    const Corpus corpus = corpus_of(cfg);
    const ScaleSchedule schedule = schedule_preset(cfg.schedule);
    const Codebook codebook = read_codebook(subdir(cfg, "codebook.varc"));
    const ModelBundle bundle = build_prototype_model(corpus, schedule, codebook, cfg);
    save_model(bundle, subdir(cfg, "model"));
    std::cout << "model: " << bundle.model.banks.size() << " condition banks -> "
              << subdir(cfg, "model") << "\n";
}

void cmd_train(const ExperimentConfig& cfg) {
    const Corpus corpus = corpus_of(cfg);
    const ScaleSchedule schedule = schedule_preset(cfg.schedule);
    const Codebook codebook = read_codebook(subdir(cfg, "codebook.varc"));
    const TrainResult result = train_linear_on_corpus(corpus, codebook, schedule, cfg);
    save_linear(result.model, subdir(cfg, "linear"));

    CsvTable loss = {{"epoch", "cross_entropy"}};
    for (size_t e = 0; e < result.epoch_ce.size(); ++e) {
        loss.push_back({std::to_string(e + 1), format_number(result.epoch_ce[e])});
    }
    write_file(subdir(cfg, "train") + "/loss.csv", csv_encode(loss));
    std::cout << "linear model: " << result.epoch_ce.size() << " epochs, final CE "
              << format_number(result.epoch_ce.empty() ? 0.0 : result.epoch_ce.back()) << " -> "
              << subdir(cfg, "linear") << "\n";
}

void cmd_generate(const ExperimentConfig& cfg, int condition, const std::string& method_name_arg,
                  std::optional<uint64_t> sample_seed) {
    const Method method = method_from_name(method_name_arg);
    const ModelBundle bundle = model_of(cfg);
    if (bundle.embeddings.find(condition) == bundle.embeddings.end()) {
        throw ConfigError("generate: model has no condition " + std::to_string(condition));
    }
    const uint64_t seed = sample_seed.value_or(cfg.seed);
    const int stages = bundle.model.schedule_.stages();
    const GenerationConfig gen = method_generation_config(cfg, method, stages, seed);
    const ConditionEmbedding cond =
        ConditionEmbedding::unit(bundle.embeddings.at(condition), condition);
    const GenerationResult result =
        method == Method::scale_travel
            ? diversify_then_refine(bundle.model, bundle.decoder, cond, gen)
            : generate(bundle.model, bundle.decoder, cond, gen);

    const std::string stem = "c" + std::to_string(condition) + "_s" + std::to_string(seed) + "_" +
                             method_name(method);
    const std::string dir = subdir(cfg, "generate");
    fs::create_directories(dir);
    write_ppm((fs::path(dir) / (stem + ".ppm")).string(), result.image);

    nlohmann::json trace = nlohmann::json::array();
    for (const StageTrace& row : result.trace) {
        trace.push_back({{"k", row.k},
                         {"phase", phase_name(row.phase)},
                         {"omega", row.omega},
                         {"alpha", row.alpha},
                         {"beta", row.beta},
                         {"prototype", row.prototype},
                         {"wall_ms", row.wall_ms}});
    }
    write_file((fs::path(dir) / (stem + "_trace.json")).string(), trace.dump(2) + "\n");
    std::cout << "sample: " << (fs::path(dir) / (stem + ".ppm")).string() << " ("
              << result.trace.size() << " trace rows)\n";
}

void cmd_run(const ExperimentConfig& cfg, int workers, const std::string& only_method,
             bool no_samples) {
    const Corpus corpus = corpus_of(cfg);
    const ModelBundle bundle = model_of(cfg);
    std::vector<Method> methods = cfg.methods;
    if (!only_method.empty()) methods = {method_from_name(only_method)};

    for (Method method : methods) {
        const std::string dir = subdir(cfg, "runs") + "/" + method_name(method);
        const std::string samples = dir + "/samples";
        const RunRecord record =
            run_method(method, cfg, corpus, bundle, workers, no_samples ? nullptr : &samples);
        write_run_record(record, dir);
        std::cout << method_name(method) << ": Vendi_pix " << format_number(record.mean.vendi)
                  << ", Q_proxy " << format_number(record.mean.quality) << " -> " << dir << "\n";
    }
}

void cmd_sweep(const ExperimentConfig& cfg, int workers) {
    const Corpus corpus = corpus_of(cfg);
    const ModelBundle bundle = model_of(cfg);
    const SweepResult result = sweep(cfg, corpus, bundle, workers);
    write_sweep(result, subdir(cfg, "sweep"), cfg.svg_timestamp);
    std::cout << "sweep: " << result.points.size() << " points, global front "
              << result.global_front.size() << " -> " << subdir(cfg, "sweep") << "\n";
}

void cmd_bench(const ExperimentConfig& cfg) {
    const Corpus corpus = corpus_of(cfg);
    const ModelBundle bundle = model_of(cfg);
    const BenchResult bench = bench_overhead(cfg, corpus, bundle);

    nlohmann::json j;
    j["samples"] = bench.samples;
    j["mean_ms"] = bench.mean_ms;
    j["ratio"] = bench.ratio;
    write_file(subdir(cfg, "bench") + "/bench.json", j.dump(2) + "\n");
    for (const auto& [name, ratio] : bench.ratio) {
        std::cout << name << ": " << format_number(bench.mean_ms.at(name)) << " ms/sample, x"
                  << format_number(ratio) << " vs baseline\n";
    }
}

void cmd_report(const ExperimentConfig& cfg, std::vector<std::string> run_dirs) {
    if (run_dirs.empty()) {
        // Default: every run directory under <out>/runs, in name order.
        const fs::path root = subdir(cfg, "runs");
        if (fs::is_directory(root)) {
            for (const auto& entry : fs::directory_iterator(root)) {
                if (entry.is_directory()) run_dirs.push_back(entry.path().string());
            }
            std::sort(run_dirs.begin(), run_dirs.end());
        }
    }
    const ReportResult result = report(run_dirs);
    write_file(subdir(cfg, "report") + "/summary.md", result.markdown);
    write_file(subdir(cfg, "report") + "/summary.csv", csv_encode(result.csv));
    std::cout << result.markdown;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Next-scale prototype sampler: corpus, model, runs, sweeps, reports"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "Experiment config JSON")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", args.seed, "Override the config seed");
    app.add_option("--workers", args.workers, "Worker threads (default: hardware concurrency)");
    app.add_option("--out", args.out, "Override the config output directory");

    app.add_subcommand("synth", "Synthesize the reference corpus");
    app.add_subcommand("fit-codebook", "Fit the shared codebook to the corpus");
    app.add_subcommand("build-model", "Assemble and save the prototype model");
    app.add_subcommand("train", "Train and save the linear predictor");

    CLI::App* gen = app.add_subcommand("generate", "Generate one sample with trace");
    int gen_condition = 0;
    std::string gen_method = "baseline";
    std::optional<uint64_t> gen_seed;
    gen->add_option("--condition", gen_condition, "Condition id");
    gen->add_option("--method", gen_method, "baseline | anneal | scale_travel");
    gen->add_option("--sample-seed", gen_seed, "Per-sample seed (default: config seed)");

    CLI::App* run = app.add_subcommand("run", "Run configured methods and persist records");
    std::string run_method_name;
    bool run_no_samples = false;
    run->add_option("--method", run_method_name, "Restrict to one method");
    run->add_flag("--no-samples", run_no_samples, "Skip writing per-sample PPMs");

    app.add_subcommand("sweep", "Sweep hyperparameters and extract Pareto fronts");
    app.add_subcommand("bench", "Measure per-method sampling overhead");

    CLI::App* rep = app.add_subcommand("report", "Summarize persisted run records");
    std::vector<std::string> report_dirs;
    rep->add_option("dirs", report_dirs, "Run directories (default: <out>/runs/*)");

    try {
        app.parse(argc, argv);

        const ExperimentConfig cfg = resolve_config(args);
        const int workers = resolve_workers(args.workers);

        if (app.got_subcommand("synth")) cmd_synth(cfg);
        if (app.got_subcommand("fit-codebook")) cmd_fit_codebook(cfg);
        if (app.got_subcommand("build-model")) cmd_build_model(cfg);
        if (app.got_subcommand("train")) cmd_train(cfg);
        if (app.got_subcommand("generate")) cmd_generate(cfg, gen_condition, gen_method, gen_seed);
        if (app.got_subcommand("run")) cmd_run(cfg, workers, run_method_name, run_no_samples);
        if (app.got_subcommand("sweep")) cmd_sweep(cfg, workers);
        if (app.got_subcommand("bench")) cmd_bench(cfg);
        if (app.got_subcommand("report")) cmd_report(cfg, report_dirs);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
