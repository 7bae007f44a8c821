// Command-line frontend: dataset synthesis, feature extraction, onset
// evaluation sweeps, classifier training/evaluation, report emission.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "scatmir/classify.hpp"
#include "scatmir/config.hpp"
#include "scatmir/midi.hpp"
#include "scatmir/onset.hpp"
#include "scatmir/pipeline.hpp"
#include "scatmir/scattering.hpp"
#include "scatmir/synthesis.hpp"
#include "scatmir/wav.hpp"

namespace fs = std::filesystem;
using namespace scatmir;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned jobs = 1;
};

ExperimentConfig load_config(const GlobalArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = load_experiment_config(args.config_path);
    if (args.seed_given) cfg.seed = args.seed;
    return cfg;
}

std::uint64_t file_bytes_hash(const std::vector<std::uint8_t>& bytes) {
    return fnv1a64_bytes(bytes.data(), bytes.size());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot write " + path);
    os << text;
}

std::vector<CorpusEntry> load_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) throw InvalidInput("corpus: not a directory: " + dir);
    std::vector<std::string> wavs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".wav") wavs.push_back(e.path().string());
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) throw InvalidInput("corpus: no .wav files in " + dir);

    std::vector<CorpusEntry> out;
    for (const auto& wav : wavs) {
        CorpusEntry entry;
        entry.wav_path = wav;
        entry.id = fs::path(wav).stem().string();
        entry.truth_path = (fs::path(wav).parent_path() / (entry.id + ".json")).string();
        if (!fs::exists(entry.truth_path))
            throw InvalidInput("corpus: missing ground truth for " + wav);
        std::ifstream is(entry.truth_path, std::ios::binary);
        const auto j = nlohmann::json::parse(is);
        entry.instrument = j.at("instrument").get<std::string>();
        Score truth;
        for (const auto& ev : j.at("events")) truth.events.push_back(note_from_json(ev));
        truth.total_duration = j.at("total_duration").get<double>();
        truth.sort_events();
        entry.truth = std::move(truth);
        out.push_back(std::move(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const GlobalArgs& global, const std::string& scores_dir,
              const std::string& templates_arg) {
    const auto cfg = load_config(global);

    std::vector<std::string> score_files;
    if (!fs::is_directory(scores_dir)) {
        std::cerr << "synth: score directory not found: " << scores_dir << "\n";
        return kExitUsage;
    }
    for (const auto& e : fs::directory_iterator(scores_dir)) {
        const auto ext = e.path().extension();
        if (ext == ".mid" || ext == ".midi" || ext == ".json")
            score_files.push_back(e.path().string());
    }
    std::sort(score_files.begin(), score_files.end());
    if (score_files.empty()) {
        std::cerr << "synth: no scores (.mid/.json) found in " << scores_dir << "\n";
        return kExitUsage;
    }

    TemplatePool pool = [&] {
        if (templates_arg == "synthetic") {
            std::vector<InstrumentParams> instruments;
            for (const auto& name : cfg.synthesis.instruments) {
                const auto defaults = default_instruments();
                const auto it = std::find_if(defaults.begin(), defaults.end(),
                                             [&](const auto& p) { return p.name == name; });
                if (it == defaults.end())
                    throw InvalidInput("synth: unknown synthetic instrument " + name);
                instruments.push_back(*it);
            }
            return TemplatePool::synthetic(instruments, cfg.synthesis.pitch_lo,
                                           cfg.synthesis.pitch_hi, cfg.sample_rate, cfg.seed);
        }
        return TemplatePool::from_directory(templates_arg);
    }();
    if (cfg.synthesis.lambda_int_target) pool.ensure_descriptors();

    const auto instruments =
        templates_arg == "synthetic" ? cfg.synthesis.instruments : pool.instruments();

    fs::create_directories(global.out_dir);
    struct Job {
        std::string score_path;
        std::string instrument;
        std::string stem;
    };
    std::vector<Job> jobs;
    for (const auto& path : score_files)
        for (const auto& inst : instruments)
            jobs.push_back({path, inst, fs::path(path).stem().string() + "__" + inst});

    struct Entry {
        std::string wav, truth;
        std::uint64_t wav_hash, truth_hash;
    };
    std::vector<Entry> entries(jobs.size());

    parallel_for(jobs.size(), global.jobs, [&](std::size_t i) {
        const auto& job = jobs[i];
        Score score = fs::path(job.score_path).extension() == ".json"
                          ? load_score_json(job.score_path)
                          : load_midi_file(job.score_path);
        const std::uint64_t seq_seed = fnv1a64("seq/" + job.stem, cfg.seed);

        if (cfg.synthesis.sparsity_max_notes_per_10s)
            score = enforce_sparsity(score, *cfg.synthesis.sparsity_max_notes_per_10s,
                                     seq_seed)
                        .score;

        SynthesisOptions opts;
        opts.instrument = job.instrument;
        opts.target_seconds = cfg.synthesis.target_seconds;
        opts.lambda_int_target = cfg.synthesis.lambda_int_target;
        auto result = synthesize(score, pool, seq_seed, opts);
        if (cfg.synthesis.snr_db)
            result.audio = degrade_snr(result.audio, *cfg.synthesis.snr_db, seq_seed);

        const auto wav_bytes = save_wav(result.audio, kWavFormatFloat);
        const std::string wav_name = job.stem + ".wav";
        const std::string truth_name = job.stem + ".json";
        {
            std::ofstream os(fs::path(global.out_dir) / wav_name, std::ios::binary);
            os.write(reinterpret_cast<const char*>(wav_bytes.data()),
                     static_cast<std::streamsize>(wav_bytes.size()));
        }
        nlohmann::json truth;
        truth["instrument"] = job.instrument;
        truth["model"] = result.model;
        truth["seed"] = seq_seed;
        truth["score"] = fs::path(job.score_path).filename().string();
        truth["config_hash"] = hash_hex(config_hash(cfg));
        truth["total_duration"] = result.ground_truth.total_duration;
        nlohmann::json events = nlohmann::json::array();
        for (const auto& e : result.ground_truth.events) events.push_back(to_json(e));
        truth["events"] = events;
        const std::string truth_text = truth.dump(2) + "\n";
        write_text_file((fs::path(global.out_dir) / truth_name).string(), truth_text);

        entries[i] = {wav_name, truth_name, file_bytes_hash(wav_bytes),
                      fnv1a64(truth_text)};
    });

    nlohmann::json manifest;
    manifest["command"] = "synth";
    manifest["seed"] = cfg.seed;
    manifest["config_hash"] = hash_hex(config_hash(cfg));
    nlohmann::json jentries = nlohmann::json::array();
    for (const auto& e : entries)
        jentries.push_back({{"wav", e.wav},
                            {"truth", e.truth},
                            {"wav_hash", hash_hex(e.wav_hash)},
                            {"truth_hash", hash_hex(e.truth_hash)}});
    manifest["entries"] = jentries;
    write_text_file((fs::path(global.out_dir) / "manifest.json").string(),
                    manifest.dump(2) + "\n");
    std::cout << "synth: wrote " << jobs.size() << " sequences to " << global.out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

int cmd_features(const GlobalArgs& global, const std::string& rep,
                 const std::string& in_wav) {
    const auto cfg = load_config(global);
    const auto kind = feature_kind_from_string(rep);
    const auto signal = load_wav_file(in_wav);

    fs::create_directories(global.out_dir);
    const std::string stem = fs::path(in_wav).stem().string();
    const std::uint64_t key = feature_cache_key(signal, kind, cfg);
    const auto cache_path = fs::path(global.out_dir) / ("cache_" + hash_hex(key) + ".bin");

    FeatureMatrix matrix;
    bool cache_hit = false;
    if (fs::exists(cache_path)) {
        std::ifstream is(cache_path, std::ios::binary);
        std::uint64_t stored_key = 0;
        matrix = read_cache(is, &stored_key);
        cache_hit = stored_key == key;
    }
    if (!cache_hit) {
        matrix = extract_features(signal, kind, cfg);
        std::ofstream os(cache_path, std::ios::binary);
        write_cache(matrix, key, os);
        if (kind == FeatureKind::scattering) {
            const auto coeffs = scatter(signal, cfg.scattering.transform);
            save_scattering(
                coeffs, (fs::path(global.out_dir) / (stem + "_scattering_coeffs")).string());
        }
    }

    const auto csv_path = fs::path(global.out_dir) / (stem + "_" + rep + ".csv");
    write_csv_file(matrix, csv_path.string());
    std::cout << "features: " << csv_path.string() << (cache_hit ? " (cache hit)" : "")
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// onsets
// ---------------------------------------------------------------------------

int cmd_onsets(const GlobalArgs& global, const std::string& corpus_dir,
               const std::vector<std::string>& reps) {
    const auto cfg = load_config(global);
    if (cfg.onset.threshold_scales.empty())
        throw InvalidInput("onsets: empty threshold scale grid");
    if (reps.empty()) throw InvalidInput("onsets: need at least one --rep");
    const auto corpus = load_corpus(corpus_dir);

    fs::create_directories(global.out_dir);
    for (const auto& rep : reps) {
        const auto kind = feature_kind_from_string(rep);
        std::vector<OnsetFunction> odfs(corpus.size());
        std::vector<OnsetList> truths(corpus.size());
        parallel_for(corpus.size(), global.jobs, [&](std::size_t i) {
            const auto signal = load_wav_file(corpus[i].wav_path);
            odfs[i] = spectral_flux_odf(extract_features(signal, kind, cfg));
            truths[i].times_seconds = corpus[i].truth.onset_times();
        });

        SweepParams params;
        params.median_half_window = cfg.onset.median_half_window;
        params.delta_static_fraction = cfg.onset.delta_static_fraction;
        params.tolerance_seconds = cfg.onset.tolerance_seconds;
        const auto curve = roc_sweep(odfs, truths, cfg.onset.threshold_scales, params);

        std::ofstream roc_csv(fs::path(global.out_dir) / ("roc_" + rep + ".csv"),
                              std::ios::binary);
        write_roc_csv(curve, roc_csv);
        auto summary = roc_summary_json(curve);
        summary["representation"] = rep;
        summary["n_sequences"] = corpus.size();
        summary["config_hash"] = hash_hex(config_hash(cfg));
        write_text_file((fs::path(global.out_dir) / ("summary_" + rep + ".json")).string(),
                        summary.dump(2) + "\n");
        std::cout << "onsets[" << rep << "]: OP tpr=" << curve.op().tpr
                  << " fpr=" << curve.op().fpr << " F=" << curve.op().f_measure
                  << " E_OP=" << curve.e_op << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

int cmd_classify(const GlobalArgs& global, const std::string& corpus_dir,
                 const std::string& features_arg) {
    const auto cfg = load_config(global);
    const auto kind = feature_kind_from_string(features_arg);
    const auto corpus = load_corpus(corpus_dir);

    std::map<std::string, int> class_counts;
    for (const auto& e : corpus) class_counts[e.instrument] += 1;
    if (class_counts.size() < 2)
        throw InvalidInput("classify: corpus has fewer than two classes");

    std::vector<Track> tracks(corpus.size());
    parallel_for(corpus.size(), global.jobs, [&](std::size_t i) {
        const auto signal = load_wav_file(corpus[i].wav_path);
        tracks[i] =
            track_from_signal(signal, corpus[i].id, corpus[i].instrument, kind, cfg);
    });
    if (kind == FeatureKind::clsc)
        tracks = pca_reduce_tracks(tracks, cfg.scattering.pca_dim);

    HyperGrid grid;
    grid.c_values = cfg.svm.c_grid;
    grid.gamma_values = cfg.svm.gamma_grid;
    const auto report =
        cross_validate(tracks, cfg.svm.folds, cfg.svm.train_fraction, grid, cfg.seed);
    const auto cm = confusion(report);

    fs::create_directories(global.out_dir);
    {
        std::ofstream os(fs::path(global.out_dir) / ("confusion_" + features_arg + ".csv"),
                         std::ios::binary);
        write_confusion_csv(cm, os);
    }
    {
        std::ofstream os(fs::path(global.out_dir) / ("errors_" + features_arg + ".csv"),
                         std::ios::binary);
        write_error_table_csv(cm, os);
    }
    nlohmann::json jreport;
    jreport["features"] = features_arg;
    jreport["best_c"] = report.best_c;
    jreport["best_gamma"] = report.best_gamma;
    jreport["cv_error"] = report.cv_error;
    jreport["test_error"] = report.test_error;
    jreport["config_hash"] = hash_hex(config_hash(cfg));
    nlohmann::json jresults = nlohmann::json::array();
    for (const auto& r : report.results)
        jresults.push_back({{"track", r.track_id},
                            {"true", r.true_label},
                            {"predicted", r.predicted_label}});
    jreport["results"] = jresults;
    write_text_file(
        (fs::path(global.out_dir) / ("report_" + features_arg + ".json")).string(),
        jreport.dump(2) + "\n");
    std::cout << "classify[" << features_arg << "]: test error "
              << 100.0 * report.test_error << "% (C=" << report.best_c
              << ", gamma=" << report.best_gamma << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scattering-transform music analysis toolkit"};
    app.require_subcommand(1);

    GlobalArgs global;
    app.add_option("--config", global.config_path, "experiment config JSON");
    app.add_option("--out", global.out_dir, "output directory");
    app.add_option("--jobs", global.jobs, "worker threads for corpus-level parallelism");
    auto* seed_opt = app.add_option("--seed", global.seed, "override the config seed");

    std::string scores_dir, templates_arg = "synthetic", in_wav, rep = "spectrogram";
    std::string corpus_dir, features_arg = "clsc";
    std::vector<std::string> onset_reps;

    auto* synth = app.add_subcommand("synth", "synthesize a labeled corpus from scores");
    synth->add_option("--scores", scores_dir, "directory of .mid/.json scores")->required();
    synth->add_option("--templates", templates_arg,
                      "'synthetic' or a template directory (instrument/pitch/rank.wav)");

    auto* features = app.add_subcommand("features", "extract one representation to CSV");
    features->add_option("--rep", rep, "representation")->required();
    features->add_option("--in", in_wav, "input wav")->required();

    auto* onsets = app.add_subcommand("onsets", "ROC sweep over a corpus");
    onsets->add_option("--corpus", corpus_dir, "corpus directory (wav + truth json)")
        ->required();
    onsets->add_option("--rep", onset_reps, "representation (repeatable)")->required();

    auto* classify = app.add_subcommand("classify", "train/evaluate instrument recognition");
    classify->add_option("--corpus", corpus_dir, "corpus directory (wav + truth json)")
        ->required();
    classify->add_option("--features", features_arg, "clsc or delta_mfcc");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    global.seed_given = seed_opt->count() > 0;

    try {
        if (synth->parsed()) return cmd_synth(global, scores_dir, templates_arg);
        if (features->parsed()) return cmd_features(global, rep, in_wav);
        if (onsets->parsed()) return cmd_onsets(global, corpus_dir, onset_reps);
        if (classify->parsed()) return cmd_classify(global, corpus_dir, features_arg);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
