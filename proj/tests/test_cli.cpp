#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/score.hpp"
#include "scatmir/synthesis.hpp"
#include "scatmir/wav.hpp"

using namespace scatmir;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SCATMIR_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CliFixture {
    fs::path root;

    CliFixture() {
        root = fs::temp_directory_path() / "scatmir_cli_fixture";
        fs::remove_all(root);
        fs::create_directories(root / "scores");
        write_config();
        write_scores();
    }

    void write_config() {
        std::ofstream os(root / "config.json");
        os << R"({
  "schema_version": 1,
  "seed": 77,
  "sample_rate": 8000,
  "stft": {"window_size": 512, "hop": 128, "window": "hann"},
  "mel": {"n_filters": 24},
  "mfcc": {"n_keep": 12},
  "scattering": {
    "t_window_seconds": 0.093,
    "output_hop_seconds": 0.016,
    "bank1": {"q": 4, "j_octaves": 6, "family": "gabor"},
    "bank2": {"q": 1, "j_octaves": 6, "family": "gabor"},
    "clsc_keep": 12,
    "pca_dim": 16
  },
  "onset": {"threshold_scales": [0.5, 1.0, 2.0, 4.0]},
  "svm": {"c_grid": [10.0], "gamma_grid": [0.25], "folds": 2, "max_frames_per_track": 8},
  "synthesis": {"target_seconds": 3.0, "instruments": ["I1", "I5"], "pitch_lo": 57, "pitch_hi": 65}
})";
    }

    void write_scores() {
        RandomStream rng(4, "cli-scores");
        for (int s = 0; s < 3; ++s) {
            Score score;
            double t = 0.3;
            while (t < 2.4) {
                score.events.push_back({t, 0.35,
                                        static_cast<int>(rng.uniform_int(57, 65)),
                                        static_cast<int>(rng.uniform_int(40, 120)), ""});
                t += rng.uniform(0.30, 0.55);
            }
            score.total_duration = 3.0;
            save_score_json(score, (root / "scores" / ("score" + std::to_string(s) + ".json")).string());
        }
    }

    std::string cfg() const { return " --config " + (root / "config.json").string(); }
};

}  // namespace

TEST_CASE("cli: empty score dir exits 2 naming the missing input") {
    CliFixture fx;
    fs::create_directories(fx.root / "empty");
    CHECK(run(fx.cfg() + " --out " + (fx.root / "out").string() + " synth --scores " +
              (fx.root / "empty").string()) == 2);
    CHECK(run(fx.cfg() + " synth --scores " + (fx.root / "missing_dir").string()) == 2);
}

TEST_CASE("cli: synth writes wav + truth + manifest per (score, instrument)") {
    CliFixture fx;
    const auto out = fx.root / "corpus";
    REQUIRE(run(fx.cfg() + " --out " + out.string() + " --jobs 2 synth --scores " +
                (fx.root / "scores").string() + " --templates synthetic") == 0);
    // 3 scores x 2 instruments
    std::size_t wavs = 0, truths = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        if (e.path().extension() == ".wav") ++wavs;
        if (e.path().extension() == ".json" && e.path().filename() != "manifest.json")
            ++truths;
    }
    CHECK(wavs == 6);
    CHECK(truths == 6);

    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest.at("entries").size() == 6);
    for (const auto& entry : manifest.at("entries")) {
        CHECK(fs::exists(out / entry.at("wav").get<std::string>()));
        CHECK(fs::exists(out / entry.at("truth").get<std::string>()));
    }

    // sequences have power-of-two length and in-range ground truth
    const auto sig = load_wav_file((out / "score0__I1.wav").string());
    CHECK(is_pow2(sig.size()));
    const auto truth = nlohmann::json::parse(slurp(out / "score0__I1.json"));
    const double total = truth.at("total_duration").get<double>();
    for (const auto& ev : truth.at("events"))
        CHECK(ev.at("onset_seconds").get<double>() <= total);
}

TEST_CASE("cli: synth rerun with same seed is byte-identical") {
    CliFixture fx;
    const auto out1 = fx.root / "run1";
    const auto out2 = fx.root / "run2";
    REQUIRE(run(fx.cfg() + " --out " + out1.string() + " synth --scores " +
                (fx.root / "scores").string()) == 0);
    REQUIRE(run(fx.cfg() + " --out " + out2.string() + " --jobs 2 synth --scores " +
                (fx.root / "scores").string()) == 0);
    CHECK(slurp(out1 / "manifest.json") == slurp(out2 / "manifest.json"));
    CHECK(slurp(out1 / "score1__I5.wav") == slurp(out2 / "score1__I5.wav"));

    // a different seed changes the output
    const auto out3 = fx.root / "run3";
    REQUIRE(run(fx.cfg() + " --seed 123 --out " + out3.string() + " synth --scores " +
                (fx.root / "scores").string()) == 0);
    CHECK(slurp(out1 / "manifest.json") != slurp(out3 / "manifest.json"));
}

TEST_CASE("cli: features emits CSV with configured width and hits the cache") {
    CliFixture fx;
    const auto corpus = fx.root / "corpus";
    REQUIRE(run(fx.cfg() + " --out " + corpus.string() + " synth --scores " +
                (fx.root / "scores").string()) == 0);
    const auto feat = fx.root / "features";
    const std::string wav = (corpus / "score0__I1.wav").string();

    REQUIRE(run(fx.cfg() + " --out " + feat.string() + " features --rep mfcc --in " + wav) == 0);
    const auto csv1 = slurp(feat / "score0__I1_mfcc.csv");
    CHECK(csv1.find("# kind=mfcc") == 0);
    CHECK(csv1.find("cols=12") != std::string::npos);

    REQUIRE(run(fx.cfg() + " --out " + feat.string() + " features --rep mfcc --in " + wav) == 0);
    CHECK(slurp(feat / "score0__I1_mfcc.csv") == csv1);  // byte-identical cache hit

    CHECK(run(fx.cfg() + " --out " + feat.string() + " features --rep nonsense --in " + wav) == 2);

    // scattering features also emit a coefficient container with path_index
    REQUIRE(run(fx.cfg() + " --out " + feat.string() + " features --rep scattering --in " +
                wav) == 0);
    const auto header =
        nlohmann::json::parse(slurp(feat / "score0__I1_scattering_coeffs.json"));
    const auto csv = slurp(feat / "score0__I1_scattering.csv");
    const auto cols_pos = csv.find("cols=");
    const auto cols = std::stoul(csv.substr(cols_pos + 5));
    CHECK(header.at("path_index").size() == cols);
}

TEST_CASE("cli: onsets emits per-rep ROC csv and a self-consistent summary") {
    CliFixture fx;
    const auto corpus = fx.root / "corpus";
    REQUIRE(run(fx.cfg() + " --out " + corpus.string() + " synth --scores " +
                (fx.root / "scores").string()) == 0);
    const auto out = fx.root / "onsets";
    REQUIRE(run(fx.cfg() + " --out " + out.string() + " --jobs 2 onsets --corpus " +
                corpus.string() + " --rep spectrogram --rep scattering") == 0);

    for (const std::string rep : {"spectrogram", "scattering"}) {
        CHECK(fs::exists(out / ("roc_" + rep + ".csv")));
        const auto summary = nlohmann::json::parse(slurp(out / ("summary_" + rep + ".json")));
        const double tpr = summary.at("operating_point").at("tpr").get<double>();
        const double fpr = summary.at("operating_point").at("fpr").get<double>();
        const double e = summary.at("e_op").get<double>();
        CHECK(e == doctest::Approx(std::sqrt((1 - tpr) * (1 - tpr) + fpr * fpr)));
    }

    // corpus without ground truth -> validation error
    fs::create_directories(fx.root / "bare");
    fs::copy_file(corpus / "score0__I1.wav", fx.root / "bare" / "score0__I1.wav");
    CHECK(run(fx.cfg() + " --out " + out.string() + " onsets --corpus " +
              (fx.root / "bare").string() + " --rep spectrogram") == 2);
}

TEST_CASE("cli: onsets with an empty scale grid is a usage error") {
    CliFixture fx;
    const auto corpus = fx.root / "corpus";
    REQUIRE(run(fx.cfg() + " --out " + corpus.string() + " synth --scores " +
                (fx.root / "scores").string()) == 0);
    // rewrite config with an empty grid
    auto cfg = nlohmann::json::parse(slurp(fx.root / "config.json"));
    cfg["onset"]["threshold_scales"] = nlohmann::json::array();
    std::ofstream(fx.root / "config2.json") << cfg.dump();
    CHECK(run("--config " + (fx.root / "config2.json").string() + " --out " +
              (fx.root / "x").string() + " onsets --corpus " + corpus.string() +
              " --rep spectrogram") == 2);
}

TEST_CASE("cli: classify runs both feature kinds with identical table layout") {
    CliFixture fx;
    const auto corpus = fx.root / "corpus";
    REQUIRE(run(fx.cfg() + " --out " + corpus.string() + " synth --scores " +
                (fx.root / "scores").string()) == 0);
    const auto out = fx.root / "cls";
    REQUIRE(run(fx.cfg() + " --out " + out.string() + " --jobs 2 classify --corpus " +
                corpus.string() + " --features delta_mfcc") == 0);
    REQUIRE(run(fx.cfg() + " --out " + out.string() + " --jobs 2 classify --corpus " +
                corpus.string() + " --features clsc") == 0);

    const auto a = slurp(out / "confusion_delta_mfcc.csv");
    const auto b = slurp(out / "confusion_clsc.csv");
    CHECK(a.substr(0, a.find('\n')) == b.substr(0, b.find('\n')));  // same header order

    // emitted rows sum to the per-class test counts
    const auto report = nlohmann::json::parse(slurp(out / "report_clsc.json"));
    std::map<std::string, int> class_counts;
    for (const auto& r : report.at("results"))
        class_counts[r.at("true").get<std::string>()] += 1;
    CHECK(class_counts.size() == 2);
}

TEST_CASE("cli: unknown config keys are rejected") {
    CliFixture fx;
    auto cfg = nlohmann::json::parse(slurp(fx.root / "config.json"));
    cfg["surprise"] = 1;
    std::ofstream(fx.root / "bad.json") << cfg.dump();
    CHECK(run("--config " + (fx.root / "bad.json").string() + " synth --scores " +
              (fx.root / "scores").string()) == 2);
}

TEST_CASE("cli: bad arguments exit 2") {
    CHECK(run("definitely-not-a-subcommand") == 2);
    CHECK(run("features --rep mfcc") == 2);  // missing --in
}

TEST_CASE("cli: two spectrally disjoint instruments classify near-perfectly") {
    CliFixture fx;
    // I5 (bright, fast decay) vs I7 (dark, AM): disjoint-by-construction timbres
    auto cfg = nlohmann::json::parse(slurp(fx.root / "config.json"));
    cfg["synthesis"]["instruments"] = {"I5", "I7"};
    cfg["svm"]["folds"] = 2;
    std::ofstream(fx.root / "config3.json") << cfg.dump();

    // eight scores -> 8 tracks per instrument
    RandomStream rng(12, "cli-sep-scores");
    for (int s = 3; s < 8; ++s) {
        Score score;
        double t = 0.3;
        while (t < 2.4) {
            score.events.push_back({t, 0.35, static_cast<int>(rng.uniform_int(57, 65)),
                                    static_cast<int>(rng.uniform_int(60, 120)), ""});
            t += rng.uniform(0.30, 0.55);
        }
        score.total_duration = 3.0;
        save_score_json(score,
                        (fx.root / "scores" / ("score" + std::to_string(s) + ".json")).string());
    }
    const auto corpus = fx.root / "sep_corpus";
    REQUIRE(run("--config " + (fx.root / "config3.json").string() + " --out " +
                corpus.string() + " --jobs 2 synth --scores " +
                (fx.root / "scores").string()) == 0);
    const auto out = fx.root / "sep_cls";
    REQUIRE(run("--config " + (fx.root / "config3.json").string() + " --out " +
                out.string() + " --jobs 2 classify --corpus " + corpus.string() +
                " --features delta_mfcc") == 0);
    const auto report = nlohmann::json::parse(slurp(out / "report_delta_mfcc.json"));
    CHECK(report.at("test_error").get<double>() <= 0.02);
}
