// Command-line front end: corpus generation, challenge splitting, model
// building, weight tuning, recommendation, and evaluation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segue/segue.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<int> categories;
    std::vector<std::string> models;
    std::string out_dir;
    std::string dataset;
    std::string features;
    std::string challenge;
    std::string truth;
    std::string ensemble;
    std::optional<segue::Index> per_category;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "pipeline config JSON");
    cmd->add_option("--seed", ov.seed, "random seed override");
    cmd->add_option("--threads", ov.threads, "worker thread count (0 = all cores)");
    cmd->add_option("--category", ov.categories, "restrict to these challenge categories")
        ->delimiter(',');
    cmd->add_option("--models", ov.models, "restrict to these model tags")->delimiter(',');
    cmd->add_option("--out", ov.out_dir, "output directory");
    cmd->add_option("--dataset", ov.dataset, "playlist JSONL path");
    cmd->add_option("--features", ov.features, "track feature CSV path");
    cmd->add_option("--challenge", ov.challenge, "challenge JSONL path");
    cmd->add_option("--truth", ov.truth, "ground-truth JSONL path");
    cmd->add_option("--ensemble", ov.ensemble, "ensemble weight JSON path");
    cmd->add_option("--per-category", ov.per_category, "challenge playlists per category");
}

segue::PipelineConfig make_config(const Overrides& ov) {
    segue::PipelineConfig cfg;
    if (!ov.config_path.empty()) cfg = segue::load_pipeline_config(ov.config_path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.threads) cfg.threads = *ov.threads;
    if (!ov.categories.empty()) cfg.categories = ov.categories;
    if (!ov.models.empty()) cfg.models = ov.models;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.dataset.empty()) cfg.dataset_path = ov.dataset;
    if (!ov.features.empty()) cfg.features_path = ov.features;
    if (!ov.challenge.empty()) cfg.challenge_path = ov.challenge;
    if (!ov.truth.empty()) cfg.truth_path = ov.truth;
    if (!ov.ensemble.empty()) cfg.ensemble_path = ov.ensemble;
    if (ov.per_category) cfg.per_category = *ov.per_category;
    cfg.check();
    return cfg;
}

void print_result(const segue::PipelineResult& result) {
    std::cout << "submission: " << result.submission_path.string() << "\n";
    if (result.evaluated) {
        std::cout << "report: " << result.report_path.string() << "\n";
        std::cout << segue::format_report(result.report);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"playlist-continuation recommender pipeline"};
    app.require_subcommand(1);

    Overrides ov;
    segue::SynthConfig synth;
    std::string submission_path;

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic corpus");
    generate->add_option("--seed", synth.seed, "random seed");
    generate->add_option("--playlists", synth.n_playlists, "number of playlists");
    generate->add_option("--tracks", synth.n_tracks, "number of tracks");
    generate->add_option("--artists", synth.n_artists, "number of artists");
    generate->add_option("--min-len", synth.min_len, "minimum playlist length");
    generate->add_option("--max-len", synth.max_len, "maximum playlist length");
    generate->add_option("--untitled", synth.untitled_rate, "fraction of untitled playlists");
    generate->add_option("--missing", synth.feature_missing_rate,
                         "fraction of missing feature cells");
    generate->add_option("--w-album-runs", synth.w_album_runs, "album-run playlist weight");
    generate->add_option("--w-single-artist", synth.w_single_artist,
                         "single-artist playlist weight");
    generate->add_option("--w-era-drift", synth.w_era_drift, "era-drift playlist weight");
    generate->add_option("--w-diverse-repeat", synth.w_diverse_then_repeat,
                         "diverse-then-repeat playlist weight");
    generate->add_option("--w-distinct-artists", synth.w_distinct_artists,
                         "all-distinct-artists playlist weight");
    generate->add_option("--w-uniform", synth.w_uniform, "uniform-random playlist weight");
    std::string gen_out = "out/data";
    generate->add_option("--out", gen_out, "output directory");

    CLI::App* split = app.add_subcommand("split", "carve a challenge set out of a corpus");
    add_common_flags(split, ov);

    CLI::App* build = app.add_subcommand("build", "compute and cache per-model score files");
    add_common_flags(build, ov);

    CLI::App* tune = app.add_subcommand("tune", "fit ensemble weights on a held-out split");
    add_common_flags(tune, ov);

    CLI::App* recommend = app.add_subcommand("recommend", "write a submission file");
    add_common_flags(recommend, ov);

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a submission file");
    evaluate->add_option("submission", submission_path, "submission CSV")->required();
    add_common_flags(evaluate, ov);

    CLI::App* run = app.add_subcommand("run", "full pipeline: split, blend, boost, evaluate");
    add_common_flags(run, ov);

    try {
        app.parse(argc, argv);

        if (generate->parsed()) {
            synth.check();
            const segue::Dataset ds = segue::generate_synthetic(synth);
            std::filesystem::create_directories(gen_out);
            const auto playlists = std::filesystem::path(gen_out) / "playlists.jsonl";
            const auto features = std::filesystem::path(gen_out) / "features.csv";
            segue::save_dataset(ds, playlists.string());
            segue::save_features_csv(ds, features.string());
            std::cout << "playlists: " << playlists.string() << "\n"
                      << "features: " << features.string() << "\n";
            return 0;
        }

        segue::PipelineConfig cfg = make_config(ov);

        if (split->parsed()) {
            segue::Dataset full = segue::load_dataset(cfg.dataset_path);
            if (!cfg.features_path.empty()) segue::load_features_csv(full, cfg.features_path);
            segue::SplitResult result =
                segue::split_challenge(full, cfg.seed, cfg.per_category);
            std::filesystem::create_directories(cfg.out_dir);
            const auto dir = std::filesystem::path(cfg.out_dir);
            segue::save_dataset(result.train, (dir / "train.jsonl").string());
            segue::save_challenge(result.items, result.train,
                                  (dir / "challenge.jsonl").string());
            segue::save_ground_truth(result.truth, result.train,
                                     (dir / "truth.jsonl").string());
            std::cout << "train: " << (dir / "train.jsonl").string() << "\n"
                      << "challenge: " << (dir / "challenge.jsonl").string() << "\n"
                      << "truth: " << (dir / "truth.jsonl").string() << "\n";
            return 0;
        }

        if (build->parsed()) {
            for (const auto& path : segue::run_build(cfg))
                std::cout << "scores: " << path.string() << "\n";
            return 0;
        }

        if (tune->parsed()) {
            const auto path = segue::run_tune(cfg);
            std::cout << "ensemble: " << path.string() << "\n";
            return 0;
        }

        if (recommend->parsed()) {
            print_result(segue::run_pipeline(cfg, false));
            return 0;
        }

        if (evaluate->parsed()) {
            segue::Dataset ds = segue::load_dataset(cfg.dataset_path);
            if (cfg.challenge_path.empty() || cfg.truth_path.empty())
                throw std::invalid_argument("evaluate needs --challenge and --truth");
            std::vector<segue::ChallengeItem> items =
                segue::load_challenge(cfg.challenge_path, ds);
            std::vector<segue::GroundTruth> truth =
                segue::load_ground_truth(cfg.truth_path, ds);
            segue::Submission submission = segue::load_submission(submission_path);
            if (!cfg.categories.empty()) {
                std::vector<segue::ChallengeItem> kept;
                std::unordered_set<segue::Index> pids;
                for (auto& item : items) {
                    if (std::find(cfg.categories.begin(), cfg.categories.end(),
                                  item.category) == cfg.categories.end())
                        continue;
                    pids.insert(item.pid);
                    kept.push_back(std::move(item));
                }
                items = std::move(kept);
                std::erase_if(truth, [&](const auto& gt) { return !pids.count(gt.pid); });
                std::erase_if(submission,
                              [&](const auto& row) { return !pids.count(row.first); });
            }
            const segue::EvalReport report =
                segue::evaluate_run(submission, items, truth, ds);
            std::filesystem::create_directories(cfg.out_dir);
            const auto report_path = std::filesystem::path(cfg.out_dir) / "report.json";
            segue::save_report(report, report_path.string());
            std::cout << segue::format_report(report);
            std::cout << "report: " << report_path.string() << "\n";
            return 0;
        }

        print_result(segue::run_pipeline(cfg));
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const segue::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const segue::internal_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
