#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "segue/pipeline.hpp"
#include "segue/synth.hpp"
#include "tempfile.hpp"

using namespace segue;
using Catch::Matchers::ContainsSubstring;

namespace {

// corpus with enough long titled playlists for every split category
SynthConfig corpus_config() {
    SynthConfig cfg;
    cfg.n_playlists = 400;
    cfg.n_tracks = 1000;
    cfg.n_artists = 40;
    cfg.min_len = 15;
    cfg.max_len = 120;
    cfg.untitled_rate = 0.10;
    cfg.seed = 99;
    return cfg;
}

struct CorpusDir {
    TempDir dir;
    std::string dataset;
    std::string features;

    CorpusDir() {
        Dataset ds = generate_synthetic(corpus_config());
        dataset = dir.file("dataset.jsonl");
        features = dir.file("features.csv");
        save_dataset(ds, dataset);
        save_features_csv(ds, features);
    }

    PipelineConfig config(const std::string& out_name) {
        PipelineConfig cfg;
        cfg.dataset_path = dataset;
        cfg.features_path = features;
        cfg.out_dir = dir.file(out_name);
        cfg.seed = 3;
        cfg.threads = 1;
        cfg.per_category = 2;
        cfg.n_recommendations = 50;
        cfg.models = {"cf_track", "cbf_title", "toppop_track"};
        cfg.tune_budget = 8;
        return cfg;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("pipeline config parsing") {
    SECTION("minimal config keeps the defaults") {
        PipelineConfig cfg = pipeline_config_from_json({{"dataset", "d.jsonl"}});
        CHECK(cfg.dataset_path == "d.jsonl");
        CHECK(cfg.out_dir == "out");
        CHECK(cfg.seed == 1);
        CHECK(cfg.per_category == 100);
        CHECK(cfg.n_recommendations == 500);
        CHECK(cfg.top_m == 1000);
        CHECK(cfg.model_list() == kAllModels);
        CHECK(cfg.tune_budget == 60);
    }
    SECTION("full config") {
        nlohmann::json j = {
            {"dataset", "d.jsonl"},
            {"features", "f.csv"},
            {"challenge", "c.jsonl"},
            {"truth", "t.jsonl"},
            {"out_dir", "w"},
            {"seed", 17},
            {"threads", 2},
            {"per_category", 5},
            {"n_recommendations", 100},
            {"top_m", 200},
            {"models", {"cf_track", "toppop_track"}},
            {"categories", {2, 5}},
            {"kernels",
             {{"default", {{"knn", 50}, {"power", 0.6}}},
              {"cf_track", {{"alpha", 0.4}, {"beta", 0.6}, {"shrink", 10.0}, {"k1", 1.5},
                            {"b", 0.6}}}}},
            {"feature_combo",
             {{"selector", "artist"}, {"album_weight", 0.5}, {"artist_weight", 2.0}}},
            {"title", {{"token_weight", 0.8}, {"exact_weight", 1.2}}},
            {"layered_features", {"energy", "loudness"}},
            {"layered_cbf_feature", "loudness"},
            {"boosts",
             {{"k_candidates", 64},
              {"gamma", 0.3},
              {"tail_discount", 0.7},
              {"tail_span", 4},
              {"album_gamma", 0.2},
              {"gap_categories", {8}},
              {"tail_categories", {5, 6}},
              {"album_categories", {3}}}},
            {"objective", "combined"},
            {"tune_budget", 12},
        };
        PipelineConfig cfg = pipeline_config_from_json(j);
        CHECK(cfg.features_path == "f.csv");
        CHECK(cfg.challenge_path == "c.jsonl");
        CHECK(cfg.truth_path == "t.jsonl");
        CHECK(cfg.seed == 17);
        CHECK(cfg.threads == 2);
        CHECK(cfg.per_category == 5);
        CHECK(cfg.models == std::vector<std::string>({"cf_track", "toppop_track"}));
        CHECK(cfg.categories == std::vector<int>({2, 5}));
        CHECK(cfg.kernels.at("default").knn == 50);
        CHECK(cfg.kernels.at("default").power_p == 0.6);
        CHECK(cfg.kernels.at("cf_track").alpha == 0.4);
        CHECK(cfg.kernels.at("cf_track").shrink_h == 10.0);
        CHECK(cfg.kernels.at("cf_track").bm25_k1 == 1.5);
        CHECK(cfg.feature_combo.selector == FeatureSelector::artist);
        CHECK(cfg.feature_combo.artist_weight == 2.0);
        CHECK(cfg.title_token_weight == 0.8);
        CHECK(cfg.title_exact_weight == 1.2);
        CHECK(cfg.layered_features == std::vector<std::string>({"energy", "loudness"}));
        CHECK(cfg.layered_cbf_feature == "loudness");
        CHECK(cfg.boosts.k_candidates == 64);
        CHECK(cfg.boosts.gamma == 0.3);
        CHECK(cfg.boosts.tail_span == 4);
        CHECK(cfg.boosts.gap_categories == std::vector<int>({8}));
        CHECK(cfg.objective.w_clicks == Catch::Approx(1.0 / 51.0));
        CHECK(cfg.tune_budget == 12);
    }
    SECTION("validation") {
        CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::array()), data_error);
        CHECK_THROWS_WITH(pipeline_config_from_json(nlohmann::json::object()),
                          ContainsSubstring("dataset path is required"));
        CHECK_THROWS_WITH(
            pipeline_config_from_json({{"dataset", "d"}, {"models", {"nope"}}}),
            ContainsSubstring("unknown model tag 'nope'"));
        CHECK_THROWS_WITH(
            pipeline_config_from_json({{"dataset", "d"}, {"categories", {0}}}),
            ContainsSubstring("category filter entries"));
        CHECK_THROWS_WITH(
            pipeline_config_from_json({{"dataset", "d"}, {"tune_budget", 0}}),
            ContainsSubstring("tune_budget"));
        CHECK_THROWS_AS(
            pipeline_config_from_json({{"dataset", "d"}, {"kernels", {{"default", 3}}}}),
            data_error);
    }
    SECTION("config files") {
        TempDir tmp;
        const std::string good = tmp.write("cfg.json", R"({"dataset": "d.jsonl", "seed": 9})");
        PipelineConfig cfg = load_pipeline_config(good);
        CHECK(cfg.seed == 9);
        CHECK_THROWS_WITH(load_pipeline_config(tmp.file("absent.json")),
                          ContainsSubstring("cannot open config file"));
        const std::string bad = tmp.write("bad.json", "{nope");
        CHECK_THROWS_AS(load_pipeline_config(bad), data_error);
    }
}

TEST_CASE("default ensemble weights") {
    SECTION("full model list") {
        EnsembleConfig cfg = default_ensemble(kAllModels);
        REQUIRE(cfg.cells.size() == 10);
        for (int cat = 1; cat <= 10; ++cat) {
            CHECK(cfg.cells[static_cast<std::size_t>(cat - 1)].category == cat);
            CHECK_FALSE(cfg.cells[static_cast<std::size_t>(cat - 1)].cluster.has_value());
        }
        CHECK(cfg.cells[0].weights == std::map<std::string, double>({{"cbf_title", 1.0}}));
        CHECK(cfg.cells[1].weights.size() == 6);
        CHECK(cfg.cells[1].weights.count("cf_track") == 1);
        // title weights only where the split exposes titles
        CHECK(cfg.cells[2].weights.count("cbf_title") == 1);
        CHECK(cfg.cells[3].weights.count("cbf_title") == 0);  // category 4 hides the title
        CHECK(cfg.cells[5].weights.count("cbf_title") == 0);  // category 6 hides the title
        CHECK(cfg.cells[7].weights.count("cbf_title") == 1);
        CHECK_NOTHROW(cfg.check());
    }
    SECTION("missing models drop out and cells fall back") {
        EnsembleConfig cfg = default_ensemble({"cf_track", "toppop_track"});
        CHECK(cfg.cells[0].weights == std::map<std::string, double>({{"cf_track", 1.0}}));
        for (const auto& cell : cfg.cells)
            for (const auto& [tag, w] : cell.weights)
                CHECK((tag == "cf_track" || tag == "toppop_track"));
        CHECK_NOTHROW(cfg.check());
    }
}

TEST_CASE("build_context splits in memory") {
    CorpusDir corpus;
    PipelineConfig cfg = corpus.config("ctx");
    PipelineContext ctx = build_context(cfg);

    REQUIRE(ctx.items.size() == 20);  // two per category
    CHECK(ctx.truth.size() == 20);
    CHECK(ctx.train.playlists.size() == 380);
    CHECK(ctx.ptm.n_rows == 400);
    CHECK(ctx.ptm.n_cols == ctx.train.n_tracks());
    REQUIRE(ctx.targets.size() == 20);
    REQUIRE(ctx.pids.size() == 20);
    REQUIRE(ctx.visible_cols.size() == 20);
    REQUIRE(ctx.clusters.size() == 20);
    for (std::size_t i = 0; i < ctx.items.size(); ++i) {
        CHECK(ctx.targets[i] == 380 + static_cast<Index>(i));
        CHECK(ctx.pids[i] == ctx.items[i].pid);
        CHECK(std::is_sorted(ctx.visible_cols[i].begin(), ctx.visible_cols[i].end()));
        CHECK(ctx.visible_cols[i].size() == ctx.items[i].visible.size());
        CHECK(ctx.clusters[i].has_value() == category_uses_clusters(ctx.items[i].category));
    }

    SECTION("category filter restricts the challenge set") {
        cfg.categories = {2, 7};
        PipelineContext narrow = build_context(cfg);
        REQUIRE(narrow.items.size() == 4);
        for (const auto& item : narrow.items) CHECK((item.category == 2 || item.category == 7));
        CHECK(narrow.truth.size() == 4);
    }
}

TEST_CASE("build_context reads challenge files") {
    CorpusDir corpus;

    // split once in memory, persist all three parts, reload
    Dataset full = load_dataset(corpus.dataset);
    load_features_csv(full, corpus.features);
    impute_features(full);
    SplitResult split = split_challenge(full, 3, 2);
    const std::string train_path = corpus.dir.file("train.jsonl");
    const std::string challenge_path = corpus.dir.file("challenge.jsonl");
    const std::string truth_path = corpus.dir.file("truth.jsonl");
    save_dataset(split.train, train_path);
    save_challenge(split.items, split.train, challenge_path);
    save_ground_truth(split.truth, split.train, truth_path);

    PipelineConfig cfg = corpus.config("ctx-file");
    cfg.dataset_path = train_path;
    cfg.challenge_path = challenge_path;
    cfg.truth_path = truth_path;
    PipelineContext ctx = build_context(cfg);

    REQUIRE(ctx.items.size() == split.items.size());
    for (std::size_t i = 0; i < ctx.items.size(); ++i) {
        CHECK(ctx.items[i].pid == split.items[i].pid);
        CHECK(ctx.items[i].category == split.items[i].category);
        REQUIRE(ctx.items[i].visible.size() == split.items[i].visible.size());
        for (std::size_t j = 0; j < ctx.items[i].visible.size(); ++j) {
            CHECK(ctx.items[i].visible[j].track_id == split.items[i].visible[j].track_id);
            CHECK(ctx.items[i].visible[j].pos == split.items[i].visible[j].pos);
        }
    }
    CHECK(ctx.truth.size() == split.truth.size());

    SECTION("an over-narrow filter is an error") {
        cfg.categories = {4};
        std::vector<ChallengeItem> only2;
        for (const auto& item : split.items)
            if (item.category == 2) only2.push_back(item);
        save_challenge(only2, split.train, challenge_path);
        CHECK_THROWS_WITH(build_context(cfg),
                          ContainsSubstring("removed every challenge playlist"));
    }
    SECTION("missing dataset is wrapped with the stage name") {
        cfg.dataset_path = corpus.dir.file("absent.jsonl");
        CHECK_THROWS_WITH(build_context(cfg), ContainsSubstring("stage 'load'"));
    }
}

TEST_CASE("run_pipeline produces an evaluated submission") {
    CorpusDir corpus;
    PipelineConfig cfg = corpus.config("run");
    PipelineResult result = run_pipeline(cfg);

    REQUIRE(result.submission.size() == 20);
    for (const auto& [pid, recs] : result.submission) {
        CHECK(recs.size() <= 50);
        CHECK(!recs.empty());
    }
    CHECK(result.evaluated);
    CHECK(std::filesystem::exists(result.submission_path));
    CHECK(std::filesystem::exists(result.report_path));
    CHECK(result.report.overall.count == 20);
    CHECK(result.report.overall.ndcg >= 0.0);
    CHECK(result.report.overall.ndcg <= 1.0);
    CHECK(result.report.overall.clicks <= 51.0);
    for (int cat = 1; cat <= 10; ++cat)
        CHECK(result.report.per_category[static_cast<std::size_t>(cat - 1)].count == 2);

    SECTION("reruns are identical") {
        PipelineConfig again = cfg;
        again.out_dir = corpus.dir.file("run2");
        PipelineResult second = run_pipeline(again);
        CHECK(second.submission == result.submission);
        CHECK(read_file(second.submission_path.string()) ==
              read_file(result.submission_path.string()));
    }
    SECTION("thread count does not change the output") {
        PipelineConfig threaded = cfg;
        threaded.threads = 3;
        threaded.out_dir = corpus.dir.file("run3");
        CHECK(run_pipeline(threaded).submission == result.submission);
    }
    SECTION("boosts leave the submission valid") {
        PipelineConfig boosted = cfg;
        boosted.boosts.gamma = 0.2;
        boosted.boosts.album_gamma = 0.2;
        boosted.out_dir = corpus.dir.file("run-boost");
        PipelineResult out = run_pipeline(boosted);
        CHECK(out.evaluated);
        CHECK(out.submission.size() == 20);
    }
}

TEST_CASE("run_pipeline without truth skips evaluation") {
    CorpusDir corpus;
    Dataset full = load_dataset(corpus.dataset);
    load_features_csv(full, corpus.features);
    impute_features(full);
    SplitResult split = split_challenge(full, 3, 2);
    const std::string train_path = corpus.dir.file("train.jsonl");
    const std::string challenge_path = corpus.dir.file("challenge.jsonl");
    save_dataset(split.train, train_path);
    save_challenge(split.items, split.train, challenge_path);

    PipelineConfig cfg = corpus.config("norun");
    cfg.dataset_path = train_path;
    cfg.challenge_path = challenge_path;
    PipelineResult result = run_pipeline(cfg);
    CHECK_FALSE(result.evaluated);
    CHECK(result.submission.size() == split.items.size());
    CHECK(std::filesystem::exists(result.submission_path));
    CHECK(result.report_path.empty());
}

TEST_CASE("run_build caches scores and run_tune consumes them") {
    CorpusDir corpus;
    PipelineConfig cfg = corpus.config("tune");

    const std::vector<std::filesystem::path> paths = run_build(cfg);
    REQUIRE(paths.size() == cfg.models.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        CHECK(std::filesystem::exists(paths[i]));
        CHECK(paths[i].filename().string() == cfg.models[i] + ".jsonl");
    }

    SECTION("cached scores round trip") {
        Dataset full = load_dataset(corpus.dataset);
        load_features_csv(full, corpus.features);
    load_features_csv(full, corpus.features);
        impute_features(full);
        SplitResult split = split_challenge(full, cfg.seed, cfg.per_category);
        ScoreSet set = load_scores(paths[0].string(), split.train);
        CHECK(set.model == "cf_track");
        CHECK(set.size() == split.items.size());
        CHECK(set.n_items == split.train.n_tracks());
    }
    SECTION("tuning from the cache matches tuning from scratch") {
        const std::filesystem::path tuned_path = run_tune(cfg);
        CHECK(tuned_path == std::filesystem::path(cfg.out_dir) / "ensemble.json");
        EnsembleConfig cached = load_ensemble_config(tuned_path.string());
        CHECK_NOTHROW(cached.check());

        PipelineConfig fresh = cfg;
        fresh.out_dir = corpus.dir.file("tune-fresh");  // no score cache here
        EnsembleConfig scratch = load_ensemble_config(run_tune(fresh).string());
        REQUIRE(cached.cells.size() == scratch.cells.size());
        for (std::size_t i = 0; i < cached.cells.size(); ++i) {
            CHECK(cached.cells[i].category == scratch.cells[i].category);
            CHECK(cached.cells[i].weights == scratch.cells[i].weights);
        }

        // every category row exists, so the file can drive a full run
        for (int cat = 1; cat <= 10; ++cat) CHECK(cached.find(cat, 0) != nullptr);
        for (const auto& cell : cached.cells)
            for (const auto& [tag, w] : cell.weights)
                CHECK(std::find(cfg.models.begin(), cfg.models.end(), tag) != cfg.models.end());

        // and the tuned file feeds back into a run
        PipelineConfig runner = cfg;
        runner.ensemble_path = tuned_path.string();
        runner.out_dir = corpus.dir.file("run-tuned");
        CHECK(run_pipeline(runner).evaluated);
    }
    SECTION("a cache row from another model is rejected") {
        std::filesystem::copy_file(paths[2], paths[0],
                                   std::filesystem::copy_options::overwrite_existing);
        CHECK_THROWS_WITH(run_tune(cfg), ContainsSubstring("holds model"));
    }
    SECTION("a cache built from another split is rejected") {
        PipelineConfig other = cfg;
        other.seed = 4;
        CHECK_THROWS_WITH(run_tune(other),
                          ContainsSubstring("does not match the challenge split"));
    }
    SECTION("tuning requires ground truth") {
        Dataset full = load_dataset(corpus.dataset);
        load_features_csv(full, corpus.features);
    load_features_csv(full, corpus.features);
        impute_features(full);
        SplitResult split = split_challenge(full, 3, 2);
        const std::string train_path = corpus.dir.file("train.jsonl");
        const std::string challenge_path = corpus.dir.file("challenge.jsonl");
        save_dataset(split.train, train_path);
        save_challenge(split.items, split.train, challenge_path);
        PipelineConfig no_truth = corpus.config("tune-nt");
        no_truth.dataset_path = train_path;
        no_truth.challenge_path = challenge_path;
        CHECK_THROWS_WITH(run_tune(no_truth),
                          ContainsSubstring("ground truth is required"));
    }
}
