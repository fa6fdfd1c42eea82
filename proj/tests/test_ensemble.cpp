#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segue/ensemble.hpp"
#include "tempfile.hpp"

using namespace segue;
using Catch::Matchers::ContainsSubstring;

namespace {

Dataset distinct_tracks(Index n, Index artists = 0) {
    Dataset ds;
    for (Index t = 0; t < n; ++t)
        ds.tracks.push_back({t, t, artists > 0 ? t % artists : t, {}});
    ds.rebuild_index();
    return ds;
}

ScoreSet make_set(std::string model, std::vector<Index> pids,
                  std::vector<std::vector<double>> rows,
                  std::vector<std::vector<Index>> masks = {}) {
    ScoreSet s;
    s.model = std::move(model);
    s.pids = std::move(pids);
    s.n_items = static_cast<Index>(rows.at(0).size());
    s.scores = std::move(rows);
    s.mask = masks.empty() ? std::vector<std::vector<Index>>(s.scores.size()) : std::move(masks);
    return s;
}

}  // namespace

TEST_CASE("normalize_row modes") {
    SECTION("max scaling") {
        ScoreSet s = make_set("m", {1}, {{2.0, 4.0, 0.0}});
        ScoreSet out = normalize_scores(s, NormalizeMode::per_playlist_max);
        CHECK(out.scores[0] == std::vector<double>({0.5, 1.0, 0.0}));
    }
    SECTION("l2 scaling") {
        ScoreSet s = make_set("m", {1}, {{3.0, 4.0}});
        ScoreSet out = normalize_scores(s, NormalizeMode::per_playlist_l2);
        CHECK(out.scores[0][0] == Catch::Approx(0.6));
        CHECK(out.scores[0][1] == Catch::Approx(0.8));
    }
    SECTION("none is the identity") {
        ScoreSet s = make_set("m", {1}, {{2.0, 4.0}});
        ScoreSet out = normalize_scores(s, NormalizeMode::none);
        CHECK(out.scores[0] == s.scores[0]);
    }
    SECTION("all-zero rows pass through") {
        ScoreSet s = make_set("m", {1}, {{0.0, 0.0}});
        ScoreSet out = normalize_scores(s, NormalizeMode::per_playlist_max);
        CHECK(out.scores[0] == std::vector<double>({0.0, 0.0}));
    }
    SECTION("masked entries neither count nor change") {
        ScoreSet s = make_set("m", {1}, {{9.0, 2.0, 4.0}}, {{0}});
        ScoreSet out = normalize_scores(s, NormalizeMode::per_playlist_max);
        CHECK(out.scores[0] == std::vector<double>({9.0, 0.5, 1.0}));
    }
    SECTION("mode names") {
        CHECK(normalize_mode_from_string("none") == NormalizeMode::none);
        CHECK(normalize_mode_from_string("max") == NormalizeMode::per_playlist_max);
        CHECK(normalize_mode_from_string("per-playlist-max") == NormalizeMode::per_playlist_max);
        CHECK(normalize_mode_from_string("l2") == NormalizeMode::per_playlist_l2);
        CHECK(normalize_mode_from_string("per-playlist-l2") == NormalizeMode::per_playlist_l2);
        CHECK_THROWS_AS(normalize_mode_from_string("minmax"), std::invalid_argument);
        CHECK(to_string(NormalizeMode::per_playlist_max) == "max");
        CHECK(normalize_mode_from_string(to_string(NormalizeMode::per_playlist_l2)) ==
              NormalizeMode::per_playlist_l2);
    }
}

TEST_CASE("blend combines normalized score sets") {
    ScoreSet a = make_set("a", {1, 2}, {{1.0, 3.0, 0.0}, {2.0, 0.0, 2.0}});
    ScoreSet b = make_set("b", {1, 2}, {{0.0, 1.0, 4.0}, {1.0, 1.0, 0.0}});
    std::vector<ScoreSet> sets = {a, b};
    const std::vector<NormalizeMode> raw = {NormalizeMode::none, NormalizeMode::none};

    SECTION("weight (1,0) reproduces the first model") {
        std::vector<double> w = {1.0, 0.0};
        ScoreSet out = blend(sets, w, raw);
        CHECK(out.scores[0] == a.scores[0]);
        CHECK(out.scores[1] == a.scores[1]);
        CHECK(out.model == "blend");
        CHECK(out.pids == a.pids);
    }
    SECTION("equal weights sum halves") {
        std::vector<double> w = {0.5, 0.5};
        ScoreSet out = blend(sets, w, raw);
        CHECK(out.scores[0] == std::vector<double>({0.5, 2.0, 2.0}));
        CHECK(out.scores[1] == std::vector<double>({1.5, 0.5, 1.0}));
    }
    SECTION("rescaling all weights keeps the ranking") {
        std::vector<double> w1 = {0.3, 0.7};
        std::vector<double> w2 = {0.6, 1.4};
        ScoreSet o1 = blend(sets, w1, raw);
        ScoreSet o2 = blend(sets, w2, raw);
        for (std::size_t r = 0; r < o1.size(); ++r)
            CHECK(top_n_row(o1.scores[r], o1.mask[r], 3) == top_n_row(o2.scores[r], o2.mask[r], 3));
    }
    SECTION("default normalization is per-playlist max") {
        std::vector<double> w = {1.0, 0.0};
        ScoreSet out = blend(sets, w);
        CHECK(out.scores[0] == std::vector<double>({1.0 / 3.0, 1.0, 0.0}));
    }
    SECTION("masks union") {
        ScoreSet ma = make_set("a", {1}, {{1.0, 2.0, 3.0}}, {{0, 2}});
        ScoreSet mb = make_set("b", {1}, {{1.0, 2.0, 3.0}}, {{1, 2}});
        std::vector<ScoreSet> ms = {ma, mb};
        std::vector<double> w = {0.5, 0.5};
        ScoreSet out = blend(ms, w, raw);
        CHECK(out.mask[0] == std::vector<Index>({0, 1, 2}));
    }
    SECTION("validation") {
        std::vector<ScoreSet> none;
        std::vector<double> w0;
        CHECK_THROWS_AS(blend(none, w0), std::invalid_argument);
        std::vector<double> w1 = {1.0};
        CHECK_THROWS_AS(blend(sets, w1), std::invalid_argument);
        std::vector<double> neg = {1.0, -0.5};
        CHECK_THROWS_AS(blend(sets, neg), std::invalid_argument);
        ScoreSet other = make_set("c", {1, 3}, {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}});
        std::vector<ScoreSet> mismatch = {a, other};
        std::vector<double> w = {0.5, 0.5};
        CHECK_THROWS_AS(blend(mismatch, w), data_error);
        ScoreSet narrow = make_set("d", {1, 2}, {{1.0}, {1.0}});
        std::vector<ScoreSet> widths = {a, narrow};
        CHECK_THROWS_AS(blend(widths, w), data_error);
    }
}

TEST_CASE("ensemble config rules") {
    EnsembleConfig cfg;
    cfg.cells.push_back({2, std::nullopt, {{"cf_track", 1.0}}});
    cfg.cells.push_back({5, std::nullopt, {{"cf_track", 0.7}, {"cbf_track", 0.3}}});
    cfg.cells.push_back({5, 4, {{"cbf_track", 1.0}}});
    cfg.normalization["default"] = NormalizeMode::per_playlist_max;
    cfg.normalization["cbf_track"] = NormalizeMode::per_playlist_l2;

    SECTION("valid config passes") { CHECK_NOTHROW(cfg.check()); }
    SECTION("cluster categories") {
        for (int c : {4, 5, 6, 8, 10}) CHECK(category_uses_clusters(c));
        for (int c : {1, 2, 3, 7, 9}) CHECK_FALSE(category_uses_clusters(c));
    }
    SECTION("find prefers the cluster row and falls back") {
        const EnsembleCell* c54 = cfg.find(5, 4);
        REQUIRE(c54 != nullptr);
        CHECK(c54->cluster == 4);
        const EnsembleCell* c52 = cfg.find(5, 2);
        REQUIRE(c52 != nullptr);
        CHECK_FALSE(c52->cluster.has_value());
        // non-clustered categories ignore the cluster argument
        const EnsembleCell* c2 = cfg.find(2, 3);
        REQUIRE(c2 != nullptr);
        CHECK(c2->category == 2);
        CHECK(cfg.find(9, 0) == nullptr);
    }
    SECTION("mode_for") {
        CHECK(cfg.mode_for("cbf_track") == NormalizeMode::per_playlist_l2);
        CHECK(cfg.mode_for("cf_track") == NormalizeMode::per_playlist_max);
        EnsembleConfig bare;
        CHECK(bare.mode_for("x") == NormalizeMode::per_playlist_max);
    }
    SECTION("rejects bad cells") {
        EnsembleConfig bad = cfg;
        bad.cells.push_back({11, std::nullopt, {{"m", 1.0}}});
        CHECK_THROWS_WITH(bad.check(), ContainsSubstring("outside 1..10"));
        bad = cfg;
        bad.cells.push_back({3, 2, {{"m", 1.0}}});
        CHECK_THROWS_WITH(bad.check(), ContainsSubstring("does not take cluster rows"));
        bad = cfg;
        bad.cells.push_back({5, 5, {{"m", 1.0}}});
        CHECK_THROWS_WITH(bad.check(), ContainsSubstring("outside 1..4"));
        bad = cfg;
        bad.cells.push_back({7, std::nullopt, {{"m", 0.0}}});
        CHECK_THROWS_WITH(bad.check(), ContainsSubstring("at least one positive weight"));
        bad = cfg;
        bad.cells.push_back({2, std::nullopt, {{"other", 1.0}}});
        CHECK_THROWS_WITH(bad.check(), ContainsSubstring("duplicate cell"));
        bad = cfg;
        bad.cells.push_back({5, std::nullopt, {{"m", -1.0}}});
        CHECK_THROWS_WITH(bad.check(), ContainsSubstring("must be >= 0"));
    }
    SECTION("json round trip") {
        TempDir tmp;
        nlohmann::json j = ensemble_config_to_json(cfg);
        EnsembleConfig back = ensemble_config_from_json(j);
        REQUIRE(back.cells.size() == cfg.cells.size());
        for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
            CHECK(back.cells[i].category == cfg.cells[i].category);
            CHECK(back.cells[i].cluster == cfg.cells[i].cluster);
            CHECK(back.cells[i].weights == cfg.cells[i].weights);
        }
        CHECK(back.normalization == cfg.normalization);

        save_ensemble_config(cfg, tmp.file("ens.json"));
        EnsembleConfig loaded = load_ensemble_config(tmp.file("ens.json"));
        CHECK(loaded.cells.size() == cfg.cells.size());
        CHECK(loaded.normalization == cfg.normalization);
    }
    SECTION("json validation") {
        CHECK_THROWS_WITH(ensemble_config_from_json(nlohmann::json::object()),
                          ContainsSubstring("missing \"cells\""));
        CHECK_THROWS_WITH(ensemble_config_from_json({{"cells", {{{"weights", {{"m", 1.0}}}}}}}),
                          ContainsSubstring("missing \"category\""));
        CHECK_THROWS_WITH(ensemble_config_from_json({{"cells", {{{"category", 2}}}}}),
                          ContainsSubstring("missing \"weights\""));
    }
}

TEST_CASE("blend_for_playlist picks the cell for the playlist") {
    std::map<std::string, ScoreSet> models;
    models["a"] = make_set("a", {1, 2}, {{4.0, 2.0, 0.0}, {0.0, 1.0, 2.0}});
    models["b"] = make_set("b", {1, 2}, {{0.0, 0.0, 6.0}, {3.0, 0.0, 0.0}});

    EnsembleConfig cfg;
    cfg.cells.push_back({2, std::nullopt, {{"a", 1.0}}});
    cfg.cells.push_back({5, std::nullopt, {{"a", 0.5}, {"b", 0.5}}});
    cfg.cells.push_back({5, 4, {{"b", 1.0}}});
    cfg.normalization["default"] = NormalizeMode::none;

    SECTION("category row") {
        ScoreSet out = blend_for_playlist(2, 0, cfg, models);
        CHECK(out.scores[0] == models["a"].scores[0]);
    }
    SECTION("cluster row overrides") {
        ScoreSet out = blend_for_playlist(5, 4, cfg, models);
        CHECK(out.scores[0] == models["b"].scores[0]);
        ScoreSet fall = blend_for_playlist(5, 2, cfg, models);
        CHECK(fall.scores[0] == std::vector<double>({2.0, 1.0, 3.0}));
    }
    SECTION("zero-weight models are not looked up") {
        EnsembleConfig zero = cfg;
        zero.cells[0].weights["ghost"] = 0.0;
        CHECK_NOTHROW(blend_for_playlist(2, 0, zero, models));
    }
    SECTION("errors") {
        CHECK_THROWS_WITH(blend_for_playlist(9, 0, cfg, models),
                          ContainsSubstring("no ensemble weights for category 9"));
        EnsembleConfig missing = cfg;
        missing.cells[0].weights = {{"ghost", 1.0}};
        CHECK_THROWS_WITH(blend_for_playlist(2, 0, missing, models),
                          ContainsSubstring("missing model \"ghost\""));
    }
}

TEST_CASE("weight objective") {
    CHECK(WeightObjective::from_string("ndcg").w_ndcg == 1.0);
    CHECK(WeightObjective::from_string("ndcg").w_r_precision == 0.0);
    CHECK(WeightObjective::from_string("r-precision").w_r_precision == 1.0);
    CHECK(WeightObjective::from_string("clicks").w_clicks == 1.0);
    WeightObjective combined = WeightObjective::from_string("combined");
    CHECK(combined.w_clicks == Catch::Approx(1.0 / 51.0));
    CHECK_THROWS_AS(WeightObjective::from_string("auc"), std::invalid_argument);
    // clicks pull the value down
    CHECK(combined.value(0.5, 0.5, 10.0) == Catch::Approx(1.0 - 10.0 / 51.0));
}

namespace {

struct OptimizerFixture {
    Dataset ds = distinct_tracks(12);
    std::vector<ChallengeItem> items;
    std::vector<GroundTruth> truth;
    std::map<std::string, ScoreSet> models;

    OptimizerFixture() {
        ChallengeItem a;
        a.pid = 100;
        a.category = 2;
        a.title = "t";
        a.visible = {{0, 0}};
        ChallengeItem b;
        b.pid = 101;
        b.category = 2;
        b.title = "u";
        b.visible = {{1, 0}};
        items = {a, b};
        truth = {{100, {5}}, {101, {7}}};

        // "good" ranks the hidden track first; "noise" promotes a wrong
        // track hard enough that the uniform blend demotes the truth to
        // rank two, so the optimizer has room to improve.
        // pids deliberately reversed to prove the join is by pid.
        std::vector<double> g100(12, 0.0), g101(12, 0.0), n100(12, 0.0), n101(12, 0.0);
        g100[5] = 10.0;
        g100[3] = 1.0;
        g101[7] = 10.0;
        g101[2] = 1.0;
        n100[3] = 8.0;
        n100[5] = 0.1;
        n101[2] = 8.0;
        n101[7] = 0.1;
        models["good"] = make_set("good", {101, 100}, {g101, g100});
        models["noise"] = make_set("noise", {101, 100}, {n101, n100});
    }

    std::map<int, std::vector<std::string>> both_models() const {
        return {{2, {"good", "noise"}}};
    }

    // mirrors the optimizer's evaluation: normalize, blend, cut at zero, ndcg
    double mean_ndcg(const EnsembleConfig& cfg) const {
        double total = 0.0;
        for (const auto& item : items) {
            ScoreSet blended = blend_for_playlist(item.category, 0, cfg, models);
            std::size_t row = blended.pids[0] == item.pid ? 0 : 1;
            const auto top = top_n_row(blended.scores[row], blended.mask[row], 500);
            std::vector<Index> recs;
            for (Index c : top) {
                if (blended.scores[row][static_cast<std::size_t>(c)] == 0.0) break;
                recs.push_back(ds.tracks[static_cast<std::size_t>(c)].track_id);
            }
            for (const auto& gt : truth)
                if (gt.pid == item.pid) total += ndcg(recs, gt.hidden);
        }
        return total / static_cast<double>(items.size());
    }
};

struct CountingStrategy final : WeightSearchStrategy {
    int asks = 0;
    int tells = 0;
    std::vector<double> ask(std::size_t n_models, std::mt19937_64&) override {
        ++asks;
        std::vector<double> w(n_models, 1.0 / static_cast<double>(n_models));
        w[static_cast<std::size_t>(asks) % n_models] += 0.5;
        return w;
    }
    void tell(std::span<const double>, double) override { ++tells; }
};

}  // namespace

TEST_CASE("optimize_weights baseline and degeneracies") {
    OptimizerFixture fx;
    WeightObjective obj;  // ndcg

    SECTION("budget 1 returns the uniform baseline") {
        EnsembleConfig cfg =
            optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth, fx.ds, obj, 1, 7);
        REQUIRE(cfg.cells.size() == 1);
        CHECK(cfg.cells[0].category == 2);
        CHECK(cfg.cells[0].weights.at("good") == 0.5);
        CHECK(cfg.cells[0].weights.at("noise") == 0.5);
        CHECK(cfg.normalization.at("default") == NormalizeMode::per_playlist_max);
    }
    SECTION("a single model gets weight one") {
        std::map<int, std::vector<std::string>> just_good = {{2, {"good"}}};
        EnsembleConfig cfg =
            optimize_weights(fx.models, just_good, fx.items, fx.truth, fx.ds, obj, 15, 7);
        REQUIRE(cfg.cells.size() == 1);
        CHECK(cfg.cells[0].weights.at("good") == 1.0);
    }
    SECTION("the dominating model takes the weight") {
        EnsembleConfig cfg =
            optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth, fx.ds, obj, 60, 7);
        CHECK(cfg.cells[0].weights.at("good") > cfg.cells[0].weights.at("noise"));
    }
    SECTION("best seen never degrades with budget") {
        std::vector<double> achieved;
        for (int budget : {1, 8, 64}) {
            EnsembleConfig cfg = optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth,
                                                  fx.ds, obj, budget, 7);
            achieved.push_back(fx.mean_ndcg(cfg));
        }
        CHECK(achieved[1] >= achieved[0]);
        CHECK(achieved[2] >= achieved[1]);
        CHECK(achieved[2] > achieved[0]);  // the noise-free blend is reachable here
    }
    SECTION("deterministic in the seed") {
        EnsembleConfig a =
            optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth, fx.ds, obj, 25, 11);
        EnsembleConfig b =
            optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth, fx.ds, obj, 25, 11);
        REQUIRE(a.cells.size() == b.cells.size());
        for (std::size_t i = 0; i < a.cells.size(); ++i)
            CHECK(a.cells[i].weights == b.cells[i].weights);
    }
    SECTION("strategy sees budget-1 candidates") {
        CountingStrategy counter;
        optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth, fx.ds, obj, 9, 7,
                         NormalizeMode::per_playlist_max, &counter);
        CHECK(counter.asks == 8);
        CHECK(counter.tells == 8);
    }
    SECTION("errors") {
        CHECK_THROWS_AS(optimize_weights(fx.models, fx.both_models(), fx.items, fx.truth, fx.ds,
                                         obj, 0, 7),
                        std::invalid_argument);
        std::map<int, std::vector<std::string>> empty_cat = {{2, {"good"}}, {3, {"good"}}};
        CHECK_THROWS_WITH(optimize_weights(fx.models, empty_cat, fx.items, fx.truth, fx.ds, obj,
                                           2, 7),
                          ContainsSubstring("no validation playlists in category 3"));
        std::map<int, std::vector<std::string>> ghost = {{2, {"ghost"}}};
        CHECK_THROWS_WITH(
            optimize_weights(fx.models, ghost, fx.items, fx.truth, fx.ds, obj, 2, 7),
            ContainsSubstring("missing model \"ghost\""));
        std::map<std::string, ScoreSet> partial = fx.models;
        partial["good"].pids = {101, 999};
        CHECK_THROWS_WITH(optimize_weights(partial, fx.both_models(), fx.items, fx.truth, fx.ds,
                                           obj, 2, 7),
                          ContainsSubstring("no scores for pid 100"));
    }
}

TEST_CASE("optimize_weights emits cluster rows for populated clusters") {
    // category 5 items: two in cluster 1 (all artists distinct), one in
    // cluster 4 (ten tracks by two artists)
    Dataset ds = distinct_tracks(40);
    for (Index t = 20; t < 30; ++t) ds.tracks[static_cast<std::size_t>(t)].artist_id = t < 25 ? 500 : 501;
    ds.rebuild_index();

    auto make_item = [](Index pid, std::vector<Index> vis) {
        ChallengeItem it;
        it.pid = pid;
        it.category = 5;
        it.title = "t";
        for (std::size_t k = 0; k < vis.size(); ++k)
            it.visible.push_back({vis[k], static_cast<Index>(k)});
        return it;
    };
    std::vector<ChallengeItem> items = {
        make_item(200, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),
        make_item(201, {10, 11, 12, 13, 14, 15, 16, 17, 18, 19}),
        make_item(202, {20, 21, 22, 23, 24, 25, 26, 27, 28, 29}),
    };
    std::vector<GroundTruth> truth = {{200, {30}}, {201, {31}}, {202, {32}}};

    std::vector<std::vector<double>> rows(3, std::vector<double>(40, 0.0));
    rows[0][30] = 1.0;
    rows[1][31] = 1.0;
    rows[2][32] = 1.0;
    std::map<std::string, ScoreSet> models;
    models["only"] = make_set("only", {200, 201, 202}, rows);

    std::map<int, std::vector<std::string>> per_cat = {{5, {"only"}}};
    EnsembleConfig cfg = optimize_weights(models, per_cat, items, truth, ds,
                                          WeightObjective{}, 3, 9);

    std::vector<std::pair<int, int>> got;
    for (const auto& cell : cfg.cells) got.emplace_back(cell.category, cell.cluster.value_or(0));
    std::vector<std::pair<int, int>> want = {{5, 0}, {5, 1}, {5, 4}};
    CHECK(got == want);
}
