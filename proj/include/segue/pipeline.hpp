#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "segue/boosts.hpp"
#include "segue/challenge.hpp"
#include "segue/common.hpp"
#include "segue/dataset.hpp"
#include "segue/ensemble.hpp"
#include "segue/kernels.hpp"
#include "segue/metrics.hpp"
#include "segue/recommenders.hpp"
#include "segue/titles.hpp"

namespace segue {

inline const std::vector<std::string> kAllModels = {
    "cf_track",        "cf_playlist",       "cbf_track",
    "cbf_playlist",    "cbf_title",         "cf_track_layered",
    "cbf_track_layered", "toppop_track",    "toppop_album"};

// One JSON document drives every stage; CLI flags override single keys.
struct PipelineConfig {
    std::string dataset_path;
    std::string features_path;    // optional; empty = features embedded or absent
    std::string challenge_path;   // optional; empty = split in memory from seed
    std::string truth_path;       // optional; required for evaluation
    std::string ensemble_path;    // optional; empty = built-in default weights
    std::string out_dir = "out";

    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    Index per_category = 100;
    Index n_recommendations = 500;
    Index top_m = 1000;

    std::vector<std::string> models;  // empty = all
    std::vector<int> categories;      // empty = all; otherwise restrict the challenge set
    std::map<std::string, KernelParams> kernels;
    FeatureCombo feature_combo;
    double title_token_weight = 1.0;
    double title_exact_weight = 1.0;
    std::vector<std::string> layered_features = {"energy"};
    std::string layered_cbf_feature = "energy";
    BoostParams boosts;
    WeightObjective objective;
    int tune_budget = 60;

    std::vector<std::string> model_list() const {
        return models.empty() ? kAllModels : models;
    }

    void check() const {
        if (dataset_path.empty()) throw std::invalid_argument("dataset path is required");
        if (n_recommendations < 1)
            throw std::invalid_argument("n_recommendations must be >= 1");
        if (per_category < 1) throw std::invalid_argument("per_category must be >= 1");
        if (top_m < 1) throw std::invalid_argument("top_m must be >= 1");
        if (tune_budget < 1) throw std::invalid_argument("tune_budget must be >= 1");
        for (const auto& m : model_list()) {
            if (std::find(kAllModels.begin(), kAllModels.end(), m) == kAllModels.end())
                throw std::invalid_argument("unknown model tag '" + m + "'");
        }
        for (int c : categories)
            if (c < 1 || c > 10)
                throw std::invalid_argument("category filter entries must be in 1..10");
        for (const auto& [tag, params] : kernels) params.check();
        feature_combo.check();
        boosts.check();
        if (!(title_token_weight >= 0.0) || !(title_exact_weight >= 0.0))
            throw std::invalid_argument("title weights must be >= 0");
    }
};

namespace detail {

inline KernelParams kernel_params_from_json(const nlohmann::json& j, KernelParams base = {}) {
    if (!j.is_object()) throw data_error("kernel params must be an object");
    if (j.contains("knn")) base.knn = j.at("knn").get<Index>();
    if (j.contains("power")) base.power_p = j.at("power").get<double>();
    if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
    if (j.contains("beta")) base.beta = j.at("beta").get<double>();
    if (j.contains("shrink")) base.shrink_h = j.at("shrink").get<double>();
    if (j.contains("k1")) base.bm25_k1 = j.at("k1").get<double>();
    if (j.contains("b")) base.bm25_b = j.at("b").get<double>();
    return base;
}

inline nlohmann::json kernel_params_to_json(const KernelParams& p) {
    return {{"knn", p.knn},     {"power", p.power_p}, {"alpha", p.alpha},
            {"beta", p.beta},   {"shrink", p.shrink_h},
            {"k1", p.bm25_k1},  {"b", p.bm25_b}};
}

}  // namespace detail

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw data_error("pipeline config must be a JSON object");
    PipelineConfig cfg;
    auto str = [&](const char* key, std::string& out) {
        if (j.contains(key)) out = j.at(key).get<std::string>();
    };
    str("dataset", cfg.dataset_path);
    str("features", cfg.features_path);
    str("challenge", cfg.challenge_path);
    str("truth", cfg.truth_path);
    str("ensemble", cfg.ensemble_path);
    str("out_dir", cfg.out_dir);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("per_category")) cfg.per_category = j.at("per_category").get<Index>();
    if (j.contains("n_recommendations"))
        cfg.n_recommendations = j.at("n_recommendations").get<Index>();
    if (j.contains("top_m")) cfg.top_m = j.at("top_m").get<Index>();
    if (j.contains("models")) cfg.models = j.at("models").get<std::vector<std::string>>();
    if (j.contains("categories")) cfg.categories = j.at("categories").get<std::vector<int>>();
    if (j.contains("kernels")) {
        for (const auto& [tag, obj] : j.at("kernels").items())
            cfg.kernels[tag] = detail::kernel_params_from_json(obj);
    }
    if (j.contains("feature_combo")) {
        const auto& fc = j.at("feature_combo");
        if (fc.contains("selector"))
            cfg.feature_combo.selector =
                feature_selector_from_string(fc.at("selector").get<std::string>());
        if (fc.contains("album_weight"))
            cfg.feature_combo.album_weight = fc.at("album_weight").get<double>();
        if (fc.contains("artist_weight"))
            cfg.feature_combo.artist_weight = fc.at("artist_weight").get<double>();
    }
    if (j.contains("title")) {
        const auto& t = j.at("title");
        if (t.contains("token_weight"))
            cfg.title_token_weight = t.at("token_weight").get<double>();
        if (t.contains("exact_weight"))
            cfg.title_exact_weight = t.at("exact_weight").get<double>();
    }
    if (j.contains("layered_features"))
        cfg.layered_features = j.at("layered_features").get<std::vector<std::string>>();
    if (j.contains("layered_cbf_feature"))
        cfg.layered_cbf_feature = j.at("layered_cbf_feature").get<std::string>();
    if (j.contains("boosts")) {
        const auto& b = j.at("boosts");
        auto cats = [&](const char* key, std::vector<int>& out) {
            if (b.contains(key)) out = b.at(key).get<std::vector<int>>();
        };
        if (b.contains("k_candidates"))
            cfg.boosts.k_candidates = b.at("k_candidates").get<Index>();
        if (b.contains("gamma")) cfg.boosts.gamma = b.at("gamma").get<double>();
        if (b.contains("tail_discount"))
            cfg.boosts.tail_discount = b.at("tail_discount").get<double>();
        if (b.contains("tail_span")) cfg.boosts.tail_span = b.at("tail_span").get<Index>();
        if (b.contains("album_gamma"))
            cfg.boosts.album_gamma = b.at("album_gamma").get<double>();
        cats("gap_categories", cfg.boosts.gap_categories);
        cats("tail_categories", cfg.boosts.tail_categories);
        cats("album_categories", cfg.boosts.album_categories);
    }
    if (j.contains("objective"))
        cfg.objective = WeightObjective::from_string(j.at("objective").get<std::string>());
    if (j.contains("tune_budget")) cfg.tune_budget = j.at("tune_budget").get<int>();
    cfg.check();
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("config " + path + ": " + e.what());
    }
    return pipeline_config_from_json(j);
}

// Hand-set blend weights used when no tuned ensemble file is given. Only
// models actually built are kept; a cell that would end up empty falls back
// to the first available model so every playlist gets a recommendation.
inline EnsembleConfig default_ensemble(const std::vector<std::string>& available) {
    auto has = [&](const std::string& tag) {
        return std::find(available.begin(), available.end(), tag) != available.end();
    };
    EnsembleConfig cfg;
    for (int cat = 1; cat <= 10; ++cat) {
        const CategorySpec& spec = category_spec(cat);
        std::map<std::string, double> w;
        if (cat == 1) {
            w = {{"cbf_title", 1.0}};
        } else if (cat == 2) {
            w = {{"cf_track", 0.35},  {"cbf_track", 0.15},   {"cbf_playlist", 0.10},
                 {"cbf_title", 0.25}, {"toppop_track", 0.10}, {"toppop_album", 0.05}};
        } else {
            w = {{"cf_track", 0.40},          {"cf_playlist", 0.20},
                 {"cbf_track", 0.12},         {"cbf_playlist", 0.08},
                 {"cf_track_layered", 0.10},  {"cbf_track_layered", 0.10}};
            if (spec.titled) w["cbf_title"] = 0.10;
        }
        for (auto it = w.begin(); it != w.end();) {
            if (!has(it->first))
                it = w.erase(it);
            else
                ++it;
        }
        if (w.empty()) {
            for (const auto& tag : kAllModels) {
                if (has(tag)) {
                    w[tag] = 1.0;
                    break;
                }
            }
        }
        if (w.empty()) throw data_error("no models available for category " + std::to_string(cat));
        cfg.cells.push_back({cat, std::nullopt, std::move(w)});
    }
    cfg.normalization["default"] = NormalizeMode::per_playlist_max;
    cfg.check();
    return cfg;
}

// Everything the model builders share: the training corpus, the challenge
// set, and the combined interaction matrix whose last rows hold the visible
// parts of the challenge playlists.
struct PipelineContext {
    Dataset train;
    std::vector<ChallengeItem> items;
    std::vector<GroundTruth> truth;  // may be empty (recommend-only runs)
    CsrMatrix ptm;                   // train rows then challenge rows
    std::vector<Index> targets;      // challenge row indices in ptm
    std::vector<Index> pids;
    std::vector<std::vector<Index>> visible_cols;  // sorted, per item
    std::vector<std::optional<int>> clusters;      // ArH cluster, clustered cats only
    int threads = 1;
};

namespace detail {

template <typename Fn>
decltype(auto) pipeline_stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const data_error& e) {
        throw data_error("stage '" + name + "': " + e.what());
    } catch (const internal_error& e) {
        throw internal_error("stage '" + name + "': " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("stage '" + name + "': " + e.what());
    }
}

inline KernelParams params_for(const PipelineConfig& cfg, const std::string& tag) {
    auto it = cfg.kernels.find(tag);
    if (it != cfg.kernels.end()) return it->second;
    it = cfg.kernels.find("default");
    if (it != cfg.kernels.end()) return it->second;
    return KernelParams{};
}

inline std::vector<std::optional<std::string>> combined_titles(const PipelineContext& ctx) {
    std::vector<std::optional<std::string>> titles;
    titles.reserve(static_cast<std::size_t>(ctx.ptm.n_rows));
    for (const auto& p : ctx.train.playlists) titles.push_back(p.title);
    for (const auto& item : ctx.items) titles.push_back(item.title);
    return titles;
}

}  // namespace detail

inline PipelineContext build_context(const PipelineConfig& cfg) {
    PipelineContext ctx;
    ctx.threads = resolve_threads(cfg.threads);

    detail::pipeline_stage("load", [&] {
        Dataset full = load_dataset(cfg.dataset_path);
        if (!cfg.features_path.empty()) load_features_csv(full, cfg.features_path);
        if (!cfg.challenge_path.empty()) {
            // challenge/truth files may extend the track catalog, so load
            // them before imputing features
            ctx.items = load_challenge(cfg.challenge_path, full);
            if (!cfg.truth_path.empty()) ctx.truth = load_ground_truth(cfg.truth_path, full);
            impute_features(full);
            ctx.train = std::move(full);
        } else {
            impute_features(full);
            SplitResult split = split_challenge(full, cfg.seed, cfg.per_category);
            ctx.train = std::move(split.train);
            ctx.items = std::move(split.items);
            ctx.truth = std::move(split.truth);
        }
        if (!cfg.categories.empty()) {
            std::vector<ChallengeItem> kept_items;
            std::unordered_set<Index> kept_pids;
            for (auto& item : ctx.items) {
                if (std::find(cfg.categories.begin(), cfg.categories.end(), item.category) ==
                    cfg.categories.end())
                    continue;
                kept_pids.insert(item.pid);
                kept_items.push_back(std::move(item));
            }
            if (kept_items.empty())
                throw data_error("category filter removed every challenge playlist");
            std::vector<GroundTruth> kept_truth;
            for (auto& gt : ctx.truth)
                if (kept_pids.count(gt.pid)) kept_truth.push_back(std::move(gt));
            ctx.items = std::move(kept_items);
            ctx.truth = std::move(kept_truth);
        }
    });

    detail::pipeline_stage("matrix", [&] {
        ctx.ptm = build_ptm_with_challenge(ctx.train, ctx.items);
        const Index first = static_cast<Index>(ctx.train.playlists.size());
        ctx.targets.reserve(ctx.items.size());
        ctx.pids.reserve(ctx.items.size());
        ctx.visible_cols.reserve(ctx.items.size());
        ctx.clusters.reserve(ctx.items.size());
        for (std::size_t i = 0; i < ctx.items.size(); ++i) {
            const ChallengeItem& item = ctx.items[i];
            ctx.targets.push_back(first + static_cast<Index>(i));
            ctx.pids.push_back(item.pid);
            std::vector<Index> cols;
            cols.reserve(item.visible.size());
            for (const auto& [tid, pos] : item.visible) cols.push_back(ctx.train.col(tid));
            std::sort(cols.begin(), cols.end());
            ctx.visible_cols.push_back(std::move(cols));
            if (category_uses_clusters(item.category)) {
                std::vector<Index> ids;
                ids.reserve(item.visible.size());
                for (const auto& [tid, pos] : item.visible) ids.push_back(tid);
                ctx.clusters.push_back(arh_from_tracks(ids, ctx.train).cluster);
            } else {
                ctx.clusters.push_back(std::nullopt);
            }
        }
    });
    return ctx;
}

// Builds one model's challenge-row scores. The heavyweight intermediates
// (weighted matrices, similarity matrices) live only for the duration of the
// call so the run loop can hold a single model beside the accumulator.
inline ScoreSet build_model_scores(const std::string& tag, const PipelineConfig& cfg,
                                   const PipelineContext& ctx) {
    const KernelParams params = detail::params_for(cfg, tag);
    // predict_* labels rows by matrix row index; the pipeline speaks pids
    auto relabel = [&](ScoreSet set) {
        set.pids = ctx.pids;
        return set;
    };
    if (tag == "cf_track")
        return relabel(cf_track(ctx.ptm, params, ctx.targets, ctx.threads));
    if (tag == "cf_playlist")
        return relabel(cf_playlist(ctx.ptm, params, ctx.targets, ctx.threads));
    if (tag == "cbf_track") {
        const CsrMatrix icm = build_icm(ctx.train, cfg.feature_combo);
        return relabel(cbf_track(ctx.ptm, icm, params, ctx.targets, ctx.threads));
    }
    if (tag == "cbf_playlist") {
        const CsrMatrix icm = build_icm(ctx.train, cfg.feature_combo);
        return relabel(cbf_playlist_features(ctx.ptm, icm, params, ctx.targets, ctx.threads));
    }
    if (tag == "cbf_title") {
        const auto titles = detail::combined_titles(ctx);
        const CsrMatrix tokens = build_title_token_matrix(titles);
        std::vector<std::string> exact;
        exact.reserve(titles.size());
        for (const auto& t : titles)
            exact.push_back(t ? normalize_title_exact(*t) : std::string());
        return relabel(cbf_title(tokens, exact, ctx.ptm, params, cfg.title_token_weight,
                                 cfg.title_exact_weight, ctx.targets, ctx.threads));
    }
    if (tag == "cf_track_layered")
        return relabel(cf_track_layered(ctx.ptm, ctx.train, cfg.layered_features, params,
                                        ctx.targets, ctx.threads));
    if (tag == "cbf_track_layered")
        return relabel(cbf_track_layered(ctx.ptm, ctx.train, cfg.layered_cbf_feature, params,
                                         ctx.targets, ctx.threads));
    if (tag == "toppop_track" || tag == "toppop_album") {
        const bool album = tag == "toppop_album";
        const CsrMatrix ptm_t = ctx.ptm.transposed();
        ScoreSet out;
        out.model = tag;
        out.n_items = ctx.ptm.n_cols;
        out.pids = ctx.pids;
        out.scores.assign(ctx.items.size(),
                          std::vector<double>(static_cast<std::size_t>(ctx.ptm.n_cols), 0.0));
        out.mask = ctx.visible_cols;
        for (std::size_t i = 0; i < ctx.items.size(); ++i) {
            if (ctx.visible_cols[i].empty()) continue;
            const Index seed = ctx.train.col(ctx.items[i].visible.front().track_id);
            const ScoreSet row = album
                                     ? toppop_album(seed, ctx.ptm, ptm_t, ctx.train,
                                                    ctx.pids[i])
                                     : toppop_track(seed, ctx.ptm, ptm_t, ctx.pids[i]);
            out.scores[i] = row.scores.front();
        }
        return out;
    }
    throw std::invalid_argument("unknown model tag '" + tag + "'");
}

struct PipelineResult {
    Submission submission;
    EvalReport report;
    bool evaluated = false;
    std::filesystem::path submission_path;
    std::filesystem::path report_path;
};

inline PipelineResult run_pipeline(const PipelineConfig& cfg, bool evaluate = true) {
    cfg.check();
    PipelineContext ctx = build_context(cfg);
    const std::vector<std::string> models = cfg.model_list();

    EnsembleConfig ensemble = detail::pipeline_stage("ensemble-config", [&] {
        return cfg.ensemble_path.empty() ? default_ensemble(models)
                                         : load_ensemble_config(cfg.ensemble_path);
    });

    // cell lookup + per-model weight per challenge row
    const std::size_t n = ctx.items.size();
    std::vector<const EnsembleCell*> cells(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cat = ctx.items[i].category;
        const EnsembleCell* cell = ensemble.find(cat, ctx.clusters[i].value_or(0));
        if (!cell)
            throw data_error("stage 'ensemble-config': no ensemble cell for category " +
                             std::to_string(cat));
        cells[i] = cell;
    }

    const std::size_t n_items = static_cast<std::size_t>(ctx.ptm.n_cols);
    std::vector<std::vector<double>> blended(n, std::vector<double>(n_items, 0.0));

    detail::pipeline_stage("models", [&] {
        std::vector<double> scratch(n_items);
        for (const auto& tag : models) {
            bool used = false;
            for (std::size_t i = 0; i < n && !used; ++i) {
                auto it = cells[i]->weights.find(tag);
                used = it != cells[i]->weights.end() && it->second > 0.0;
            }
            if (!used) continue;
            const ScoreSet set = build_model_scores(tag, cfg, ctx);
            const NormalizeMode mode = ensemble.mode_for(tag);
            for (std::size_t i = 0; i < n; ++i) {
                auto it = cells[i]->weights.find(tag);
                if (it == cells[i]->weights.end() || it->second <= 0.0) continue;
                const double w = it->second;
                scratch = set.scores[i];
                detail::normalize_row(scratch, ctx.visible_cols[i], mode);
                double* acc = blended[i].data();
                const double* src = scratch.data();
                for (std::size_t c = 0; c < n_items; ++c) acc[c] += w * src[c];
            }
        }
    });

    detail::pipeline_stage("boosts", [&] {
        const bool any_gap = cfg.boosts.gamma > 0.0 && !cfg.boosts.gap_categories.empty();
        const bool any_tail = cfg.boosts.gamma > 0.0 && !cfg.boosts.tail_categories.empty();
        const bool any_album =
            cfg.boosts.album_gamma > 0.0 && !cfg.boosts.album_categories.empty();
        if (!any_gap && !any_tail && !any_album) return;

        SimilarityMatrix sim;
        if (any_gap || any_tail) {
            const KernelParams params = detail::params_for(cfg, "cbf_track");
            const CsrMatrix icm = build_icm(ctx.train, cfg.feature_combo);
            const CsrMatrix weighted = bm25_weight(icm, params.bm25_k1, params.bm25_b);
            sim = dot_similarity(weighted.transposed(), params, ctx.threads);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int cat = ctx.items[i].category;
            std::vector<SeedTrack> visible;
            visible.reserve(ctx.items[i].visible.size());
            for (const auto& [tid, pos] : ctx.items[i].visible)
                visible.push_back({ctx.train.col(tid), pos});
            if (any_gap && BoostParams::applies(cfg.boosts.gap_categories, cat))
                apply_gap_boost(blended[i], ctx.visible_cols[i], visible, sim, cfg.boosts);
            if (any_tail && BoostParams::applies(cfg.boosts.tail_categories, cat))
                apply_tail_boost(blended[i], ctx.visible_cols[i], visible, sim, cfg.boosts);
            if (any_album && BoostParams::applies(cfg.boosts.album_categories, cat))
                apply_album_boost(blended[i], visible, ctx.train, cfg.boosts);
        }
    });

    PipelineResult result;
    detail::pipeline_stage("rank", [&] {
        result.submission.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<Index> cols =
                top_n_row(blended[i], ctx.visible_cols[i], cfg.n_recommendations);
            std::vector<Index> ids;
            ids.reserve(cols.size());
            for (Index c : cols)
                ids.push_back(ctx.train.tracks[static_cast<std::size_t>(c)].track_id);
            result.submission.emplace_back(ctx.pids[i], std::move(ids));
        }
    });

    detail::pipeline_stage("write", [&] {
        std::filesystem::create_directories(cfg.out_dir);
        result.submission_path = std::filesystem::path(cfg.out_dir) / "submission.csv";
        save_submission(result.submission, result.submission_path.string());
    });

    if (evaluate && !ctx.truth.empty()) {
        detail::pipeline_stage("evaluate", [&] {
            result.report = evaluate_run(result.submission, ctx.items, ctx.truth, ctx.train);
            result.report_path = std::filesystem::path(cfg.out_dir) / "report.json";
            save_report(result.report, result.report_path.string());
            result.evaluated = true;
        });
    }
    return result;
}

// build: compute and cache per-model score files under out_dir/scores.
inline std::vector<std::filesystem::path> run_build(const PipelineConfig& cfg) {
    cfg.check();
    PipelineContext ctx = build_context(cfg);
    std::vector<std::filesystem::path> out;
    detail::pipeline_stage("models", [&] {
        const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / "scores";
        std::filesystem::create_directories(dir);
        for (const auto& tag : cfg.model_list()) {
            const ScoreSet set = build_model_scores(tag, cfg, ctx);
            const std::filesystem::path path = dir / (tag + ".jsonl");
            save_scores(set, ctx.train, path.string(), cfg.top_m);
            out.push_back(path);
        }
    });
    return out;
}

// tune: fit per-category (and per-cluster) blend weights on the split's own
// ground truth, then write the ensemble file consumed by run/recommend.
inline std::filesystem::path run_tune(const PipelineConfig& cfg) {
    cfg.check();
    PipelineContext ctx = build_context(cfg);
    if (ctx.truth.empty())
        throw data_error("stage 'tune': ground truth is required to tune weights");

    std::map<std::string, ScoreSet> sets;
    detail::pipeline_stage("models", [&] {
        const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / "scores";
        for (const auto& tag : cfg.model_list()) {
            const std::filesystem::path cached = dir / (tag + ".jsonl");
            if (std::filesystem::exists(cached)) {
                ScoreSet set = load_scores(cached.string(), ctx.train);
                if (set.model != tag)
                    throw data_error("score cache " + cached.string() +
                                     " holds model '" + set.model + "'");
                set.mask = ctx.visible_cols;
                if (set.pids != ctx.pids)
                    throw data_error("score cache " + cached.string() +
                                     " does not match the challenge split");
                sets.emplace(tag, std::move(set));
            } else {
                sets.emplace(tag, build_model_scores(tag, cfg, ctx));
            }
        }
    });

    return detail::pipeline_stage("tune", [&] {
        std::unordered_set<int> present;
        for (const auto& item : ctx.items) present.insert(item.category);
        std::map<int, std::vector<std::string>> per_category;
        const EnsembleConfig defaults = default_ensemble(cfg.model_list());
        for (const auto& cell : defaults.cells) {
            if (!present.count(cell.category)) continue;
            std::vector<std::string> tags;
            for (const auto& [tag, w] : cell.weights)
                if (w > 0.0) tags.push_back(tag);
            per_category[cell.category] = std::move(tags);
        }
        EnsembleConfig tuned = optimize_weights(
            sets, per_category, ctx.items, ctx.truth, ctx.train, cfg.objective,
            cfg.tune_budget, cfg.seed, NormalizeMode::per_playlist_max, nullptr,
            cfg.n_recommendations, cfg.top_m);
        // keep default rows for categories the split did not cover so the
        // written file drives a full run
        EnsembleConfig merged = tuned;
        for (const auto& cell : defaults.cells)
            if (!per_category.count(cell.category)) merged.cells.push_back(cell);
        merged.check();
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path path =
            cfg.ensemble_path.empty()
                ? std::filesystem::path(cfg.out_dir) / "ensemble.json"
                : std::filesystem::path(cfg.ensemble_path);
        save_ensemble_config(merged, path.string());
        return path;
    });
}

}  // namespace segue
