#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "segue/challenge.hpp"
#include "segue/common.hpp"
#include "segue/dataset.hpp"
#include "segue/kernels.hpp"
#include "segue/metrics.hpp"

namespace segue {

enum class NormalizeMode { none, per_playlist_max, per_playlist_l2 };

inline NormalizeMode normalize_mode_from_string(const std::string& s) {
    if (s == "none") return NormalizeMode::none;
    if (s == "max" || s == "per-playlist-max") return NormalizeMode::per_playlist_max;
    if (s == "l2" || s == "per-playlist-l2") return NormalizeMode::per_playlist_l2;
    throw std::invalid_argument("unknown normalization mode: " + s);
}

inline std::string to_string(NormalizeMode m) {
    switch (m) {
        case NormalizeMode::none: return "none";
        case NormalizeMode::per_playlist_max: return "max";
        case NormalizeMode::per_playlist_l2: return "l2";
    }
    throw internal_error("unreachable normalization mode");
}

namespace detail {

// Scale the unmasked entries of one row in place; masked entries keep their
// raw values (they never reach a ranking anyway).
inline void normalize_row(std::vector<double>& row, std::span<const Index> masked,
                          NormalizeMode mode) {
    if (mode == NormalizeMode::none) return;
    double stat = 0.0;
    std::size_t mi = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        while (mi < masked.size() && static_cast<std::size_t>(masked[mi]) < i) ++mi;
        if (mi < masked.size() && static_cast<std::size_t>(masked[mi]) == i) continue;
        if (mode == NormalizeMode::per_playlist_max)
            stat = std::max(stat, row[i]);
        else
            stat += row[i] * row[i];
    }
    if (mode == NormalizeMode::per_playlist_l2) stat = std::sqrt(stat);
    if (stat <= 0.0) return;  // all-zero rows pass through
    mi = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        while (mi < masked.size() && static_cast<std::size_t>(masked[mi]) < i) ++mi;
        if (mi < masked.size() && static_cast<std::size_t>(masked[mi]) == i) continue;
        row[i] /= stat;
    }
}

inline std::vector<Index> merge_masks(std::span<const Index> a, std::span<const Index> b) {
    std::vector<Index> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

inline ScoreSet normalize_scores(const ScoreSet& s, NormalizeMode mode) {
    ScoreSet out = s;
    for (std::size_t r = 0; r < out.size(); ++r)
        detail::normalize_row(out.scores[r], out.mask[r], mode);
    return out;
}

// Weighted sum of per-model scores, each model normalized first; masks union.
// All sets must cover the same playlists in the same order.
inline ScoreSet blend(std::span<const ScoreSet> sets, std::span<const double> weights,
                      std::span<const NormalizeMode> modes = {}) {
    if (sets.empty()) throw std::invalid_argument("blend: no score sets");
    if (weights.size() != sets.size())
        throw std::invalid_argument("blend: weights length must match score sets");
    if (!modes.empty() && modes.size() != sets.size())
        throw std::invalid_argument("blend: modes length must match score sets");
    for (double w : weights)
        if (!(w >= 0.0)) throw std::invalid_argument("blend: weights must be >= 0");
    const ScoreSet& first = sets.front();
    for (const auto& s : sets) {
        if (s.pids != first.pids)
            throw data_error("blend: score sets cover different playlists");
        if (s.n_items != first.n_items)
            throw data_error("blend: score sets have different item counts");
    }

    ScoreSet out;
    out.model = "blend";
    out.n_items = first.n_items;
    out.pids = first.pids;
    out.scores.assign(first.size(),
                      std::vector<double>(static_cast<std::size_t>(first.n_items), 0.0));
    out.mask.resize(first.size());
    for (std::size_t r = 0; r < first.size(); ++r) {
        std::vector<Index> mask;
        for (const auto& s : sets) mask = detail::merge_masks(mask, s.mask[r]);
        out.mask[r] = std::move(mask);
    }
    for (std::size_t m = 0; m < sets.size(); ++m) {
        if (weights[m] == 0.0) continue;
        const NormalizeMode mode = modes.empty() ? NormalizeMode::per_playlist_max : modes[m];
        for (std::size_t r = 0; r < first.size(); ++r) {
            std::vector<double> row = sets[m].scores[r];
            detail::normalize_row(row, sets[m].mask[r], mode);
            auto& acc = out.scores[r];
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weights[m] * row[i];
        }
    }
    return out;
}

struct EnsembleCell {
    int category = 1;
    std::optional<int> cluster;             // only categories 4,5,6,8,10 carry cluster rows
    std::map<std::string, double> weights;  // model tag -> weight
};

inline constexpr std::array<int, 5> kClusteredCategories = {4, 5, 6, 8, 10};

inline bool category_uses_clusters(int category) {
    return std::find(kClusteredCategories.begin(), kClusteredCategories.end(), category) !=
           kClusteredCategories.end();
}

struct EnsembleConfig {
    std::vector<EnsembleCell> cells;
    std::map<std::string, NormalizeMode> normalization;  // "default" plus per-model overrides

    NormalizeMode mode_for(const std::string& tag) const {
        auto it = normalization.find(tag);
        if (it != normalization.end()) return it->second;
        it = normalization.find("default");
        if (it != normalization.end()) return it->second;
        return NormalizeMode::per_playlist_max;
    }

    void check() const {
        std::map<std::pair<int, int>, int> seen;
        for (const auto& cell : cells) {
            if (cell.category < 1 || cell.category > 10)
                throw data_error("ensemble cell: category " + std::to_string(cell.category) +
                                 " outside 1..10");
            if (cell.cluster) {
                if (!category_uses_clusters(cell.category))
                    throw data_error("ensemble cell: category " + std::to_string(cell.category) +
                                     " does not take cluster rows");
                if (*cell.cluster < 1 || *cell.cluster > 4)
                    throw data_error("ensemble cell: cluster " + std::to_string(*cell.cluster) +
                                     " outside 1..4");
            }
            bool any_positive = false;
            for (const auto& [tag, w] : cell.weights) {
                if (!(w >= 0.0) || !std::isfinite(w))
                    throw data_error("ensemble cell: weight for " + tag + " must be >= 0");
                if (w > 0.0) any_positive = true;
            }
            if (!any_positive)
                throw data_error("ensemble cell (category " + std::to_string(cell.category) +
                                 "): needs at least one positive weight");
            const std::pair<int, int> key{cell.category, cell.cluster.value_or(0)};
            if (++seen[key] > 1)
                throw data_error("ensemble config: duplicate cell for category " +
                                 std::to_string(cell.category));
        }
    }

    // Cluster-specific row when the category supports one and it exists,
    // otherwise the category-wide row. Null when neither is configured.
    const EnsembleCell* find(int category, int cluster) const {
        const EnsembleCell* fallback = nullptr;
        for (const auto& cell : cells) {
            if (cell.category != category) continue;
            if (cell.cluster) {
                if (category_uses_clusters(category) && *cell.cluster == cluster) return &cell;
            } else {
                fallback = &cell;
            }
        }
        return fallback;
    }
};

// Blends one playlist's per-model score rows with the weight row selected by
// its category and ArH cluster.
inline ScoreSet blend_for_playlist(int category, int cluster, const EnsembleConfig& config,
                                   const std::map<std::string, ScoreSet>& models) {
    const EnsembleCell* cell = config.find(category, cluster);
    if (!cell)
        throw data_error("no ensemble weights for category " + std::to_string(category) +
                         (category_uses_clusters(category)
                              ? " cluster " + std::to_string(cluster)
                              : ""));
    std::vector<ScoreSet> sets;
    std::vector<double> weights;
    std::vector<NormalizeMode> modes;
    for (const auto& [tag, w] : cell->weights) {
        if (w == 0.0) continue;
        auto it = models.find(tag);
        if (it == models.end())
            throw data_error("ensemble references missing model \"" + tag + "\"");
        sets.push_back(it->second);
        weights.push_back(w);
        modes.push_back(config.mode_for(tag));
    }
    if (sets.empty())
        throw data_error("ensemble cell for category " + std::to_string(category) +
                         " selects no models");
    return blend(sets, weights, modes);
}

inline EnsembleConfig ensemble_config_from_json(const nlohmann::json& j) {
    EnsembleConfig cfg;
    if (!j.is_object() || !j.contains("cells") || !j["cells"].is_array())
        throw data_error("ensemble config: missing \"cells\" array");
    for (const auto& c : j["cells"]) {
        EnsembleCell cell;
        if (!c.contains("category") || !c["category"].is_number_integer())
            throw data_error("ensemble config: cell missing \"category\"");
        cell.category = c["category"].get<int>();
        if (c.contains("cluster") && !c["cluster"].is_null())
            cell.cluster = c["cluster"].get<int>();
        if (!c.contains("weights") || !c["weights"].is_object())
            throw data_error("ensemble config: cell missing \"weights\"");
        for (const auto& [tag, w] : c["weights"].items()) {
            if (!w.is_number()) throw data_error("ensemble config: weight for " + tag +
                                                 " must be a number");
            cell.weights[tag] = w.get<double>();
        }
        cfg.cells.push_back(std::move(cell));
    }
    if (j.contains("normalization")) {
        if (!j["normalization"].is_object())
            throw data_error("ensemble config: \"normalization\" must be an object");
        for (const auto& [tag, mode] : j["normalization"].items())
            cfg.normalization[tag] = normalize_mode_from_string(mode.get<std::string>());
    }
    cfg.check();
    return cfg;
}

inline nlohmann::json ensemble_config_to_json(const EnsembleConfig& cfg) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : cfg.cells) {
        nlohmann::json c;
        c["category"] = cell.category;
        if (cell.cluster)
            c["cluster"] = *cell.cluster;
        else
            c["cluster"] = nullptr;
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [tag, weight] : cell.weights) w[tag] = weight;
        c["weights"] = std::move(w);
        cells.push_back(std::move(c));
    }
    nlohmann::json norm = nlohmann::json::object();
    for (const auto& [tag, mode] : cfg.normalization) norm[tag] = to_string(mode);
    return nlohmann::json{{"cells", std::move(cells)}, {"normalization", std::move(norm)}};
}

inline EnsembleConfig load_ensemble_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open ensemble config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path + ": malformed JSON: " + e.what());
    }
    return ensemble_config_from_json(j);
}

inline void save_ensemble_config(const EnsembleConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << ensemble_config_to_json(cfg).dump(2) << '\n';
    if (!out) throw data_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Weight search

// score = wr * r_precision + wn * ndcg - wc * clicks
struct WeightObjective {
    double w_r_precision = 0.0;
    double w_ndcg = 1.0;
    double w_clicks = 0.0;

    static WeightObjective from_string(const std::string& s) {
        if (s == "r-precision" || s == "r_precision") return {1.0, 0.0, 0.0};
        if (s == "ndcg") return {0.0, 1.0, 0.0};
        if (s == "clicks") return {0.0, 0.0, 1.0};
        if (s == "combined") return {1.0, 1.0, 1.0 / static_cast<double>(kClicksMiss)};
        throw std::invalid_argument("unknown objective: " + s);
    }

    double value(double rp, double nd, double cl) const {
        return w_r_precision * rp + w_ndcg * nd - w_clicks * cl;
    }
};

// A strategy proposes weight vectors one at a time and may learn from the
// observed objective values; iteration 0 is always the uniform baseline and
// never reaches the strategy.
class WeightSearchStrategy {
public:
    virtual ~WeightSearchStrategy() = default;
    virtual std::vector<double> ask(std::size_t n_models, std::mt19937_64& rng) = 0;
    virtual void tell(std::span<const double> /*weights*/, double /*objective*/) {}
};

// Uniform sampling of the weight simplex (normalized exponential draws).
class RandomSimplexSearch final : public WeightSearchStrategy {
public:
    std::vector<double> ask(std::size_t n_models, std::mt19937_64& rng) override {
        std::vector<double> w(n_models);
        double sum = 0.0;
        for (auto& v : w) {
            const double u =
                (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
            v = -std::log(u);
            sum += v;
        }
        for (auto& v : w) v /= sum;
        return w;
    }
};

namespace detail {

struct SparseScoreRow {
    std::vector<Index> cols;
    std::vector<double> vals;
};

// Truncated, pre-normalized view of one model's scores for the optimizer.
inline SparseScoreRow sparsify_row(const std::vector<double>& row, std::span<const Index> masked,
                                   NormalizeMode mode, Index top_m) {
    std::vector<double> scratch = row;
    normalize_row(scratch, masked, mode);
    SparseScoreRow out;
    for (Index c : top_n_row(scratch, masked, top_m)) {
        const double v = scratch[static_cast<std::size_t>(c)];
        if (v == 0.0) break;
        out.cols.push_back(c);
        out.vals.push_back(v);
    }
    return out;
}

}  // namespace detail

// Per-(category, cluster) random search over blend weights. Evaluates each
// candidate by blending the models' truncated top lists, ranking, and scoring
// against the validation ground truth; keeps the best seen, starting from the
// uniform baseline. Clustered categories get one row per populated cluster
// plus a category-wide fallback row.
inline EnsembleConfig optimize_weights(
    const std::map<std::string, ScoreSet>& models,
    const std::map<int, std::vector<std::string>>& models_per_category,
    const std::vector<ChallengeItem>& items, const std::vector<GroundTruth>& truth,
    const Dataset& ds, const WeightObjective& objective, int budget, std::uint64_t seed,
    NormalizeMode mode = NormalizeMode::per_playlist_max, WeightSearchStrategy* strategy = nullptr,
    Index n_recommendations = 500, Index top_m = 1000) {
    if (budget < 1) throw std::invalid_argument("optimize_weights: budget must be >= 1");
    RandomSimplexSearch default_strategy;
    if (!strategy) strategy = &default_strategy;

    std::unordered_map<Index, const GroundTruth*> truth_of;
    for (const auto& gt : truth) truth_of.emplace(gt.pid, &gt);
    std::unordered_map<std::string, std::unordered_map<Index, std::size_t>> row_of;
    for (const auto& [tag, s] : models)
        for (std::size_t r = 0; r < s.pids.size(); ++r) row_of[tag].emplace(s.pids[r], r);

    struct CellTask {
        int category;
        std::optional<int> cluster;
        std::vector<std::size_t> item_ix;
    };
    std::vector<CellTask> tasks;
    std::vector<int> item_cluster(items.size(), 0);
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!items[i].visible.empty()) {
            std::vector<Index> ids;
            ids.reserve(items[i].visible.size());
            for (const auto& tr : items[i].visible) ids.push_back(tr.track_id);
            item_cluster[i] = arh_from_tracks(ids, ds).cluster;
        }
    }
    for (int cat = 1; cat <= 10; ++cat) {
        std::vector<std::size_t> in_cat;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i].category == cat) in_cat.push_back(i);
        if (in_cat.empty()) {
            if (models_per_category.count(cat))
                throw data_error("optimize_weights: no validation playlists in category " +
                                 std::to_string(cat));
            continue;
        }
        tasks.push_back({cat, std::nullopt, in_cat});
        if (category_uses_clusters(cat)) {
            for (int cl = 1; cl <= 4; ++cl) {
                std::vector<std::size_t> in_cluster;
                for (std::size_t i : in_cat)
                    if (item_cluster[i] == cl) in_cluster.push_back(i);
                if (!in_cluster.empty()) tasks.push_back({cat, cl, in_cluster});
            }
        }
    }

    EnsembleConfig out;
    out.normalization["default"] = mode;
    const std::size_t n_items = static_cast<std::size_t>(ds.n_tracks());
    std::vector<double> dense(n_items, 0.0);

    for (const auto& task : tasks) {
        auto mit = models_per_category.find(task.category);
        if (mit == models_per_category.end()) continue;
        const std::vector<std::string>& tags = mit->second;
        if (tags.empty())
            throw data_error("optimize_weights: category " + std::to_string(task.category) +
                             " lists no models");
        for (const auto& tag : tags)
            if (!models.count(tag))
                throw data_error("optimize_weights: missing model \"" + tag + "\"");

        // Pre-normalized truncated rows, one per (model, playlist in cell).
        std::vector<std::vector<detail::SparseScoreRow>> rows(tags.size());
        std::vector<std::vector<Index>> masks;
        std::vector<const GroundTruth*> gts;
        for (std::size_t t = 0; t < tags.size(); ++t) {
            const ScoreSet& s = models.at(tags[t]);
            for (std::size_t ix : task.item_ix) {
                const Index pid = items[ix].pid;
                auto rit = row_of[tags[t]].find(pid);
                if (rit == row_of[tags[t]].end())
                    throw data_error("optimize_weights: model \"" + tags[t] +
                                     "\" has no scores for pid " + std::to_string(pid));
                rows[t].push_back(
                    detail::sparsify_row(s.scores[rit->second], s.mask[rit->second], mode, top_m));
                if (t == 0) {
                    masks.push_back(s.mask[rit->second]);
                    auto git = truth_of.find(pid);
                    if (git == truth_of.end())
                        throw data_error("optimize_weights: no ground truth for pid " +
                                         std::to_string(pid));
                    gts.push_back(git->second);
                }
            }
        }

        auto evaluate = [&](std::span<const double> w) {
            double total = 0.0;
            std::vector<Index> rec_ids;
            for (std::size_t p = 0; p < task.item_ix.size(); ++p) {
                std::vector<Index> touched;
                for (std::size_t t = 0; t < tags.size(); ++t) {
                    if (w[t] == 0.0) continue;
                    const auto& row = rows[t][p];
                    for (std::size_t k = 0; k < row.cols.size(); ++k) {
                        const auto c = static_cast<std::size_t>(row.cols[k]);
                        if (dense[c] == 0.0) touched.push_back(row.cols[k]);
                        dense[c] += w[t] * row.vals[k];
                    }
                }
                const auto top = top_n_row(dense, masks[p], n_recommendations);
                rec_ids.clear();
                for (Index c : top) {
                    if (dense[static_cast<std::size_t>(c)] == 0.0) break;
                    rec_ids.push_back(ds.tracks[static_cast<std::size_t>(c)].track_id);
                }
                for (Index c : touched) dense[static_cast<std::size_t>(c)] = 0.0;
                const auto& hidden = gts[p]->hidden;
                total += objective.value(r_precision(rec_ids, hidden, ds), ndcg(rec_ids, hidden),
                                         clicks(rec_ids, hidden));
            }
            return total / static_cast<double>(task.item_ix.size());
        };

        std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(task.category * 8 +
                                                               task.cluster.value_or(0)) *
                                    0x9e3779b97f4a7c15ULL));
        std::vector<double> best_w(tags.size(), 1.0 / static_cast<double>(tags.size()));
        double best = evaluate(best_w);
        for (int it = 1; it < budget; ++it) {
            std::vector<double> w = tags.size() == 1 ? best_w : strategy->ask(tags.size(), rng);
            const double v = evaluate(w);
            strategy->tell(w, v);
            if (v > best) {
                best = v;
                best_w = std::move(w);
            }
        }

        EnsembleCell cell;
        cell.category = task.category;
        cell.cluster = task.cluster;
        for (std::size_t t = 0; t < tags.size(); ++t) cell.weights[tags[t]] = best_w[t];
        out.cells.push_back(std::move(cell));
    }
    out.check();
    return out;
}

}  // namespace segue
