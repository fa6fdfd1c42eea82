#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "segue/common.hpp"
#include "segue/dataset.hpp"
#include "segue/kernels.hpp"

namespace segue {

struct BoostParams {
    Index k_candidates = 100;    // gap and tail touch only the current top K
    double gamma = 0.0;          // gap/tail magnitude; 0 disables
    double tail_discount = 0.85; // per-step decay walking back from the tail
    Index tail_span = 3;         // how many tail tracks contribute
    double album_gamma = 0.0;    // album-run magnitude; 0 disables
    std::vector<int> gap_categories{8, 10};
    std::vector<int> tail_categories{5, 6, 7, 9};
    std::vector<int> album_categories{3, 4, 7, 9};

    void check() const {
        if (k_candidates < 0) throw std::invalid_argument("k_candidates must be >= 0");
        if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
        if (!(tail_discount > 0.0 && tail_discount <= 1.0))
            throw std::invalid_argument("tail_discount must be in (0,1]");
        if (tail_span < 0) throw std::invalid_argument("tail_span must be >= 0");
        if (!(album_gamma >= 0.0)) throw std::invalid_argument("album_gamma must be >= 0");
        auto check_cats = [](const std::vector<int>& cats, const char* name) {
            for (int c : cats)
                if (c < 1 || c > 10)
                    throw std::invalid_argument(std::string(name) + ": category outside 1..10");
        };
        check_cats(gap_categories, "gap_categories");
        check_cats(tail_categories, "tail_categories");
        check_cats(album_categories, "album_categories");
    }

    static bool applies(const std::vector<int>& cats, int category) {
        return std::find(cats.begin(), cats.end(), category) != cats.end();
    }
};

// Visible track in matrix coordinates: column index plus original playlist
// position.
struct SeedTrack {
    Index col = 0;
    Index pos = 0;
};

// Between each pair of consecutive visible tracks lies a gap; a candidate
// similar to both ends of a narrow gap likely belongs inside it. Adds
// gamma * sum over gaps of S(k, left) * S(k, right) / gap_width to the
// current top-K candidates.
inline void apply_gap_boost(std::span<double> scores, std::span<const Index> masked,
                            std::span<const SeedTrack> visible, const SimilarityMatrix& S,
                            const BoostParams& params) {
    if (params.gamma == 0.0 || visible.size() < 2 || params.k_candidates < 1) return;
    const auto top = top_n_row(scores, masked, params.k_candidates);
    for (Index k : top) {
        double boost = 0.0;
        for (std::size_t g = 0; g + 1 < visible.size(); ++g) {
            const SeedTrack& left = visible[g];
            const SeedTrack& right = visible[g + 1];
            const double d = static_cast<double>(right.pos - left.pos);
            if (d <= 0.0) throw std::invalid_argument("gap_boost: positions must increase");
            const double sl = S.sym_value(k, left.col);
            if (sl == 0.0) continue;
            const double sr = S.sym_value(k, right.col);
            if (sr == 0.0) continue;
            boost += sl * sr / d;
        }
        scores[static_cast<std::size_t>(k)] += params.gamma * boost;
    }
}

// Pushes candidates that resemble the most recent visible tracks: the last
// track counts fully, each step back is discounted.
inline void apply_tail_boost(std::span<double> scores, std::span<const Index> masked,
                             std::span<const SeedTrack> visible, const SimilarityMatrix& S,
                             const BoostParams& params) {
    if (params.gamma == 0.0 || visible.empty() || params.tail_span < 1 ||
        params.k_candidates < 1)
        return;
    const std::size_t span = std::min(static_cast<std::size_t>(params.tail_span), visible.size());
    const auto top = top_n_row(scores, masked, params.k_candidates);
    for (Index k : top) {
        double boost = 0.0;
        double discount = 1.0;
        for (std::size_t j = 1; j <= span; ++j) {
            boost += discount * S.sym_value(k, visible[visible.size() - j].col);
            discount *= params.tail_discount;
        }
        scores[static_cast<std::size_t>(k)] += params.gamma * boost;
    }
}

// When the playlist ends inside an album run, favor the rest of that album.
// Unseen album tracks gain album_gamma * (m - i) / m in ascending-track-id
// order, the stand-in for album position.
inline void apply_album_boost(std::span<double> scores, std::span<const SeedTrack> visible,
                              const Dataset& ds, const BoostParams& params) {
    if (params.album_gamma == 0.0 || visible.size() < 2) return;
    const Index last = visible[visible.size() - 1].col;
    const Index prev = visible[visible.size() - 2].col;
    const Index album = ds.tracks[static_cast<std::size_t>(last)].album_id;
    if (ds.tracks[static_cast<std::size_t>(prev)].album_id != album) return;

    std::vector<bool> seen(scores.size(), false);
    for (const auto& v : visible) seen[static_cast<std::size_t>(v.col)] = true;
    std::vector<Index> unseen;
    for (std::size_t c = 0; c < ds.tracks.size(); ++c)
        if (ds.tracks[c].album_id == album && !seen[c]) unseen.push_back(static_cast<Index>(c));
    // columns are in ascending track_id order already
    const double m = static_cast<double>(unseen.size());
    for (std::size_t i = 0; i < unseen.size(); ++i)
        scores[static_cast<std::size_t>(unseen[i])] +=
            params.album_gamma * (m - static_cast<double>(i)) / m;
}

namespace detail {

inline void check_boost_shape(const ScoreSet& prediction,
                              std::span<const std::vector<SeedTrack>> visible) {
    if (visible.size() != prediction.size())
        throw std::invalid_argument("boost: one visible list per playlist required");
}

}  // namespace detail

inline ScoreSet gap_boost(const ScoreSet& prediction,
                          std::span<const std::vector<SeedTrack>> visible,
                          const SimilarityMatrix& S, const BoostParams& params) {
    params.check();
    detail::check_boost_shape(prediction, visible);
    ScoreSet out = prediction;
    for (std::size_t r = 0; r < out.size(); ++r)
        apply_gap_boost(out.scores[r], out.mask[r], visible[r], S, params);
    return out;
}

inline ScoreSet tail_boost(const ScoreSet& prediction,
                           std::span<const std::vector<SeedTrack>> visible,
                           const SimilarityMatrix& S, const BoostParams& params) {
    params.check();
    detail::check_boost_shape(prediction, visible);
    ScoreSet out = prediction;
    for (std::size_t r = 0; r < out.size(); ++r)
        apply_tail_boost(out.scores[r], out.mask[r], visible[r], S, params);
    return out;
}

inline ScoreSet album_boost(const ScoreSet& prediction,
                            std::span<const std::vector<SeedTrack>> visible, const Dataset& ds,
                            const BoostParams& params) {
    params.check();
    detail::check_boost_shape(prediction, visible);
    if (prediction.n_items != ds.n_tracks())
        throw std::invalid_argument("album_boost: score width does not match track table");
    ScoreSet out = prediction;
    for (std::size_t r = 0; r < out.size(); ++r)
        apply_album_boost(out.scores[r], visible[r], ds, params);
    return out;
}

}  // namespace segue
