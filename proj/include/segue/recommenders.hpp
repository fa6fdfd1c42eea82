#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "segue/common.hpp"
#include "segue/dataset.hpp"
#include "segue/kernels.hpp"
#include "segue/sparse.hpp"
#include "segue/titles.hpp"

namespace segue {

// ---------------------------------------------------------------------------
// Seed-track popularity models

// score(i) = number of playlists that contain both the seed and track i.
// ptm_t is the transposed PTM (track rows); the seed itself is masked.
inline ScoreSet toppop_track(Index seed_col, const CsrMatrix& ptm, const CsrMatrix& ptm_t,
                             Index pid = 0) {
    if (seed_col < 0 || seed_col >= ptm.n_cols)
        throw std::out_of_range("toppop_track: seed column " + std::to_string(seed_col));
    ScoreSet out;
    out.model = "toppop_track";
    out.n_items = ptm.n_cols;
    out.pids = {pid};
    out.scores.emplace_back(static_cast<std::size_t>(ptm.n_cols), 0.0);
    out.mask.push_back({seed_col});
    auto& row = out.scores.front();
    for (Index p : ptm_t.row_indices(seed_col))
        for (Index i : ptm.row_indices(p)) row[static_cast<std::size_t>(i)] += 1.0;
    row[static_cast<std::size_t>(seed_col)] = 0.0;
    return out;
}

inline ScoreSet toppop_track(Index seed_col, const CsrMatrix& ptm, Index pid = 0) {
    return toppop_track(seed_col, ptm, ptm.transposed(), pid);
}

// Same counting, but the selecting playlists are those containing any track
// from the seed's album.
inline ScoreSet toppop_album(Index seed_col, const CsrMatrix& ptm, const CsrMatrix& ptm_t,
                             const Dataset& ds, Index pid = 0) {
    if (seed_col < 0 || seed_col >= ptm.n_cols)
        throw std::out_of_range("toppop_album: seed column " + std::to_string(seed_col));
    if (ptm.n_cols != ds.n_tracks())
        throw std::invalid_argument("toppop_album: ptm columns do not match track table");
    const Index album = ds.tracks[static_cast<std::size_t>(seed_col)].album_id;
    std::unordered_set<Index> selected;
    for (std::size_t c = 0; c < ds.tracks.size(); ++c) {
        if (ds.tracks[c].album_id != album) continue;
        for (Index p : ptm_t.row_indices(static_cast<Index>(c))) selected.insert(p);
    }
    ScoreSet out;
    out.model = "toppop_album";
    out.n_items = ptm.n_cols;
    out.pids = {pid};
    out.scores.emplace_back(static_cast<std::size_t>(ptm.n_cols), 0.0);
    out.mask.push_back({seed_col});
    auto& row = out.scores.front();
    for (Index p : selected)
        for (Index i : ptm.row_indices(p)) row[static_cast<std::size_t>(i)] += 1.0;
    row[static_cast<std::size_t>(seed_col)] = 0.0;
    return out;
}

inline ScoreSet toppop_album(Index seed_col, const CsrMatrix& ptm, const Dataset& ds,
                             Index pid = 0) {
    return toppop_album(seed_col, ptm, ptm.transposed(), ds, pid);
}

// ---------------------------------------------------------------------------
// Collaborative filtering

// Item-based CF: BM25-weighted co-occurrence similarity between track
// columns, predictions summed over the playlist's known tracks.
inline ScoreSet cf_track(const CsrMatrix& ptm, const KernelParams& params,
                         std::span<const Index> targets, int threads = 1,
                         std::string tag = "cf_track") {
    const CsrMatrix weighted = bm25_weight(ptm, params.bm25_k1, params.bm25_b);
    const SimilarityMatrix sim = dot_similarity(weighted, params, threads);
    return predict_item_based(ptm, sim, targets, threads, std::move(tag));
}

// Playlist-based CF: Tversky similarity between playlist rows, predictions
// summed over similar playlists.
inline ScoreSet cf_playlist(const CsrMatrix& ptm, const KernelParams& params,
                            std::span<const Index> targets, int threads = 1,
                            std::string tag = "cf_playlist") {
    const SimilarityMatrix sim = tversky_similarity(ptm, params, threads);
    return predict_user_based(ptm, sim, targets, threads, std::move(tag));
}

// ---------------------------------------------------------------------------
// Content-based filtering

enum class FeatureSelector { artist, album, album_artist };

struct FeatureCombo {
    FeatureSelector selector = FeatureSelector::album_artist;
    double album_weight = 2.0;
    double artist_weight = 1.0;

    void check() const {
        if (!(album_weight > 0.0)) throw std::invalid_argument("album_weight must be > 0");
        if (!(artist_weight > 0.0)) throw std::invalid_argument("artist_weight must be > 0");
    }
};

inline FeatureSelector feature_selector_from_string(const std::string& s) {
    if (s == "artist") return FeatureSelector::artist;
    if (s == "album") return FeatureSelector::album;
    if (s == "album_artist" || s == "album+artist") return FeatureSelector::album_artist;
    throw std::invalid_argument("unknown feature selector: " + s);
}

// One-hot track-content matrix over album and/or artist ids. In combined mode
// album columns come first and each side carries its configured weight;
// single-selector matrices are plain 0/1.
inline CsrMatrix build_icm(const Dataset& ds, const FeatureCombo& combo) {
    combo.check();
    std::vector<Index> albums, artists;
    albums.reserve(ds.tracks.size());
    artists.reserve(ds.tracks.size());
    for (const auto& t : ds.tracks) {
        albums.push_back(t.album_id);
        artists.push_back(t.artist_id);
    }
    auto dense_map = [](std::vector<Index> ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        std::unordered_map<Index, Index> m;
        m.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], static_cast<Index>(i));
        return m;
    };

    std::vector<Triplet> entries;
    Index n_cols = 0;
    const bool use_album = combo.selector != FeatureSelector::artist;
    const bool use_artist = combo.selector != FeatureSelector::album;
    const bool combined = combo.selector == FeatureSelector::album_artist;
    std::unordered_map<Index, Index> album_col, artist_col;
    if (use_album) {
        album_col = dense_map(albums);
        n_cols += static_cast<Index>(album_col.size());
    }
    if (use_artist) artist_col = dense_map(artists);
    const Index artist_base = n_cols;
    if (use_artist) n_cols += static_cast<Index>(artist_col.size());

    for (std::size_t r = 0; r < ds.tracks.size(); ++r) {
        const Track& t = ds.tracks[r];
        if (use_album)
            entries.push_back({static_cast<Index>(r), album_col.at(t.album_id),
                               combined ? combo.album_weight : 1.0});
        if (use_artist)
            entries.push_back({static_cast<Index>(r), artist_base + artist_col.at(t.artist_id),
                               combined ? combo.artist_weight : 1.0});
    }
    return CsrMatrix::from_triplets(static_cast<Index>(ds.tracks.size()), n_cols,
                                    std::move(entries), DupPolicy::sum);
}

// Track CBF: BM25-weighted content rows, dot similarity between tracks,
// item-based prediction.
inline ScoreSet cbf_track(const CsrMatrix& ptm, const CsrMatrix& icm, const KernelParams& params,
                          std::span<const Index> targets, int threads = 1,
                          std::string tag = "cbf_track") {
    if (icm.n_rows != ptm.n_cols)
        throw std::invalid_argument("cbf_track: icm rows must match ptm columns");
    const CsrMatrix weighted = bm25_weight(icm, params.bm25_k1, params.bm25_b);
    const SimilarityMatrix sim = dot_similarity(weighted.transposed(), params, threads);
    return predict_item_based(ptm, sim, targets, threads, std::move(tag));
}

// Playlist CBF over aggregated content: playlists are represented by the
// summed features of their tracks, compared with Tversky.
inline ScoreSet cbf_playlist_features(const CsrMatrix& ptm, const CsrMatrix& icm,
                                      const KernelParams& params, std::span<const Index> targets,
                                      int threads = 1, std::string tag = "cbf_playlist") {
    if (icm.n_rows != ptm.n_cols)
        throw std::invalid_argument("cbf_playlist_features: icm rows must match ptm columns");
    const CsrMatrix pcm = matmul(ptm, icm, threads);
    const CsrMatrix weighted = bm25_weight(pcm, params.bm25_k1, params.bm25_b);
    const SimilarityMatrix sim = tversky_similarity(weighted, params, threads);
    return predict_user_based(ptm, sim, targets, threads, std::move(tag));
}

// ---------------------------------------------------------------------------
// Title models

// Binary playlist-token matrix over the tokenized titles; the token
// vocabulary is sorted for a stable column order.
inline CsrMatrix build_title_token_matrix(std::span<const std::optional<std::string>> titles) {
    std::vector<std::vector<std::string>> tokens(titles.size());
    std::vector<std::string> vocab;
    for (std::size_t r = 0; r < titles.size(); ++r) {
        if (!titles[r]) continue;
        tokens[r] = tokenize_title(*titles[r]);
        for (const auto& t : tokens[r]) vocab.push_back(t);
    }
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    std::unordered_map<std::string_view, Index> col;
    col.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) col.emplace(vocab[i], static_cast<Index>(i));

    std::vector<Triplet> entries;
    for (std::size_t r = 0; r < tokens.size(); ++r)
        for (const auto& t : tokens[r])
            entries.push_back({static_cast<Index>(r), col.at(t), 1.0});
    return CsrMatrix::from_triplets(static_cast<Index>(titles.size()),
                                    static_cast<Index>(vocab.size()), std::move(entries),
                                    DupPolicy::max);
}

// Two title signals: Tversky similarity over title tokens, and top-popular
// counting over playlists whose normalized titles match exactly. Playlists
// without usable tokens fall back to the exact component alone; empty titles
// never exact-match each other.
inline ScoreSet cbf_title(const CsrMatrix& token_matrix,
                          std::span<const std::string> exact_titles, const CsrMatrix& ptm,
                          const KernelParams& params, double w_tokens, double w_exact,
                          std::span<const Index> targets, int threads = 1,
                          std::string tag = "cbf_title") {
    if (token_matrix.n_rows != ptm.n_rows)
        throw std::invalid_argument("cbf_title: token matrix rows must match ptm rows");
    if (static_cast<Index>(exact_titles.size()) != ptm.n_rows)
        throw std::invalid_argument("cbf_title: exact_titles size must match ptm rows");

    const SimilarityMatrix sim = tversky_similarity(token_matrix, params, threads);
    ScoreSet out = predict_user_based(ptm, sim, targets, threads, std::move(tag));

    std::unordered_map<std::string_view, std::vector<Index>> by_title;
    for (Index r = 0; r < ptm.n_rows; ++r) {
        const auto& t = exact_titles[static_cast<std::size_t>(r)];
        if (!t.empty()) by_title[t].push_back(r);
    }

    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        auto& row = out.scores[ti];
        if (w_tokens != 1.0)
            for (auto& v : row) v *= w_tokens;
        const Index u = targets[ti];
        const auto& title = exact_titles[static_cast<std::size_t>(u)];
        if (w_exact == 0.0 || title.empty()) continue;
        auto it = by_title.find(std::string_view(title));
        if (it == by_title.end()) continue;
        for (Index v : it->second) {
            if (v == u) continue;
            for (Index i : ptm.row_indices(v)) row[static_cast<std::size_t>(i)] += w_exact;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layered (sub-feature-level) variants

// Equal-count quartiles over the values, earlier clusters absorbing the
// remainder; ties broken by element index.
inline std::vector<int> quartile_cluster(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("quartile_cluster: empty value list");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    const std::size_t base = n / 4, rem = n % 4;
    std::vector<int> clusters(n, 0);
    std::size_t at = 0;
    for (int c = 1; c <= 4; ++c) {
        const std::size_t size = base + (static_cast<std::size_t>(c) <= rem ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) clusters[order[at++]] = c;
    }
    return clusters;
}

struct LayeredMatrix {
    static constexpr int kLayers = 4;
    CsrMatrix matrix;             // width = kLayers * base width
    std::vector<int> assignment;  // per base row, 1..kLayers
};

// Moves each row's nonzeros into the horizontal block named by its cluster,
// leaving values untouched. Rows in different blocks become orthogonal.
inline LayeredMatrix layer_matrix(const CsrMatrix& base, std::span<const int> assignment) {
    if (static_cast<Index>(assignment.size()) != base.n_rows)
        throw std::invalid_argument("layer_matrix: assignment must cover every row");
    for (int a : assignment)
        if (a < 1 || a > LayeredMatrix::kLayers)
            throw std::invalid_argument("layer_matrix: cluster id " + std::to_string(a) +
                                        " outside 1.." + std::to_string(LayeredMatrix::kLayers));
    LayeredMatrix out;
    out.assignment.assign(assignment.begin(), assignment.end());
    CsrMatrix& m = out.matrix;
    m.n_rows = base.n_rows;
    m.n_cols = base.n_cols * LayeredMatrix::kLayers;
    m.indptr = base.indptr;
    m.indices.reserve(base.indices.size());
    m.values = base.values;
    for (Index r = 0; r < base.n_rows; ++r) {
        const Index shift = static_cast<Index>(assignment[static_cast<std::size_t>(r)] - 1) *
                            base.n_cols;
        for (Index c : base.row_indices(r)) m.indices.push_back(c + shift);
    }
    return out;
}

inline int hash_bucket4(Index id) {
    std::uint64_t x = static_cast<std::uint64_t>(id);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return static_cast<int>(x & 3) + 1;
}

// Per-track cluster assignment for a named layering axis: audio-feature
// quartiles, or a stable 4-bucket hash of the album/artist id.
inline std::vector<int> layer_assignment(const Dataset& ds, const std::string& feature) {
    std::vector<int> out;
    out.reserve(ds.tracks.size());
    if (feature == "album") {
        for (const auto& t : ds.tracks) out.push_back(hash_bucket4(t.album_id));
        return out;
    }
    if (feature == "artist") {
        for (const auto& t : ds.tracks) out.push_back(hash_bucket4(t.artist_id));
        return out;
    }
    const std::vector<double> values = feature_column(ds, feature);
    return quartile_cluster(values);
}

// Artist CBF that can only tell clusters of the named audio feature apart
// within an artist: the artist ICM is split into per-quartile blocks before
// the usual track-CBF pipeline.
inline ScoreSet cbf_track_layered(const CsrMatrix& ptm, const Dataset& ds,
                                  const std::string& feature, const KernelParams& params,
                                  std::span<const Index> targets, int threads = 1,
                                  std::string tag = "cbf_track_layered") {
    const std::vector<int> assignment = layer_assignment(ds, feature);
    const CsrMatrix icm = build_icm(ds, {FeatureSelector::artist, 1.0, 1.0});
    const LayeredMatrix layered = layer_matrix(icm, assignment);
    return cbf_track(ptm, layered.matrix, params, targets, threads, std::move(tag));
}

inline CsrMatrix drop_empty_rows(const CsrMatrix& m) {
    CsrMatrix out;
    out.n_cols = m.n_cols;
    out.indices = m.indices;
    out.values = m.values;
    out.indptr.clear();
    out.indptr.push_back(0);
    for (Index r = 0; r < m.n_rows; ++r)
        if (m.row_nnz(r) > 0) out.indptr.push_back(m.indptr[static_cast<std::size_t>(r) + 1]);
    out.n_rows = static_cast<Index>(out.indptr.size()) - 1;
    return out;
}

// Item CF over a PTM whose playlists are split per layering axis into
// per-cluster pseudo-playlists, so co-occurrence only counts within a
// cluster. Multiple axes stack vertically and their similarities add up.
inline ScoreSet cf_track_layered(const CsrMatrix& ptm, const Dataset& ds,
                                 std::span<const std::string> features,
                                 const KernelParams& params, std::span<const Index> targets,
                                 int threads = 1, std::string tag = "cf_track_layered") {
    if (features.empty())
        throw std::invalid_argument("cf_track_layered: need at least one layering feature");
    if (ptm.n_cols != ds.n_tracks())
        throw std::invalid_argument("cf_track_layered: ptm columns do not match track table");

    std::vector<std::vector<int>> assignments;
    assignments.reserve(features.size());
    for (const auto& f : features) assignments.push_back(layer_assignment(ds, f));

    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(ptm.nnz()) * features.size());
    const Index block = ptm.n_rows;
    for (Index p = 0; p < ptm.n_rows; ++p) {
        for (Index t : ptm.row_indices(p)) {
            for (std::size_t f = 0; f < assignments.size(); ++f) {
                const Index layer =
                    static_cast<Index>(assignments[f][static_cast<std::size_t>(t)] - 1);
                const Index row = (static_cast<Index>(f) * LayeredMatrix::kLayers + layer) * block + p;
                entries.push_back({row, t, 1.0});
            }
        }
    }
    const Index stacked_rows =
        static_cast<Index>(features.size()) * LayeredMatrix::kLayers * block;
    CsrMatrix stacked = CsrMatrix::from_triplets(stacked_rows, ptm.n_cols, std::move(entries),
                                                 DupPolicy::max);
    const CsrMatrix compact = drop_empty_rows(stacked);
    const CsrMatrix weighted = bm25_weight(compact, params.bm25_k1, params.bm25_b);
    const SimilarityMatrix sim = dot_similarity(weighted, params, threads);
    return predict_item_based(ptm, sim, targets, threads, std::move(tag));
}

// ---------------------------------------------------------------------------
// Score files: one JSON line per playlist with the model's top items.

inline void save_scores(const ScoreSet& s, const Dataset& ds, const std::string& path,
                        Index top_m = 1000) {
    if (s.n_items != ds.n_tracks())
        throw std::invalid_argument("save_scores: score width does not match track table");
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (std::size_t r = 0; r < s.size(); ++r) {
        nlohmann::json items = nlohmann::json::array();
        const auto top = top_n_row(s.scores[r], s.mask[r], top_m);
        for (Index c : top) {
            const double v = s.scores[r][static_cast<std::size_t>(c)];
            if (v == 0.0) break;  // top_n_row sorts descending; zeros carry no signal
            items.push_back({ds.tracks[static_cast<std::size_t>(c)].track_id, v});
        }
        nlohmann::json j{{"pid", s.pids[r]}, {"model", s.model}, {"items", std::move(items)}};
        out << j.dump() << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

// Masks are not serialized; reapply them from the challenge items after
// loading.
inline ScoreSet load_scores(const std::string& path, const Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open score file: " + path);
    ScoreSet s;
    s.n_items = ds.n_tracks();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j = detail::parse_json_line(line, path, line_no);
        s.pids.push_back(detail::require_id(j, "pid", where));
        if (!j.contains("model") || !j["model"].is_string())
            throw data_error(where + ": missing \"model\"");
        const std::string model = j["model"].get<std::string>();
        if (s.model.empty())
            s.model = model;
        else if (s.model != model)
            throw data_error(where + ": mixed model tags in one score file");
        if (!j.contains("items") || !j["items"].is_array())
            throw data_error(where + ": missing \"items\"");
        std::vector<double> row(static_cast<std::size_t>(ds.n_tracks()), 0.0);
        for (const auto& item : j["items"]) {
            if (!item.is_array() || item.size() != 2)
                throw data_error(where + ": items must be [track_id, score] pairs");
            const Index col = ds.col(item[0].get<Index>());
            row[static_cast<std::size_t>(col)] = item[1].get<double>();
        }
        s.scores.push_back(std::move(row));
        s.mask.emplace_back();
    }
    if (s.model.empty()) s.model = "empty";
    return s;
}

}  // namespace segue
