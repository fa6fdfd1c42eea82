#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "segue/common.hpp"
#include "segue/dataset.hpp"

namespace segue {

// The ten visibility regimes of incomplete playlists.
struct CategorySpec {
    int n_visible;
    bool titled;   // challenge item carries the title
    bool ordered;  // visible tracks are a prefix (false: uniform sample, original positions kept)
};

inline constexpr std::array<CategorySpec, 10> kCategories = {{
    {0, true, true},    // 1: title only
    {1, true, true},    // 2: title + first track
    {5, true, true},    // 3: title + first 5
    {5, false, true},   // 4: first 5, no title
    {10, true, true},   // 5: title + first 10
    {10, false, true},  // 6: first 10, no title
    {25, true, true},   // 7: title + first 25
    {25, true, false},  // 8: title + 25 random
    {100, true, true},  // 9: title + first 100
    {100, true, false}  // 10: title + 100 random
}};

inline const CategorySpec& category_spec(int category) {
    if (category < 1 || category > 10)
        throw std::invalid_argument("category must be in 1..10, got " + std::to_string(category));
    return kCategories[static_cast<std::size_t>(category - 1)];
}

struct ChallengeItem {
    Index pid = 0;
    int category = 1;
    std::optional<std::string> title;
    std::vector<TrackRef> visible;  // ascending original positions
};

struct GroundTruth {
    Index pid = 0;
    std::vector<Index> hidden;  // ascending track ids
};

struct SplitResult {
    Dataset train;
    std::vector<ChallengeItem> items;
    std::vector<GroundTruth> truth;
};

namespace detail {

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

// Fisher-Yates with an explicit draw so the permutation does not depend on
// the standard library's shuffle internals.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

inline bool has_duplicate_tracks(const Playlist& p) {
    std::unordered_set<Index> seen;
    for (const auto& tr : p.tracks)
        if (!seen.insert(tr.track_id).second) return true;
    return false;
}

inline bool usable_title(const Playlist& p) {
    if (!p.title) return false;
    for (char c : *p.title)
        if (c != ' ' && c != '\t') return true;
    return false;
}

}  // namespace detail

// Carves challenge playlists out of a full dataset. Harder categories pick
// first so the long playlists they need are still available. Only playlists
// with all-distinct tracks are eligible, which keeps visible and hidden sides
// an exact partition of the original track list.
inline SplitResult split_challenge(const Dataset& full, std::uint64_t seed, int per_category) {
    if (per_category < 1) throw std::invalid_argument("per_category must be >= 1");
    std::mt19937_64 rng(seed);

    std::vector<bool> claimed(full.playlists.size(), false);
    std::vector<std::pair<int, std::size_t>> picks;  // (category, playlist index)
    constexpr std::array<int, 10> kOrder = {10, 9, 8, 7, 6, 5, 4, 3, 2, 1};

    for (int cat : kOrder) {
        const CategorySpec& spec = category_spec(cat);
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < full.playlists.size(); ++i) {
            if (claimed[i]) continue;
            const Playlist& p = full.playlists[i];
            const auto need = static_cast<std::size_t>(spec.n_visible) + 1;
            if (p.tracks.size() < std::max<std::size_t>(need, 1)) continue;
            if (spec.titled && !detail::usable_title(p)) continue;
            if (detail::has_duplicate_tracks(p)) continue;
            eligible.push_back(i);
        }
        if (eligible.size() < static_cast<std::size_t>(per_category))
            throw data_error("category " + std::to_string(cat) + ": need " +
                             std::to_string(per_category) + " eligible playlists, found " +
                             std::to_string(eligible.size()));
        detail::deterministic_shuffle(eligible, rng);
        eligible.resize(static_cast<std::size_t>(per_category));
        std::sort(eligible.begin(), eligible.end());
        for (std::size_t i : eligible) {
            claimed[i] = true;
            picks.emplace_back(cat, i);
        }
    }
    std::sort(picks.begin(), picks.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    SplitResult out;
    for (const auto& [cat, i] : picks) {
        const Playlist& p = full.playlists[i];
        const CategorySpec& spec = category_spec(cat);
        ChallengeItem item;
        item.pid = p.pid;
        item.category = cat;
        if (spec.titled) item.title = p.title;

        const std::size_t n_vis = static_cast<std::size_t>(spec.n_visible);
        if (spec.ordered) {
            item.visible.assign(p.tracks.begin(), p.tracks.begin() + static_cast<std::ptrdiff_t>(n_vis));
        } else {
            std::vector<std::size_t> slots(p.tracks.size());
            for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = s;
            detail::deterministic_shuffle(slots, rng);
            slots.resize(n_vis);
            std::sort(slots.begin(), slots.end());
            for (std::size_t s : slots) item.visible.push_back(p.tracks[s]);
        }

        std::unordered_set<Index> vis_ids;
        for (const auto& tr : item.visible) vis_ids.insert(tr.track_id);
        GroundTruth gt;
        gt.pid = p.pid;
        for (const auto& tr : p.tracks)
            if (!vis_ids.count(tr.track_id)) gt.hidden.push_back(tr.track_id);
        std::sort(gt.hidden.begin(), gt.hidden.end());

        out.items.push_back(std::move(item));
        out.truth.push_back(std::move(gt));
    }

    out.train.tracks = full.tracks;
    for (std::size_t i = 0; i < full.playlists.size(); ++i)
        if (!claimed[i]) out.train.playlists.push_back(full.playlists[i]);
    out.train.rebuild_index();
    return out;
}

namespace detail {

// Challenge and truth files are self-contained: each line carries album and
// artist metadata for the tracks it references, so they can be loaded against
// a training corpus that never saw those tracks.
inline nlohmann::json track_catalog_json(std::span<const Index> ids, const Dataset& ds) {
    nlohmann::json arr = nlohmann::json::array();
    for (Index tid : ids) {
        const Track& t = ds.track_by_id(tid);
        arr.push_back({{"track_id", t.track_id},
                       {"album_id", t.album_id},
                       {"artist_id", t.artist_id}});
    }
    return arr;
}

inline void absorb_track_catalog(const nlohmann::json& j, Dataset& ds, bool& grew,
                                 const std::string& where) {
    if (!j.contains("tracks")) return;
    if (!j["tracks"].is_array()) throw data_error(where + ": \"tracks\" must be an array");
    for (const auto& t : j["tracks"]) {
        if (!t.is_object()) throw data_error(where + ": track entries must be objects");
        Track tr;
        tr.track_id = require_id(t, "track_id", where);
        tr.album_id = require_id(t, "album_id", where);
        tr.artist_id = require_id(t, "artist_id", where);
        if (ds.has_track(tr.track_id)) {
            const Track& known = ds.track_by_id(tr.track_id);
            if (known.album_id != tr.album_id || known.artist_id != tr.artist_id)
                throw data_error(where + ": track_id " + std::to_string(tr.track_id) +
                                 " redeclared with different album/artist");
        } else {
            ds.tracks.push_back(std::move(tr));
            grew = true;
        }
    }
}

}  // namespace detail

inline void save_challenge(const std::vector<ChallengeItem>& items, const Dataset& ds,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (const auto& item : items) {
        nlohmann::json j;
        j["pid"] = item.pid;
        j["category"] = item.category;
        if (item.title)
            j["title"] = *item.title;
        else
            j["title"] = nullptr;
        nlohmann::json vis = nlohmann::json::array();
        std::vector<Index> ids;
        ids.reserve(item.visible.size());
        for (const auto& tr : item.visible) {
            vis.push_back({tr.track_id, tr.pos});
            ids.push_back(tr.track_id);
        }
        j["visible"] = std::move(vis);
        if (!ids.empty()) j["tracks"] = detail::track_catalog_json(ids, ds);
        out << j.dump() << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

inline std::vector<ChallengeItem> load_challenge(const std::string& path, Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open challenge file: " + path);
    std::vector<ChallengeItem> items;
    std::unordered_set<Index> seen_pids;
    std::string line;
    std::size_t line_no = 0;
    bool grew = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j = detail::parse_json_line(line, path, line_no);
        detail::absorb_track_catalog(j, ds, grew, where);
        if (grew) {
            std::sort(ds.tracks.begin(), ds.tracks.end(),
                      [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
            ds.rebuild_index();
            grew = false;
        }
        ChallengeItem item;
        item.pid = detail::require_id(j, "pid", where);
        if (!seen_pids.insert(item.pid).second)
            throw data_error(where + ": duplicate pid " + std::to_string(item.pid));
        if (!j.contains("category") || !j["category"].is_number_integer())
            throw data_error(where + ": missing \"category\"");
        item.category = j["category"].get<int>();
        if (item.category < 1 || item.category > 10)
            throw data_error(where + ": category must be in 1..10, got " +
                             std::to_string(item.category));
        const CategorySpec& spec = category_spec(item.category);
        if (j.contains("title") && !j["title"].is_null()) {
            if (!j["title"].is_string()) throw data_error(where + ": \"title\" must be string or null");
            item.title = j["title"].get<std::string>();
        }
        if (spec.titled && !item.title)
            throw data_error(where + ": category " + std::to_string(item.category) +
                             " requires a title");
        if (!j.contains("visible") || !j["visible"].is_array())
            throw data_error(where + ": missing \"visible\" array");
        Index prev_pos = -1;
        for (const auto& v : j["visible"]) {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
                !v[1].is_number_integer())
                throw data_error(where + ": visible entries must be [track_id, pos] pairs");
            TrackRef tr{v[0].get<Index>(), v[1].get<Index>()};
            if (!ds.has_track(tr.track_id))
                throw data_error(where + ": unknown track_id " + std::to_string(tr.track_id));
            if (tr.pos <= prev_pos) throw data_error(where + ": visible positions must increase");
            prev_pos = tr.pos;
            item.visible.push_back(tr);
        }
        if (item.visible.size() != static_cast<std::size_t>(spec.n_visible))
            throw data_error(where + ": category " + std::to_string(item.category) + " expects " +
                             std::to_string(spec.n_visible) + " visible tracks, got " +
                             std::to_string(item.visible.size()));
        items.push_back(std::move(item));
    }
    return items;
}

inline void save_ground_truth(const std::vector<GroundTruth>& truth, const Dataset& ds,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (const auto& gt : truth) {
        nlohmann::json j;
        j["pid"] = gt.pid;
        j["hidden"] = gt.hidden;
        j["tracks"] = detail::track_catalog_json(gt.hidden, ds);
        out << j.dump() << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

inline std::vector<GroundTruth> load_ground_truth(const std::string& path, Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open ground-truth file: " + path);
    std::vector<GroundTruth> truth;
    std::string line;
    std::size_t line_no = 0;
    bool grew = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j = detail::parse_json_line(line, path, line_no);
        detail::absorb_track_catalog(j, ds, grew, where);
        if (grew) {
            std::sort(ds.tracks.begin(), ds.tracks.end(),
                      [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
            ds.rebuild_index();
            grew = false;
        }
        GroundTruth gt;
        gt.pid = detail::require_id(j, "pid", where);
        if (!j.contains("hidden") || !j["hidden"].is_array())
            throw data_error(where + ": missing \"hidden\" array");
        for (const auto& h : j["hidden"]) {
            if (!h.is_number_integer()) throw data_error(where + ": hidden ids must be integers");
            const Index tid = h.get<Index>();
            if (!ds.has_track(tid))
                throw data_error(where + ": unknown track_id " + std::to_string(tid));
            gt.hidden.push_back(tid);
        }
        if (gt.hidden.empty()) throw data_error(where + ": empty ground truth for pid " +
                                                std::to_string(gt.pid));
        std::sort(gt.hidden.begin(), gt.hidden.end());
        truth.push_back(std::move(gt));
    }
    return truth;
}

// Rows = training playlists followed by challenge playlists (visible tracks
// only); columns = the dataset's track order. The returned row offset of the
// first challenge playlist equals train.n_playlists().
inline CsrMatrix build_ptm_with_challenge(const Dataset& train,
                                          std::span<const ChallengeItem> items) {
    std::vector<Triplet> entries;
    for (std::size_t r = 0; r < train.playlists.size(); ++r)
        for (const auto& tr : train.playlists[r].tracks)
            entries.push_back({static_cast<Index>(r), train.col(tr.track_id), 1.0});
    const Index base = static_cast<Index>(train.playlists.size());
    for (std::size_t i = 0; i < items.size(); ++i)
        for (const auto& tr : items[i].visible)
            entries.push_back({base + static_cast<Index>(i), train.col(tr.track_id), 1.0});
    return CsrMatrix::from_triplets(base + static_cast<Index>(items.size()), train.n_tracks(),
                                    std::move(entries), DupPolicy::max);
}

}  // namespace segue
