#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "segue/common.hpp"
#include "segue/sparse.hpp"

namespace segue {

inline constexpr std::size_t kFeatureCount = 10;
inline constexpr std::size_t kPopularityFeature = 9;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "acousticness", "danceability",     "energy",   "instrumentalness", "liveness",
    "loudness",     "speechiness",      "tempo",    "valence",          "popularity"};

struct TrackRef {
    Index track_id = 0;
    Index pos = 0;
};

struct Playlist {
    Index pid = 0;
    std::optional<std::string> title;
    std::vector<TrackRef> tracks;
};

struct Track {
    Index track_id = 0;
    Index album_id = 0;
    Index artist_id = 0;
    std::array<std::optional<double>, kFeatureCount> features{};
};

struct Dataset {
    std::vector<Playlist> playlists;
    std::vector<Track> tracks;  // ascending track_id; column order of every track matrix
    std::unordered_map<Index, Index> track_col;
    std::unordered_map<Index, std::size_t> playlist_row;

    Index n_tracks() const { return static_cast<Index>(tracks.size()); }
    std::size_t n_playlists() const { return playlists.size(); }

    Index col(Index track_id) const {
        auto it = track_col.find(track_id);
        if (it == track_col.end())
            throw data_error("unknown track_id " + std::to_string(track_id));
        return it->second;
    }
    bool has_track(Index track_id) const { return track_col.count(track_id) != 0; }
    const Track& track_by_id(Index track_id) const { return tracks[static_cast<std::size_t>(col(track_id))]; }

    void rebuild_index() {
        track_col.clear();
        track_col.reserve(tracks.size());
        for (std::size_t i = 0; i < tracks.size(); ++i)
            track_col.emplace(tracks[i].track_id, static_cast<Index>(i));
        playlist_row.clear();
        playlist_row.reserve(playlists.size());
        for (std::size_t i = 0; i < playlists.size(); ++i)
            playlist_row.emplace(playlists[i].pid, i);
    }
};

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, const std::string& path, std::size_t line_no) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
}

inline Index require_id(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw data_error(where + ": missing or non-integer \"" + key + "\"");
    const auto v = j[key].get<std::int64_t>();
    if (v < 0) throw data_error(where + ": \"" + key + "\" must be >= 0, got " + std::to_string(v));
    if (v > std::numeric_limits<Index>::max())
        throw data_error(where + ": \"" + key + "\" out of range");
    return static_cast<Index>(v);
}

}  // namespace detail

// One playlist per line: {"pid", "name", "tracks": [{"track_id","album_id","artist_id","pos"}]}.
// The track table is accumulated from the inline metadata; a track_id seen
// twice with different album or artist ids breaks referential integrity.
inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset file: " + path);

    Dataset ds;
    std::unordered_map<Index, std::pair<Index, Index>> meta;  // track_id -> (album, artist)
    std::unordered_set<Index> seen_pids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j = detail::parse_json_line(line, path, line_no);
        if (!j.is_object()) throw data_error(where + ": playlist record must be an object");

        Playlist p;
        p.pid = detail::require_id(j, "pid", where);
        if (!seen_pids.insert(p.pid).second)
            throw data_error(where + ": duplicate pid " + std::to_string(p.pid));

        if (j.contains("name") && !j["name"].is_null()) {
            if (!j["name"].is_string()) throw data_error(where + ": \"name\" must be string or null");
            p.title = j["name"].get<std::string>();
        }

        if (!j.contains("tracks") || !j["tracks"].is_array())
            throw data_error(where + ": missing \"tracks\" array");
        Index prev_pos = -1;
        for (const auto& t : j["tracks"]) {
            if (!t.is_object()) throw data_error(where + ": track entry must be an object");
            const Index tid = detail::require_id(t, "track_id", where);
            const Index alb = detail::require_id(t, "album_id", where);
            const Index art = detail::require_id(t, "artist_id", where);
            const Index pos = detail::require_id(t, "pos", where);
            if (pos <= prev_pos)
                throw data_error(where + ": track positions must be strictly increasing (pid " +
                                 std::to_string(p.pid) + ")");
            prev_pos = pos;
            auto [it, inserted] = meta.emplace(tid, std::make_pair(alb, art));
            if (!inserted && (it->second.first != alb || it->second.second != art))
                throw data_error(where + ": track_id " + std::to_string(tid) +
                                 " redeclared with different album/artist");
            p.tracks.push_back({tid, pos});
        }
        ds.playlists.push_back(std::move(p));
    }

    ds.tracks.reserve(meta.size());
    for (const auto& [tid, aa] : meta) ds.tracks.push_back({tid, aa.first, aa.second, {}});
    std::sort(ds.tracks.begin(), ds.tracks.end(),
              [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
    ds.rebuild_index();
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (const auto& p : ds.playlists) {
        nlohmann::json j;
        j["pid"] = p.pid;
        if (p.title)
            j["name"] = *p.title;
        else
            j["name"] = nullptr;
        nlohmann::json tracks = nlohmann::json::array();
        for (const auto& tr : p.tracks) {
            const Track& t = ds.track_by_id(tr.track_id);
            tracks.push_back({{"track_id", t.track_id},
                              {"album_id", t.album_id},
                              {"artist_id", t.artist_id},
                              {"pos", tr.pos}});
        }
        j["tracks"] = std::move(tracks);
        out << j.dump() << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_double_field(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw data_error(where + ": not a number: \"" + s + "\"");
    if (!std::isfinite(v)) throw data_error(where + ": non-finite value");
    return v;
}

}  // namespace detail

// CSV with header track_id,<10 feature names>; empty cell = missing value.
inline void load_features_csv(Dataset& ds, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open feature file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty feature file");

    std::string expected = "track_id";
    for (auto name : kFeatureNames) {
        expected += ',';
        expected += name;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected)
        throw data_error(path + ":1: unexpected header (want \"" + expected + "\")");

    std::unordered_set<Index> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        auto fields = detail::split_csv_line(line);
        if (fields.size() != kFeatureCount + 1)
            throw data_error(where + ": expected " + std::to_string(kFeatureCount + 1) +
                             " fields, got " + std::to_string(fields.size()));
        Index tid = 0;
        {
            const auto& s = fields[0];
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), tid);
            if (ec != std::errc{} || ptr != s.data() + s.size() || tid < 0)
                throw data_error(where + ": bad track_id \"" + s + "\"");
        }
        if (!ds.has_track(tid))
            throw data_error(where + ": unknown track_id " + std::to_string(tid));
        if (!seen.insert(tid).second)
            throw data_error(where + ": duplicate feature row for track_id " + std::to_string(tid));
        Track& t = ds.tracks[static_cast<std::size_t>(ds.col(tid))];
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const auto& cell = fields[f + 1];
            if (cell.empty()) {
                t.features[f] = std::nullopt;
                continue;
            }
            const double v = detail::parse_double_field(cell, where);
            if (f == kPopularityFeature && (v < 0.0 || v > 100.0))
                throw data_error(where + ": popularity must be in [0,100], got " + cell);
            t.features[f] = v;
        }
    }
}

inline void save_features_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << "track_id";
    for (auto name : kFeatureNames) out << ',' << name;
    out << '\n';
    char buf[64];
    for (const auto& t : ds.tracks) {
        out << t.track_id;
        for (const auto& f : t.features) {
            out << ',';
            if (f) {
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *f);
                out.write(buf, ptr - buf);
            }
        }
        out << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

// Missing audio features are replaced by the column mean over the tracks that
// have the value; missing popularity becomes 0. A mean-imputed column with no
// data at all cannot be filled and is an error.
inline std::vector<Track> impute_features(const std::vector<Track>& tracks) {
    std::array<double, kFeatureCount> sum{};
    std::array<std::size_t, kFeatureCount> cnt{};
    for (const auto& t : tracks)
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            if (t.features[f]) {
                sum[f] += *t.features[f];
                ++cnt[f];
            }
    std::array<double, kFeatureCount> fill{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (f == kPopularityFeature) {
            fill[f] = 0.0;  // absent popularity means never streamed, not average
            continue;
        }
        if (!tracks.empty() && cnt[f] == 0)
            throw data_error("feature column entirely missing: " + std::string(kFeatureNames[f]));
        fill[f] = cnt[f] ? sum[f] / static_cast<double>(cnt[f]) : 0.0;
    }
    std::vector<Track> out = tracks;
    for (auto& t : out)
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            if (!t.features[f]) t.features[f] = fill[f];
    return out;
}

inline void impute_features(Dataset& ds) { ds.tracks = impute_features(ds.tracks); }

inline std::size_t feature_index(std::string_view name) {
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        if (kFeatureNames[f] == name) return f;
    throw data_error("unknown feature name: " + std::string(name));
}

// Dense column of one audio feature, in track-column order. Requires the
// table to be complete (run impute_features first).
inline std::vector<double> feature_column(const Dataset& ds, std::string_view name) {
    const std::size_t f = feature_index(name);
    std::vector<double> out;
    out.reserve(ds.tracks.size());
    for (const auto& t : ds.tracks) {
        if (!t.features[f])
            throw data_error("track " + std::to_string(t.track_id) + " missing feature " +
                             std::string(name) + " (impute first)");
        out.push_back(*t.features[f]);
    }
    return out;
}

struct ArhValue {
    double value = 0.0;
    int cluster = 1;
};

inline int arh_cluster_of(double value) {
    if (value == 0.0) return 1;
    if (value < 1.0) return 2;
    if (value < 2.0) return 3;
    return 4;
}

inline ArhValue arh_from_tracks(std::span<const Index> track_ids, const Dataset& ds) {
    if (track_ids.empty()) throw data_error("artist heterogeneity of an empty track list is undefined");
    std::unordered_set<Index> ut, ua;
    for (Index tid : track_ids) {
        ut.insert(tid);
        ua.insert(ds.track_by_id(tid).artist_id);
    }
    const double value =
        std::log2(static_cast<double>(ut.size()) / static_cast<double>(ua.size()));
    return {value, arh_cluster_of(value)};
}

inline ArhValue artist_heterogeneity(const Playlist& p, const Dataset& ds) {
    std::vector<Index> ids;
    ids.reserve(p.tracks.size());
    for (const auto& tr : p.tracks) ids.push_back(tr.track_id);
    return arh_from_tracks(ids, ds);
}

// Binary playlist-track matrix; rows follow Dataset::playlists order, columns
// follow Dataset::tracks order. Duplicate track entries collapse to 1.
inline CsrMatrix build_ptm(const Dataset& ds) {
    std::vector<Triplet> entries;
    for (std::size_t r = 0; r < ds.playlists.size(); ++r)
        for (const auto& tr : ds.playlists[r].tracks)
            entries.push_back({static_cast<Index>(r), ds.col(tr.track_id), 1.0});
    return CsrMatrix::from_triplets(static_cast<Index>(ds.playlists.size()), ds.n_tracks(),
                                    std::move(entries), DupPolicy::max);
}

}  // namespace segue
