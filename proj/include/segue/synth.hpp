#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "segue/challenge.hpp"
#include "segue/common.hpp"
#include "segue/dataset.hpp"

namespace segue {

// Synthetic corpus shaped like real curation behaviour: artists own
// contiguous track-id blocks, albums are contiguous runs inside them, and one
// latent "era" axis ties track ids, the energy feature, and co-listening
// together. Playlists mix six construction patterns.
struct SynthConfig {
    Index n_playlists = 2000;
    Index n_tracks = 5000;
    Index n_artists = 200;
    double tracks_per_album = 8.0;
    Index min_len = 15;
    Index max_len = 110;
    double untitled_rate = 0.10;
    double feature_missing_rate = 0.0;

    double w_album_runs = 0.30;
    double w_single_artist = 0.15;
    double w_era_drift = 0.20;
    double w_diverse_then_repeat = 0.15;
    double w_distinct_artists = 0.10;
    double w_uniform = 0.10;

    std::uint64_t seed = 1;

    void check() const {
        if (n_playlists < 1 || n_tracks < 1 || n_artists < 1)
            throw std::invalid_argument("synthetic counts must be >= 1");
        if (n_artists > n_tracks)
            throw std::invalid_argument("n_artists must not exceed n_tracks");
        if (min_len < 1 || max_len < min_len)
            throw std::invalid_argument("bad playlist length range");
        if (!(tracks_per_album >= 1.0))
            throw std::invalid_argument("tracks_per_album must be >= 1");
        const double ws[] = {w_album_runs,         w_single_artist,    w_era_drift,
                             w_diverse_then_repeat, w_distinct_artists, w_uniform};
        double sum = 0.0;
        for (double w : ws) {
            if (!(w >= 0.0)) throw std::invalid_argument("pattern weights must be >= 0");
            sum += w;
        }
        if (!(sum > 0.0)) throw std::invalid_argument("pattern weights must not all be 0");
        if (!(untitled_rate >= 0.0 && untitled_rate <= 1.0) ||
            !(feature_missing_rate >= 0.0 && feature_missing_rate <= 1.0))
            throw std::invalid_argument("rates must be in [0,1]");
    }
};

namespace detail {

inline double runif01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// roughly N(0,1); sum of 12 uniforms keeps the draw sequence portable
inline double rnormish(std::mt19937_64& rng) {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += runif01(rng);
    return s - 6.0;
}

inline std::vector<Index> sample_distinct(std::mt19937_64& rng, Index bound, std::size_t count) {
    std::unordered_set<Index> seen;
    std::vector<Index> out;
    out.reserve(count);
    while (out.size() < count) {
        const Index v = static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(bound)));
        if (seen.insert(v).second) out.push_back(v);
    }
    return out;
}

}  // namespace detail

inline Dataset generate_synthetic(const SynthConfig& cfg) {
    cfg.check();
    std::mt19937_64 rng(cfg.seed);

    const Index T = cfg.n_tracks;
    const Index A = cfg.n_artists;
    const Index per_artist = (T + A - 1) / A;

    // album partition: contiguous runs inside each artist block
    std::vector<Index> album_of(static_cast<std::size_t>(T));
    std::vector<Index> artist_of(static_cast<std::size_t>(T));
    std::vector<Index> album_first;  // first track of each album
    {
        Index album = 0;
        Index t = 0;
        while (t < T) {
            const Index artist = std::min<Index>(t / per_artist, A - 1);
            const Index block_end = std::min<Index>((artist + 1) * per_artist, T);
            const double spread = cfg.tracks_per_album;
            Index run = static_cast<Index>(spread / 2.0 + detail::runif01(rng) * spread) + 1;
            run = std::min(run, block_end - t);
            album_first.push_back(t);
            for (Index i = 0; i < run; ++i) {
                album_of[static_cast<std::size_t>(t)] = album;
                artist_of[static_cast<std::size_t>(t)] = artist;
                ++t;
            }
            ++album;
        }
    }

    // track features; energy follows the album's era with small jitter
    Dataset ds;
    ds.tracks.resize(static_cast<std::size_t>(T));
    for (Index t = 0; t < T; ++t) {
        Track& tr = ds.tracks[static_cast<std::size_t>(t)];
        tr.track_id = t;
        tr.album_id = album_of[static_cast<std::size_t>(t)];
        tr.artist_id = artist_of[static_cast<std::size_t>(t)];
        const double era =
            static_cast<double>(album_first[static_cast<std::size_t>(tr.album_id)]) /
            static_cast<double>(T);
        const double energy =
            std::clamp(era + 0.02 * detail::rnormish(rng), 0.0, 1.0);
        const double feats[kFeatureCount] = {
            detail::runif01(rng),                   // acousticness
            detail::runif01(rng),                   // danceability
            energy,                                 // energy
            detail::runif01(rng),                   // instrumentalness
            detail::runif01(rng),                   // liveness
            -60.0 + 60.0 * detail::runif01(rng),    // loudness
            detail::runif01(rng),                   // speechiness
            60.0 + 140.0 * detail::runif01(rng),    // tempo
            detail::runif01(rng),                   // valence
            100.0 * detail::runif01(rng)            // popularity
        };
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            if (cfg.feature_missing_rate > 0.0 &&
                detail::runif01(rng) < cfg.feature_missing_rate)
                tr.features[f] = std::nullopt;
            else
                tr.features[f] = feats[f];
        }
    }

    auto artist_block = [&](Index artist) {
        const Index begin = artist * per_artist;
        const Index end = std::min<Index>(begin + per_artist, T);
        return std::pair<Index, Index>{begin, end};
    };

    // pattern samplers; each yields a list of distinct track ids in play order
    auto gen_album_runs = [&](Index len) {
        std::vector<Index> out;
        Index album = static_cast<Index>(
            detail::uniform_below(rng, static_cast<std::uint64_t>(album_first.size())));
        while (static_cast<Index>(out.size()) < len) {
            const Index start = album_first[static_cast<std::size_t>(album)];
            const Index stop = album + 1 < static_cast<Index>(album_first.size())
                                   ? album_first[static_cast<std::size_t>(album) + 1]
                                   : T;
            for (Index t = start; t < stop && static_cast<Index>(out.size()) < len; ++t)
                out.push_back(t);
            album = (album + 1) % static_cast<Index>(album_first.size());
        }
        return out;
    };
    auto gen_single_artist = [&](Index len) {
        const Index artist =
            static_cast<Index>(detail::uniform_below(rng, static_cast<std::uint64_t>(A)));
        const auto [begin, end] = artist_block(artist);
        std::vector<Index> block;
        for (Index t = begin; t < end; ++t) block.push_back(t);
        detail::deterministic_shuffle(block, rng);
        block.resize(std::min<std::size_t>(block.size(), static_cast<std::size_t>(len)));
        return block;
    };
    auto gen_era_drift = [&](Index len) {
        const Index window = std::min<Index>(T, len * 4);
        const Index t0 = static_cast<Index>(
            detail::uniform_below(rng, static_cast<std::uint64_t>(T - window + 1)));
        const Index count = std::min(len, window);
        std::vector<Index> offsets = detail::sample_distinct(rng, window, static_cast<std::size_t>(count));
        std::sort(offsets.begin(), offsets.end());
        for (auto& o : offsets) o += t0;
        return offsets;
    };
    auto gen_distinct_artists = [&](Index len) {
        const Index count = std::min(len, A);
        std::vector<Index> artists =
            detail::sample_distinct(rng, A, static_cast<std::size_t>(count));
        std::vector<Index> out;
        out.reserve(artists.size());
        for (Index a : artists) {
            const auto [begin, end] = artist_block(a);
            out.push_back(begin + static_cast<Index>(detail::uniform_below(
                                      rng, static_cast<std::uint64_t>(end - begin))));
        }
        return out;
    };
    auto gen_diverse_then_repeat = [&](Index len) {
        const Index repeat_artist =
            static_cast<Index>(detail::uniform_below(rng, static_cast<std::uint64_t>(A)));
        const Index half = len / 2;
        std::vector<Index> out;
        std::unordered_set<Index> used_artists{repeat_artist};
        while (static_cast<Index>(out.size()) < half &&
               static_cast<Index>(used_artists.size()) < A) {
            const Index a =
                static_cast<Index>(detail::uniform_below(rng, static_cast<std::uint64_t>(A)));
            if (!used_artists.insert(a).second) continue;
            const auto [begin, end] = artist_block(a);
            out.push_back(begin + static_cast<Index>(detail::uniform_below(
                                      rng, static_cast<std::uint64_t>(end - begin))));
        }
        const auto [begin, end] = artist_block(repeat_artist);
        std::vector<Index> block;
        for (Index t = begin; t < end; ++t) block.push_back(t);
        detail::deterministic_shuffle(block, rng);
        for (Index t : block) {
            if (static_cast<Index>(out.size()) >= len) break;
            out.push_back(t);
        }
        return out;
    };
    auto gen_uniform = [&](Index len) {
        return detail::sample_distinct(rng, T, static_cast<std::size_t>(std::min(len, T)));
    };

    static const std::vector<std::string> kBandWords = {
        "lofi", "classical", "jazz",  "blues", "folk",
        "rock", "indie",     "pop",   "dance", "electro"};
    static const std::vector<std::string> kMoodWords = {
        "chill", "deep",    "happy", "sad",   "night",
        "morning", "gym",   "party", "study", "road"};

    auto make_title = [&](Index first_track) {
        const double era = static_cast<double>(first_track) / static_cast<double>(T);
        const std::size_t band =
            std::min<std::size_t>(static_cast<std::size_t>(era * kBandWords.size()),
                                  kBandWords.size() - 1);
        const std::string& genre = kBandWords[band];
        const double roll = detail::runif01(rng);
        if (roll < 0.35) return genre;
        const std::string& mood =
            kMoodWords[detail::uniform_below(rng, kMoodWords.size())];
        if (roll < 0.65) return genre + " " + mood;
        if (roll < 0.80)
            return mood + " " + genre + " 20" +
                   std::to_string(10 + detail::uniform_below(rng, 10));
        if (roll < 0.90) return mood + " mix";
        // spaced single letters, the tokenizer's join case
        std::string spaced;
        for (char c : genre) {
            if (!spaced.empty()) spaced += ' ';
            spaced += c;
        }
        return spaced;
    };

    const double ws[6] = {cfg.w_album_runs,          cfg.w_single_artist,
                          cfg.w_era_drift,           cfg.w_diverse_then_repeat,
                          cfg.w_distinct_artists,    cfg.w_uniform};
    double cum[6];
    double total = 0.0;
    for (int i = 0; i < 6; ++i) {
        total += ws[i];
        cum[i] = total;
    }

    ds.playlists.reserve(static_cast<std::size_t>(cfg.n_playlists));
    for (Index pid = 0; pid < cfg.n_playlists; ++pid) {
        const Index len =
            cfg.min_len + static_cast<Index>(detail::uniform_below(
                              rng, static_cast<std::uint64_t>(cfg.max_len - cfg.min_len + 1)));
        const double pick = detail::runif01(rng) * total;
        int pattern = 0;
        while (pattern < 5 && pick >= cum[pattern]) ++pattern;

        std::vector<Index> ids;
        switch (pattern) {
            case 0: ids = gen_album_runs(len); break;
            case 1: ids = gen_single_artist(len); break;
            case 2: ids = gen_era_drift(len); break;
            case 3: ids = gen_diverse_then_repeat(len); break;
            case 4: ids = gen_distinct_artists(len); break;
            default: ids = gen_uniform(len); break;
        }
        if (ids.empty()) ids.push_back(0);

        Playlist p;
        p.pid = pid;
        if (detail::runif01(rng) >= cfg.untitled_rate) p.title = make_title(ids.front());
        p.tracks.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            p.tracks.push_back({ids[i], static_cast<Index>(i)});
        ds.playlists.push_back(std::move(p));
    }

    ds.rebuild_index();
    return ds;
}

}  // namespace segue
