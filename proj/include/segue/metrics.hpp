#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "segue/challenge.hpp"
#include "segue/common.hpp"
#include "segue/dataset.hpp"

namespace segue {

inline constexpr std::size_t kMaxRecommendations = 500;
inline constexpr int kClicksMiss = 51;

// Track-level precision plus quarter-weighted artist-level credit. The window
// is the first |G_t| recommendations; artists of track-matched entries do not
// count again at artist level, and each artist earns credit at most once.
inline double r_precision(std::span<const Index> recommended, std::span<const Index> ground_truth,
                          const Dataset& ds) {
    if (ground_truth.empty()) throw data_error("r_precision: empty ground truth");
    std::unordered_set<Index> gt_tracks(ground_truth.begin(), ground_truth.end());
    std::unordered_set<Index> gt_artists;
    for (Index t : ground_truth) gt_artists.insert(ds.track_by_id(t).artist_id);

    const std::size_t window = std::min(recommended.size(), ground_truth.size());
    std::size_t matched = 0;
    std::unordered_set<Index> unmatched_artists;
    for (std::size_t i = 0; i < window; ++i) {
        const Index t = recommended[i];
        if (gt_tracks.count(t))
            ++matched;
        else
            unmatched_artists.insert(ds.track_by_id(t).artist_id);
    }
    std::size_t artist_hits = 0;
    for (Index a : unmatched_artists)
        if (gt_artists.count(a)) ++artist_hits;

    const double prec_t = static_cast<double>(matched) / static_cast<double>(ground_truth.size());
    const double prec_a = static_cast<double>(artist_hits) / static_cast<double>(gt_artists.size());
    return prec_t + 0.25 * prec_a;
}

// Binary gain, 1/log2(i+1) discount at 1-based rank i, ideal list capped at
// 500 relevant items.
inline double ndcg(std::span<const Index> recommended, std::span<const Index> ground_truth) {
    if (ground_truth.empty()) throw data_error("ndcg: empty ground truth");
    std::unordered_set<Index> gt(ground_truth.begin(), ground_truth.end());
    double dcg = 0.0;
    const std::size_t horizon = std::min(recommended.size(), kMaxRecommendations);
    for (std::size_t i = 0; i < horizon; ++i)
        if (gt.count(recommended[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double idcg = 0.0;
    const std::size_t ideal = std::min(gt.size(), kMaxRecommendations);
    for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

// Number of 10-track refreshes before the first relevant recommendation;
// 51 when the whole list misses.
inline int clicks(std::span<const Index> recommended, std::span<const Index> ground_truth) {
    if (ground_truth.empty()) throw data_error("clicks: empty ground truth");
    std::unordered_set<Index> gt(ground_truth.begin(), ground_truth.end());
    const std::size_t limit = std::min(recommended.size(), kMaxRecommendations);
    for (std::size_t i = 0; i < limit; ++i)
        if (gt.count(recommended[i])) return static_cast<int>(i / 10);
    return kClicksMiss;
}

struct EvalCell {
    double r_precision = 0.0;
    double ndcg = 0.0;
    double clicks = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::array<EvalCell, 10> per_category{};
    EvalCell overall{};
};

using Submission = std::vector<std::pair<Index, std::vector<Index>>>;

// Validates the submission against the challenge set, then averages the three
// metrics per category and overall (unweighted over playlists).
inline EvalReport evaluate_run(const Submission& submission,
                               const std::vector<ChallengeItem>& items,
                               const std::vector<GroundTruth>& truth, const Dataset& ds) {
    std::unordered_map<Index, const std::vector<Index>*> rec_of;
    for (const auto& [pid, rec] : submission)
        if (!rec_of.emplace(pid, &rec).second)
            throw data_error("submission lists pid " + std::to_string(pid) + " twice");
    std::unordered_map<Index, const GroundTruth*> truth_of;
    for (const auto& gt : truth) truth_of.emplace(gt.pid, &gt);

    std::unordered_set<Index> challenge_pids;
    for (const auto& item : items) challenge_pids.insert(item.pid);
    for (const auto& [pid, rec] : submission)
        if (!challenge_pids.count(pid))
            throw data_error("submission contains pid " + std::to_string(pid) +
                             " that is not a challenge playlist");

    EvalReport report;
    for (const auto& item : items) {
        auto rit = rec_of.find(item.pid);
        if (rit == rec_of.end())
            throw data_error("submission missing pid " + std::to_string(item.pid));
        const std::vector<Index>& rec = *rit->second;
        if (rec.size() > kMaxRecommendations)
            throw data_error("pid " + std::to_string(item.pid) + ": more than 500 recommendations");
        std::unordered_set<Index> seen;
        for (Index t : rec) {
            if (!ds.has_track(t))
                throw data_error("pid " + std::to_string(item.pid) + ": unknown track " +
                                 std::to_string(t));
            if (!seen.insert(t).second)
                throw data_error("pid " + std::to_string(item.pid) + ": duplicate track " +
                                 std::to_string(t));
        }
        for (const auto& tr : item.visible)
            if (seen.count(tr.track_id))
                throw data_error("pid " + std::to_string(item.pid) + ": recommends visible track " +
                                 std::to_string(tr.track_id));
        auto tit = truth_of.find(item.pid);
        if (tit == truth_of.end())
            throw data_error("no ground truth for pid " + std::to_string(item.pid));
        const GroundTruth& gt = *tit->second;

        const double rp = r_precision(rec, gt.hidden, ds);
        const double nd = ndcg(rec, gt.hidden);
        const int cl = clicks(rec, gt.hidden);

        EvalCell& cell = report.per_category[static_cast<std::size_t>(item.category - 1)];
        cell.r_precision += rp;
        cell.ndcg += nd;
        cell.clicks += cl;
        ++cell.count;
        report.overall.r_precision += rp;
        report.overall.ndcg += nd;
        report.overall.clicks += cl;
        ++report.overall.count;
    }

    auto finish = [](EvalCell& c) {
        if (c.count == 0) return;
        c.r_precision /= static_cast<double>(c.count);
        c.ndcg /= static_cast<double>(c.count);
        c.clicks /= static_cast<double>(c.count);
    };
    for (auto& c : report.per_category) finish(c);
    finish(report.overall);
    return report;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    auto cell = [](const EvalCell& c) {
        return nlohmann::json{{"r_precision", c.r_precision},
                              {"ndcg", c.ndcg},
                              {"clicks", c.clicks},
                              {"count", c.count}};
    };
    nlohmann::json cats = nlohmann::json::array();
    for (std::size_t i = 0; i < r.per_category.size(); ++i) {
        nlohmann::json c = cell(r.per_category[i]);
        c["category"] = i + 1;
        cats.push_back(std::move(c));
    }
    return nlohmann::json{{"overall", cell(r.overall)}, {"categories", std::move(cats)}};
}

inline void save_report(const EvalReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << report_to_json(r).dump(2) << '\n';
    if (!out) throw data_error("write failed: " + path);
}

inline std::string format_report(const EvalReport& r) {
    char buf[128];
    std::string out = "category     count  r_precision       ndcg     clicks\n";
    auto line = [&](const std::string& name, const EvalCell& c) {
        std::snprintf(buf, sizeof(buf), "%-10s  %6zu  %11.6f  %9.6f  %9.4f\n", name.c_str(),
                      c.count, c.r_precision, c.ndcg, c.clicks);
        out += buf;
    };
    for (std::size_t i = 0; i < r.per_category.size(); ++i)
        if (r.per_category[i].count > 0) line(std::to_string(i + 1), r.per_category[i]);
    line("overall", r.overall);
    return out;
}

inline void save_submission(const Submission& submission, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (const auto& [pid, rec] : submission) {
        out << pid;
        for (Index t : rec) out << ',' << t;
        out << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

inline Submission load_submission(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open submission file: " + path);
    Submission submission;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        auto fields = detail::split_csv_line(line);
        std::vector<Index> ids;
        ids.reserve(fields.size());
        for (const auto& f : fields) {
            Index v = 0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size())
                throw data_error(where + ": bad integer \"" + f + "\"");
            ids.push_back(v);
        }
        if (ids.empty()) throw data_error(where + ": empty line");
        const Index pid = ids.front();
        ids.erase(ids.begin());
        submission.emplace_back(pid, std::move(ids));
    }
    return submission;
}

}  // namespace segue
