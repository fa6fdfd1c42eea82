#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "segue/parallel.hpp"
#include "segue/sparse.hpp"

namespace segue {

struct KernelParams {
    Index knn = 100;       // neighbors kept per pruning axis
    double power_p = 1.0;  // sharpening exponent applied to kept similarities
    double alpha = 1.0;    // Tversky weight of the left difference
    double beta = 1.0;     // Tversky weight of the right difference
    double shrink_h = 0.0;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;

    void check() const {
        if (knn < 0) throw std::invalid_argument("kernel params: knn must be >= 0");
        if (power_p < 0.0) throw std::invalid_argument("kernel params: power must be >= 0");
        if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("kernel params: alpha in [0,1]");
        if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("kernel params: beta in [0,1]");
        if (shrink_h < 0.0) throw std::invalid_argument("kernel params: shrink must be >= 0");
        if (bm25_k1 <= 0.0) throw std::invalid_argument("kernel params: bm25_k1 must be > 0");
        if (bm25_b < 0.0 || bm25_b > 1.0) throw std::invalid_argument("kernel params: bm25_b in [0,1]");
    }
};

enum class PruneAxis { column, row };

// KNN-pruned similarity matrix. Item-based similarities are pruned per
// column (column i holds the kept neighbors of item i), playlist-based ones
// per row. Stored values already carry the power sharpening; the prediction
// kernels never re-apply it.
struct SimilarityMatrix {
    CsrMatrix w;  // square
    Index knn = 0;
    PruneAxis axis = PruneAxis::column;

    Index size() const { return w.n_rows; }

    // Pre-pruning similarities are symmetric, so either stored orientation
    // answers the lookup.
    double sym_value(Index i, Index j) const {
        double v = w.at(i, j);
        return v != 0.0 ? v : w.at(j, i);
    }
};

// Candidate scores for a set of target playlists, dense over items, with the
// playlist's known items tracked in a separate mask. Masked entries keep
// their raw scores (ensembles re-read them) and are excluded from rankings.
struct ScoreSet {
    std::string model;
    Index n_items = 0;
    std::vector<Index> pids;                  // caller-scoped playlist identifiers
    std::vector<std::vector<double>> scores;  // [target][item]
    std::vector<std::vector<Index>> mask;     // sorted item ids per target

    std::size_t size() const { return pids.size(); }

    bool is_masked(std::size_t target, Index item) const {
        const auto& m = mask[target];
        return std::binary_search(m.begin(), m.end(), item);
    }
};

// Okapi BM25 reweighting, rows as documents and columns as terms. Each
// nonzero v at (r, c) becomes
//   idf(c) * v*(k1+1) / (v + k1*(1 - b + b*len(r)/avg_len))
// with idf(c) = ln((n_rows - df + 0.5) / (df + 0.5)) clamped at 0 and
// df = column nonzero count. The sparsity pattern is preserved exactly.
inline CsrMatrix bm25_weight(const CsrMatrix& m, double k1 = 1.2, double b = 0.75) {
    if (k1 <= 0.0) throw std::invalid_argument("bm25: k1 must be > 0");
    if (b < 0.0 || b > 1.0) throw std::invalid_argument("bm25: b must be in [0,1]");
    CsrMatrix out = m;
    if (m.nnz() == 0) return out;

    const std::vector<double> lens = m.row_sums();
    const double total = std::accumulate(lens.begin(), lens.end(), 0.0);
    const double avg_len = total / static_cast<double>(m.n_rows);
    const std::vector<Index> df = m.col_nnz();
    std::vector<double> idf(m.n_cols, 0.0);
    for (Index c = 0; c < m.n_cols; ++c) {
        if (df[c] == 0) continue;
        const double n = static_cast<double>(m.n_rows);
        const double d = static_cast<double>(df[c]);
        idf[c] = std::max(0.0, std::log((n - d + 0.5) / (d + 0.5)));
    }
    for (Index r = 0; r < m.n_rows; ++r) {
        const double norm = k1 * (1.0 - b + b * lens[r] / avg_len);
        for (Offset k = m.indptr[r]; k < m.indptr[r + 1]; ++k) {
            const double v = m.values[k];
            out.values[k] = idf[m.indices[k]] * (v * (k1 + 1.0)) / (v + norm);
        }
    }
    return out;
}

namespace detail {

// Keeps the k largest (value, index) pairs, ties resolved toward the smaller
// index, then applies the power sharpening.
inline void prune_and_sharpen(std::vector<std::pair<Index, double>>& entries, Index k, double p) {
    auto better = [](const std::pair<Index, double>& a, const std::pair<Index, double>& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    if (static_cast<Index>(entries.size()) > k) {
        std::nth_element(entries.begin(), entries.begin() + k, entries.end(), better);
        entries.resize(k);
    }
    if (p != 1.0)
        for (auto& e : entries) e.second = std::pow(e.second, p);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
}

// Shared scatter-accumulate driver: for each pivot i, accumulates
// sum over (u, w) in pivots_i of w * rows_u, excluding the diagonal.
// transform(i, j, raw) maps the accumulated value to the similarity.
template <typename Transform>
std::vector<std::vector<std::pair<Index, double>>> pairwise_rows(const CsrMatrix& pivots,
                                                                 const CsrMatrix& rows,
                                                                 const KernelParams& params,
                                                                 int threads,
                                                                 Transform&& transform) {
    const Index n = pivots.n_rows;
    std::vector<std::vector<std::pair<Index, double>>> kept(n);
    if (params.knn == 0) return kept;
    parallel_for(0, static_cast<std::size_t>(n), threads, [&](std::size_t ii) {
        thread_local std::vector<double> acc;
        thread_local std::vector<Index> touched;
        if (acc.size() < static_cast<std::size_t>(rows.n_cols)) acc.assign(rows.n_cols, 0.0);
        touched.clear();
        const Index i = static_cast<Index>(ii);
        auto ucols = pivots.row_indices(i);
        auto uvals = pivots.row_values(i);
        for (std::size_t k = 0; k < ucols.size(); ++k) {
            const Index u = ucols[k];
            const double w = uvals[k];
            auto jcols = rows.row_indices(u);
            auto jvals = rows.row_values(u);
            for (std::size_t t = 0; t < jcols.size(); ++t) {
                if (acc[jcols[t]] == 0.0) touched.push_back(jcols[t]);
                acc[jcols[t]] += w * jvals[t];
            }
        }
        auto& out = kept[ii];
        out.reserve(touched.size());
        for (Index j : touched) {
            const double raw = acc[j];
            acc[j] = 0.0;
            if (j == i || raw == 0.0) continue;  // self-similarity excluded
            const double s = transform(i, j, raw);
            if (s > 0.0) out.emplace_back(j, s);
        }
        prune_and_sharpen(out, params.knn, params.power_p);
    });
    return kept;
}

inline SimilarityMatrix assemble(Index n, Index knn, PruneAxis axis,
                                 const std::vector<std::vector<std::pair<Index, double>>>& kept,
                                 bool kept_is_column) {
    SimilarityMatrix sim;
    sim.knn = knn;
    sim.axis = axis;
    std::vector<Triplet> entries;
    std::size_t total = 0;
    for (const auto& k : kept) total += k.size();
    entries.reserve(total);
    for (Index i = 0; i < n; ++i) {
        for (const auto& [j, v] : kept[i]) {
            // Column-pruned output stores item i's kept neighbor j at (j, i).
            if (kept_is_column)
                entries.push_back({j, i, v});
            else
                entries.push_back({i, j, v});
        }
    }
    sim.w = CsrMatrix::from_triplets(n, n, std::move(entries));
    return sim;
}

}  // namespace detail

// Similarity between columns of m as plain dot products of the columns,
// pruned to the knn largest values per column, then sharpened with power p.
inline SimilarityMatrix dot_similarity(const CsrMatrix& m, const KernelParams& params,
                                       int threads = 1) {
    params.check();
    const CsrMatrix t = m.transposed();  // rows = original columns
    auto kept = detail::pairwise_rows(
        t, m, params, threads, [](Index, Index, double raw) { return raw; });
    return detail::assemble(m.n_cols, params.knn, PruneAxis::column, kept, true);
}

// Tversky similarity between rows of m:
//   s_ij = inter / (alpha*(|r_i| - inter) + beta*(|r_j| - inter) + inter + h)
// with inter = r_i . r_j and |r| the row's L1 mass. A non-positive
// denominator yields similarity 0. Pruned to knn per row, then sharpened.
inline SimilarityMatrix tversky_similarity(const CsrMatrix& m, const KernelParams& params,
                                           int threads = 1) {
    params.check();
    const CsrMatrix t = m.transposed();
    const std::vector<double> lens = m.row_sums();
    const double alpha = params.alpha, beta = params.beta, h = params.shrink_h;
    auto kept = detail::pairwise_rows(
        m, t, params, threads, [&](Index i, Index j, double inter) {
            const double denom =
                alpha * (lens[i] - inter) + beta * (lens[j] - inter) + inter + h;
            return denom <= 0.0 ? 0.0 : inter / denom;
        });
    return detail::assemble(m.n_rows, params.knn, PruneAxis::row, kept, false);
}

namespace detail {

inline void check_targets(const CsrMatrix& ptm, std::span<const Index> target_rows) {
    for (Index u : target_rows)
        if (u < 0 || u >= ptm.n_rows)
            throw std::out_of_range("predict: target row " + std::to_string(u) +
                                    " outside [0, " + std::to_string(ptm.n_rows) + ")");
}

}  // namespace detail

// Item-based score prediction: score(u, i) = sum over known items j of
// ptm[u,j] * sim[j,i]. Items already in u are reported in the mask.
inline ScoreSet predict_item_based(const CsrMatrix& ptm, const SimilarityMatrix& sim,
                                   std::span<const Index> target_rows, int threads = 1,
                                   std::string tag = "item_knn") {
    if (sim.w.n_rows != ptm.n_cols || sim.w.n_cols != ptm.n_cols)
        throw internal_error("predict_item_based: similarity dimension mismatch");
    detail::check_targets(ptm, target_rows);
    ScoreSet out;
    out.model = std::move(tag);
    out.n_items = ptm.n_cols;
    out.pids.assign(target_rows.begin(), target_rows.end());
    out.scores.resize(target_rows.size());
    out.mask.resize(target_rows.size());
    parallel_for(0, target_rows.size(), threads, [&](std::size_t k) {
        const Index u = target_rows[k];
        auto& row = out.scores[k];
        row.assign(ptm.n_cols, 0.0);
        auto jcols = ptm.row_indices(u);
        auto jvals = ptm.row_values(u);
        for (std::size_t a = 0; a < jcols.size(); ++a) {
            const Index j = jcols[a];
            const double r_uj = jvals[a];
            auto icols = sim.w.row_indices(j);
            auto ivals = sim.w.row_values(j);
            for (std::size_t b = 0; b < icols.size(); ++b) row[icols[b]] += r_uj * ivals[b];
        }
        out.mask[k].assign(jcols.begin(), jcols.end());
    });
    return out;
}

// Playlist-based score prediction: score(u, i) = sum over playlists v of
// user_sim[u,v] * ptm[v,i], with u's known items masked.
inline ScoreSet predict_user_based(const CsrMatrix& ptm, const SimilarityMatrix& user_sim,
                                   std::span<const Index> target_rows, int threads = 1,
                                   std::string tag = "user_knn") {
    if (user_sim.w.n_rows != ptm.n_rows || user_sim.w.n_cols != ptm.n_rows)
        throw internal_error("predict_user_based: similarity dimension mismatch");
    detail::check_targets(ptm, target_rows);
    ScoreSet out;
    out.model = std::move(tag);
    out.n_items = ptm.n_cols;
    out.pids.assign(target_rows.begin(), target_rows.end());
    out.scores.resize(target_rows.size());
    out.mask.resize(target_rows.size());
    parallel_for(0, target_rows.size(), threads, [&](std::size_t k) {
        const Index u = target_rows[k];
        auto& row = out.scores[k];
        row.assign(ptm.n_cols, 0.0);
        auto vcols = user_sim.w.row_indices(u);
        auto vvals = user_sim.w.row_values(u);
        for (std::size_t a = 0; a < vcols.size(); ++a) {
            const Index v = vcols[a];
            const double s_uv = vvals[a];
            auto icols = ptm.row_indices(v);
            auto ivals = ptm.row_values(v);
            for (std::size_t b = 0; b < icols.size(); ++b) row[icols[b]] += s_uv * ivals[b];
        }
        auto known = ptm.row_indices(u);
        out.mask[k].assign(known.begin(), known.end());
    });
    return out;
}

// Ranks one dense score vector: highest score first, ties toward the smaller
// item index, masked items skipped.
inline std::vector<Index> top_n_row(std::span<const double> scores,
                                    std::span<const Index> masked, Index n) {
    if (n < 1) throw std::invalid_argument("top_n: n must be >= 1");
    std::vector<Index> cand;
    cand.reserve(scores.size());
    std::size_t mi = 0;
    for (Index i = 0; i < static_cast<Index>(scores.size()); ++i) {
        if (mi < masked.size() && masked[mi] == i) {
            ++mi;
            continue;
        }
        cand.push_back(i);
    }
    auto better = [&](Index a, Index b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    };
    if (static_cast<Index>(cand.size()) > n) {
        std::nth_element(cand.begin(), cand.begin() + n, cand.end(), better);
        cand.resize(n);
    }
    std::sort(cand.begin(), cand.end(), better);
    return cand;
}

// Per playlist, the n highest-scoring unmasked items. Returns fewer than n
// only when the candidate pool is exhausted.
inline std::vector<std::vector<Index>> top_n(const ScoreSet& s, Index n) {
    std::vector<std::vector<Index>> out(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) out[k] = top_n_row(s.scores[k], s.mask[k], n);
    return out;
}

}  // namespace segue
