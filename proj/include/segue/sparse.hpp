#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "segue/common.hpp"
#include "segue/parallel.hpp"

namespace segue {

struct Triplet {
    Index row;
    Index col;
    double value;
};

enum class DupPolicy { sum, max };

// Compressed sparse row matrix with non-negative values and column indices
// sorted within each row. This one type backs both the playlist-track matrix
// (rows = playlists, columns = tracks, cell 1 when the track is in the
// playlist) and the content matrices (rows = items, columns = features).
struct CsrMatrix {
    Index n_rows = 0;
    Index n_cols = 0;
    std::vector<Offset> indptr{0};  // size n_rows + 1
    std::vector<Index> indices;
    std::vector<double> values;

    CsrMatrix() = default;
    CsrMatrix(Index rows, Index cols)
        : n_rows(rows), n_cols(cols), indptr(static_cast<std::size_t>(rows) + 1, 0) {}

    Offset nnz() const { return static_cast<Offset>(indices.size()); }

    std::span<const Index> row_indices(Index r) const {
        return {indices.data() + indptr[r], static_cast<std::size_t>(indptr[r + 1] - indptr[r])};
    }
    std::span<const double> row_values(Index r) const {
        return {values.data() + indptr[r], static_cast<std::size_t>(indptr[r + 1] - indptr[r])};
    }
    Offset row_nnz(Index r) const { return indptr[r + 1] - indptr[r]; }

    // Value at (r, c), 0.0 when the cell is not stored.
    double at(Index r, Index c) const {
        auto cols = row_indices(r);
        auto it = std::lower_bound(cols.begin(), cols.end(), c);
        if (it == cols.end() || *it != c) return 0.0;
        return values[indptr[r] + (it - cols.begin())];
    }

    std::vector<double> row_sums() const {
        std::vector<double> sums(n_rows, 0.0);
        for (Index r = 0; r < n_rows; ++r)
            for (double v : row_values(r)) sums[r] += v;
        return sums;
    }

    // Nonzero count per column (document frequency when rows are documents).
    std::vector<Index> col_nnz() const {
        std::vector<Index> counts(n_cols, 0);
        for (Index c : indices) ++counts[c];
        return counts;
    }

    CsrMatrix transposed() const {
        CsrMatrix t(n_cols, n_rows);
        std::vector<Offset> counts(static_cast<std::size_t>(n_cols) + 1, 0);
        for (Index c : indices) ++counts[c + 1];
        std::partial_sum(counts.begin(), counts.end(), counts.begin());
        t.indptr = counts;
        t.indices.resize(indices.size());
        t.values.resize(values.size());
        std::vector<Offset> cursor(counts.begin(), counts.end() - 1);
        for (Index r = 0; r < n_rows; ++r) {
            for (Offset k = indptr[r]; k < indptr[r + 1]; ++k) {
                Offset dst = cursor[indices[k]]++;
                t.indices[dst] = r;
                t.values[dst] = values[k];
            }
        }
        return t;
    }

    // Throws internal_error when an invariant does not hold: sorted unique
    // column indices per row, values >= 0, indices in range.
    void check_valid() const {
        if (n_rows < 0 || n_cols < 0) throw internal_error("csr: negative dimension");
        if (indptr.size() != static_cast<std::size_t>(n_rows) + 1)
            throw internal_error("csr: indptr size mismatch");
        if (indptr.front() != 0 || indptr.back() != nnz())
            throw internal_error("csr: indptr bounds mismatch");
        for (Index r = 0; r < n_rows; ++r) {
            if (indptr[r] > indptr[r + 1]) throw internal_error("csr: indptr not monotone");
            for (Offset k = indptr[r]; k < indptr[r + 1]; ++k) {
                if (indices[k] < 0 || indices[k] >= n_cols)
                    throw internal_error("csr: column index out of range");
                if (k > indptr[r] && indices[k] <= indices[k - 1])
                    throw internal_error("csr: duplicate or unsorted column in row " +
                                         std::to_string(r));
                if (values[k] < 0.0) throw internal_error("csr: negative value");
            }
        }
    }

    static CsrMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries,
                                   DupPolicy dup = DupPolicy::sum) {
        for (const auto& t : entries) {
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
                throw std::invalid_argument("from_triplets: entry out of range");
        }
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        CsrMatrix m(rows, cols);
        m.indices.reserve(entries.size());
        m.values.reserve(entries.size());
        std::size_t i = 0;
        for (Index r = 0; r < rows; ++r) {
            while (i < entries.size() && entries[i].row == r) {
                Index c = entries[i].col;
                double v = entries[i].value;
                ++i;
                while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
                    v = dup == DupPolicy::sum ? v + entries[i].value
                                              : std::max(v, entries[i].value);
                    ++i;
                }
                m.indices.push_back(c);
                m.values.push_back(v);
            }
            m.indptr[r + 1] = static_cast<Offset>(m.indices.size());
        }
        return m;
    }
};

// C = A * B via row-wise scatter accumulation. Rows of C are independent, so
// the product is computed in parallel without any ordering dependency.
inline CsrMatrix matmul(const CsrMatrix& a, const CsrMatrix& b, int threads = 1) {
    if (a.n_cols != b.n_rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    CsrMatrix c(a.n_rows, b.n_cols);
    std::vector<std::vector<Index>> row_idx(a.n_rows);
    std::vector<std::vector<double>> row_val(a.n_rows);
    parallel_for(0, static_cast<std::size_t>(a.n_rows), threads, [&](std::size_t ri) {
        thread_local std::vector<double> acc;
        thread_local std::vector<Index> touched;
        if (acc.size() < static_cast<std::size_t>(b.n_cols)) acc.assign(b.n_cols, 0.0);
        touched.clear();
        const Index r = static_cast<Index>(ri);
        auto cols = a.row_indices(r);
        auto vals = a.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const Index mid = cols[k];
            const double av = vals[k];
            auto bcols = b.row_indices(mid);
            auto bvals = b.row_values(mid);
            for (std::size_t j = 0; j < bcols.size(); ++j) {
                if (acc[bcols[j]] == 0.0) touched.push_back(bcols[j]);
                acc[bcols[j]] += av * bvals[j];
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& ci = row_idx[ri];
        auto& cv = row_val[ri];
        ci.reserve(touched.size());
        cv.reserve(touched.size());
        for (Index col : touched) {
            if (acc[col] != 0.0) {
                ci.push_back(col);
                cv.push_back(acc[col]);
            }
            acc[col] = 0.0;
        }
    });
    for (Index r = 0; r < a.n_rows; ++r) {
        c.indices.insert(c.indices.end(), row_idx[r].begin(), row_idx[r].end());
        c.values.insert(c.values.end(), row_val[r].begin(), row_val[r].end());
        c.indptr[r + 1] = static_cast<Offset>(c.indices.size());
    }
    return c;
}

// The playlist-track matrix and the feature matrices share the CSR layout;
// the aliases keep call sites readable.
using InteractionMatrix = CsrMatrix;
using FeatureMatrix = CsrMatrix;

}  // namespace segue
