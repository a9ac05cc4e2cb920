// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bpx {

using index_t = std::uint32_t;

/// A borrowed sparse row: parallel index/value spans, indices strictly increasing.
struct SparseVectorView {
    std::span<const index_t> indices;
    std::span<const double> values;

    std::size_t nnz() const noexcept { return indices.size(); }
};

/// First invariant violation found in a CSR triple.
struct ValidationReport {
    bool ok = true;
    std::size_t row = 0;
    std::string message;

    explicit operator bool() const noexcept { return ok; }
};

/// Checks the CSR invariants. values may be null for a binary pattern.
ValidationReport validate_csr(std::size_t rows, std::size_t cols,
                              std::span<const std::size_t> row_offsets,
                              std::span<const index_t> col_indices,
                              const std::vector<double>* values);

/// Row-major sparse real matrix (CSR). Immutable after construction.
class SparseMatrix {
public:
    SparseMatrix() : row_offsets_(1, 0) {}

    /// Throws StructuralError when the triple violates any invariant.
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                 std::vector<index_t> col_indices, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return col_indices_.size(); }

    SparseVectorView row(std::size_t i) const noexcept {
        const auto b = row_offsets_[i];
        const auto e = row_offsets_[i + 1];
        return {std::span<const index_t>(col_indices_).subspan(b, e - b),
                std::span<const double>(values_).subspan(b, e - b)};
    }

    const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<index_t>& col_indices() const noexcept { return col_indices_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Rows in the given order (duplicates allowed).
    SparseMatrix select_rows(std::span<const std::size_t> rows) const;

    /// Copy with every non-empty row scaled to unit L2 norm.
    SparseMatrix normalized_rows() const;

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_;
    std::vector<index_t> col_indices_;
    std::vector<double> values_;
};

/// Sparse {0,1} matrix; a stored index means the entry is 1.
class BinaryLabelMatrix {
public:
    BinaryLabelMatrix() : row_offsets_(1, 0) {}

    BinaryLabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                      std::vector<index_t> col_indices);

    /// Builds from per-row label lists; each list is sorted and must be duplicate-free.
    static BinaryLabelMatrix from_rows(std::size_t cols, std::vector<std::vector<index_t>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return col_indices_.size(); }

    std::span<const index_t> row(std::size_t i) const noexcept {
        return std::span<const index_t>(col_indices_)
            .subspan(row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]);
    }

    bool contains(std::size_t i, index_t j) const noexcept;

    const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<index_t>& col_indices() const noexcept { return col_indices_; }

    BinaryLabelMatrix select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const BinaryLabelMatrix&, const BinaryLabelMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_;
    std::vector<index_t> col_indices_;
};

/// Accumulates rows of (index, value) pairs; rows are sorted on append.
class SparseMatrixBuilder {
public:
    explicit SparseMatrixBuilder(std::size_t cols) : cols_(cols) { offsets_.push_back(0); }

    /// Throws StructuralError on an out-of-range or duplicated index.
    void append_row(std::vector<std::pair<index_t, double>> entries);

    std::size_t rows() const noexcept { return offsets_.size() - 1; }

    SparseMatrix build() &&;

private:
    std::size_t cols_;
    std::vector<std::size_t> offsets_;
    std::vector<index_t> indices_;
    std::vector<double> values_;
};

/// Entry j counts the rows in row_subset tagged with label j.
std::vector<std::size_t> column_sums(const BinaryLabelMatrix& labels,
                                     std::span<const std::size_t> row_subset);

/// Per-column nonzero counts over every row.
std::vector<std::size_t> column_sums(const BinaryLabelMatrix& labels);

double dot(SparseVectorView x, std::span<const double> dense) noexcept;

/// Inner product of two sorted sparse vectors.
double dot(SparseVectorView a, SparseVectorView b) noexcept;

}  // namespace bpx
