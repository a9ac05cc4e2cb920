// SPDX-License-Identifier: Apache-2.0
#include "bpx/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "bpx/error.hpp"

namespace bpx {

ValidationReport validate_csr(std::size_t rows, std::size_t cols,
                              std::span<const std::size_t> row_offsets,
                              std::span<const index_t> col_indices,
                              const std::vector<double>* values) {
    auto fail = [](std::size_t row, std::string msg) {
        return ValidationReport{false, row, std::move(msg)};
    };
    if (row_offsets.size() != rows + 1) {
        return fail(0, "row_offsets has " + std::to_string(row_offsets.size()) +
                           " entries, expected " + std::to_string(rows + 1));
    }
    if (row_offsets.front() != 0) return fail(0, "row_offsets must start at 0");
    if (row_offsets.back() != col_indices.size()) {
        return fail(rows, "last row offset " + std::to_string(row_offsets.back()) +
                              " does not equal nnz " + std::to_string(col_indices.size()));
    }
    if (values && values->size() != col_indices.size()) {
        return fail(0, "values length differs from col_indices length");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        const auto b = row_offsets[i];
        const auto e = row_offsets[i + 1];
        if (e < b) return fail(i, "row_offsets decrease at row " + std::to_string(i));
        if (e > col_indices.size()) return fail(i, "row " + std::to_string(i) + " exceeds nnz");
        for (auto p = b; p < e; ++p) {
            if (col_indices[p] >= cols) {
                return fail(i, "row " + std::to_string(i) + ": column " +
                                   std::to_string(col_indices[p]) + " out of range");
            }
            if (p > b && col_indices[p] <= col_indices[p - 1]) {
                return fail(i, "row " + std::to_string(i) +
                                   ": column indices not strictly increasing (duplicate or unsorted)");
            }
            if (values && !std::isfinite((*values)[p])) {
                return fail(i, "row " + std::to_string(i) + ": non-finite value");
            }
        }
    }
    return {};
}

namespace {

void throw_if_invalid(const ValidationReport& report) {
    if (!report) throw StructuralError(report.message);
}

}  // namespace

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                           std::vector<index_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    throw_if_invalid(validate_csr(rows_, cols_, row_offsets_, col_indices_, &values_));
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::size_t> offsets{0};
    offsets.reserve(rows.size() + 1);
    std::vector<index_t> indices;
    std::vector<double> vals;
    for (auto r : rows) {
        if (r >= rows_) throw StructuralError("row index " + std::to_string(r) + " out of range");
        const auto b = row_offsets_[r];
        const auto e = row_offsets_[r + 1];
        indices.insert(indices.end(), col_indices_.begin() + b, col_indices_.begin() + e);
        vals.insert(vals.end(), values_.begin() + b, values_.begin() + e);
        offsets.push_back(indices.size());
    }
    return SparseMatrix(rows.size(), cols_, std::move(offsets), std::move(indices), std::move(vals));
}

SparseMatrix SparseMatrix::normalized_rows() const {
    auto vals = values_;
    for (std::size_t i = 0; i < rows_; ++i) {
        double sq = 0.0;
        for (auto p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) sq += vals[p] * vals[p];
        if (sq <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(sq);
        for (auto p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) vals[p] *= inv;
    }
    return SparseMatrix(rows_, cols_, row_offsets_, col_indices_, std::move(vals));
}

BinaryLabelMatrix::BinaryLabelMatrix(std::size_t rows, std::size_t cols,
                                     std::vector<std::size_t> row_offsets,
                                     std::vector<index_t> col_indices)
    : rows_(rows), cols_(cols), row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)) {
    throw_if_invalid(validate_csr(rows_, cols_, row_offsets_, col_indices_, nullptr));
}

BinaryLabelMatrix BinaryLabelMatrix::from_rows(std::size_t cols, std::vector<std::vector<index_t>> rows) {
    std::vector<std::size_t> offsets{0};
    offsets.reserve(rows.size() + 1);
    std::vector<index_t> indices;
    for (auto& r : rows) {
        std::sort(r.begin(), r.end());
        indices.insert(indices.end(), r.begin(), r.end());
        offsets.push_back(indices.size());
    }
    return BinaryLabelMatrix(rows.size(), cols, std::move(offsets), std::move(indices));
}

bool BinaryLabelMatrix::contains(std::size_t i, index_t j) const noexcept {
    auto r = row(i);
    return std::binary_search(r.begin(), r.end(), j);
}

BinaryLabelMatrix BinaryLabelMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::size_t> offsets{0};
    offsets.reserve(rows.size() + 1);
    std::vector<index_t> indices;
    for (auto r : rows) {
        if (r >= rows_) throw StructuralError("row index " + std::to_string(r) + " out of range");
        auto labels = row(r);
        indices.insert(indices.end(), labels.begin(), labels.end());
        offsets.push_back(indices.size());
    }
    return BinaryLabelMatrix(rows.size(), cols_, std::move(offsets), std::move(indices));
}

void SparseMatrixBuilder::append_row(std::vector<std::pair<index_t, double>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t p = 0; p < entries.size(); ++p) {
        if (entries[p].first >= cols_) {
            throw StructuralError("column " + std::to_string(entries[p].first) + " out of range");
        }
        if (p > 0 && entries[p].first == entries[p - 1].first) {
            throw StructuralError("duplicate column " + std::to_string(entries[p].first));
        }
    }
    for (const auto& [j, v] : entries) {
        indices_.push_back(j);
        values_.push_back(v);
    }
    offsets_.push_back(indices_.size());
}

SparseMatrix SparseMatrixBuilder::build() && {
    const auto n = rows();
    return SparseMatrix(n, cols_, std::move(offsets_), std::move(indices_), std::move(values_));
}

std::vector<std::size_t> column_sums(const BinaryLabelMatrix& labels,
                                     std::span<const std::size_t> row_subset) {
    std::vector<std::size_t> sums(labels.cols(), 0);
    for (auto i : row_subset) {
        if (i >= labels.rows()) {
            throw StructuralError("row index " + std::to_string(i) + " out of range");
        }
        for (auto j : labels.row(i)) ++sums[j];
    }
    return sums;
}

std::vector<std::size_t> column_sums(const BinaryLabelMatrix& labels) {
    std::vector<std::size_t> sums(labels.cols(), 0);
    for (auto j : labels.col_indices()) ++sums[j];
    return sums;
}

double dot(SparseVectorView x, std::span<const double> dense) noexcept {
    double s = 0.0;
    for (std::size_t p = 0; p < x.indices.size(); ++p) s += x.values[p] * dense[x.indices[p]];
    return s;
}

double dot(SparseVectorView a, SparseVectorView b) noexcept {
    double s = 0.0;
    std::size_t p = 0, r = 0;
    while (p < a.indices.size() && r < b.indices.size()) {
        if (a.indices[p] < b.indices[r]) {
            ++p;
        } else if (b.indices[r] < a.indices[p]) {
            ++r;
        } else {
            s += a.values[p++] * b.values[r++];
        }
    }
    return s;
}

}  // namespace bpx
