// SPDX-License-Identifier: Apache-2.0
#include <numeric>
#include <sstream>

#include "bpx/error.hpp"
#include "bpx/model.hpp"
#include "bpx/serialize.hpp"
#include "bpx/sparse.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bpx;

namespace {

BinaryLabelMatrix identity3() { return BinaryLabelMatrix::from_rows(3, {{0}, {1}, {2}}); }

}  // namespace

TEST_CASE("column_sums over row subsets") {
    const auto y = identity3();
    const std::vector<std::size_t> first_two{0, 1};
    CHECK(column_sums(y, first_two) == std::vector<std::size_t>{1, 1, 0});
    CHECK(column_sums(y, std::vector<std::size_t>{}) == std::vector<std::size_t>{0, 0, 0});

    const auto ones = BinaryLabelMatrix::from_rows(2, {{0, 1}, {0, 1}});
    CHECK(column_sums(ones, first_two) == std::vector<std::size_t>{2, 2});

    const std::vector<std::size_t> bad{3};
    CHECK_THROWS_AS(column_sums(y, bad), StructuralError);
}

TEST_CASE("column_sums: full set matches nnz per column and is additive") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto y = testing::random_labels(rng, 40, 15, 0.2);
        std::vector<std::size_t> all(y.rows());
        std::iota(all.begin(), all.end(), 0);
        std::vector<std::size_t> per_col(y.cols(), 0);
        for (auto j : y.col_indices()) ++per_col[j];
        CHECK(column_sums(y, all) == per_col);
        CHECK(column_sums(y) == per_col);

        std::vector<std::size_t> a, b;
        for (auto i : all) (rng.bernoulli(0.5) ? a : b).push_back(i);
        auto sa = column_sums(y, a);
        const auto sb = column_sums(y, b);
        for (std::size_t j = 0; j < sa.size(); ++j) sa[j] += sb[j];
        CHECK(sa == per_col);
    }
}

TEST_CASE("validate_csr reports the first violation") {
    const std::vector<double> vals{1.0, 2.0};
    CHECK(validate_csr(2, 3, std::vector<std::size_t>{0, 1, 2}, std::vector<index_t>{0, 2}, &vals).ok);

    const auto decreasing = validate_csr(2, 3, std::vector<std::size_t>{0, 2, 1}, std::vector<index_t>{0, 2}, &vals);
    CHECK_FALSE(decreasing.ok);

    const std::vector<double> three{1.0, 2.0, 3.0};
    const auto falling =
        validate_csr(3, 3, std::vector<std::size_t>{0, 2, 1, 3}, std::vector<index_t>{0, 1, 2}, &three);
    CHECK_FALSE(falling.ok);
    CHECK(falling.row == 1);
    CHECK(falling.message.find("row 1") != std::string::npos);

    const auto dup = validate_csr(1, 3, std::vector<std::size_t>{0, 2}, std::vector<index_t>{1, 1}, &vals);
    CHECK_FALSE(dup.ok);
    CHECK(dup.message.find("duplicate") != std::string::npos);

    const auto range = validate_csr(1, 2, std::vector<std::size_t>{0, 1}, std::vector<index_t>{2}, nullptr);
    CHECK_FALSE(range.ok);

    const std::vector<double> nan{std::nan("")};
    CHECK_FALSE(validate_csr(1, 2, std::vector<std::size_t>{0, 1}, std::vector<index_t>{0}, &nan).ok);

    CHECK_THROWS_AS(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), StructuralError);
    CHECK_THROWS_AS(BinaryLabelMatrix(2, 3, {0, 1}, {0}), StructuralError);
}

TEST_CASE("builder sorts rows and rejects duplicates") {
    SparseMatrixBuilder b(4);
    b.append_row({{3, 1.0}, {1, 0.5}});
    b.append_row({});
    CHECK_THROWS_AS(b.append_row({{2, 1.0}, {2, 3.0}}), StructuralError);
    CHECK_THROWS_AS(b.append_row({{4, 1.0}}), StructuralError);
    const auto m = std::move(b).build();
    CHECK(m.rows() == 2);
    CHECK(m.row(0).indices[0] == 1);
    CHECK(m.row(0).values[1] == 1.0);
    CHECK(m.row(1).nnz() == 0);
}

TEST_CASE("select_rows and normalisation") {
    const SparseMatrix m(3, 2, {0, 2, 2, 3}, {0, 1, 1}, {3.0, 4.0, 2.0});
    const std::vector<std::size_t> rows{2, 0};
    const auto s = m.select_rows(rows);
    CHECK(s.rows() == 2);
    CHECK(s.row(0).values[0] == 2.0);
    const auto u = m.normalized_rows();
    CHECK(u.row(0).values[0] == doctest::Approx(0.6));
    CHECK(u.row(0).values[1] == doctest::Approx(0.8));
    CHECK(u.row(1).nnz() == 0);
    CHECK(u.row(2).values[0] == doctest::Approx(1.0));
}

TEST_CASE("dot products") {
    const SparseMatrix m(2, 4, {0, 2, 4}, {0, 3, 1, 3}, {1.0, 2.0, 5.0, 7.0});
    CHECK(dot(m.row(0), m.row(1)) == 14.0);
    const std::vector<double> dense{1.0, 1.0, 1.0, 0.5};
    CHECK(dot(m.row(1), dense) == 8.5);
}

TEST_CASE("binary container round-trips every matrix type") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto data = testing::random_dataset(rng, 1 + rng.below(30), 1 + rng.below(12), 1 + rng.below(9), 0.3, 0.3);
        std::stringstream a, b;
        write_binary(a, data.features);
        write_binary(b, data.labels);
        CHECK(read_sparse_matrix(a) == data.features);
        CHECK(read_label_matrix(b) == data.labels);
    }
}

TEST_CASE("binary container header checks") {
    const SparseMatrix m(1, 2, {0, 1}, {1}, {0.25});
    std::stringstream s;
    write_binary(s, m);
    const auto bytes = s.str();
    CHECK(bytes.substr(0, 4) == "BPXM");
    CHECK(static_cast<unsigned char>(bytes[4]) == kFormatVersion);   // little-endian u32
    CHECK(bytes[5] == 0);

    std::stringstream wrong_kind(bytes);
    CHECK_THROWS_AS(read_label_matrix(wrong_kind), ParseError);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream bm(bad_magic);
    CHECK_THROWS_AS(read_sparse_matrix(bm), ParseError);

    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_sparse_matrix(truncated), ParseError);

    auto bad_version = bytes;
    bad_version[4] = 9;
    std::stringstream bv(bad_version);
    CHECK_THROWS_AS(read_sparse_matrix(bv), ParseError);
}

TEST_CASE("partition and model validation") {
    Partition p;
    p.q = 2;
    p.instance_cluster_of = {0, 1, 1};
    p.label_clusters = {{0, 2}, {1}};
    p.objective_trace = {-1.0, -2.0};
    CHECK_NOTHROW(validate_partition(p, 3, 3));
    CHECK(p.instance_cluster_sizes() == std::vector<std::size_t>{1, 2});

    auto q = p;
    q.label_clusters[1].clear();
    CHECK_THROWS_AS(validate_partition(q, 3, 3), StructuralError);
    q = p;
    q.objective_trace = {-2.0, -1.0};
    CHECK_THROWS_AS(validate_partition(q, 3, 3), StructuralError);
    q = p;
    q.instance_cluster_of[0] = 2;
    CHECK_THROWS_AS(validate_partition(q, 3, 3), StructuralError);
    q = p;
    q.label_clusters[0] = {2, 0};
    CHECK_THROWS_AS(validate_partition(q, 3, 3), StructuralError);
    CHECK_THROWS_AS(validate_partition(p, 4, 3), StructuralError);

    std::stringstream s;
    write_binary(s, p);
    CHECK(read_partition(s) == p);
}
