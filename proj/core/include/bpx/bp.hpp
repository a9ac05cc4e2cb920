// SPDX-License-Identifier: Apache-2.0
#pragma once

// Block-wise partitioning: jointly cluster instances and labels so that the
// label matrix, permuted by cluster, is close to block diagonal.
//
// For q paired clusters the objective is
//
//   f = -(number of y_ij = 1 with j in the label cluster paired with i's
//         instance cluster) + lambda * sum_l |L_l|^2
//
// and it is minimised by alternating two exact half-steps: the best label
// clusters for fixed instance clusters, then the best instance cluster for
// every instance given the label clusters.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "bpx/model.hpp"
#include "bpx/sparse.hpp"

namespace bpx {

struct BpConfig {
    double lambda = 1.0;
    std::optional<std::size_t> q;      // nullopt: choose with search_q
    std::size_t q_max = 16;            // search bound when q is automatic
    std::size_t max_alt_iters = 100;
    double conv_tol = 1e-5;
    std::size_t min_labels_per_cluster = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t kmeans_max_iters = 50;
    double kmeans_tol = 1e-6;
    std::size_t kmeans_restarts = 4;
};

void validate(const BpConfig& config);

struct ObjectiveValue {
    std::uint64_t captured_ones = 0;
    double penalty = 0.0;
    double f = 0.0;
};

ObjectiveValue objective(const BinaryLabelMatrix& labels, std::span<const std::uint32_t> instance_cluster_of,
                         const std::vector<std::vector<index_t>>& label_clusters, double lambda);

ObjectiveValue objective(const BinaryLabelMatrix& labels, const Partition& partition);

struct KMeansOptions {
    std::size_t max_iters = 50;
    double tol = 1e-6;      // stop when no centroid moves farther than this
    std::size_t restarts = 4;   // independent seedings; the lowest inertia wins
    unsigned threads = 1;
};

/// Lloyd's k-means on sparse rows with greedy k-means++ seeding, best of
/// options.restarts runs by total squared distance. Empty clusters are
/// re-seeded from the point farthest from its centroid. Throws
/// std::invalid_argument when q == 0 or q > rows.
std::vector<std::uint32_t> init_instance_clusters(const SparseMatrix& features, std::size_t q, std::uint64_t seed,
                                                  const KMeansOptions& options = {});

/// Label choice for one cluster given its per-label counts: labels ordered by
/// count (descending, then index), the shortest prefix minimising
/// -sum(counts) + lambda * J^2, extended to at least min_labels. Ascending ids.
std::vector<index_t> select_labels_from_counts(std::span<const std::size_t> counts, double lambda,
                                               std::size_t min_labels);

/// Best label clusters for fixed instance clusters. A cluster with no
/// instances gets the min_labels most frequent labels overall.
std::vector<std::vector<index_t>> select_label_clusters(const BinaryLabelMatrix& labels,
                                                        std::span<const std::uint32_t> instance_cluster_of,
                                                        std::size_t q, double lambda, std::size_t min_labels,
                                                        unsigned threads = 1);

/// Moves every instance to the cluster whose label set covers most of its
/// labels (smallest index on ties). Instances covered by no cluster keep
/// their entry in `previous`.
std::vector<std::uint32_t> select_instance_clusters(const BinaryLabelMatrix& labels,
                                                    const std::vector<std::vector<index_t>>& label_clusters,
                                                    std::span<const std::uint32_t> previous, unsigned threads = 1);

/// Alternates the two selection steps starting from `initial` until the
/// objective changes by less than conv_tol, nothing moves, or max_alt_iters.
Partition fit_partition_from(const BinaryLabelMatrix& labels, std::vector<std::uint32_t> initial, std::size_t q,
                             const BpConfig& config);

/// k-means initialisation followed by fit_partition_from. config.q must be set.
Partition fit_partition(const Dataset& data, const BpConfig& config);

struct QSearchEntry {
    std::size_t q = 0;
    std::uint64_t captured_ones = 0;
    double captured_proportion = 0.0;
    double objective = 0.0;
    bool any_empty = false;
};

struct QSearchReport {
    std::size_t chosen_q = 0;
    std::vector<QSearchEntry> entries;
    Partition chosen_partition;
};

/// Fits q = 2, 3, ... up to q_max and stops at the first q leaving a paired
/// cluster empty; the chosen q is the last one before it. Throws
/// OptimizationError when already q = 2 leaves a cluster empty.
QSearchReport search_q(const Dataset& data, const BpConfig& config, std::size_t q_max);

void write_q_search_csv(std::ostream& out, const QSearchReport& report);

/// Label matrix with rows grouped by instance cluster (at most row_limit per
/// cluster, original order) and columns grouped by label cluster, each
/// cluster's labels by descending in-cluster count. A label in several
/// clusters appears once per cluster.
struct PermutedMatrix {
    std::vector<std::size_t> row_instance;
    std::vector<std::uint32_t> row_cluster;
    std::vector<index_t> col_label;
    std::vector<std::uint32_t> col_cluster;
    std::vector<std::uint8_t> pixels;   // row-major, 1 when y_ij = 1

    std::size_t height() const noexcept { return row_instance.size(); }
    std::size_t width() const noexcept { return col_label.size(); }
    bool at(std::size_t r, std::size_t c) const noexcept { return pixels[r * width() + c] != 0; }
};

PermutedMatrix export_permuted_matrix(const BinaryLabelMatrix& labels, const Partition& partition,
                                      std::size_t row_limit);

/// Binary PGM (P5); tagged entries are black.
void write_pgm(std::ostream& out, const PermutedMatrix& matrix);
void write_rows_csv(std::ostream& out, const PermutedMatrix& matrix);
void write_cols_csv(std::ostream& out, const PermutedMatrix& matrix);

/// Human-readable JSON summary: sizes, label lists, objective trace.
void write_partition_json(std::ostream& out, const Partition& partition);

}  // namespace bpx
