// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bpx/sparse.hpp"

namespace bpx {

struct Dataset {
    SparseMatrix features;      // n x d
    BinaryLabelMatrix labels;   // n x m

    Dataset() = default;
    /// Throws StructuralError when the row counts differ.
    Dataset(SparseMatrix x, BinaryLabelMatrix y);

    std::size_t num_instances() const noexcept { return features.rows(); }
    std::size_t num_features() const noexcept { return features.cols(); }
    std::size_t num_labels() const noexcept { return labels.cols(); }

    Dataset select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Paired instance/label clusters. Instance clusters are disjoint and cover
/// every instance; label clusters may overlap.
struct Partition {
    std::size_t q = 0;
    double lambda = 0.0;
    std::vector<std::uint32_t> instance_cluster_of;
    std::vector<std::vector<index_t>> label_clusters;
    std::vector<double> objective_trace;

    std::size_t num_instances() const noexcept { return instance_cluster_of.size(); }

    /// Instance ids of each cluster, ascending.
    std::vector<std::vector<std::size_t>> instance_members() const;

    std::vector<std::size_t> instance_cluster_sizes() const;

    friend bool operator==(const Partition&, const Partition&) = default;
};

/// Throws StructuralError unless the partition is well formed for n instances
/// and m labels (label clusters sorted, unique, non-empty; trace nonincreasing).
void validate_partition(const Partition& p, std::size_t n, std::size_t m);

/// One-vs-all linear scorer: score_c(x) = <w_c, x> + bias_c.
struct LinearModel {
    SparseMatrix weights;                 // num_classes x d
    std::vector<double> bias;
    std::vector<index_t> class_ids;       // row -> original label / cluster id
    std::vector<std::uint8_t> constant;   // 1 when the class had a single target value

    std::size_t num_classes() const noexcept { return class_ids.size(); }
    std::size_t num_features() const noexcept { return weights.cols(); }

    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

void validate_linear_model(const LinearModel& model);

/// Router plus one classifier per (instance cluster, label cluster) pair.
struct BpModel {
    LinearModel router;
    std::vector<LinearModel> cluster_models;
    Partition partition;
    std::vector<std::uint64_t> train_label_counts;
    bool normalize_features = true;

    std::size_t num_features() const noexcept { return router.num_features(); }
    std::size_t num_labels() const noexcept { return train_label_counts.size(); }

    friend bool operator==(const BpModel&, const BpModel&) = default;
};

void validate_bp_model(const BpModel& model);

}  // namespace bpx
