// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bpx/bp.hpp"
#include "bpx/linear.hpp"
#include "bpx/model.hpp"

namespace bpx {

struct PredictionResult {
    std::vector<std::vector<index_t>> top_labels;   // per instance, best first
    std::vector<std::vector<double>> scores;        // aligned with top_labels
    std::vector<std::uint64_t> mults_used;          // inner products per instance
    std::vector<std::uint32_t> routed_cluster;      // empty for the naive model

    std::size_t size() const noexcept { return top_labels.size(); }
};

struct TrainTimings {
    double partition_seconds = 0.0;
    double training_seconds = 0.0;
    std::optional<QSearchReport> q_search;
};

/// Partitions the data (searching q when config.q is unset), then trains the
/// router on the instance assignment and one OvA model per cluster on that
/// cluster's instances restricted to its labels. Features are used as given;
/// normalisation is the caller's choice.
BpModel train_bp(const Dataset& data, const BpConfig& bp_config, const TrainConfig& train_config,
                 TrainTimings* timings = nullptr);

/// Same as train_bp with a precomputed partition. Throws StructuralError when
/// the partition does not fit the dataset.
BpModel train_bp_with_partition(const Dataset& data, Partition partition, const TrainConfig& train_config,
                                TrainTimings* timings = nullptr);

/// Routes each row to one cluster (q inner products) and ranks that cluster's
/// labels (|L_l| inner products). Returns at most k labels per row, fewer when
/// the cluster is smaller than k. Ties rank the smaller label id first.
PredictionResult predict_bp(const BpModel& model, const SparseMatrix& x, std::size_t k, unsigned threads = 1);

/// OvA over all m labels.
LinearModel train_naive(const Dataset& data, const TrainConfig& config);

PredictionResult predict_naive(const LinearModel& model, const SparseMatrix& x, std::size_t k,
                               unsigned threads = 1);

/// One line per instance: "label:score" pairs separated by spaces.
void write_predictions(std::ostream& out, const PredictionResult& result);

/// CSV "instance,cluster,mults_used"; cluster is -1 for the naive model.
void write_mults_csv(std::ostream& out, const PredictionResult& result);

/// Reads write_predictions output; mults_csv may be null.
PredictionResult read_predictions(std::istream& predictions, std::istream* mults_csv);

}  // namespace bpx
