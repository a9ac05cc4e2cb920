// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bpx/pipeline.hpp"
#include "bpx/sparse.hpp"

namespace bpx {

using Ranking = std::vector<index_t>;

/// Inverse-propensity model for label frequencies:
///   p_j = 1 / (1 + c * (N_j + b)^(-a)),  c = (ln n - 1) * (b + 1)^a
struct PropensityParams {
    double a = 0.55;
    double b = 1.5;
};

/// Mean over rows of |top-k ∩ truth| / k. Missing slots count as wrong.
double precision_at_k(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions, std::size_t k);

/// Mean over labelled rows of |top-k ∩ truth| / |truth|. Rows without labels
/// are skipped; throws std::invalid_argument when every row is unlabelled.
double recall_at_k(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions, std::size_t k);

/// Throws std::invalid_argument when n_train < 3 (ln n - 1 must be positive).
std::vector<double> label_propensities(std::span<const std::uint64_t> train_label_counts, std::size_t n_train,
                                       const PropensityParams& params = {});

/// Unnormalised propensity-scored precision:
/// mean over rows of (1/k) * sum_{j in top-k, y_ij = 1} 1 / p_j.
double psp_at_k(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions,
                std::span<const double> propensities, std::size_t k);

/// naive_cost_per_instance / mean(mults_used).
double speedup(const PredictionResult& result, double naive_cost_per_instance);

struct MetricRow {
    std::string metric;
    std::size_t k = 0;
    double value = 0.0;
};

/// P@k, PSP@k and R@k for every k, plus speedup (k = 0) when naive_cost > 0.
std::vector<MetricRow> evaluate(const BinaryLabelMatrix& truth, const PredictionResult& result,
                                std::span<const double> propensities, std::span<const std::size_t> ks,
                                double naive_cost);

/// CSV with columns metric,k,value.
void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows);

/// Fixed-width table: P@k and PSP@k in percent, speedup rounded to an integer.
void write_summary_table(std::ostream& out, std::span<const MetricRow> rows);

}  // namespace bpx
