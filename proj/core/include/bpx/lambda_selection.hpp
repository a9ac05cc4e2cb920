// SPDX-License-Identifier: Apache-2.0
#pragma once

// Cross-validated choice of the partition regulariser lambda. In every fold
// each candidate is scored on the validation part; the fold's interval is the
// contiguous run of candidates around the best one whose accuracy is within
// `tolerance` (absolute) of the best. The result is the intersection of all
// fold intervals.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "bpx/bp.hpp"
#include "bpx/error.hpp"
#include "bpx/linear.hpp"
#include "bpx/model.hpp"

namespace bpx {

/// 13 points, 10^-3 to 10^3 in half-decade steps.
std::vector<double> default_lambda_grid();

struct LambdaSelectionOptions {
    std::vector<double> candidates = default_lambda_grid();   // ascending
    double tolerance = 0.02;
    std::size_t folds = 5;
    std::size_t k = 1;          // accuracy metric is P@k
    std::uint64_t seed = 0;
};

struct FoldScore {
    double accuracy = 0.0;
    double speedup = 0.0;
};

struct FoldLambdaResult {
    std::vector<FoldScore> scores;   // one per candidate
    std::size_t best = 0;
    std::size_t lo = 0;              // interval, inclusive candidate indices
    std::size_t hi = 0;
};

struct LambdaSelection {
    std::vector<double> candidates;
    std::vector<FoldLambdaResult> folds;
    std::size_t lo = 0;   // intersection, inclusive candidate indices
    std::size_t hi = 0;

    double lambda_lo() const { return candidates[lo]; }
    double lambda_hi() const { return candidates[hi]; }
};

class LambdaSelectionError : public OptimizationError {
public:
    LambdaSelectionError(const std::string& message, LambdaSelection partial)
        : OptimizationError(message), partial_(std::move(partial)) {}

    const LambdaSelection& partial() const noexcept { return partial_; }

private:
    LambdaSelection partial_;
};

/// Scores one candidate on one fold.
using FoldEvaluator = std::function<FoldScore(const Dataset& train, const Dataset& validation, double lambda)>;

/// Interval of candidates within tolerance of the best (first best on ties).
FoldLambdaResult fold_interval(std::vector<FoldScore> scores, double tolerance);

/// Throws LambdaSelectionError (carrying the per-fold intervals) when the
/// intersection is empty; std::invalid_argument on bad options.
LambdaSelection select_lambda(const Dataset& data, const LambdaSelectionOptions& options,
                              const FoldEvaluator& evaluate);

/// Evaluates each candidate with the full partition + train + predict pipeline.
LambdaSelection select_lambda(const Dataset& data, const LambdaSelectionOptions& options,
                              const BpConfig& bp_config, const TrainConfig& train_config);

/// CSV rows fold,lambda,accuracy,speedup,in_interval (fold = "mean" for averages).
void write_lambda_table(std::ostream& out, const LambdaSelection& selection);

}  // namespace bpx
