// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bpx/model.hpp"
#include "bpx/sparse.hpp"

namespace bpx {

struct TrainConfig {
    double reg_strength = 1.0;       // C: weight of the loss term against 0.5 * ||w||^2
    double tol = 1e-4;               // on ||grad|| relative to ||grad|| at w = 0
    std::size_t max_epochs = 100;    // Newton iterations
    std::uint64_t seed = 0;
    bool balance_classes = false;    // scale C per class by n / (2 * class count)
    double prune_threshold = 1e-6;   // |w| below this is dropped from the stored model
    unsigned threads = 1;
};

void validate(const TrainConfig& config);

/// L2-regularized binary logistic loss over (w, b), with the bias unregularized:
///
///   F(w, b) = 0.5 * ||w||^2 + sum_i c_i * log(1 + exp(-y_i * (<w, x_i> + b)))
///
/// Parameters are packed as [w_0 .. w_{d-1}, b].
class LogisticObjective {
public:
    /// signs[i] is +1 or -1; costs[i] is the per-instance weight c_i.
    LogisticObjective(const SparseMatrix& x, std::span<const double> signs, std::span<const double> costs);

    std::size_t dimension() const noexcept { return x_.cols() + 1; }

    double value(std::span<const double> params) const;

    /// Fills grad and returns the objective value.
    double gradient(std::span<const double> params, std::span<double> grad) const;

    /// Hessian-vector product at the point of the last gradient() call.
    void hessian_times(std::span<const double> v, std::span<double> out) const;

private:
    void margins(std::span<const double> params, std::vector<double>& z) const;

    const SparseMatrix& x_;
    std::span<const double> signs_;
    std::span<const double> costs_;
    mutable std::vector<double> z_;
    mutable std::vector<double> curvature_;
};

struct BinarySolution {
    std::vector<double> weights;   // dense, length d
    double bias = 0.0;
    std::size_t iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
};

/// Newton-CG minimisation of LogisticObjective. Needs both label signs present.
BinarySolution solve_logistic(const SparseMatrix& x, std::span<const double> signs,
                              std::span<const double> costs, const TrainConfig& config);

/// One binary problem per class: rows of `targets` tagged with class_ids[c] are
/// positive. A class with no positive or no negative rows gets a constant model
/// whose bias is the logit of its prior clamped to +-10, flagged in `constant`.
LinearModel train_ova(const SparseMatrix& x, const BinaryLabelMatrix& targets,
                      std::span<const index_t> class_ids, const TrainConfig& config);

/// Counts inner products performed by score().
struct MultiplicationCounter {
    std::uint64_t count = 0;
};

/// One inner product per class. Throws StructuralError on a dimension mismatch
/// (x's largest index must be below the model dimension).
std::vector<double> score(const LinearModel& model, SparseVectorView x, MultiplicationCounter* counter = nullptr);

/// Index of the highest score, smallest index on ties.
std::size_t argmax_class(std::span<const double> scores);

/// Original class id (model.class_ids) of the best-scoring class; ties go to
/// the smallest class id.
index_t predict_class(const LinearModel& model, SparseVectorView x, MultiplicationCounter* counter = nullptr);

}  // namespace bpx
