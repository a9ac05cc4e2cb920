// SPDX-License-Identifier: Apache-2.0
#include "bpx/model.hpp"

#include <algorithm>
#include <string>

#include "bpx/error.hpp"

namespace bpx {

Dataset::Dataset(SparseMatrix x, BinaryLabelMatrix y) : features(std::move(x)), labels(std::move(y)) {
    if (features.rows() != labels.rows()) {
        throw StructuralError("feature rows (" + std::to_string(features.rows()) +
                              ") differ from label rows (" + std::to_string(labels.rows()) + ")");
    }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    return Dataset(features.select_rows(rows), labels.select_rows(rows));
}

std::vector<std::vector<std::size_t>> Partition::instance_members() const {
    std::vector<std::vector<std::size_t>> members(q);
    for (std::size_t i = 0; i < instance_cluster_of.size(); ++i) {
        members[instance_cluster_of[i]].push_back(i);
    }
    return members;
}

std::vector<std::size_t> Partition::instance_cluster_sizes() const {
    std::vector<std::size_t> sizes(q, 0);
    for (auto c : instance_cluster_of) ++sizes[c];
    return sizes;
}

void validate_partition(const Partition& p, std::size_t n, std::size_t m) {
    if (p.q == 0) throw StructuralError("partition has q = 0");
    if (p.lambda < 0.0) throw StructuralError("partition lambda is negative");
    if (p.instance_cluster_of.size() != n) {
        throw StructuralError("partition covers " + std::to_string(p.instance_cluster_of.size()) +
                              " instances, dataset has " + std::to_string(n));
    }
    if (p.label_clusters.size() != p.q) {
        throw StructuralError("partition has " + std::to_string(p.label_clusters.size()) +
                              " label clusters for q = " + std::to_string(p.q));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (p.instance_cluster_of[i] >= p.q) {
            throw StructuralError("instance " + std::to_string(i) + " assigned to cluster " +
                                  std::to_string(p.instance_cluster_of[i]) + " >= q");
        }
    }
    for (std::size_t l = 0; l < p.q; ++l) {
        const auto& c = p.label_clusters[l];
        if (c.empty()) throw StructuralError("label cluster " + std::to_string(l) + " is empty");
        for (std::size_t t = 0; t < c.size(); ++t) {
            if (c[t] >= m) {
                throw StructuralError("label cluster " + std::to_string(l) + " holds label " +
                                      std::to_string(c[t]) + " >= m");
            }
            if (t > 0 && c[t] <= c[t - 1]) {
                throw StructuralError("label cluster " + std::to_string(l) + " not sorted/unique");
            }
        }
    }
    for (std::size_t t = 1; t < p.objective_trace.size(); ++t) {
        if (p.objective_trace[t] > p.objective_trace[t - 1]) {
            throw StructuralError("objective trace increases at step " + std::to_string(t));
        }
    }
}

void validate_linear_model(const LinearModel& model) {
    const auto k = model.class_ids.size();
    if (model.weights.rows() != k || model.bias.size() != k || model.constant.size() != k) {
        throw StructuralError("linear model arrays disagree on the number of classes");
    }
    auto ids = model.class_ids;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw StructuralError("linear model class ids are not unique");
    }
}

void validate_bp_model(const BpModel& model) {
    validate_linear_model(model.router);
    const auto& part = model.partition;
    validate_partition(part, part.num_instances(), model.num_labels());
    if (model.router.num_classes() != part.q) {
        throw StructuralError("router has " + std::to_string(model.router.num_classes()) +
                              " classes for q = " + std::to_string(part.q));
    }
    if (model.cluster_models.size() != part.q) {
        throw StructuralError("expected one classifier per cluster");
    }
    for (std::size_t l = 0; l < part.q; ++l) {
        const auto& cm = model.cluster_models[l];
        validate_linear_model(cm);
        if (cm.num_features() != model.num_features()) {
            throw StructuralError("cluster " + std::to_string(l) + " feature dimension differs from router");
        }
        auto ids = cm.class_ids;
        std::sort(ids.begin(), ids.end());
        if (ids != part.label_clusters[l]) {
            throw StructuralError("cluster " + std::to_string(l) + " classes differ from its label cluster");
        }
    }
}

}  // namespace bpx
