// SPDX-License-Identifier: Apache-2.0
#pragma once

// Brute-force reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "bpx/metrics.hpp"
#include "bpx/sparse.hpp"

namespace bpx::oracle {

inline double prefix_cost(std::span<const std::size_t> sorted_desc, std::size_t j, double lambda) {
    double s = 0.0;
    for (std::size_t t = 0; t < j; ++t) s -= static_cast<double>(sorted_desc[t]);
    return s + lambda * static_cast<double>(j * j);
}

/// Smallest J in [min_labels, m] minimising the prefix cost.
inline std::size_t best_prefix_size(std::vector<std::size_t> counts, double lambda, std::size_t min_labels) {
    std::sort(counts.rbegin(), counts.rend());
    std::size_t best = min_labels;
    for (std::size_t j = min_labels; j <= counts.size(); ++j) {
        if (prefix_cost(counts, j, lambda) < prefix_cost(counts, best, lambda)) best = j;
    }
    return best;
}

/// Minimal-cost subset of size >= min_labels over all 2^m subsets; ties go to
/// the smaller set, then the lexicographically smaller one.
inline std::vector<index_t> best_subset(std::span<const std::size_t> counts, double lambda, std::size_t min_labels) {
    const auto m = counts.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<index_t> best_set;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        std::vector<index_t> s;
        double v = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (mask >> j & 1u) {
                s.push_back(static_cast<index_t>(j));
                v -= static_cast<double>(counts[j]);
            }
        }
        if (s.size() < min_labels) continue;
        v += lambda * static_cast<double>(s.size() * s.size());
        const bool better = v < best || (v == best && (s.size() < best_set.size() ||
                                                       (s.size() == best_set.size() && s < best_set)));
        if (better) {
            best = v;
            best_set = s;
        }
    }
    return best_set;
}

inline std::vector<std::uint32_t> best_instance_clusters(const BinaryLabelMatrix& y,
                                                         const std::vector<std::vector<index_t>>& clusters,
                                                         std::span<const std::uint32_t> previous) {
    std::vector<std::uint32_t> out(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i) {
        const std::set<index_t> mine(y.row(i).begin(), y.row(i).end());
        std::size_t best_count = 0, best = 0;
        for (std::size_t l = 0; l < clusters.size(); ++l) {
            std::size_t c = 0;
            for (auto j : clusters[l]) c += mine.count(j);
            if (c > best_count) {
                best_count = c;
                best = l;
            }
        }
        out[i] = best_count == 0 ? previous[i] : static_cast<std::uint32_t>(best);
    }
    return out;
}

struct RankingScores {
    double precision = 0.0;
    double recall = 0.0;
    double psp = 0.0;
};

inline RankingScores ranking_scores(const BinaryLabelMatrix& truth, const std::vector<Ranking>& pred,
                                    std::span<const double> props, std::size_t k) {
    RankingScores o;
    std::size_t labelled = 0;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        const std::set<index_t> t(truth.row(i).begin(), truth.row(i).end());
        std::size_t hits = 0;
        double weighted = 0.0;
        for (std::size_t s = 0; s < std::min(k, pred[i].size()); ++s) {
            if (t.count(pred[i][s])) {
                ++hits;
                weighted += 1.0 / props[pred[i][s]];
            }
        }
        o.precision += static_cast<double>(hits) / static_cast<double>(k);
        o.psp += weighted / static_cast<double>(k);
        if (!t.empty()) {
            ++labelled;
            o.recall += static_cast<double>(hits) / static_cast<double>(t.size());
        }
    }
    const auto n = static_cast<double>(truth.rows());
    o.precision /= n;
    o.psp /= n;
    o.recall /= static_cast<double>(labelled);
    return o;
}

}  // namespace bpx::oracle
