// SPDX-License-Identifier: Apache-2.0
#include "bpx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bpx/error.hpp"
#include "bpx/random.hpp"

namespace bpx {
namespace {

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

struct BlockSampler {
    const PlantedSpec& spec;
    std::size_t m;
    std::size_t region;
    std::size_t nnz_per_row;
    std::vector<index_t> scratch;

    void sample(std::size_t block, Rng& rng, std::vector<std::pair<index_t, double>>& features,
                std::vector<index_t>& labels) {
        features.clear();
        labels.clear();
        const auto base = static_cast<index_t>(block * region);
        scratch.resize(region);
        std::iota(scratch.begin(), scratch.end(), base);
        for (std::size_t t = 0; t < nnz_per_row; ++t) {
            const auto pick = t + rng.below(region - t);
            std::swap(scratch[t], scratch[pick]);
            const double v = spec.feature_separation * std::max(0.05, 1.0 + 0.1 * rng.normal());
            features.emplace_back(scratch[t], v);
        }
        // one low-magnitude feature anywhere
        const auto noise_feature = static_cast<index_t>(rng.below(spec.d));
        const double noise_value = 0.05 * spec.feature_separation * rng.normal();
        const bool taken = std::any_of(features.begin(), features.end(),
                                       [&](const auto& e) { return e.first == noise_feature; });
        if (!taken && noise_value != 0.0) features.emplace_back(noise_feature, noise_value);

        const auto lpb = spec.labels_per_block;
        for (std::size_t b = 0; b < spec.q_true; ++b) {
            const double p = b == block ? spec.in_block_density : spec.off_block_noise;
            for (std::size_t j = b * lpb; j < (b + 1) * lpb; ++j) {
                if (rng.bernoulli(p)) labels.push_back(static_cast<index_t>(j));
            }
        }
        const auto popular_base = spec.q_true * lpb;
        for (std::size_t j = 0; j < spec.popular_labels; ++j) {
            if (rng.bernoulli(spec.in_block_density)) labels.push_back(static_cast<index_t>(popular_base + j));
        }
    }
};

Dataset sample_dataset(BlockSampler& sampler, std::size_t per_block, Rng& rng, std::vector<std::uint32_t>& blocks) {
    const auto& spec = sampler.spec;
    SparseMatrixBuilder x(spec.d);
    std::vector<std::vector<index_t>> y;
    std::vector<std::pair<index_t, double>> features;
    std::vector<index_t> labels;
    blocks.clear();
    for (std::size_t b = 0; b < spec.q_true; ++b) {
        for (std::size_t i = 0; i < per_block; ++i) {
            sampler.sample(b, rng, features, labels);
            x.append_row(features);
            y.push_back(labels);
            blocks.push_back(static_cast<std::uint32_t>(b));
        }
    }
    return Dataset(std::move(x).build(), BinaryLabelMatrix::from_rows(sampler.m, std::move(y)));
}

double choose2(double v) { return v * (v - 1.0) / 2.0; }

}  // namespace

void validate(const PlantedSpec& spec) {
    if (spec.q_true == 0 || spec.instances_per_block == 0 || spec.labels_per_block == 0 || spec.d == 0) {
        throw std::invalid_argument("planted spec counts must be positive");
    }
    if (spec.d < spec.q_true) throw std::invalid_argument("planted spec needs d >= q_true");
    check_probability(spec.in_block_density, "in_block_density");
    check_probability(spec.off_block_noise, "off_block_noise");
    if (!(spec.feature_separation > 0.0)) throw std::invalid_argument("feature_separation must be positive");
}

PlantedData generate(const PlantedSpec& spec) {
    validate(spec);
    const auto needed = spec.q_true * spec.labels_per_block + spec.popular_labels;
    const auto m = spec.num_labels == 0 ? needed : spec.num_labels;
    if (needed > m) {
        throw std::invalid_argument("planted blocks need " + std::to_string(needed) + " labels but capacity is " +
                                    std::to_string(m));
    }
    const auto region = spec.d / spec.q_true;
    BlockSampler sampler{spec, m, region, std::min(region, std::max<std::size_t>(1, spec.d / 10)), {}};
    Rng rng(spec.seed);

    PlantedData out;
    std::vector<std::uint32_t> train_blocks;
    out.train = sample_dataset(sampler, spec.instances_per_block, rng, train_blocks);
    out.test = sample_dataset(sampler, spec.test_instances_per_block, rng, out.test_blocks);

    out.truth.q = spec.q_true;
    out.truth.lambda = 0.0;
    out.truth.instance_cluster_of = std::move(train_blocks);
    out.truth.label_clusters.resize(spec.q_true);
    for (std::size_t b = 0; b < spec.q_true; ++b) {
        auto& c = out.truth.label_clusters[b];
        for (std::size_t j = b * spec.labels_per_block; j < (b + 1) * spec.labels_per_block; ++j) {
            c.push_back(static_cast<index_t>(j));
        }
        for (std::size_t j = 0; j < spec.popular_labels; ++j) {
            c.push_back(static_cast<index_t>(spec.q_true * spec.labels_per_block + j));
        }
    }
    return out;
}

double Agreement::mean_jaccard() const {
    if (block_jaccard.empty()) return 0.0;
    return std::accumulate(block_jaccard.begin(), block_jaccard.end(), 0.0) /
           static_cast<double>(block_jaccard.size());
}

double adjusted_rand_index(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.size() != b.size()) throw StructuralError("ARI needs assignments of equal length");
    const auto n = a.size();
    if (n < 2) return 1.0;
    const std::size_t ka = *std::max_element(a.begin(), a.end()) + 1;
    const std::size_t kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<double> table(ka * kb, 0.0), rows(ka, 0.0), cols(kb, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[a[i] * kb + b[i]] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (double v : table) index += choose2(v);
    for (double v : rows) sum_a += choose2(v);
    for (double v : cols) sum_b += choose2(v);
    const double expected = sum_a * sum_b / choose2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;   // both trivial: identical up to relabelling
    return (index - expected) / (max_index - expected);
}

std::vector<int> hungarian_matching(std::span<const double> weights, std::size_t rows, std::size_t cols) {
    const auto k = std::max(rows, cols);
    if (k == 0) return {};
    double top = 0.0;
    for (double w : weights) top = std::max(top, w);
    // square cost matrix, 1-based as in the classic potentials formulation
    auto cost = [&](std::size_t r, std::size_t c) {
        const double w = (r <= rows && c <= cols) ? weights[(r - 1) * cols + (c - 1)] : 0.0;
        return top - w;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
    std::vector<std::size_t> p(k + 1, 0), way(k + 1, 0);
    for (std::size_t r = 1; r <= k; ++r) {
        p[0] = r;
        std::size_t j0 = 0;
        std::vector<double> minv(k + 1, inf);
        std::vector<std::uint8_t> used(k + 1, 0);
        do {
            used[j0] = 1;
            const auto i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= k; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= k; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const auto j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= k; ++j) {
        if (p[j] >= 1 && p[j] <= rows && j <= cols) out[p[j] - 1] = static_cast<int>(j - 1);
    }
    return out;
}

std::vector<int> max_weight_matching(std::span<const double> weights, std::size_t rows, std::size_t cols) {
    const auto k = std::max(rows, cols);
    if (k > 8) return hungarian_matching(weights, rows, cols);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    std::vector<int> out(rows, -1);
    do {
        double total = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (perm[r] < cols) total += weights[r * cols + perm[r]];
        }
        if (total > best) {
            best = total;
            for (std::size_t r = 0; r < rows; ++r) out[r] = perm[r] < cols ? static_cast<int>(perm[r]) : -1;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

Agreement partition_agreement(const Partition& found, const Partition& truth) {
    if (found.num_instances() != truth.num_instances()) {
        throw StructuralError("partition_agreement: instance counts differ");
    }
    Agreement out;
    out.ari = adjusted_rand_index(found.instance_cluster_of, truth.instance_cluster_of);

    const auto qt = truth.q;
    const auto qf = found.q;
    std::vector<double> overlap(qt * qf, 0.0);
    for (std::size_t i = 0; i < truth.num_instances(); ++i) {
        overlap[truth.instance_cluster_of[i] * qf + found.instance_cluster_of[i]] += 1.0;
    }
    out.matched_cluster = max_weight_matching(overlap, qt, qf);
    out.block_jaccard.assign(qt, 0.0);
    for (std::size_t b = 0; b < qt; ++b) {
        const int c = out.matched_cluster[b];
        if (c < 0) continue;
        const auto& t = truth.label_clusters[b];
        const auto& f = found.label_clusters[static_cast<std::size_t>(c)];
        std::vector<index_t> inter;
        std::set_intersection(t.begin(), t.end(), f.begin(), f.end(), std::back_inserter(inter));
        const double uni = static_cast<double>(t.size() + f.size() - inter.size());
        out.block_jaccard[b] = uni > 0.0 ? static_cast<double>(inter.size()) / uni : 1.0;
    }
    return out;
}

}  // namespace bpx
