// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bpx/model.hpp"

namespace bpx {

/// Planted block-diagonal data. Block b owns labels
/// [b * labels_per_block, (b + 1) * labels_per_block) and a contiguous feature
/// region of d / q_true features; popular labels follow the block labels and
/// are shared by every block.
struct PlantedSpec {
    std::size_t q_true = 3;
    std::size_t instances_per_block = 100;
    std::size_t test_instances_per_block = 0;
    std::size_t labels_per_block = 10;
    std::size_t num_labels = 0;           // label capacity; 0 means exactly what the blocks need
    std::size_t d = 100;
    double in_block_density = 0.8;
    double off_block_noise = 0.01;
    std::size_t popular_labels = 0;
    double feature_separation = 1.0;
    std::uint64_t seed = 0;
};

void validate(const PlantedSpec& spec);

struct PlantedData {
    Dataset train;
    Dataset test;
    Partition truth;                          // over the training instances
    std::vector<std::uint32_t> test_blocks;   // planted block of each test row
};

/// Throws std::invalid_argument when the blocks need more labels than
/// spec.num_labels allows, or on an invalid spec.
PlantedData generate(const PlantedSpec& spec);

struct Agreement {
    double ari = 0.0;
    std::vector<double> block_jaccard;   // per truth block, after optimal matching
    std::vector<int> matched_cluster;    // truth block -> found cluster, -1 if unmatched
    double mean_jaccard() const;
};

/// Adjusted Rand index of the instance assignments, and label-set Jaccard per
/// truth block after matching found clusters to truth blocks by maximum
/// instance overlap. Throws StructuralError when the instance counts differ.
Agreement partition_agreement(const Partition& found, const Partition& truth);

double adjusted_rand_index(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// Column assignment maximising the total of `weights` (rows x cols, row-major);
/// result[r] is the column for row r or -1. Exhaustive search for up to 8
/// rows/cols, Hungarian algorithm otherwise.
std::vector<int> max_weight_matching(std::span<const double> weights, std::size_t rows, std::size_t cols);

/// Hungarian algorithm only; exposed for cross-checking.
std::vector<int> hungarian_matching(std::span<const double> weights, std::size_t rows, std::size_t cols);

}  // namespace bpx
