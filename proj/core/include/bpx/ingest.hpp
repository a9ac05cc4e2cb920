// SPDX-License-Identifier: Apache-2.0
#pragma once

// Extreme Classification Repository text format:
//
//   n d m
//   l1,l2,... f1:v1 f2:v2 ...
//
// One line per instance after the header. Indices are zero-based. An
// instance without labels starts with a space.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "bpx/model.hpp"

namespace bpx {

struct RepoHeader {
    std::size_t num_points = 0;
    std::size_t num_features = 0;
    std::size_t num_labels = 0;
};

/// Throws ParseError (with the 1-based line number) on malformed input.
Dataset parse_dataset(std::istream& in);

void write_dataset(const Dataset& data, std::ostream& out);

/// Reads a dataset file; gzip input is decompressed when the name ends in ".gz".
Dataset load_dataset(const std::filesystem::path& path);

void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Shuffled assignment of instances to k folds; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct FoldSplit {
    Dataset train;
    Dataset validation;
};

/// Throws std::invalid_argument when k < 2 or k > n.
std::vector<FoldSplit> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed);

}  // namespace bpx
