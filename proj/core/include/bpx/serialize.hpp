// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary container, little-endian throughout:
//
//   "BPXM"  magic
//   u32     format version (kFormatVersion)
//   u32     payload kind (PayloadKind)
//   u32     section count
//   then per section: 4-byte ASCII tag, u64 byte length, payload bytes
//
// Arrays inside a section are a u64 element count followed by the elements
// (u32 for indices, u64 for offsets and counts, IEEE-754 f64 for reals).

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "bpx/model.hpp"
#include "bpx/sparse.hpp"

namespace bpx {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class PayloadKind : std::uint32_t {
    sparse_matrix = 1,
    label_matrix = 2,
    partition = 3,
    linear_model = 4,
    bp_model = 5,
};

void write_binary(std::ostream& out, const SparseMatrix& m);
void write_binary(std::ostream& out, const BinaryLabelMatrix& m);
void write_binary(std::ostream& out, const Partition& p);
void write_binary(std::ostream& out, const LinearModel& model);
void write_binary(std::ostream& out, const BpModel& model);

// Readers throw ParseError on a bad magic, version, kind or truncated input,
// and StructuralError when the decoded object violates its invariants.
SparseMatrix read_sparse_matrix(std::istream& in);
BinaryLabelMatrix read_label_matrix(std::istream& in);
Partition read_partition(std::istream& in);
LinearModel read_linear_model(std::istream& in);
BpModel read_bp_model(std::istream& in);

/// Kind recorded in a container header; leaves the stream position unspecified.
PayloadKind peek_payload_kind(std::istream& in);

template <typename T>
void save_binary(const std::filesystem::path& path, const T& value);

Partition load_partition(const std::filesystem::path& path);
BpModel load_bp_model(const std::filesystem::path& path);
LinearModel load_linear_model(const std::filesystem::path& path);

}  // namespace bpx
