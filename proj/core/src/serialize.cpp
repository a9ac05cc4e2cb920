// SPDX-License-Identifier: Apache-2.0
#include "bpx/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>

#include "bpx/error.hpp"

namespace bpx {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

constexpr std::array<char, 4> kMagic{'B', 'P', 'X', 'M'};

class ByteWriter {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        std::array<char, sizeof(T)> raw;
        std::memcpy(raw.data(), &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        buf_.append(raw.data(), raw.size());
    }

    void put_u32(std::uint32_t v) { put(v); }
    void put_u64(std::uint64_t v) { put(v); }
    void put_f64(double v) { put(v); }

    template <typename Out, typename Vec>
    void put_array(const Vec& values) {
        put_u64(values.size());
        for (const auto& v : values) put(static_cast<Out>(v));
    }

    void put_bytes(std::string_view bytes) { buf_.append(bytes); }

    void section(std::string_view tag, const ByteWriter& payload) {
        buf_.append(tag.substr(0, 4));
        put_u64(payload.buf_.size());
        buf_.append(payload.buf_);
        ++sections_;
    }

    std::uint32_t sections() const noexcept { return sections_; }
    const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
    std::uint32_t sections_ = 0;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    template <typename T>
    T get() {
        std::array<char, sizeof(T)> raw;
        need(sizeof(T));
        std::memcpy(raw.data(), data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        T v;
        std::memcpy(&v, raw.data(), sizeof(T));
        return v;
    }

    std::uint32_t get_u32() { return get<std::uint32_t>(); }
    std::uint64_t get_u64() { return get<std::uint64_t>(); }
    double get_f64() { return get<double>(); }

    template <typename In, typename Out = In>
    std::vector<Out> get_array() {
        const auto n = get_u64();
        if (n > (data_.size() - pos_) / sizeof(In)) throw ParseError("array length exceeds payload", 0);
        std::vector<Out> out;
        out.reserve(n);
        for (std::uint64_t k = 0; k < n; ++k) out.push_back(static_cast<Out>(get<In>()));
        return out;
    }

    /// Reads the next section, checking its tag.
    ByteReader section(std::string_view tag) {
        need(4);
        const auto found = data_.substr(pos_, 4);
        if (found != tag) {
            throw ParseError("expected section '" + std::string(tag) + "', found '" + std::string(found) + "'", 0);
        }
        pos_ += 4;
        const auto len = get_u64();
        need(len);
        ByteReader sub(data_.substr(pos_, len));
        pos_ += len;
        return sub;
    }

    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw ParseError("truncated binary container", 0);
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

// Object encodings. Each writes its sections into `w`; nested objects are
// stored as a section whose payload is the nested section list.

void encode(ByteWriter& w, const SparseMatrix& m) {
    ByteWriter shape, rows, cols, vals;
    shape.put_u64(m.rows());
    shape.put_u64(m.cols());
    rows.put_array<std::uint64_t>(m.row_offsets());
    cols.put_array<std::uint32_t>(m.col_indices());
    vals.put_array<double>(m.values());
    w.section("SHAP", shape);
    w.section("ROWS", rows);
    w.section("COLS", cols);
    w.section("VALS", vals);
}

void encode(ByteWriter& w, const BinaryLabelMatrix& m) {
    ByteWriter shape, rows, cols;
    shape.put_u64(m.rows());
    shape.put_u64(m.cols());
    rows.put_array<std::uint64_t>(m.row_offsets());
    cols.put_array<std::uint32_t>(m.col_indices());
    w.section("SHAP", shape);
    w.section("ROWS", rows);
    w.section("COLS", cols);
}

void encode(ByteWriter& w, const Partition& p) {
    ByteWriter params, assign, clusters, trace;
    params.put_u64(p.q);
    params.put_f64(p.lambda);
    assign.put_array<std::uint32_t>(p.instance_cluster_of);
    clusters.put_u64(p.label_clusters.size());
    for (const auto& c : p.label_clusters) clusters.put_array<std::uint32_t>(c);
    trace.put_array<double>(p.objective_trace);
    w.section("PARM", params);
    w.section("ASGN", assign);
    w.section("LCLU", clusters);
    w.section("TRCE", trace);
}

void encode(ByteWriter& w, const LinearModel& model) {
    ByteWriter weights, bias, ids, constant;
    encode(weights, model.weights);
    bias.put_array<double>(model.bias);
    ids.put_array<std::uint32_t>(model.class_ids);
    constant.put_array<std::uint8_t>(model.constant);
    w.section("WGHT", weights);
    w.section("BIAS", bias);
    w.section("CIDS", ids);
    w.section("CNST", constant);
}

void encode(ByteWriter& w, const BpModel& model) {
    ByteWriter flags, counts, part, router, clusters;
    flags.put<std::uint8_t>(model.normalize_features ? 1 : 0);
    counts.put_array<std::uint64_t>(model.train_label_counts);
    encode(part, model.partition);
    encode(router, model.router);
    clusters.put_u64(model.cluster_models.size());
    for (const auto& cm : model.cluster_models) {
        ByteWriter one;
        encode(one, cm);
        clusters.section("LMOD", one);
    }
    w.section("FLAG", flags);
    w.section("LCNT", counts);
    w.section("PART", part);
    w.section("ROUT", router);
    w.section("CLUS", clusters);
}

SparseMatrix decode_sparse(ByteReader& r) {
    auto shape = r.section("SHAP");
    const auto rows = shape.get_u64();
    const auto cols = shape.get_u64();
    auto offsets = r.section("ROWS").get_array<std::uint64_t, std::size_t>();
    auto indices = r.section("COLS").get_array<std::uint32_t>();
    auto values = r.section("VALS").get_array<double>();
    return SparseMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
}

BinaryLabelMatrix decode_labels(ByteReader& r) {
    auto shape = r.section("SHAP");
    const auto rows = shape.get_u64();
    const auto cols = shape.get_u64();
    auto offsets = r.section("ROWS").get_array<std::uint64_t, std::size_t>();
    auto indices = r.section("COLS").get_array<std::uint32_t>();
    return BinaryLabelMatrix(rows, cols, std::move(offsets), std::move(indices));
}

Partition decode_partition(ByteReader& r) {
    Partition p;
    auto params = r.section("PARM");
    p.q = params.get_u64();
    p.lambda = params.get_f64();
    p.instance_cluster_of = r.section("ASGN").get_array<std::uint32_t>();
    auto clusters = r.section("LCLU");
    const auto count = clusters.get_u64();
    if (count != p.q) throw ParseError("label cluster count differs from q", 0);
    p.label_clusters.reserve(count);
    for (std::uint64_t l = 0; l < count; ++l) p.label_clusters.push_back(clusters.get_array<std::uint32_t>());
    p.objective_trace = r.section("TRCE").get_array<double>();
    return p;
}

LinearModel decode_linear(ByteReader& r) {
    LinearModel model;
    auto weights = r.section("WGHT");
    model.weights = decode_sparse(weights);
    model.bias = r.section("BIAS").get_array<double>();
    model.class_ids = r.section("CIDS").get_array<std::uint32_t>();
    model.constant = r.section("CNST").get_array<std::uint8_t>();
    validate_linear_model(model);
    return model;
}

BpModel decode_bp(ByteReader& r) {
    BpModel model;
    model.normalize_features = r.section("FLAG").get<std::uint8_t>() != 0;
    model.train_label_counts = r.section("LCNT").get_array<std::uint64_t>();
    auto part = r.section("PART");
    model.partition = decode_partition(part);
    auto router = r.section("ROUT");
    model.router = decode_linear(router);
    auto clusters = r.section("CLUS");
    const auto count = clusters.get_u64();
    for (std::uint64_t l = 0; l < count; ++l) {
        auto one = clusters.section("LMOD");
        model.cluster_models.push_back(decode_linear(one));
    }
    validate_bp_model(model);
    return model;
}

template <typename T>
void write_container(std::ostream& out, PayloadKind kind, const T& value) {
    ByteWriter body;
    encode(body, value);
    ByteWriter header;
    header.put_bytes(std::string_view(kMagic.data(), kMagic.size()));
    header.put_u32(kFormatVersion);
    header.put_u32(static_cast<std::uint32_t>(kind));
    header.put_u32(body.sections());
    out.write(header.bytes().data(), static_cast<std::streamsize>(header.bytes().size()));
    out.write(body.bytes().data(), static_cast<std::streamsize>(body.bytes().size()));
    if (!out) throw IoError("failed to write binary container");
}

std::string slurp(std::istream& in) {
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Validates the header and returns a reader positioned at the first section.
template <typename Decode>
auto read_container(std::istream& in, PayloadKind expected, Decode decode) {
    const std::string data = slurp(in);
    ByteReader r(data);
    if (data.size() < 4 || std::memcmp(data.data(), kMagic.data(), 4) != 0) {
        throw ParseError("not a BPXM container (bad magic)", 0);
    }
    for (int k = 0; k < 4; ++k) r.get<char>();
    const auto version = r.get_u32();
    if (version != kFormatVersion) {
        throw ParseError("unsupported BPXM format version " + std::to_string(version), 0);
    }
    const auto kind = r.get_u32();
    if (kind != static_cast<std::uint32_t>(expected)) {
        throw ParseError("BPXM payload kind " + std::to_string(kind) + " where " +
                             std::to_string(static_cast<std::uint32_t>(expected)) + " was expected",
                         0);
    }
    r.get_u32();  // section count
    auto value = decode(r);
    if (!r.at_end()) throw ParseError("trailing bytes after BPXM payload", 0);
    return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

}  // namespace

void write_binary(std::ostream& out, const SparseMatrix& m) { write_container(out, PayloadKind::sparse_matrix, m); }
void write_binary(std::ostream& out, const BinaryLabelMatrix& m) { write_container(out, PayloadKind::label_matrix, m); }
void write_binary(std::ostream& out, const Partition& p) { write_container(out, PayloadKind::partition, p); }
void write_binary(std::ostream& out, const LinearModel& m) { write_container(out, PayloadKind::linear_model, m); }
void write_binary(std::ostream& out, const BpModel& m) { write_container(out, PayloadKind::bp_model, m); }

SparseMatrix read_sparse_matrix(std::istream& in) {
    return read_container(in, PayloadKind::sparse_matrix, [](ByteReader& r) { return decode_sparse(r); });
}

BinaryLabelMatrix read_label_matrix(std::istream& in) {
    return read_container(in, PayloadKind::label_matrix, [](ByteReader& r) { return decode_labels(r); });
}

Partition read_partition(std::istream& in) {
    return read_container(in, PayloadKind::partition, [](ByteReader& r) {
        auto p = decode_partition(r);
        std::size_t m = 0;
        for (const auto& c : p.label_clusters) {
            if (!c.empty()) m = std::max<std::size_t>(m, c.back() + 1);
        }
        validate_partition(p, p.num_instances(), m);
        return p;
    });
}

LinearModel read_linear_model(std::istream& in) {
    return read_container(in, PayloadKind::linear_model, [](ByteReader& r) { return decode_linear(r); });
}

BpModel read_bp_model(std::istream& in) {
    return read_container(in, PayloadKind::bp_model, [](ByteReader& r) { return decode_bp(r); });
}

PayloadKind peek_payload_kind(std::istream& in) {
    std::array<char, 12> head{};
    in.read(head.data(), head.size());
    if (in.gcount() != 12 || std::memcmp(head.data(), kMagic.data(), 4) != 0) {
        throw ParseError("not a BPXM container (bad magic)", 0);
    }
    ByteReader r(std::string_view(head.data() + 8, 4));
    return static_cast<PayloadKind>(r.get_u32());
}

template <typename T>
void save_binary(const std::filesystem::path& path, const T& value) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_binary(out, value);
}

template void save_binary(const std::filesystem::path&, const SparseMatrix&);
template void save_binary(const std::filesystem::path&, const BinaryLabelMatrix&);
template void save_binary(const std::filesystem::path&, const Partition&);
template void save_binary(const std::filesystem::path&, const LinearModel&);
template void save_binary(const std::filesystem::path&, const BpModel&);

Partition load_partition(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_partition(in);
}

BpModel load_bp_model(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_bp_model(in);
}

LinearModel load_linear_model(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_linear_model(in);
}

}  // namespace bpx
