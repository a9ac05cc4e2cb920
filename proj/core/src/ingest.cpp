// SPDX-License-Identifier: Apache-2.0
#include "bpx/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bpx/error.hpp"
#include "bpx/random.hpp"

namespace bpx {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
T parse_number(std::string_view token, std::size_t line, const char* what) {
    T value{};
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (token.empty() || ec != std::errc() || ptr != last) {
        throw ParseError(std::string("invalid ") + what + " '" + std::string(token) + "'", line);
    }
    return value;
}

RepoHeader parse_header(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    text = trim(text);
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        const auto end = std::min(text.find(' ', pos), text.size());
        if (end > pos) parts.push_back(text.substr(pos, end - pos));
        pos = end;
    }
    if (parts.size() != 3) throw ParseError("header must be 'n d m'", 1);
    RepoHeader h{parse_number<std::size_t>(parts[0], 1, "header field"),
                 parse_number<std::size_t>(parts[1], 1, "header field"),
                 parse_number<std::size_t>(parts[2], 1, "header field")};
    if (h.num_points == 0 || h.num_features == 0 || h.num_labels == 0) {
        throw ParseError("header dimensions must be positive", 1);
    }
    return h;
}

void parse_instance(std::string_view text, std::size_t line, const RepoHeader& h,
                    std::vector<index_t>& labels, std::vector<std::pair<index_t, double>>& features) {
    labels.clear();
    features.clear();
    text = trim(text);
    const auto space = text.find(' ');
    const auto label_part = text.substr(0, space);
    const auto feature_part = space == std::string_view::npos ? std::string_view{} : text.substr(space + 1);

    if (!label_part.empty()) {
        std::size_t pos = 0;
        while (pos <= label_part.size()) {
            const auto end = std::min(label_part.find(',', pos), label_part.size());
            const auto id = parse_number<std::uint64_t>(label_part.substr(pos, end - pos), line, "label");
            if (id >= h.num_labels) {
                throw ParseError("label " + std::to_string(id) + " >= declared " + std::to_string(h.num_labels), line);
            }
            labels.push_back(static_cast<index_t>(id));
            pos = end + 1;
        }
        std::sort(labels.begin(), labels.end());
        if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
            throw ParseError("duplicate label", line);
        }
    }

    std::size_t pos = 0;
    while (pos < feature_part.size()) {
        if (feature_part[pos] == ' ' || feature_part[pos] == '\t') {
            ++pos;
            continue;
        }
        auto end = feature_part.find_first_of(" \t", pos);
        if (end == std::string_view::npos) end = feature_part.size();
        const auto token = feature_part.substr(pos, end - pos);
        const auto colon = token.find(':');
        if (colon == std::string_view::npos) throw ParseError("feature token '" + std::string(token) + "' lacks ':'", line);
        const auto id = parse_number<std::uint64_t>(token.substr(0, colon), line, "feature index");
        if (id >= h.num_features) {
            throw ParseError("feature " + std::to_string(id) + " >= declared " + std::to_string(h.num_features), line);
        }
        const auto value = parse_number<double>(token.substr(colon + 1), line, "feature value");
        if (!std::isfinite(value)) throw ParseError("non-finite feature value", line);
        features.emplace_back(static_cast<index_t>(id), value);
        pos = end;
    }
    std::sort(features.begin(), features.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t p = 1; p < features.size(); ++p) {
        if (features[p].first == features[p - 1].first) {
            throw ParseError("duplicate feature index " + std::to_string(features[p].first), line);
        }
    }
}

std::string read_gzip(const std::filesystem::path& path) {
    gzFile file = gzopen(path.c_str(), "rb");
    if (!file) throw IoError("cannot open " + path.string());
    std::string out;
    std::array<char, 1 << 16> buf;
    int got = 0;
    while ((got = gzread(file, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
        out.append(buf.data(), static_cast<std::size_t>(got));
    }
    const bool failed = got < 0;
    gzclose(file);
    if (failed) throw IoError("gzip decompression failed for " + path.string());
    return out;
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
    std::string text;
    if (!std::getline(in, text)) throw ParseError("missing header", 1);
    const RepoHeader h = parse_header(text);

    std::vector<std::size_t> x_offsets{0}, y_offsets{0};
    std::vector<index_t> x_indices, y_indices;
    std::vector<double> x_values;
    std::vector<index_t> labels;
    std::vector<std::pair<index_t, double>> features;

    std::size_t line = 1;
    std::size_t instances = 0;
    while (std::getline(in, text)) {
        ++line;
        if (instances == h.num_points) {
            if (!trim(text).empty()) {
                throw ParseError("more instance lines than the declared " + std::to_string(h.num_points), line);
            }
            continue;
        }
        parse_instance(text, line, h, labels, features);
        y_indices.insert(y_indices.end(), labels.begin(), labels.end());
        y_offsets.push_back(y_indices.size());
        for (const auto& [f, v] : features) {
            x_indices.push_back(f);
            x_values.push_back(v);
        }
        x_offsets.push_back(x_indices.size());
        ++instances;
    }
    if (instances != h.num_points) {
        throw ParseError("header declares " + std::to_string(h.num_points) + " instances, found " +
                             std::to_string(instances),
                         line);
    }
    return Dataset(SparseMatrix(h.num_points, h.num_features, std::move(x_offsets), std::move(x_indices),
                                std::move(x_values)),
                   BinaryLabelMatrix(h.num_points, h.num_labels, std::move(y_offsets), std::move(y_indices)));
}

void write_dataset(const Dataset& data, std::ostream& out) {
    out << data.num_instances() << ' ' << data.num_features() << ' ' << data.num_labels() << '\n';
    std::array<char, 64> buf;
    std::string line;
    for (std::size_t i = 0; i < data.num_instances(); ++i) {
        line.clear();
        const auto labels = data.labels.row(i);
        for (std::size_t t = 0; t < labels.size(); ++t) {
            if (t) line += ',';
            line += std::to_string(labels[t]);
        }
        const auto x = data.features.row(i);
        for (std::size_t p = 0; p < x.nnz(); ++p) {
            line += ' ';
            line += std::to_string(x.indices[p]);
            line += ':';
            auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x.values[p]);
            line.append(buf.data(), res.ptr);
        }
        out << line << '\n';
    }
    if (!out) throw IoError("failed writing dataset");
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (path.extension() == ".gz") {
        std::istringstream in(read_gzip(path));
        return parse_dataset(in);
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_dataset(in);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_dataset(data, out);
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k-fold split needs k >= 2");
    if (k > n) throw std::invalid_argument("k-fold split needs k <= n (k=" + std::to_string(k) +
                                           ", n=" + std::to_string(n) + ")");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(n * f / k),
                        perm.begin() + static_cast<std::ptrdiff_t>(n * (f + 1) / k));
        std::sort(folds[f].begin(), folds[f].end());
    }
    return folds;
}

std::vector<FoldSplit> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed) {
    const auto n = data.num_instances();
    const auto folds = kfold_indices(n, k, seed);
    std::vector<FoldSplit> out;
    out.reserve(k);
    std::vector<std::uint8_t> in_fold(n);
    for (const auto& fold : folds) {
        std::fill(in_fold.begin(), in_fold.end(), 0);
        for (auto i : fold) in_fold[i] = 1;
        std::vector<std::size_t> train;
        train.reserve(n - fold.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_fold[i]) train.push_back(i);
        }
        out.push_back({data.select_rows(train), data.select_rows(fold)});
    }
    return out;
}

}  // namespace bpx
