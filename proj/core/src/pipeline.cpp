// SPDX-License-Identifier: Apache-2.0
#include "bpx/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "bpx/error.hpp"
#include "bpx/parallel.hpp"

namespace bpx {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Top-k (label, score) by descending score, ascending label on ties.
void rank_top_k(std::span<const index_t> labels, std::span<const double> scores, std::size_t k,
                std::vector<index_t>& top, std::vector<double>& top_scores) {
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    const auto take = std::min(k, order.size());
    auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : labels[a] < labels[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
    top.resize(take);
    top_scores.resize(take);
    for (std::size_t r = 0; r < take; ++r) {
        top[r] = labels[order[r]];
        top_scores[r] = scores[order[r]];
    }
}

void check_dims(const SparseMatrix& x, std::size_t model_dim) {
    if (x.cols() != model_dim) {
        throw StructuralError("feature dimension " + std::to_string(x.cols()) + " differs from model dimension " +
                              std::to_string(model_dim));
    }
}

void check_k(std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be >= 1");
}

}  // namespace

BpModel train_bp_with_partition(const Dataset& data, Partition partition, const TrainConfig& train_config,
                                TrainTimings* timings) {
    validate(train_config);
    validate_partition(partition, data.num_instances(), data.num_labels());
    const auto start = Clock::now();
    const auto q = partition.q;

    BpModel model;
    std::vector<std::vector<index_t>> route_rows(data.num_instances());
    for (std::size_t i = 0; i < route_rows.size(); ++i) route_rows[i] = {partition.instance_cluster_of[i]};
    const auto route_targets = BinaryLabelMatrix::from_rows(q, std::move(route_rows));
    std::vector<index_t> route_classes(q);
    std::iota(route_classes.begin(), route_classes.end(), 0);
    model.router = train_ova(data.features, route_targets, route_classes, train_config);

    // Per-cluster solves already parallelise over classes; clusters run in turn.
    const auto members = partition.instance_members();
    model.cluster_models.reserve(q);
    for (std::size_t l = 0; l < q; ++l) {
        const auto sub = data.select_rows(members[l]);
        model.cluster_models.push_back(
            train_ova(sub.features, sub.labels, partition.label_clusters[l], train_config));
    }
    const auto counts = column_sums(data.labels);
    model.train_label_counts.assign(counts.begin(), counts.end());
    model.partition = std::move(partition);
    if (timings) timings->training_seconds = seconds_since(start);
    return model;
}

BpModel train_bp(const Dataset& data, const BpConfig& bp_config, const TrainConfig& train_config,
                 TrainTimings* timings) {
    validate(bp_config);
    const auto start = Clock::now();
    Partition partition;
    std::optional<QSearchReport> search;
    if (bp_config.q) {
        partition = fit_partition(data, bp_config);
    } else {
        search = search_q(data, bp_config, bp_config.q_max);
        partition = search->chosen_partition;
    }
    const double partition_seconds = seconds_since(start);
    auto model = train_bp_with_partition(data, std::move(partition), train_config, timings);
    if (timings) {
        timings->partition_seconds = partition_seconds;
        timings->q_search = std::move(search);
    }
    return model;
}

PredictionResult predict_bp(const BpModel& model, const SparseMatrix& x, std::size_t k, unsigned threads) {
    check_k(k);
    check_dims(x, model.num_features());
    const auto n = x.rows();
    PredictionResult out;
    out.top_labels.resize(n);
    out.scores.resize(n);
    out.mults_used.resize(n);
    out.routed_cluster.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        MultiplicationCounter counter;
        const auto row = x.row(i);
        const auto cluster = predict_class(model.router, row, &counter);
        const auto& cm = model.cluster_models[cluster];
        const auto scores = score(cm, row, &counter);
        rank_top_k(cm.class_ids, scores, k, out.top_labels[i], out.scores[i]);
        out.mults_used[i] = counter.count;
        out.routed_cluster[i] = cluster;
    });
    return out;
}

LinearModel train_naive(const Dataset& data, const TrainConfig& config) {
    std::vector<index_t> all(data.num_labels());
    std::iota(all.begin(), all.end(), 0);
    return train_ova(data.features, data.labels, all, config);
}

PredictionResult predict_naive(const LinearModel& model, const SparseMatrix& x, std::size_t k, unsigned threads) {
    check_k(k);
    check_dims(x, model.num_features());
    const auto n = x.rows();
    PredictionResult out;
    out.top_labels.resize(n);
    out.scores.resize(n);
    out.mults_used.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        MultiplicationCounter counter;
        const auto scores = score(model, x.row(i), &counter);
        rank_top_k(model.class_ids, scores, k, out.top_labels[i], out.scores[i]);
        out.mults_used[i] = counter.count;
    });
    return out;
}

void write_predictions(std::ostream& out, const PredictionResult& result) {
    std::array<char, 64> buf;
    std::string line;
    for (std::size_t i = 0; i < result.size(); ++i) {
        line.clear();
        for (std::size_t r = 0; r < result.top_labels[i].size(); ++r) {
            if (r) line += ' ';
            line += std::to_string(result.top_labels[i][r]);
            line += ':';
            auto res = std::to_chars(buf.data(), buf.data() + buf.size(), result.scores[i][r]);
            line.append(buf.data(), res.ptr);
        }
        out << line << '\n';
    }
}

void write_mults_csv(std::ostream& out, const PredictionResult& result) {
    out << "instance,cluster,mults_used\n";
    for (std::size_t i = 0; i < result.size(); ++i) {
        out << i << ',';
        if (result.routed_cluster.empty()) {
            out << -1;
        } else {
            out << result.routed_cluster[i];
        }
        out << ',' << result.mults_used[i] << '\n';
    }
}

PredictionResult read_predictions(std::istream& predictions, std::istream* mults_csv) {
    PredictionResult out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(predictions, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<index_t> labels;
        std::vector<double> scores;
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError("prediction token '" + tok + "' lacks ':'", line_no);
            index_t label = 0;
            double s = 0.0;
            auto r1 = std::from_chars(tok.data(), tok.data() + colon, label);
            auto r2 = std::from_chars(tok.data() + colon + 1, tok.data() + tok.size(), s);
            if (r1.ec != std::errc() || r1.ptr != tok.data() + colon || r2.ec != std::errc() ||
                r2.ptr != tok.data() + tok.size()) {
                throw ParseError("bad prediction token '" + tok + "'", line_no);
            }
            labels.push_back(label);
            scores.push_back(s);
        }
        out.top_labels.push_back(std::move(labels));
        out.scores.push_back(std::move(scores));
    }
    out.mults_used.assign(out.top_labels.size(), 0);
    if (mults_csv) {
        std::getline(*mults_csv, line);  // header
        std::size_t row = 0;
        bool routed = false;
        std::vector<std::uint32_t> clusters;
        while (std::getline(*mults_csv, line)) {
            if (line.empty()) continue;
            std::istringstream cells(line);
            std::string a, b, c;
            if (!std::getline(cells, a, ',') || !std::getline(cells, b, ',') || !std::getline(cells, c)) {
                throw ParseError("mults csv row needs 3 fields", row + 2);
            }
            const auto i = std::stoull(a);
            if (i >= out.size()) throw ParseError("mults csv instance out of range", row + 2);
            out.mults_used[i] = std::stoull(c);
            const auto cl = std::stoll(b);
            if (cl >= 0) routed = true;
            clusters.push_back(static_cast<std::uint32_t>(std::max<long long>(cl, 0)));
            ++row;
        }
        if (routed) out.routed_cluster = std::move(clusters);
    }
    return out;
}

}  // namespace bpx
