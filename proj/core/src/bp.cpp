// SPDX-License-Identifier: Apache-2.0
#include "bpx/bp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "bpx/error.hpp"
#include "bpx/parallel.hpp"

namespace bpx {
namespace {

void check_assignment(std::span<const std::uint32_t> assign, std::size_t n, std::size_t q) {
    if (assign.size() != n) {
        throw StructuralError("assignment has " + std::to_string(assign.size()) + " entries for " +
                              std::to_string(n) + " instances");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] >= q) throw StructuralError("instance " + std::to_string(i) + " assigned outside [0, q)");
    }
}

void check_label_clusters(const std::vector<std::vector<index_t>>& clusters, std::size_t m) {
    for (std::size_t l = 0; l < clusters.size(); ++l) {
        for (auto j : clusters[l]) {
            if (j >= m) throw StructuralError("label cluster " + std::to_string(l) + " holds label >= m");
        }
    }
}

// Labels with a positive count by (count desc, index asc), then zero-count
// labels by ascending index.
std::vector<index_t> count_order(std::span<const std::size_t> counts) {
    std::vector<index_t> positive, zero;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        (counts[j] > 0 ? positive : zero).push_back(static_cast<index_t>(j));
    }
    std::sort(positive.begin(), positive.end(), [&](index_t a, index_t b) {
        return counts[a] != counts[b] ? counts[a] > counts[b] : a < b;
    });
    positive.insert(positive.end(), zero.begin(), zero.end());
    return positive;
}

// Shortest prefix of `order` minimising -sum(counts) + lambda * J^2. The
// marginal cost -P_(J+1) + lambda * (2J + 1) is nondecreasing in J, so the
// first nonnegative marginal ends the scan.
std::size_t best_prefix(std::span<const std::size_t> counts, std::span<const index_t> order, double lambda) {
    std::size_t j = 0;
    while (j < order.size()) {
        const double marginal =
            -static_cast<double>(counts[order[j]]) + lambda * (2.0 * static_cast<double>(j) + 1.0);
        if (marginal >= 0.0) break;
        ++j;
    }
    return j;
}

}  // namespace

void validate(const BpConfig& config) {
    if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
        throw std::invalid_argument("lambda must be a finite nonnegative number");
    }
    if (config.q && *config.q == 0) throw std::invalid_argument("q must be >= 1");
    if (!(config.conv_tol > 0.0)) throw std::invalid_argument("conv_tol must be positive");
    if (config.max_alt_iters == 0) throw std::invalid_argument("max_alt_iters must be positive");
}

ObjectiveValue objective(const BinaryLabelMatrix& labels, std::span<const std::uint32_t> instance_cluster_of,
                         const std::vector<std::vector<index_t>>& label_clusters, double lambda) {
    const auto q = label_clusters.size();
    const auto m = labels.cols();
    check_assignment(instance_cluster_of, labels.rows(), std::max<std::size_t>(q, 1));
    check_label_clusters(label_clusters, m);

    std::vector<std::uint8_t> member(q * m, 0);
    double sq_sizes = 0.0;
    for (std::size_t l = 0; l < q; ++l) {
        for (auto j : label_clusters[l]) member[l * m + j] = 1;
        const double s = static_cast<double>(label_clusters[l].size());
        sq_sizes += s * s;
    }
    ObjectiveValue v;
    if (q > 0) {
        for (std::size_t i = 0; i < labels.rows(); ++i) {
            const auto* row_member = member.data() + instance_cluster_of[i] * m;
            for (auto j : labels.row(i)) v.captured_ones += row_member[j];
        }
    }
    v.penalty = lambda * sq_sizes;
    v.f = -static_cast<double>(v.captured_ones) + v.penalty;
    return v;
}

ObjectiveValue objective(const BinaryLabelMatrix& labels, const Partition& partition) {
    if (partition.label_clusters.size() != partition.q) throw StructuralError("partition label cluster count != q");
    return objective(labels, partition.instance_cluster_of, partition.label_clusters, partition.lambda);
}

std::vector<index_t> select_labels_from_counts(std::span<const std::size_t> counts, double lambda,
                                               std::size_t min_labels) {
    if (min_labels > counts.size()) throw std::invalid_argument("min_labels exceeds the number of labels");
    const auto order = count_order(counts);
    const auto j = std::max(best_prefix(counts, order, lambda), min_labels);
    std::vector<index_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(j));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<std::vector<index_t>> select_label_clusters(const BinaryLabelMatrix& labels,
                                                        std::span<const std::uint32_t> instance_cluster_of,
                                                        std::size_t q, double lambda, std::size_t min_labels,
                                                        unsigned threads) {
    const auto n = labels.rows();
    const auto m = labels.cols();
    check_assignment(instance_cluster_of, n, q);
    if (min_labels > m) throw std::invalid_argument("min_labels exceeds the number of labels");

    std::vector<std::vector<std::size_t>> members(q);
    for (std::size_t i = 0; i < n; ++i) members[instance_cluster_of[i]].push_back(i);

    std::vector<index_t> global_order;
    if (std::any_of(members.begin(), members.end(), [](const auto& v) { return v.empty(); })) {
        const auto global = column_sums(labels);
        global_order = count_order(global);
    }

    std::vector<std::vector<index_t>> clusters(q);
    parallel_for(q, threads, [&](std::size_t l) {
        if (members[l].empty()) {
            clusters[l].assign(global_order.begin(), global_order.begin() + static_cast<std::ptrdiff_t>(min_labels));
            std::sort(clusters[l].begin(), clusters[l].end());
            return;
        }
        const auto counts = column_sums(labels, members[l]);
        clusters[l] = select_labels_from_counts(counts, lambda, min_labels);
    });
    return clusters;
}

std::vector<std::uint32_t> select_instance_clusters(const BinaryLabelMatrix& labels,
                                                    const std::vector<std::vector<index_t>>& label_clusters,
                                                    std::span<const std::uint32_t> previous, unsigned threads) {
    const auto n = labels.rows();
    const auto m = labels.cols();
    const auto q = label_clusters.size();
    if (q == 0) throw std::invalid_argument("select_instance_clusters needs at least one label cluster");
    check_assignment(previous, n, q);
    check_label_clusters(label_clusters, m);

    // label -> clusters holding it
    std::vector<std::size_t> inv_offsets(m + 1, 0);
    for (const auto& c : label_clusters) {
        for (auto j : c) ++inv_offsets[j + 1];
    }
    std::partial_sum(inv_offsets.begin(), inv_offsets.end(), inv_offsets.begin());
    std::vector<std::uint32_t> inv(inv_offsets.back());
    {
        auto fill = inv_offsets;
        for (std::size_t l = 0; l < q; ++l) {
            for (auto j : label_clusters[l]) inv[fill[j]++] = static_cast<std::uint32_t>(l);
        }
    }

    std::vector<std::uint32_t> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<std::uint32_t> counts(q, 0);
        for (auto j : labels.row(i)) {
            for (auto p = inv_offsets[j]; p < inv_offsets[j + 1]; ++p) ++counts[inv[p]];
        }
        std::size_t best = 0;
        for (std::size_t l = 1; l < q; ++l) {
            if (counts[l] > counts[best]) best = l;
        }
        out[i] = counts[best] == 0 ? previous[i] : static_cast<std::uint32_t>(best);
    });
    return out;
}

Partition fit_partition_from(const BinaryLabelMatrix& labels, std::vector<std::uint32_t> initial, std::size_t q,
                             const BpConfig& config) {
    validate(config);
    const auto n = labels.rows();
    const auto m = labels.cols();
    if (q == 0 || q > std::min(n, m)) {
        throw std::invalid_argument("q must lie in [1, min(n, m)] (q=" + std::to_string(q) + ", n=" +
                                    std::to_string(n) + ", m=" + std::to_string(m) + ")");
    }
    check_assignment(initial, n, q);

    Partition p;
    p.q = q;
    p.lambda = config.lambda;
    p.instance_cluster_of = std::move(initial);

    std::vector<std::vector<index_t>> previous_labels;
    for (std::size_t t = 0; t < config.max_alt_iters; ++t) {
        auto clusters = select_label_clusters(labels, p.instance_cluster_of, q, config.lambda,
                                              config.min_labels_per_cluster, config.threads);
        auto assign = select_instance_clusters(labels, clusters, p.instance_cluster_of, config.threads);
        const auto f = objective(labels, assign, clusters, config.lambda).f;
        const bool fixed_point = assign == p.instance_cluster_of && clusters == previous_labels;
        p.instance_cluster_of = std::move(assign);
        previous_labels = clusters;
        p.label_clusters = std::move(clusters);
        const bool small_change = !p.objective_trace.empty() && std::abs(p.objective_trace.back() - f) < config.conv_tol;
        p.objective_trace.push_back(f);
        if (small_change || fixed_point) break;
    }
    return p;
}

Partition fit_partition(const Dataset& data, const BpConfig& config) {
    validate(config);
    if (!config.q) throw std::invalid_argument("fit_partition needs an explicit q");
    const auto q = *config.q;
    const auto n = data.num_instances();
    const auto m = data.num_labels();
    if (q > std::min(n, m)) {
        throw std::invalid_argument("q must lie in [1, min(n, m)] (q=" + std::to_string(q) + ", n=" +
                                    std::to_string(n) + ", m=" + std::to_string(m) + ")");
    }
    KMeansOptions km{config.kmeans_max_iters, config.kmeans_tol, config.kmeans_restarts, config.threads};
    auto initial = init_instance_clusters(data.features, q, config.seed, km);
    return fit_partition_from(data.labels, std::move(initial), q, config);
}

QSearchReport search_q(const Dataset& data, const BpConfig& config, std::size_t q_max) {
    if (q_max < 2) throw std::invalid_argument("search_q needs q_max >= 2");
    const auto limit = std::min({q_max, data.num_instances(), data.num_labels()});
    if (limit < 2) throw OptimizationError("search_q: dataset too small for q >= 2");
    const auto total = data.labels.nnz();

    QSearchReport report;
    for (std::size_t q = 2; q <= limit; ++q) {
        BpConfig cfg = config;
        cfg.q = q;
        auto part = fit_partition(data, cfg);
        const auto obj = objective(data.labels, part);
        QSearchEntry e;
        e.q = q;
        e.captured_ones = obj.captured_ones;
        e.captured_proportion = total ? static_cast<double>(obj.captured_ones) / static_cast<double>(total) : 0.0;
        e.objective = obj.f;
        const auto sizes = part.instance_cluster_sizes();
        e.any_empty = std::any_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 0; }) ||
                      std::any_of(part.label_clusters.begin(), part.label_clusters.end(),
                                  [](const auto& c) { return c.empty(); });
        report.entries.push_back(e);
        if (e.any_empty) break;
        report.chosen_q = q;
        report.chosen_partition = std::move(part);
    }
    if (report.chosen_q == 0) {
        throw OptimizationError("search_q: q = 2 already leaves a paired cluster empty; no q >= 2 is available");
    }
    return report;
}

void write_q_search_csv(std::ostream& out, const QSearchReport& report) {
    out << "q,captured_ones,captured_proportion,objective,any_empty,chosen\n";
    for (const auto& e : report.entries) {
        out << e.q << ',' << e.captured_ones << ',' << e.captured_proportion << ',' << e.objective << ','
            << (e.any_empty ? 1 : 0) << ',' << (e.q == report.chosen_q ? 1 : 0) << '\n';
    }
}

PermutedMatrix export_permuted_matrix(const BinaryLabelMatrix& labels, const Partition& partition,
                                      std::size_t row_limit) {
    validate_partition(partition, labels.rows(), labels.cols());
    const auto members = partition.instance_members();
    PermutedMatrix out;
    for (std::size_t l = 0; l < partition.q; ++l) {
        const auto take = std::min(row_limit, members[l].size());
        for (std::size_t r = 0; r < take; ++r) {
            out.row_instance.push_back(members[l][r]);
            out.row_cluster.push_back(static_cast<std::uint32_t>(l));
        }
        const auto counts = column_sums(labels, members[l]);
        auto cols = partition.label_clusters[l];
        std::stable_sort(cols.begin(), cols.end(), [&](index_t a, index_t b) { return counts[a] > counts[b]; });
        for (auto j : cols) {
            out.col_label.push_back(j);
            out.col_cluster.push_back(static_cast<std::uint32_t>(l));
        }
    }
    const auto w = out.width();
    out.pixels.assign(out.height() * w, 0);
    // column positions of each label (a label may sit in several clusters)
    std::vector<std::vector<std::size_t>> positions(labels.cols());
    for (std::size_t c = 0; c < w; ++c) positions[out.col_label[c]].push_back(c);
    for (std::size_t r = 0; r < out.height(); ++r) {
        for (auto j : labels.row(out.row_instance[r])) {
            for (auto c : positions[j]) out.pixels[r * w + c] = 1;
        }
    }
    return out;
}

void write_pgm(std::ostream& out, const PermutedMatrix& matrix) {
    out << "P5\n" << matrix.width() << ' ' << matrix.height() << "\n255\n";
    std::string row(matrix.width(), '\0');
    for (std::size_t r = 0; r < matrix.height(); ++r) {
        for (std::size_t c = 0; c < matrix.width(); ++c) row[c] = matrix.at(r, c) ? '\0' : static_cast<char>(255);
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

void write_rows_csv(std::ostream& out, const PermutedMatrix& matrix) {
    out << "position,instance,cluster\n";
    for (std::size_t r = 0; r < matrix.height(); ++r) {
        out << r << ',' << matrix.row_instance[r] << ',' << matrix.row_cluster[r] << '\n';
    }
}

void write_cols_csv(std::ostream& out, const PermutedMatrix& matrix) {
    out << "position,label,cluster\n";
    for (std::size_t c = 0; c < matrix.width(); ++c) {
        out << c << ',' << matrix.col_label[c] << ',' << matrix.col_cluster[c] << '\n';
    }
}

void write_partition_json(std::ostream& out, const Partition& partition) {
    nlohmann::json j;
    j["q"] = partition.q;
    j["lambda"] = partition.lambda;
    j["num_instances"] = partition.num_instances();
    j["instance_cluster_sizes"] = partition.instance_cluster_sizes();
    std::vector<std::size_t> label_sizes;
    for (const auto& c : partition.label_clusters) label_sizes.push_back(c.size());
    j["label_cluster_sizes"] = label_sizes;
    j["label_clusters"] = partition.label_clusters;
    j["objective_trace"] = partition.objective_trace;
    out << j.dump(2) << '\n';
}

}  // namespace bpx
