// SPDX-License-Identifier: Apache-2.0
#include "bpx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bpx/error.hpp"

namespace bpx {
namespace {

void check_inputs(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be >= 1");
    if (predictions.size() != truth.rows()) {
        throw StructuralError("predictions cover " + std::to_string(predictions.size()) + " rows, truth has " +
                              std::to_string(truth.rows()));
    }
}

template <typename Fn>
void for_each_hit(const BinaryLabelMatrix& truth, std::size_t i, const Ranking& ranking, std::size_t k, Fn&& fn) {
    const auto take = std::min(k, ranking.size());
    for (std::size_t r = 0; r < take; ++r) {
        if (ranking[r] < truth.cols() && truth.contains(i, ranking[r])) fn(ranking[r]);
    }
}

}  // namespace

double precision_at_k(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions, std::size_t k) {
    check_inputs(truth, predictions, k);
    if (truth.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        std::size_t hits = 0;
        for_each_hit(truth, i, predictions[i], k, [&](index_t) { ++hits; });
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(truth.rows());
}

double recall_at_k(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions, std::size_t k) {
    check_inputs(truth, predictions, k);
    double total = 0.0;
    std::size_t labelled = 0;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        const auto size = truth.row(i).size();
        if (size == 0) continue;
        ++labelled;
        std::size_t hits = 0;
        for_each_hit(truth, i, predictions[i], k, [&](index_t) { ++hits; });
        total += static_cast<double>(hits) / static_cast<double>(size);
    }
    if (labelled == 0) throw std::invalid_argument("recall@k undefined: no row has a label");
    return total / static_cast<double>(labelled);
}

std::vector<double> label_propensities(std::span<const std::uint64_t> train_label_counts, std::size_t n_train,
                                       const PropensityParams& params) {
    if (n_train < 3) throw std::invalid_argument("propensity model needs n_train >= 3 so that ln(n) - 1 > 0");
    if (!(params.a > 0.0 && params.a < 1.0) || !(params.b > 0.0)) {
        throw std::invalid_argument("propensity parameters need a in (0, 1) and b > 0");
    }
    const double c = (std::log(static_cast<double>(n_train)) - 1.0) * std::pow(params.b + 1.0, params.a);
    std::vector<double> p(train_label_counts.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double nj = static_cast<double>(train_label_counts[j]);
        p[j] = 1.0 / (1.0 + c * std::exp(-params.a * std::log(nj + params.b)));
    }
    return p;
}

double psp_at_k(const BinaryLabelMatrix& truth, std::span<const Ranking> predictions,
                std::span<const double> propensities, std::size_t k) {
    check_inputs(truth, predictions, k);
    if (propensities.size() != truth.cols()) throw StructuralError("one propensity per label expected");
    for (double p : propensities) {
        if (!(p > 0.0)) throw std::invalid_argument("propensities must be positive");
    }
    if (truth.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        double s = 0.0;
        for_each_hit(truth, i, predictions[i], k, [&](index_t j) { s += 1.0 / propensities[j]; });
        total += s / static_cast<double>(k);
    }
    return total / static_cast<double>(truth.rows());
}

double speedup(const PredictionResult& result, double naive_cost_per_instance) {
    if (result.mults_used.empty()) throw std::invalid_argument("speedup of an empty prediction result");
    double sum = 0.0;
    for (auto m : result.mults_used) sum += static_cast<double>(m);
    return naive_cost_per_instance / (sum / static_cast<double>(result.mults_used.size()));
}

std::vector<MetricRow> evaluate(const BinaryLabelMatrix& truth, const PredictionResult& result,
                                std::span<const double> propensities, std::span<const std::size_t> ks,
                                double naive_cost) {
    std::vector<MetricRow> rows;
    const std::span<const Ranking> preds(result.top_labels);
    for (auto k : ks) rows.push_back({"P", k, precision_at_k(truth, preds, k)});
    if (!propensities.empty()) {
        for (auto k : ks) rows.push_back({"PSP", k, psp_at_k(truth, preds, propensities, k)});
    }
    if (truth.nnz() > 0) {
        for (auto k : ks) rows.push_back({"R", k, recall_at_k(truth, preds, k)});
    }
    if (naive_cost > 0.0 && !result.mults_used.empty()) rows.push_back({"speedup", 0, speedup(result, naive_cost)});
    return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows) {
    out << "metric,k,value\n";
    const auto old = out.precision(17);
    for (const auto& r : rows) out << r.metric << ',' << r.k << ',' << r.value << '\n';
    out.precision(old);
}

void write_summary_table(std::ostream& out, std::span<const MetricRow> rows) {
    std::vector<std::string> head, cells;
    for (const auto& r : rows) {
        if (r.metric == "R") continue;
        std::ostringstream cell;
        if (r.metric == "speedup") {
            head.push_back("Speedup");
            cell << std::llround(r.value) << 'x';
        } else {
            head.push_back(r.metric + "@" + std::to_string(r.k));
            cell << std::fixed << std::setprecision(2) << 100.0 * r.value;
        }
        cells.push_back(cell.str());
    }
    for (const auto& h : head) out << std::setw(10) << h;
    out << '\n';
    for (const auto& c : cells) out << std::setw(10) << c;
    out << '\n';
}

}  // namespace bpx
