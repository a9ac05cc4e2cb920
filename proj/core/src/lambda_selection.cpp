// SPDX-License-Identifier: Apache-2.0
#include "bpx/lambda_selection.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bpx/ingest.hpp"
#include "bpx/metrics.hpp"
#include "bpx/pipeline.hpp"

namespace bpx {

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int e = -6; e <= 6; ++e) grid.push_back(std::pow(10.0, 0.5 * e));
    return grid;
}

FoldLambdaResult fold_interval(std::vector<FoldScore> scores, double tolerance) {
    if (scores.empty()) throw std::invalid_argument("fold_interval needs at least one candidate");
    FoldLambdaResult r;
    r.scores = std::move(scores);
    for (std::size_t c = 1; c < r.scores.size(); ++c) {
        if (r.scores[c].accuracy > r.scores[r.best].accuracy) r.best = c;
    }
    const double best = r.scores[r.best].accuracy;
    auto within = [&](std::size_t c) { return best - r.scores[c].accuracy <= tolerance; };
    r.lo = r.hi = r.best;
    while (r.lo > 0 && within(r.lo - 1)) --r.lo;
    while (r.hi + 1 < r.scores.size() && within(r.hi + 1)) ++r.hi;
    return r;
}

LambdaSelection select_lambda(const Dataset& data, const LambdaSelectionOptions& options,
                              const FoldEvaluator& evaluate) {
    const auto& cand = options.candidates;
    if (cand.empty()) throw std::invalid_argument("select_lambda needs at least one candidate");
    if (!std::is_sorted(cand.begin(), cand.end()) ||
        std::adjacent_find(cand.begin(), cand.end()) != cand.end()) {
        throw std::invalid_argument("lambda candidates must be strictly ascending");
    }
    if (cand.front() < 0.0) throw std::invalid_argument("lambda candidates must be nonnegative");
    if (!(options.tolerance >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
    if (options.k == 0) throw std::invalid_argument("k must be >= 1");

    LambdaSelection out;
    out.candidates = cand;
    for (const auto& split : kfold_split(data, options.folds, options.seed)) {
        std::vector<FoldScore> scores;
        scores.reserve(cand.size());
        for (double lambda : cand) scores.push_back(evaluate(split.train, split.validation, lambda));
        out.folds.push_back(fold_interval(std::move(scores), options.tolerance));
    }
    out.lo = 0;
    out.hi = cand.size() - 1;
    for (const auto& f : out.folds) {
        out.lo = std::max(out.lo, f.lo);
        out.hi = std::min(out.hi, f.hi);
    }
    if (out.lo > out.hi) {
        std::ostringstream msg;
        msg << "lambda intervals of the " << out.folds.size() << " folds do not intersect:";
        for (std::size_t f = 0; f < out.folds.size(); ++f) {
            msg << " fold " << f << " [" << cand[out.folds[f].lo] << ", " << cand[out.folds[f].hi] << "]";
        }
        msg << "; widen the candidate grid or raise the tolerance";
        throw LambdaSelectionError(msg.str(), std::move(out));
    }
    return out;
}

LambdaSelection select_lambda(const Dataset& data, const LambdaSelectionOptions& options,
                              const BpConfig& bp_config, const TrainConfig& train_config) {
    auto evaluate = [&](const Dataset& train, const Dataset& validation, double lambda) {
        BpConfig cfg = bp_config;
        cfg.lambda = lambda;
        const auto model = train_bp(train, cfg, train_config);
        const auto pred = predict_bp(model, validation.features, options.k, bp_config.threads);
        FoldScore s;
        s.accuracy = precision_at_k(validation.labels, pred.top_labels, options.k);
        s.speedup = speedup(pred, static_cast<double>(train.num_labels()));
        return s;
    };
    return select_lambda(data, options, evaluate);
}

void write_lambda_table(std::ostream& out, const LambdaSelection& selection) {
    out << "fold,lambda,accuracy,speedup,in_interval\n";
    const auto n = selection.candidates.size();
    for (std::size_t f = 0; f < selection.folds.size(); ++f) {
        const auto& fold = selection.folds[f];
        for (std::size_t c = 0; c < n; ++c) {
            out << f << ',' << selection.candidates[c] << ',' << fold.scores[c].accuracy << ','
                << fold.scores[c].speedup << ',' << (c >= fold.lo && c <= fold.hi ? 1 : 0) << '\n';
        }
    }
    if (selection.folds.empty()) return;
    for (std::size_t c = 0; c < n; ++c) {
        double acc = 0.0, sp = 0.0;
        for (const auto& fold : selection.folds) {
            acc += fold.scores[c].accuracy;
            sp += fold.scores[c].speedup;
        }
        const auto k = static_cast<double>(selection.folds.size());
        out << "mean," << selection.candidates[c] << ',' << acc / k << ',' << sp / k << ','
            << (c >= selection.lo && c <= selection.hi ? 1 : 0) << '\n';
    }
}

}  // namespace bpx
