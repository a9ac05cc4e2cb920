// SPDX-License-Identifier: Apache-2.0
#include "bpx/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bpx/error.hpp"
#include "bpx/parallel.hpp"

namespace bpx {
namespace {

constexpr double kConstantLogitClamp = 10.0;

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(-t))
double log1p_exp_neg(double t) {
    if (t >= 0.0) return std::log1p(std::exp(-t));
    return -t + std::log1p(std::exp(t));
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
}

double dot_dense(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

void validate(const TrainConfig& config) {
    if (!(config.reg_strength > 0.0)) throw std::invalid_argument("reg_strength must be positive");
    if (!(config.tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (config.max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
    if (config.prune_threshold < 0.0) throw std::invalid_argument("prune_threshold must be nonnegative");
}

LogisticObjective::LogisticObjective(const SparseMatrix& x, std::span<const double> signs,
                                     std::span<const double> costs)
    : x_(x), signs_(signs), costs_(costs) {
    if (signs.size() != x.rows() || costs.size() != x.rows()) {
        throw StructuralError("logistic objective: signs/costs length differs from row count");
    }
}

void LogisticObjective::margins(std::span<const double> params, std::vector<double>& z) const {
    const auto d = x_.cols();
    const auto w = params.first(d);
    const double b = params[d];
    z.resize(x_.rows());
    for (std::size_t i = 0; i < x_.rows(); ++i) z[i] = dot(x_.row(i), w) + b;
}

double LogisticObjective::value(std::span<const double> params) const {
    std::vector<double> z;
    margins(params, z);
    const auto w = params.first(x_.cols());
    double f = 0.5 * dot_dense(w, w);
    for (std::size_t i = 0; i < z.size(); ++i) f += costs_[i] * log1p_exp_neg(signs_[i] * z[i]);
    return f;
}

double LogisticObjective::gradient(std::span<const double> params, std::span<double> grad) const {
    const auto d = x_.cols();
    margins(params, z_);
    curvature_.resize(z_.size());
    const auto w = params.first(d);
    double f = 0.5 * dot_dense(w, w);
    std::copy(w.begin(), w.end(), grad.begin());
    grad[d] = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
        const double t = signs_[i] * z_[i];
        f += costs_[i] * log1p_exp_neg(t);
        const double s = sigmoid(t);
        const double coef = costs_[i] * (s - 1.0) * signs_[i];
        curvature_[i] = costs_[i] * s * (1.0 - s);
        const auto row = x_.row(i);
        for (std::size_t p = 0; p < row.nnz(); ++p) grad[row.indices[p]] += coef * row.values[p];
        grad[d] += coef;
    }
    return f;
}

void LogisticObjective::hessian_times(std::span<const double> v, std::span<double> out) const {
    const auto d = x_.cols();
    const auto vw = v.first(d);
    std::copy(vw.begin(), vw.end(), out.begin());
    out[d] = 0.0;
    for (std::size_t i = 0; i < x_.rows(); ++i) {
        const auto row = x_.row(i);
        const double u = curvature_[i] * (dot(row, vw) + v[d]);
        for (std::size_t p = 0; p < row.nnz(); ++p) out[row.indices[p]] += u * row.values[p];
        out[d] += u;
    }
}

BinarySolution solve_logistic(const SparseMatrix& x, std::span<const double> signs,
                              std::span<const double> costs, const TrainConfig& config) {
    LogisticObjective obj(x, signs, costs);
    const auto dim = obj.dimension();
    std::vector<double> params(dim, 0.0), grad(dim), step(dim), trial(dim);
    std::vector<double> r(dim), p(dim), hp(dim);

    double f = obj.gradient(params, grad);
    const double g0 = norm2(grad);
    double gnorm = g0;
    // The bias direction has no regularizer; a tiny ridge keeps CG well posed.
    const double bias_ridge = 1e-10 * (1.0 + static_cast<double>(x.rows()));

    BinarySolution sol;
    std::size_t it = 0;
    for (; it < config.max_epochs; ++it) {
        if (gnorm <= config.tol * g0 || gnorm == 0.0) {
            sol.converged = true;
            break;
        }
        // Truncated CG on H s = -g.
        std::fill(step.begin(), step.end(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) r[k] = -grad[k];
        p = r;
        double rr = dot_dense(r, r);
        const double cg_tol = 0.1 * gnorm;
        const std::size_t cg_max = std::min<std::size_t>(dim, 250);
        for (std::size_t k = 0; k < cg_max && std::sqrt(rr) > cg_tol; ++k) {
            obj.hessian_times(p, hp);
            hp[dim - 1] += bias_ridge * p[dim - 1];
            const double php = dot_dense(p, hp);
            if (php <= 0.0) break;
            const double alpha = rr / php;
            for (std::size_t t = 0; t < dim; ++t) {
                step[t] += alpha * p[t];
                r[t] -= alpha * hp[t];
            }
            const double rr_new = dot_dense(r, r);
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t t = 0; t < dim; ++t) p[t] = r[t] + beta * p[t];
        }
        if (dot_dense(step, step) == 0.0) step = r;

        // Armijo backtracking.
        const double slope = dot_dense(grad, step);
        if (slope >= 0.0) break;
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t t = 0; t < dim; ++t) trial[t] = params[t] + alpha * step[t];
            const double f_trial = obj.value(trial);
            if (f_trial <= f + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        params.swap(trial);
        f = obj.gradient(params, grad);
        gnorm = norm2(grad);
    }
    if (!sol.converged && (gnorm <= config.tol * g0 || gnorm == 0.0)) sol.converged = true;

    sol.iterations = it;
    sol.grad_norm = gnorm;
    sol.bias = params[dim - 1];
    params.pop_back();
    sol.weights = std::move(params);
    return sol;
}

LinearModel train_ova(const SparseMatrix& x, const BinaryLabelMatrix& targets,
                      std::span<const index_t> class_ids, const TrainConfig& config) {
    validate(config);
    if (x.rows() != targets.rows()) {
        throw StructuralError("train_ova: " + std::to_string(x.rows()) + " feature rows vs " +
                              std::to_string(targets.rows()) + " target rows");
    }
    if (class_ids.empty()) throw std::invalid_argument("train_ova: empty class set");

    constexpr auto kAbsent = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> slot(targets.cols(), kAbsent);
    for (std::size_t c = 0; c < class_ids.size(); ++c) {
        if (class_ids[c] >= targets.cols()) {
            throw StructuralError("class id " + std::to_string(class_ids[c]) + " outside target columns");
        }
        if (slot[class_ids[c]] != kAbsent) throw StructuralError("duplicate class id in train_ova");
        slot[class_ids[c]] = c;
    }
    const auto n = x.rows();
    std::vector<std::vector<std::size_t>> positives(class_ids.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (auto j : targets.row(i)) {
            if (slot[j] != kAbsent) positives[slot[j]].push_back(i);
        }
    }

    const auto k = class_ids.size();
    std::vector<std::vector<std::pair<index_t, double>>> rows(k);
    std::vector<double> bias(k, 0.0);
    std::vector<std::uint8_t> constant(k, 0);

    parallel_for(k, config.threads, [&](std::size_t c) {
        const auto npos = positives[c].size();
        if (npos == 0 || npos == n) {
            const double prior = n == 0 ? 0.0 : static_cast<double>(npos) / static_cast<double>(n);
            double logit = prior <= 0.0   ? -kConstantLogitClamp
                           : prior >= 1.0 ? kConstantLogitClamp
                                          : std::log(prior / (1.0 - prior));
            bias[c] = std::clamp(logit, -kConstantLogitClamp, kConstantLogitClamp);
            constant[c] = 1;
            return;
        }
        std::vector<double> signs(n, -1.0);
        for (auto i : positives[c]) signs[i] = 1.0;
        std::vector<double> costs(n, config.reg_strength);
        if (config.balance_classes) {
            const double pos_cost = config.reg_strength * static_cast<double>(n) / (2.0 * static_cast<double>(npos));
            const double neg_cost =
                config.reg_strength * static_cast<double>(n) / (2.0 * static_cast<double>(n - npos));
            for (std::size_t i = 0; i < n; ++i) costs[i] = signs[i] > 0 ? pos_cost : neg_cost;
        }
        auto sol = solve_logistic(x, signs, costs, config);
        bias[c] = sol.bias;
        for (std::size_t f = 0; f < sol.weights.size(); ++f) {
            if (std::abs(sol.weights[f]) >= config.prune_threshold && sol.weights[f] != 0.0) {
                rows[c].emplace_back(static_cast<index_t>(f), sol.weights[f]);
            }
        }
    });

    SparseMatrixBuilder builder(x.cols());
    for (auto& r : rows) builder.append_row(std::move(r));
    LinearModel model;
    model.weights = std::move(builder).build();
    model.bias = std::move(bias);
    model.class_ids.assign(class_ids.begin(), class_ids.end());
    model.constant = std::move(constant);
    return model;
}

std::vector<double> score(const LinearModel& model, SparseVectorView x, MultiplicationCounter* counter) {
    const auto d = model.num_features();
    if (!x.indices.empty() && x.indices.back() >= d) {
        throw StructuralError("feature index " + std::to_string(x.indices.back()) +
                              " exceeds model dimension " + std::to_string(d));
    }
    const auto k = model.num_classes();
    std::vector<double> scores(k);
    for (std::size_t c = 0; c < k; ++c) scores[c] = dot(x, model.weights.row(c)) + model.bias[c];
    if (counter) counter->count += k;
    return scores;
}

std::size_t argmax_class(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("argmax over zero classes");
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return best;
}

index_t predict_class(const LinearModel& model, SparseVectorView x, MultiplicationCounter* counter) {
    const auto s = score(model, x, counter);
    std::size_t best = argmax_class(s);
    for (std::size_t c = 0; c < s.size(); ++c) {
        if (s[c] == s[best] && model.class_ids[c] < model.class_ids[best]) best = c;
    }
    return model.class_ids[best];
}

}  // namespace bpx
