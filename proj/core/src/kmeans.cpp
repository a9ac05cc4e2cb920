// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bpx/bp.hpp"
#include "bpx/parallel.hpp"
#include "bpx/random.hpp"

namespace bpx {
namespace {

struct Centroids {
    std::size_t k;
    std::size_t d;
    std::vector<double> coords;   // k x d
    std::vector<double> sq_norms;

    std::span<double> row(std::size_t c) { return std::span<double>(coords).subspan(c * d, d); }
    std::span<const double> row(std::size_t c) const { return std::span<const double>(coords).subspan(c * d, d); }

    void set_from(std::size_t c, SparseVectorView x, double x_sq) {
        auto r = row(c);
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t p = 0; p < x.nnz(); ++p) r[x.indices[p]] = x.values[p];
        sq_norms[c] = x_sq;
    }
};

double sq_distance(SparseVectorView x, double x_sq, const Centroids& centroids, std::size_t c) {
    return std::max(0.0, x_sq - 2.0 * dot(x, centroids.row(c)) + centroids.sq_norms[c]);
}

std::pair<std::uint32_t, double> nearest(SparseVectorView x, double x_sq, const Centroids& centroids) {
    std::uint32_t best = 0;
    double best_d = sq_distance(x, x_sq, centroids, 0);
    for (std::size_t c = 1; c < centroids.k; ++c) {
        const double dist = sq_distance(x, x_sq, centroids, c);
        if (dist < best_d) {
            best_d = dist;
            best = static_cast<std::uint32_t>(c);
        }
    }
    return {best, best_d};
}

Centroids seed_plus_plus(const SparseMatrix& x, std::span<const double> row_sq, std::size_t k, Rng& rng) {
    const auto n = x.rows();
    Centroids centroids{k, x.cols(), std::vector<double>(k * x.cols(), 0.0), std::vector<double>(k, 0.0)};
    auto first = static_cast<std::size_t>(rng.below(n));
    centroids.set_from(0, x.row(first), row_sq[first]);

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_distance(x.row(i), row_sq[i], centroids, 0);
    // greedy k-means++: sample several candidates per step, keep the one
    // that lowers the total squared distance most
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    std::vector<double> cand_d2(n), best_d2(n);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t best_pick = n;
        double best_total = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t pick = 0;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc > target && d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<std::size_t>(rng.below(n));
            }
            centroids.set_from(c, x.row(pick), row_sq[pick]);
            double cand_total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cand_d2[i] = std::min(d2[i], sq_distance(x.row(i), row_sq[i], centroids, c));
                cand_total += cand_d2[i];
            }
            if (cand_total < best_total) {
                best_total = cand_total;
                best_pick = pick;
                best_d2.swap(cand_d2);
            }
        }
        centroids.set_from(c, x.row(best_pick), row_sq[best_pick]);
        d2.swap(best_d2);
    }
    return centroids;
}

std::pair<std::vector<std::uint32_t>, double> lloyd(const SparseMatrix& features, std::span<const double> row_sq,
                                                    std::size_t q, Rng& rng, const KMeansOptions& options) {
    const auto n = features.rows();
    std::vector<std::uint32_t> assign(n, 0);
    Centroids centroids = seed_plus_plus(features, row_sq, q, rng);
    std::vector<double> dist(n);
    const auto d = features.cols();

    auto assign_all = [&] {
        parallel_for(n, options.threads, [&](std::size_t i) {
            auto [c, dd] = nearest(features.row(i), row_sq[i], centroids);
            assign[i] = c;
            dist[i] = dd;
        });
    };

    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
        assign_all();

        Centroids next{q, d, std::vector<double>(q * d, 0.0), std::vector<double>(q, 0.0)};
        std::vector<std::size_t> counts(q, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = next.row(assign[i]);
            const auto x = features.row(i);
            for (std::size_t p = 0; p < x.nnz(); ++p) r[x.indices[p]] += x.values[p];
            ++counts[assign[i]];
        }
        std::vector<std::uint8_t> used(n, 0);
        for (std::size_t c = 0; c < q; ++c) {
            if (counts[c] == 0) {
                std::size_t far = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!used[i] && (far == n || dist[i] > dist[far])) far = i;
                }
                used[far] = 1;
                next.set_from(c, features.row(far), row_sq[far]);
                dist[far] = 0.0;
                continue;
            }
            auto r = next.row(c);
            const double inv = 1.0 / static_cast<double>(counts[c]);
            double sq = 0.0;
            for (auto& v : r) {
                v *= inv;
                sq += v * v;
            }
            next.sq_norms[c] = sq;
        }

        double movement = 0.0;
        for (std::size_t c = 0; c < q; ++c) {
            double s = 0.0;
            const auto a = centroids.row(c);
            const auto b = next.row(c);
            for (std::size_t f = 0; f < d; ++f) s += (a[f] - b[f]) * (a[f] - b[f]);
            movement = std::max(movement, std::sqrt(s));
        }
        centroids = std::move(next);
        if (movement < options.tol) break;
    }
    assign_all();
    double inertia = 0.0;
    for (double v : dist) inertia += v;
    return {std::move(assign), inertia};
}

}  // namespace

std::vector<std::uint32_t> init_instance_clusters(const SparseMatrix& features, std::size_t q, std::uint64_t seed,
                                                  const KMeansOptions& options) {
    const auto n = features.rows();
    if (q == 0) throw std::invalid_argument("k-means needs q >= 1");
    if (q > n) {
        throw std::invalid_argument("k-means needs q <= n (q=" + std::to_string(q) + ", n=" + std::to_string(n) + ")");
    }
    if (q == 1) return std::vector<std::uint32_t>(n, 0);
    if (options.restarts == 0) throw std::invalid_argument("k-means needs at least one restart");

    std::vector<double> row_sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = features.row(i);
        double s = 0.0;
        for (double v : r.values) s += v * v;
        row_sq[i] = s;
    }

    Rng rng(seed);
    std::vector<std::uint32_t> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < options.restarts; ++r) {
        auto [assign, inertia] = lloyd(features, row_sq, q, rng, options);
        if (r == 0 || inertia < best_inertia) {
            best_inertia = inertia;
            best = std::move(assign);
        }
    }
    return best;
}

}  // namespace bpx
