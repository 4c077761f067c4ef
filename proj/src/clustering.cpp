#include "trailmark/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trailmark/error.hpp"
#include "trailmark/parallel.hpp"
#include "trailmark/rng.hpp"
#include "trailmark/stats.hpp"

namespace trailmark::cluster {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

int nearest(const std::vector<std::vector<double>>& centroids, std::span<const double> x,
            double* best_dist = nullptr) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = sq_dist(centroids[c], x);
        if (d < bd) {  // strict: ties keep the lower index
            bd = d;
            best = static_cast<int>(c);
        }
    }
    if (best_dist) *best_dist = bd;
    return best;
}

std::vector<std::vector<double>> seed_plus_plus(const std::vector<std::vector<double>>& xs, int k,
                                                Rng& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(xs[rng.below(xs.size())]);

    std::vector<double> d2(xs.size());
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double d = sq_dist(centroids[0], xs[i]);
            for (std::size_t c = 1; c < centroids.size(); ++c)
                d = std::min(d, sq_dist(centroids[c], xs[i]));
            d2[i] = d;
            total += d;
        }
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.below(xs.size());  // all points coincide with chosen centers
        } else {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = xs.size() - 1;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                acc += d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.push_back(xs[chosen]);
    }
    return centroids;
}

double total_inertia(const std::vector<std::vector<double>>& xs,
                     const std::vector<std::vector<double>>& centroids,
                     const std::vector<int>& assignments) {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc += sq_dist(centroids[static_cast<std::size_t>(assignments[i])], xs[i]);
    return acc;
}

}  // namespace

ClusterModel kmeans_fit(const std::vector<std::vector<double>>& xs, int k, std::uint64_t seed,
                        int max_iter) {
    if (k < 1) fail("TooFewSamples", "k must be at least 1");
    if (xs.size() < static_cast<std::size_t>(k))
        fail("TooFewSamples", "need at least k samples to form k clusters");
    if (max_iter < 1) fail("OutOfRange", "max_iter must be at least 1");
    const std::size_t dim = xs.front().size();
    for (const auto& x : xs)
        if (x.size() != dim) fail("DimensionMismatch", "vectors differ in length");

    Rng rng(seed);
    ClusterModel model;
    model.k = k;
    model.dim = dim;
    model.seed = seed;
    model.centroids = seed_plus_plus(xs, k, rng);
    model.assignments.assign(xs.size(), 0);

    for (std::size_t i = 0; i < xs.size(); ++i) model.assignments[i] = nearest(model.centroids, xs[i]);
    model.inertia_trace.push_back(total_inertia(xs, model.centroids, model.assignments));

    for (int iter = 0; iter < max_iter; ++iter) {
        // update step
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                              std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto c = static_cast<std::size_t>(model.assignments[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += xs[i][d];
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] == 0) continue;  // repaired below
            for (std::size_t d = 0; d < dim; ++d)
                model.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }

        // empty-cluster repair: move the point farthest from its centroid
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] != 0) continue;
            std::size_t worst = 0;
            double worst_d = -1.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const auto owner = static_cast<std::size_t>(model.assignments[i]);
                if (counts[owner] <= 1) continue;  // would orphan its own cluster
                const double d = sq_dist(model.centroids[owner], xs[i]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            const auto prev = static_cast<std::size_t>(model.assignments[worst]);
            --counts[prev];
            model.assignments[worst] = static_cast<int>(c);
            counts[c] = 1;
            model.centroids[c] = xs[worst];
            for (std::size_t d = 0; d < dim; ++d) {
                // recompute the donor centroid without the stolen point
                model.centroids[prev][d] =
                    (sums[prev][d] - xs[worst][d]) / static_cast<double>(counts[prev]);
            }
        }

        // assignment step
        bool changed = false;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const int c = nearest(model.centroids, xs[i]);
            if (c != model.assignments[i]) {
                model.assignments[i] = c;
                changed = true;
            }
        }
        model.inertia_trace.push_back(total_inertia(xs, model.centroids, model.assignments));
        if (!changed) break;
    }

    model.inertia = model.inertia_trace.back();
    return model;
}

ClusterModel kmeans_best_of(const std::vector<std::vector<double>>& xs, int k, std::uint64_t seed,
                            int restarts, int max_iter, unsigned threads) {
    if (restarts < 1) fail("OutOfRange", "restarts must be at least 1");
    std::vector<ClusterModel> runs(static_cast<std::size_t>(restarts));
    parallel_for(static_cast<std::size_t>(restarts), threads, [&](std::size_t r) {
        runs[r] = kmeans_fit(xs, k, derive_seed(seed, r), max_iter);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].inertia < runs[best].inertia) best = r;
    return runs[best];
}

ElbowResult elbow_select(const std::vector<double>& inertia_by_k) {
    const std::size_t kmax = inertia_by_k.size();
    if (kmax < 3) fail("TooFewPoints", "elbow selection needs k = 1..kmax with kmax >= 3");
    for (double v : inertia_by_k)
        if (v < 0.0) fail("OutOfRange", "inertia must be nonnegative");

    // distance from (k, I_k) to the chord (1, I_1) -- (kmax, I_kmax), up to
    // the constant chord norm
    const double x1 = 1.0, y1 = inertia_by_k.front();
    const double x2 = static_cast<double>(kmax), y2 = inertia_by_k.back();
    const double dx = x2 - x1, dy = y2 - y1;

    ElbowResult result;
    double best = -1.0;
    for (std::size_t i = 0; i < kmax; ++i) {
        const double x = static_cast<double>(i + 1), y = inertia_by_k[i];
        const double numer = std::abs(dy * (x - x1) - dx * (y - y1));
        if (numer > best) {  // strict: ties toward smaller k
            best = numer;
            result.k = static_cast<int>(i + 1);
        }
    }
    if (best <= 0.0) {
        result.k = 1;
        result.degenerate = true;
    }
    return result;
}

std::vector<std::size_t> detect_outliers(const ClusterModel& model,
                                         const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) return {};
    if (vectors.size() != model.assignments.size())
        fail("DimensionMismatch", "model assignments do not cover the vectors");

    std::vector<double> dist(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        dist[i] = std::sqrt(
            sq_dist(model.centroids[static_cast<std::size_t>(model.assignments[i])], vectors[i]));

    const double med = stats::median(dist);
    std::vector<double> abs_dev(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) abs_dev[i] = std::abs(dist[i] - med);
    double mad = stats::median(abs_dev);
    if (mad == 0.0) {
        double mean_ad = 0.0;
        for (double v : abs_dev) mean_ad += v;
        mad = mean_ad / static_cast<double>(abs_dev.size());
    }

    std::vector<std::size_t> flagged;
    if (mad == 0.0) return flagged;  // no dispersion at all
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double z = 0.6745 * (dist[i] - med) / mad;
        if (z > 3.5) flagged.push_back(i);
    }
    return flagged;
}

int assign(const ClusterModel& model, std::span<const double> vector) {
    if (vector.size() != model.dim) fail("DimensionMismatch", "vector length differs from centroids");
    return nearest(model.centroids, vector);
}

}  // namespace trailmark::cluster
