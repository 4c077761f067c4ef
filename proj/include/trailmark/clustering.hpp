#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace trailmark::cluster {

struct ClusterModel {
    int k = 0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    std::uint64_t seed = 0;
    // inertia after every assignment step, for monotonicity audits
    std::vector<double> inertia_trace;
};

// k-means++ seeding followed by Lloyd iterations until assignments are
// stable or max_iter. Empty clusters are repaired by stealing the point
// farthest from its centroid. Throws TooFewSamples, DimensionMismatch.
ClusterModel kmeans_fit(const std::vector<std::vector<double>>& vectors, int k,
                        std::uint64_t seed, int max_iter = 300);

// Best inertia over `restarts` runs with derived seeds; ties keep the
// earliest restart. Restarts may run in parallel.
ClusterModel kmeans_best_of(const std::vector<std::vector<double>>& vectors, int k,
                            std::uint64_t seed, int restarts = 10, int max_iter = 300,
                            unsigned threads = 1);

struct ElbowResult {
    int k = 1;
    bool degenerate = false;  // all chord distances zero (collinear curve)
};

// inertia[i] is the fitted inertia for k = i+1, i = 0..kmax-1 (kmax >= 3).
// Returns the k with maximal perpendicular distance to the chord from
// (1, inertia_1) to (kmax, inertia_kmax); ties toward smaller k.
ElbowResult elbow_select(const std::vector<double>& inertia_by_k);

// Flags samples whose centroid distance has modified z-score
// 0.6745 * (d - median) / MAD > 3.5; falls back to the mean absolute
// deviation when the MAD is zero.
std::vector<std::size_t> detect_outliers(const ClusterModel& model,
                                         const std::vector<std::vector<double>>& vectors);

// Nearest centroid; ties go to the lower index. Throws DimensionMismatch.
int assign(const ClusterModel& model, std::span<const double> vector);

}  // namespace trailmark::cluster
