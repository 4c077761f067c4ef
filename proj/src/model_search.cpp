#include "trailmark/model_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "trailmark/error.hpp"
#include "trailmark/parallel.hpp"
#include "trailmark/rng.hpp"

namespace trailmark::search {

namespace {

constexpr double kGainEpsilon = 1e-12;

enum ModelFamily { kKnn = 0, kLinear, kTree, kForest };

ModelFamily family_of(int model_code) {
    if (model_code < 3) return kKnn;
    if (model_code < 6) return kLinear;
    if (model_code < 9) return kTree;
    return kForest;
}

}  // namespace

std::string genome_key(const PipelineGenome& g) {
    std::ostringstream key;
    key << g.scaler << ':' << g.reducer << ':' << g.model << ':' << g.seed_idx;
    return key.str();
}

std::string describe_genome(const PipelineGenome& g, Task task) {
    static const char* scalers[] = {"none", "standardize", "minmax"};
    std::ostringstream out;
    out << "scaler=" << scalers[g.scaler];
    if (g.reducer == 0)
        out << " reducer=none";
    else
        out << " reducer=top_variance(" << kReducerDims[g.reducer - 1] << ")";
    switch (family_of(g.model)) {
        case kKnn:
            out << " model=knn(k=" << kKnnK[g.model] << ")";
            break;
        case kLinear:
            out << (task == Task::classification ? " model=logistic(lambda=" : " model=ridge(lambda=")
                << kLambda[g.model - 3] << ")";
            break;
        case kTree:
            out << " model=tree(depth=" << kTreeDepth[g.model - 6] << ")";
            break;
        case kForest: {
            const int code = g.model - 9;
            out << " model=forest(trees=" << kForestTrees[code / 2]
                << ",depth=" << kForestDepth[code % 2] << ")";
            break;
        }
    }
    out << " seed_idx=" << g.seed_idx;
    return out.str();
}

MetricsClassification classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        fail("LengthMismatch", "prediction and truth lengths differ or are empty");

    MetricsClassification m;
    std::size_t correct = 0;
    std::map<int, long> tp, fp, fn;
    for (int c : y_true) {
        tp.emplace(c, 0);
        fp.emplace(c, 0);
        fn.emplace(c, 0);
    }
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) {
            ++correct;
            ++tp[y_true[i]];
        } else {
            ++fn[y_true[i]];
            if (tp.count(y_pred[i])) ++fp[y_pred[i]];  // predictions outside truth classes
            else fp.emplace(y_pred[i], 1);
        }
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());

    double psum = 0.0, rsum = 0.0, fsum = 0.0;
    std::size_t n_classes = 0;
    for (const auto& [c, tpc] : tp) {
        // macro averages cover classes present in the truth only
        if (std::find(y_true.begin(), y_true.end(), c) == y_true.end()) continue;
        const long fpc = fp.count(c) ? fp.at(c) : 0;
        const long fnc = fn.at(c);
        const double p = (tpc + fpc) > 0 ? static_cast<double>(tpc) / static_cast<double>(tpc + fpc) : 0.0;
        const double r = (tpc + fnc) > 0 ? static_cast<double>(tpc) / static_cast<double>(tpc + fnc) : 0.0;
        const double f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        m.precision_per_class[c] = p;
        m.recall_per_class[c] = r;
        m.f1_per_class[c] = f;
        psum += p;
        rsum += r;
        fsum += f;
        ++n_classes;
    }
    m.precision = psum / static_cast<double>(n_classes);
    m.recall = rsum / static_cast<double>(n_classes);
    m.f1 = fsum / static_cast<double>(n_classes);
    return m;
}

MetricsRegression regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        fail("LengthMismatch", "prediction and truth lengths differ or are empty");
    MetricsRegression m;
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(y_true.size());

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double err = y_pred[i] - y_true[i];
        m.mae += std::abs(err);
        m.mse += err * err;
        ss_res += err * err;
        const double dev = y_true[i] - mean;
        ss_tot += dev * dev;
    }
    m.mae /= static_cast<double>(y_true.size());
    m.mse /= static_cast<double>(y_true.size());
    if (ss_tot <= 0.0) fail("ConstantTruth", "R^2 undefined for constant truth");
    m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int folds,
                                                  const std::vector<int>* labels,
                                                  std::uint64_t seed) {
    if (folds < 2 || static_cast<std::size_t>(folds) > n)
        fail("TooFewSamples", "folds must lie in [2, n]");
    if (labels && labels->size() != n) fail("LengthMismatch", "labels must cover all samples");

    std::vector<std::vector<std::size_t>> result(static_cast<std::size_t>(folds));
    Rng rng(seed);

    if (!labels) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t i = 0; i < n; ++i)
            result[i % static_cast<std::size_t>(folds)].push_back(order[i]);
    } else {
        // per-class shuffled deal with a running fold cursor, so both class
        // proportions and fold sizes stay within one sample of balance
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[(*labels)[i]].push_back(i);
        std::size_t cursor = 0;
        for (auto& [cls, members] : by_class) {
            (void)cls;
            rng.shuffle(members);
            for (std::size_t i : members) {
                result[cursor % static_cast<std::size_t>(folds)].push_back(i);
                ++cursor;
            }
        }
    }
    for (auto& fold : result) std::sort(fold.begin(), fold.end());
    return result;
}

// --- transforms ---

namespace {

void fit_scaler(const PipelineGenome& g, const Matrix& x, std::vector<double>& center,
                std::vector<double>& scale) {
    const std::size_t f = x.front().size();
    center.assign(f, 0.0);
    scale.assign(f, 1.0);
    if (g.scaler == 0) return;
    const double n = static_cast<double>(x.size());
    if (g.scaler == 1) {
        for (const auto& row : x)
            for (std::size_t j = 0; j < f; ++j) center[j] += row[j];
        for (std::size_t j = 0; j < f; ++j) center[j] /= n;
        std::vector<double> var(f, 0.0);
        for (const auto& row : x)
            for (std::size_t j = 0; j < f; ++j) {
                const double d = row[j] - center[j];
                var[j] += d * d;
            }
        for (std::size_t j = 0; j < f; ++j) {
            const double sd = std::sqrt(var[j] / n);
            scale[j] = sd > 0.0 ? sd : 1.0;
        }
    } else {
        std::vector<double> lo(f, std::numeric_limits<double>::infinity());
        std::vector<double> hi(f, -std::numeric_limits<double>::infinity());
        for (const auto& row : x)
            for (std::size_t j = 0; j < f; ++j) {
                lo[j] = std::min(lo[j], row[j]);
                hi[j] = std::max(hi[j], row[j]);
            }
        for (std::size_t j = 0; j < f; ++j) {
            center[j] = lo[j];
            scale[j] = hi[j] > lo[j] ? hi[j] - lo[j] : 1.0;
        }
    }
}

std::vector<double> transform_row(const FittedPipeline& p, const std::vector<double>& row) {
    std::vector<double> scaled(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) scaled[j] = (row[j] - p.center[j]) / p.scale[j];
    if (p.features.empty()) return scaled;
    std::vector<double> out(p.features.size());
    for (std::size_t j = 0; j < p.features.size(); ++j) out[j] = scaled[p.features[j]];
    return out;
}

std::vector<std::size_t> select_top_variance(const Matrix& x, std::size_t d) {
    const std::size_t f = x.front().size();
    d = std::min(d, f);
    std::vector<double> mean(f, 0.0), var(f, 0.0);
    const double n = static_cast<double>(x.size());
    for (const auto& row : x)
        for (std::size_t j = 0; j < f; ++j) mean[j] += row[j];
    for (std::size_t j = 0; j < f; ++j) mean[j] /= n;
    for (const auto& row : x)
        for (std::size_t j = 0; j < f; ++j) {
            const double dev = row[j] - mean[j];
            var[j] += dev * dev;
        }
    std::vector<std::size_t> idx(f);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (var[a] != var[b]) return var[a] > var[b];
        return a < b;
    });
    idx.resize(d);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// --- linear algebra ---

// Gaussian elimination with partial pivoting; a is modified in place.
std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) fail("DegenerateData", "singular system in ridge solve");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

// --- k nearest neighbors ---

double knn_predict_one(const KnnModel& model, const std::vector<double>& x, Task task,
                       int n_classes) {
    const std::size_t n = model.train_x.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(model.k), n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - model.train_x[i][j];
            acc += d * d;
        }
        dist[i] = {acc, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    if (task == Task::regression) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += model.train_y[dist[i].second];
        return acc / static_cast<double>(k);
    }
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < k; ++i)
        ++votes[static_cast<std::size_t>(model.train_y[dist[i].second])];
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    return static_cast<double>(best);
}

// --- multinomial logistic regression ---

LogisticModel fit_logistic(const Matrix& x, const std::vector<int>& y, int n_classes,
                           double lambda) {
    const std::size_t n = x.size();
    const std::size_t f = x.front().size();
    LogisticModel model;
    model.n_classes = n_classes;
    model.weights.assign(static_cast<std::size_t>(n_classes), std::vector<double>(f + 1, 0.0));

    constexpr int kIters = 200;
    constexpr double kLr = 0.5;
    std::vector<double> logits(static_cast<std::size_t>(n_classes));
    Matrix grad(static_cast<std::size_t>(n_classes), std::vector<double>(f + 1, 0.0));

    for (int iter = 0; iter < kIters; ++iter) {
        for (auto& row : grad) std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double max_logit = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < n_classes; ++c) {
                const auto& w = model.weights[static_cast<std::size_t>(c)];
                double acc = w[f];
                for (std::size_t j = 0; j < f; ++j) acc += w[j] * x[i][j];
                logits[static_cast<std::size_t>(c)] = acc;
                max_logit = std::max(max_logit, acc);
            }
            double z = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                logits[static_cast<std::size_t>(c)] = std::exp(logits[static_cast<std::size_t>(c)] - max_logit);
                z += logits[static_cast<std::size_t>(c)];
            }
            for (int c = 0; c < n_classes; ++c) {
                const double p = logits[static_cast<std::size_t>(c)] / z;
                const double delta = p - (y[i] == c ? 1.0 : 0.0);
                auto& g = grad[static_cast<std::size_t>(c)];
                for (std::size_t j = 0; j < f; ++j) g[j] += delta * x[i][j];
                g[f] += delta;
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (int c = 0; c < n_classes; ++c) {
            auto& w = model.weights[static_cast<std::size_t>(c)];
            const auto& g = grad[static_cast<std::size_t>(c)];
            for (std::size_t j = 0; j < f; ++j)
                w[j] -= kLr * (g[j] * inv_n + lambda * inv_n * w[j]);
            w[f] -= kLr * g[f] * inv_n;  // bias unregularized
        }
    }
    return model;
}

double logistic_predict_one(const LogisticModel& model, const std::vector<double>& x) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.n_classes; ++c) {
        const auto& w = model.weights[static_cast<std::size_t>(c)];
        double acc = w[x.size()];
        for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
        if (acc > best_score) {
            best_score = acc;
            best = c;
        }
    }
    return static_cast<double>(best);
}

// --- ridge regression ---

RidgeModel fit_ridge(const Matrix& x, const std::vector<double>& y, double lambda) {
    const std::size_t n = x.size();
    const std::size_t f = x.front().size();
    RidgeModel model;
    model.x_mean.assign(f, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < f; ++j) model.x_mean[j] += row[j];
    for (std::size_t j = 0; j < f; ++j) model.x_mean[j] /= static_cast<double>(n);
    model.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    Matrix xc(n, std::vector<double>(f));
    std::vector<double> yc(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) xc[i][j] = x[i][j] - model.x_mean[j];
        yc[i] = y[i] - model.y_mean;
    }

    if (f <= n) {
        Matrix gram(f, std::vector<double>(f, 0.0));
        std::vector<double> rhs(f, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < f; ++a) {
                rhs[a] += xc[i][a] * yc[i];
                for (std::size_t b = a; b < f; ++b) gram[a][b] += xc[i][a] * xc[i][b];
            }
        for (std::size_t a = 0; a < f; ++a) {
            gram[a][a] += lambda;
            for (std::size_t b = 0; b < a; ++b) gram[a][b] = gram[b][a];
        }
        model.weights = solve_linear(std::move(gram), std::move(rhs));
    } else {
        // dual form: w = Xc^T (Xc Xc^T + lambda I)^-1 yc
        Matrix k(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t a = 0; a < f; ++a) acc += xc[i][a] * xc[j][a];
                k[i][j] = acc;
                k[j][i] = acc;
            }
        for (std::size_t i = 0; i < n; ++i) k[i][i] += lambda;
        const std::vector<double> alpha = solve_linear(std::move(k), yc);
        model.weights.assign(f, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < f; ++a) model.weights[a] += alpha[i] * xc[i][a];
    }
    return model;
}

double ridge_predict_one(const RidgeModel& model, const std::vector<double>& x) {
    double acc = model.y_mean;
    for (std::size_t j = 0; j < x.size(); ++j) acc += model.weights[j] * (x[j] - model.x_mean[j]);
    return acc;
}

// --- CART trees ---

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double gini(const std::vector<long>& counts, long total) {
    if (total == 0) return 0.0;
    double acc = 1.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        acc -= p * p;
    }
    return acc;
}

// Impurity decrease for one feature over the node's samples; candidate
// thresholds are midpoints between consecutive distinct values.
void scan_feature(const Matrix& x, const std::vector<double>& y, const std::vector<std::size_t>& node,
                  std::size_t feature, Task task, int n_classes, SplitChoice& best) {
    std::vector<std::pair<double, double>> vals(node.size());  // (x_feature, y)
    for (std::size_t i = 0; i < node.size(); ++i)
        vals[i] = {x[node[i]][feature], y[node[i]]};
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) return;

    const auto n = static_cast<long>(node.size());
    if (task == Task::classification) {
        std::vector<long> left(static_cast<std::size_t>(n_classes), 0);
        std::vector<long> right(static_cast<std::size_t>(n_classes), 0);
        for (const auto& [xv, yv] : vals) ++right[static_cast<std::size_t>(yv)];
        const double parent = gini(right, n);
        long nl = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const auto cls = static_cast<std::size_t>(vals[i].second);
            ++left[cls];
            --right[cls];
            ++nl;
            if (vals[i + 1].first == vals[i].first) continue;
            const long nr = n - nl;
            const double gain = parent -
                                (static_cast<double>(nl) / static_cast<double>(n)) * gini(left, nl) -
                                (static_cast<double>(nr) / static_cast<double>(n)) * gini(right, nr);
            if (gain > best.gain + kGainEpsilon) {
                best.found = true;
                best.feature = static_cast<int>(feature);
                best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                best.gain = gain;
            }
        }
    } else {
        double sum_r = 0.0, sum2_r = 0.0;
        for (const auto& [xv, yv] : vals) {
            sum_r += yv;
            sum2_r += yv * yv;
        }
        const double parent_sse = sum2_r - sum_r * sum_r / static_cast<double>(n);
        double sum_l = 0.0, sum2_l = 0.0;
        long nl = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            sum_l += vals[i].second;
            sum2_l += vals[i].second * vals[i].second;
            sum_r -= vals[i].second;
            sum2_r -= vals[i].second * vals[i].second;
            ++nl;
            if (vals[i + 1].first == vals[i].first) continue;
            const long nr = n - nl;
            const double sse_l = sum2_l - sum_l * sum_l / static_cast<double>(nl);
            const double sse_r = sum2_r - sum_r * sum_r / static_cast<double>(nr);
            const double gain = parent_sse - sse_l - sse_r;
            if (gain > best.gain + kGainEpsilon) {
                best.found = true;
                best.feature = static_cast<int>(feature);
                best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                best.gain = gain;
            }
        }
    }
}

double leaf_value(const std::vector<double>& y, const std::vector<std::size_t>& node, Task task,
                  int n_classes) {
    if (task == Task::regression) {
        double acc = 0.0;
        for (std::size_t i : node) acc += y[i];
        return acc / static_cast<double>(node.size());
    }
    std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i : node) ++counts[static_cast<std::size_t>(y[i])];
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
        if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
    return static_cast<double>(best);
}

// Grows one tree. `feature_pool` is the per-split candidate count; when it
// is smaller than the feature count, candidates are drawn from `rng`
// (random-forest mode), otherwise all features are scanned.
TreeModel fit_tree(const Matrix& x, const std::vector<double>& y,
                   const std::vector<std::size_t>& samples, int max_depth, Task task,
                   int n_classes, std::size_t feature_pool, Rng* rng) {
    const std::size_t f = x.front().size();
    TreeModel tree;

    struct Pending {
        std::vector<std::size_t> samples;
        int depth;
        int node_index;
    };
    std::vector<Pending> queue;
    tree.nodes.emplace_back();
    queue.push_back({samples, 0, 0});

    std::vector<std::size_t> all_features(f);
    std::iota(all_features.begin(), all_features.end(), 0);

    while (!queue.empty()) {
        Pending item = std::move(queue.front());
        queue.erase(queue.begin());
        TreeNode& node = tree.nodes[static_cast<std::size_t>(item.node_index)];

        bool pure = true;
        for (std::size_t i = 1; i < item.samples.size(); ++i)
            if (y[item.samples[i]] != y[item.samples[0]]) {
                pure = false;
                break;
            }
        if (pure || item.depth >= max_depth || item.samples.size() < 2) {
            node.feature = -1;
            node.value = leaf_value(y, item.samples, task, n_classes);
            continue;
        }

        SplitChoice best;
        if (feature_pool >= f) {
            for (std::size_t j = 0; j < f; ++j)
                scan_feature(x, y, item.samples, j, task, n_classes, best);
        } else {
            // partial Fisher-Yates draw of `feature_pool` distinct features,
            // sorted so tie-breaking stays order-deterministic
            std::vector<std::size_t> pool = all_features;
            for (std::size_t i = 0; i < feature_pool; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng->below(pool.size() - i));
                std::swap(pool[i], pool[j]);
            }
            pool.resize(feature_pool);
            std::sort(pool.begin(), pool.end());
            for (std::size_t j : pool) scan_feature(x, y, item.samples, j, task, n_classes, best);
        }

        if (!best.found) {
            node.feature = -1;
            node.value = leaf_value(y, item.samples, task, n_classes);
            continue;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : item.samples)
            (x[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(i);

        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        const int left_idx = node.left, right_idx = node.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        queue.push_back({std::move(left), item.depth + 1, left_idx});
        queue.push_back({std::move(right), item.depth + 1, right_idx});
    }
    return tree;
}

double tree_predict_one(const TreeModel& tree, const std::vector<double>& x) {
    int idx = 0;
    for (;;) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
        if (node.feature < 0) return node.value;
        idx = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
}

ForestModel fit_forest(const Matrix& x, const std::vector<double>& y, int n_trees, int max_depth,
                       Task task, int n_classes, std::uint64_t seed) {
    const std::size_t n = x.size();
    const std::size_t f = x.front().size();
    const auto pool = static_cast<std::size_t>(
        std::max(1.0, std::floor(std::sqrt(static_cast<double>(f)))));
    ForestModel forest;
    forest.trees.resize(static_cast<std::size_t>(n_trees));
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> boot(n);
        for (std::size_t i = 0; i < n; ++i) boot[i] = static_cast<std::size_t>(rng.below(n));
        std::sort(boot.begin(), boot.end());
        forest.trees[static_cast<std::size_t>(t)] =
            fit_tree(x, y, boot, max_depth, task, n_classes, pool, &rng);
    }
    return forest;
}

double forest_predict_one(const ForestModel& forest, const std::vector<double>& x, Task task,
                          int n_classes) {
    if (task == Task::regression) {
        double acc = 0.0;
        for (const auto& tree : forest.trees) acc += tree_predict_one(tree, x);
        return acc / static_cast<double>(forest.trees.size());
    }
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    for (const auto& tree : forest.trees)
        ++votes[static_cast<std::size_t>(tree_predict_one(tree, x))];
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    return static_cast<double>(best);
}

}  // namespace

FittedPipeline fit_pipeline(const PipelineGenome& genome, const Matrix& x, const Targets& y,
                            std::uint64_t seed) {
    if (x.empty()) fail("EmptyInput", "cannot fit on empty data");
    if (y.size() != x.size()) fail("LengthMismatch", "targets must align with samples");
    for (int gene = 0; gene < 4; ++gene) {
        const int v = gene == 0 ? genome.scaler : gene == 1 ? genome.reducer
                                : gene == 2    ? genome.model
                                               : genome.seed_idx;
        if (v < 0 || v >= kGeneDomains[gene]) fail("OutOfRange", "genome gene outside its domain");
    }

    FittedPipeline p;
    p.task = y.task;
    p.genome = genome;
    fit_scaler(genome, x, p.center, p.scale);

    Matrix scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        scaled[i].resize(x[i].size());
        for (std::size_t j = 0; j < x[i].size(); ++j)
            scaled[i][j] = (x[i][j] - p.center[j]) / p.scale[j];
    }
    if (genome.reducer > 0) {
        p.features = select_top_variance(
            scaled, static_cast<std::size_t>(kReducerDims[genome.reducer - 1]));
        for (auto& row : scaled) {
            std::vector<double> sub(p.features.size());
            for (std::size_t j = 0; j < p.features.size(); ++j) sub[j] = row[p.features[j]];
            row = std::move(sub);
        }
    }

    std::vector<double> y_values;
    if (y.task == Task::classification) {
        p.n_classes = 0;
        for (int c : y.labels) {
            if (c < 0) fail("OutOfRange", "class labels must be nonnegative");
            p.n_classes = std::max(p.n_classes, c + 1);
        }
        y_values.reserve(y.labels.size());
        for (int c : y.labels) y_values.push_back(static_cast<double>(c));
    } else {
        y_values = y.values;
    }

    const std::uint64_t model_seed =
        derive_seed(seed, 0xC0DEu + static_cast<std::uint64_t>(genome.seed_idx));
    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), 0);

    switch (family_of(genome.model)) {
        case kKnn: {
            KnnModel m;
            m.k = kKnnK[genome.model];
            m.train_x = scaled;
            m.train_y = y_values;
            p.model = std::move(m);
            break;
        }
        case kLinear: {
            const double lambda = kLambda[genome.model - 3];
            if (y.task == Task::classification)
                p.model = fit_logistic(scaled, y.labels, p.n_classes, lambda);
            else
                p.model = fit_ridge(scaled, y_values, lambda);
            break;
        }
        case kTree: {
            Rng rng(model_seed);
            p.model = fit_tree(scaled, y_values, all, kTreeDepth[genome.model - 6], y.task,
                               p.n_classes, scaled.front().size(), &rng);
            break;
        }
        case kForest: {
            const int code = genome.model - 9;
            p.model = fit_forest(scaled, y_values, kForestTrees[code / 2], kForestDepth[code % 2],
                                 y.task, p.n_classes, model_seed);
            break;
        }
    }
    return p;
}

std::vector<double> predict(const FittedPipeline& fitted, const Matrix& x) {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& raw : x) {
        if (raw.size() != fitted.center.size())
            fail("DimensionMismatch", "input width differs from the fitted pipeline");
        const std::vector<double> row = transform_row(fitted, raw);
        double value = 0.0;
        if (std::holds_alternative<KnnModel>(fitted.model))
            value = knn_predict_one(std::get<KnnModel>(fitted.model), row, fitted.task,
                                    fitted.n_classes);
        else if (std::holds_alternative<LogisticModel>(fitted.model))
            value = logistic_predict_one(std::get<LogisticModel>(fitted.model), row);
        else if (std::holds_alternative<RidgeModel>(fitted.model))
            value = ridge_predict_one(std::get<RidgeModel>(fitted.model), row);
        else if (std::holds_alternative<TreeModel>(fitted.model))
            value = tree_predict_one(std::get<TreeModel>(fitted.model), row);
        else
            value = forest_predict_one(std::get<ForestModel>(fitted.model), row, fitted.task,
                                       fitted.n_classes);
        if (fitted.task == Task::regression) value = std::min(1.0, std::max(0.0, value));
        out.push_back(value);
    }
    return out;
}

CvOutcome evaluate_pipeline_detailed(const PipelineGenome& genome, const Matrix& x,
                                     const Targets& y, int folds, std::uint64_t seed) {
    if (x.empty()) fail("EmptyInput", "cannot evaluate on empty data");
    if (y.size() != x.size()) fail("LengthMismatch", "targets must align with samples");

    const auto fold_sets =
        kfold_split(x.size(), folds,
                    y.task == Task::classification ? &y.labels : nullptr,
                    derive_seed(seed, 0xF01Du));

    CvOutcome outcome;
    double score_acc = 0.0;
    for (std::size_t f = 0; f < fold_sets.size(); ++f) {
        std::vector<char> held(x.size(), 0);
        for (std::size_t i : fold_sets[f]) held[i] = 1;

        Matrix train_x, test_x;
        Targets train_y;
        train_y.task = y.task;
        std::vector<int> test_labels;
        std::vector<double> test_values;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (held[i]) {
                test_x.push_back(x[i]);
                if (y.task == Task::classification)
                    test_labels.push_back(y.labels[i]);
                else
                    test_values.push_back(y.values[i]);
            } else {
                train_x.push_back(x[i]);
                if (y.task == Task::classification)
                    train_y.labels.push_back(y.labels[i]);
                else
                    train_y.values.push_back(y.values[i]);
            }
        }

        const FittedPipeline fitted =
            fit_pipeline(genome, train_x, train_y, derive_seed(seed, 0xF17u + f));
        const std::vector<double> raw_pred = predict(fitted, test_x);

        if (y.task == Task::classification) {
            std::vector<int> pred(raw_pred.size());
            for (std::size_t i = 0; i < raw_pred.size(); ++i)
                pred[i] = static_cast<int>(raw_pred[i]);
            const MetricsClassification m = classification_metrics(test_labels, pred);
            outcome.fold_classification.push_back(m);
            score_acc += m.f1;
        } else {
            MetricsRegression m;
            // R^2 is undefined on constant-truth folds; MAE/MSE always exist
            double mean = 0.0;
            for (double v : test_values) mean += v;
            mean /= static_cast<double>(test_values.size());
            double ss_tot = 0.0;
            for (double v : test_values) ss_tot += (v - mean) * (v - mean);
            if (ss_tot > 0.0) {
                m = regression_metrics(test_values, raw_pred);
            } else {
                for (std::size_t i = 0; i < test_values.size(); ++i) {
                    const double err = raw_pred[i] - test_values[i];
                    m.mae += std::abs(err);
                    m.mse += err * err;
                }
                m.mae /= static_cast<double>(test_values.size());
                m.mse /= static_cast<double>(test_values.size());
                m.r2 = 0.0;
            }
            outcome.fold_regression.push_back(m);
            score_acc -= m.mae;
        }
    }

    const double inv_f = 1.0 / static_cast<double>(fold_sets.size());
    outcome.score = score_acc * inv_f;
    if (y.task == Task::classification) {
        for (const auto& m : outcome.fold_classification) {
            outcome.mean_classification.accuracy += m.accuracy * inv_f;
            outcome.mean_classification.precision += m.precision * inv_f;
            outcome.mean_classification.recall += m.recall * inv_f;
            outcome.mean_classification.f1 += m.f1 * inv_f;
        }
    } else {
        for (const auto& m : outcome.fold_regression) {
            outcome.mean_regression.mae += m.mae * inv_f;
            outcome.mean_regression.mse += m.mse * inv_f;
            outcome.mean_regression.r2 += m.r2 * inv_f;
        }
    }
    return outcome;
}

double evaluate_pipeline(const PipelineGenome& genome, const Matrix& x, const Targets& y,
                         int folds, std::uint64_t seed) {
    return evaluate_pipeline_detailed(genome, x, y, folds, seed).score;
}

namespace {

PipelineGenome random_genome(Rng& rng) {
    PipelineGenome g;
    g.scaler = static_cast<int>(rng.below(static_cast<std::uint64_t>(kGeneDomains[0])));
    g.reducer = static_cast<int>(rng.below(static_cast<std::uint64_t>(kGeneDomains[1])));
    g.model = static_cast<int>(rng.below(static_cast<std::uint64_t>(kGeneDomains[2])));
    g.seed_idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(kGeneDomains[3])));
    return g;
}

int& gene_ref(PipelineGenome& g, int locus) {
    switch (locus) {
        case 0: return g.scaler;
        case 1: return g.reducer;
        case 2: return g.model;
        default: return g.seed_idx;
    }
}

}  // namespace

SearchResult evolve_pipelines(const Matrix& x, const Targets& y, const SearchBudget& budget,
                              std::uint64_t seed, int folds, unsigned threads) {
    if (budget.population < 1) fail("OutOfRange", "population must be positive");
    if (budget.max_evaluations < budget.population)
        fail("BudgetTooSmall", "budget must cover at least one full population");

    constexpr double kCrossoverRate = 0.7;
    constexpr double kMutationRate = 0.2;
    constexpr int kTournament = 3;
    constexpr int kStaleLimit = 10;

    Rng rng(derive_seed(seed, 0x6Au));
    const auto pop_n = static_cast<std::size_t>(budget.population);

    std::vector<PipelineGenome> population(pop_n);
    for (auto& g : population) g = random_genome(rng);

    std::unordered_map<std::string, double> cache;
    SearchResult result;
    result.best_score = -std::numeric_limits<double>::infinity();
    long evals = 0;
    int stale = 0;
    bool out_of_budget = false;

    for (int generation = 0;; ++generation) {
        // evaluate members not in the cache, in population order, within budget
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < pop_n; ++i) {
            const std::string key = genome_key(population[i]);
            if (!cache.count(key) &&
                std::none_of(pending.begin(), pending.end(), [&](std::size_t j) {
                    return genome_key(population[j]) == key;
                }))
                pending.push_back(i);
        }
        if (evals + static_cast<long>(pending.size()) > budget.max_evaluations) {
            pending.resize(static_cast<std::size_t>(budget.max_evaluations - evals));
            out_of_budget = true;
        }

        std::vector<double> scores(pending.size());
        parallel_for(pending.size(), threads, [&](std::size_t j) {
            const PipelineGenome& g = population[pending[j]];
            const std::uint64_t eval_seed = derive_seed(seed, fnv1a64(genome_key(g)));
            scores[j] = evaluate_pipeline(g, x, y, folds, eval_seed);
        });
        for (std::size_t j = 0; j < pending.size(); ++j) {
            const PipelineGenome& g = population[pending[j]];
            cache[genome_key(g)] = scores[j];
            ++evals;
            result.log.push_back({evals, generation, g, scores[j]});
        }

        // generation statistics over evaluated members
        double gen_best = -std::numeric_limits<double>::infinity();
        double gen_sum = 0.0;
        std::size_t gen_count = 0;
        std::size_t best_member = 0;
        bool has_best_member = false;
        for (std::size_t i = 0; i < pop_n; ++i) {
            const auto it = cache.find(genome_key(population[i]));
            if (it == cache.end()) continue;
            gen_sum += it->second;
            ++gen_count;
            if (it->second > gen_best) {
                gen_best = it->second;
                best_member = i;
                has_best_member = true;
            }
        }
        if (gen_count > 0)
            result.generations.push_back(
                {generation, gen_best, gen_sum / static_cast<double>(gen_count), evals});

        if (has_best_member && gen_best > result.best_score) {
            result.best_score = gen_best;
            result.best = population[best_member];
            stale = 0;
        } else {
            ++stale;
        }

        if (out_of_budget || evals >= budget.max_evaluations) break;
        if (stale >= kStaleLimit) {
            result.converged = true;
            break;
        }

        // breed the next generation: elite first, then tournament offspring
        std::vector<PipelineGenome> next;
        next.reserve(pop_n);
        next.push_back(result.best);
        auto tournament = [&]() -> const PipelineGenome& {
            std::size_t winner = static_cast<std::size_t>(rng.below(pop_n));
            double winner_score = cache.count(genome_key(population[winner]))
                                      ? cache.at(genome_key(population[winner]))
                                      : -std::numeric_limits<double>::infinity();
            for (int t = 1; t < kTournament; ++t) {
                const std::size_t idx = static_cast<std::size_t>(rng.below(pop_n));
                const std::string key = genome_key(population[idx]);
                const double s = cache.count(key) ? cache.at(key)
                                                  : -std::numeric_limits<double>::infinity();
                if (s > winner_score) {
                    winner = idx;
                    winner_score = s;
                }
            }
            return population[winner];
        };
        while (next.size() < pop_n) {
            PipelineGenome child = tournament();
            if (rng.uniform() < kCrossoverRate) {
                PipelineGenome other = tournament();
                const int cut = 1 + static_cast<int>(rng.below(3));
                for (int locus = cut; locus < 4; ++locus)
                    gene_ref(child, locus) = gene_ref(other, locus);
            }
            for (int locus = 0; locus < 4; ++locus)
                if (rng.uniform() < kMutationRate)
                    gene_ref(child, locus) =
                        static_cast<int>(rng.below(static_cast<std::uint64_t>(kGeneDomains[locus])));
            next.push_back(child);
        }
        population = std::move(next);
    }

    result.evaluations = evals;
    return result;
}

// --- persistence ---

namespace {

using nlohmann::ordered_json;

ordered_json genome_to_json(const PipelineGenome& g) {
    return ordered_json{
        {"scaler", g.scaler}, {"reducer", g.reducer}, {"model", g.model}, {"seed_idx", g.seed_idx}};
}

PipelineGenome genome_from_json(const nlohmann::json& j) {
    PipelineGenome g;
    g.scaler = j.at("scaler").get<int>();
    g.reducer = j.at("reducer").get<int>();
    g.model = j.at("model").get<int>();
    g.seed_idx = j.at("seed_idx").get<int>();
    return g;
}

}  // namespace

std::string save_model(const FittedPipeline& fitted) {
    ordered_json doc;
    doc["format"] = "trailmark-model";
    doc["version"] = 1;
    doc["task"] = fitted.task == Task::classification ? "classification" : "regression";
    doc["genome"] = genome_to_json(fitted.genome);
    doc["n_classes"] = fitted.n_classes;
    doc["center"] = fitted.center;
    doc["scale"] = fitted.scale;
    doc["features"] = fitted.features;

    ordered_json model;
    if (std::holds_alternative<KnnModel>(fitted.model)) {
        const auto& m = std::get<KnnModel>(fitted.model);
        model["kind"] = "knn";
        model["k"] = m.k;
        model["train_x"] = m.train_x;
        model["train_y"] = m.train_y;
    } else if (std::holds_alternative<LogisticModel>(fitted.model)) {
        const auto& m = std::get<LogisticModel>(fitted.model);
        model["kind"] = "logistic";
        model["n_classes"] = m.n_classes;
        model["weights"] = m.weights;
    } else if (std::holds_alternative<RidgeModel>(fitted.model)) {
        const auto& m = std::get<RidgeModel>(fitted.model);
        model["kind"] = "ridge";
        model["weights"] = m.weights;
        model["x_mean"] = m.x_mean;
        model["y_mean"] = m.y_mean;
    } else if (std::holds_alternative<TreeModel>(fitted.model)) {
        const auto& m = std::get<TreeModel>(fitted.model);
        model["kind"] = "tree";
        ordered_json nodes = ordered_json::array();
        for (const auto& n : m.nodes)
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"value", n.value},
                             {"left", n.left},
                             {"right", n.right}});
        model["nodes"] = std::move(nodes);
    } else {
        const auto& m = std::get<ForestModel>(fitted.model);
        model["kind"] = "forest";
        ordered_json trees = ordered_json::array();
        for (const auto& tree : m.trees) {
            ordered_json nodes = ordered_json::array();
            for (const auto& n : tree.nodes)
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"value", n.value},
                                 {"left", n.left},
                                 {"right", n.right}});
            trees.push_back(std::move(nodes));
        }
        model["trees"] = std::move(trees);
    }
    doc["model"] = std::move(model);
    return doc.dump(1);
}

namespace {

TreeModel tree_from_json(const nlohmann::json& nodes) {
    TreeModel tree;
    for (const auto& n : nodes) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.value = n.at("value").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        tree.nodes.push_back(node);
    }
    return tree;
}

}  // namespace

FittedPipeline load_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail("MalformedDocument", e.what());
    }
    if (doc.value("format", "") != "trailmark-model") fail("SchemaViolation", "not a model artifact");

    FittedPipeline p;
    p.task = doc.at("task").get<std::string>() == "classification" ? Task::classification
                                                                   : Task::regression;
    p.genome = genome_from_json(doc.at("genome"));
    p.n_classes = doc.at("n_classes").get<int>();
    p.center = doc.at("center").get<std::vector<double>>();
    p.scale = doc.at("scale").get<std::vector<double>>();
    p.features = doc.at("features").get<std::vector<std::size_t>>();

    const auto& model = doc.at("model");
    const std::string kind = model.at("kind").get<std::string>();
    if (kind == "knn") {
        KnnModel m;
        m.k = model.at("k").get<int>();
        m.train_x = model.at("train_x").get<Matrix>();
        m.train_y = model.at("train_y").get<std::vector<double>>();
        p.model = std::move(m);
    } else if (kind == "logistic") {
        LogisticModel m;
        m.n_classes = model.at("n_classes").get<int>();
        m.weights = model.at("weights").get<Matrix>();
        p.model = std::move(m);
    } else if (kind == "ridge") {
        RidgeModel m;
        m.weights = model.at("weights").get<std::vector<double>>();
        m.x_mean = model.at("x_mean").get<std::vector<double>>();
        m.y_mean = model.at("y_mean").get<double>();
        p.model = std::move(m);
    } else if (kind == "tree") {
        p.model = tree_from_json(model.at("nodes"));
    } else if (kind == "forest") {
        ForestModel m;
        for (const auto& tree : model.at("trees")) m.trees.push_back(tree_from_json(tree));
        p.model = std::move(m);
    } else {
        fail("SchemaViolation", "unknown model kind '" + kind + "'");
    }
    return p;
}

}  // namespace trailmark::search
