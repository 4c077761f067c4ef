#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace trailmark::search {

using Matrix = std::vector<std::vector<double>>;

enum class Task { classification, regression };

// One candidate pipeline, every gene from a finite domain:
//   scaler   0 none | 1 standardize | 2 minmax
//   reducer  0 none | 1..3 top-variance d in {8, 16, 32}
//   model    0..2  k-nearest-neighbors, k in {1, 3, 5}
//            3..5  regularized linear (logistic / ridge), lambda in {0.01, 0.1, 1}
//            6..8  decision tree, depth in {2, 3, 5}
//            9..12 random forest, (trees, depth) in {25, 100} x {3, 5}
//   seed_idx 0..1  stream picker for stochastic members
struct PipelineGenome {
    int scaler = 0;
    int reducer = 0;
    int model = 0;
    int seed_idx = 0;

    bool operator==(const PipelineGenome&) const = default;
};

inline constexpr int kGeneDomains[4] = {3, 4, 13, 2};
inline constexpr int kReducerDims[3] = {8, 16, 32};
inline constexpr int kKnnK[3] = {1, 3, 5};
inline constexpr double kLambda[3] = {0.01, 0.1, 1.0};
inline constexpr int kTreeDepth[3] = {2, 3, 5};
inline constexpr int kForestTrees[2] = {25, 100};
inline constexpr int kForestDepth[2] = {3, 5};

std::string genome_key(const PipelineGenome& g);
std::string describe_genome(const PipelineGenome& g, Task task);

struct SearchBudget {
    long max_evaluations = 10000;
    int population = 50;
};

struct MetricsClassification {
    double accuracy = 0.0;
    double precision = 0.0;  // macro
    double recall = 0.0;     // macro
    double f1 = 0.0;         // macro
    std::map<int, double> precision_per_class;
    std::map<int, double> recall_per_class;
    std::map<int, double> f1_per_class;
};

struct MetricsRegression {
    double mae = 0.0;
    double mse = 0.0;
    double r2 = 0.0;
};

// Macro averages run over the classes present in y_true; 0/0 counts as 0.
MetricsClassification classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred);

MetricsRegression regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred);

// Disjoint covering folds; stratified per-class proportions within one
// sample when labels are given. Deterministic by seed.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int folds,
                                                  const std::vector<int>* labels,
                                                  std::uint64_t seed);

struct Targets {
    Task task = Task::classification;
    std::vector<int> labels;       // classification
    std::vector<double> values;    // regression

    std::size_t size() const {
        return task == Task::classification ? labels.size() : values.size();
    }
};

// --- fitted pipelines ---

struct KnnModel {
    int k = 1;
    Matrix train_x;
    std::vector<double> train_y;
};

struct LogisticModel {
    int n_classes = 0;
    Matrix weights;  // [class][feature + bias]
};

struct RidgeModel {
    std::vector<double> weights;
    std::vector<double> x_mean;
    double y_mean = 0.0;
};

struct TreeNode {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    double value = 0.0;  // leaf payload: class id or mean
    int left = -1;
    int right = -1;
};

struct TreeModel {
    std::vector<TreeNode> nodes;
};

struct ForestModel {
    std::vector<TreeModel> trees;
};

struct FittedPipeline {
    Task task = Task::classification;
    PipelineGenome genome;
    int n_classes = 0;
    std::vector<double> center, scale;    // scaler transform (x - center) / scale
    std::vector<std::size_t> features;    // selected columns; empty = all
    std::variant<KnnModel, LogisticModel, RidgeModel, TreeModel, ForestModel> model;
};

// Fits scaler/reducer/model on the given data only.
FittedPipeline fit_pipeline(const PipelineGenome& genome, const Matrix& x, const Targets& y,
                            std::uint64_t seed);

// Classification: class labels. Regression: values clamped to [0,1]
// (factors are regressed on the normalized scale).
std::vector<double> predict(const FittedPipeline& fitted, const Matrix& x);

struct CvOutcome {
    double score = 0.0;  // mean macro-F1, or negative mean MAE
    std::vector<MetricsClassification> fold_classification;
    std::vector<MetricsRegression> fold_regression;
    MetricsClassification mean_classification;
    MetricsRegression mean_regression;
};

// Per-fold fit/score with no leakage: scaler and reducer statistics come
// from the training folds only. Throws TooFewSamples when folds are
// impossible.
CvOutcome evaluate_pipeline_detailed(const PipelineGenome& genome, const Matrix& x,
                                     const Targets& y, int folds, std::uint64_t seed);

double evaluate_pipeline(const PipelineGenome& genome, const Matrix& x, const Targets& y,
                         int folds, std::uint64_t seed);

struct EvalRecord {
    long eval_index = 0;
    int generation = 0;
    PipelineGenome genome;
    double score = 0.0;
};

struct GenerationStat {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;
    long evaluations_after = 0;
};

struct SearchResult {
    PipelineGenome best;
    double best_score = 0.0;
    long evaluations = 0;
    bool converged = false;
    std::vector<EvalRecord> log;
    std::vector<GenerationStat> generations;
};

// Generational GA: tournament size 3, single-point crossover 0.7,
// per-gene mutation 0.2, elitism 1, duplicate cache (hits are free).
// Stops at the evaluation budget or after 10 generations without
// improvement. Deterministic by seed regardless of thread count.
SearchResult evolve_pipelines(const Matrix& x, const Targets& y, const SearchBudget& budget,
                              std::uint64_t seed, int folds = 5, unsigned threads = 1);

std::string save_model(const FittedPipeline& fitted);
FittedPipeline load_model(const std::string& text);

}  // namespace trailmark::search
