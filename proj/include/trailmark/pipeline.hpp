#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "trailmark/autoencoder.hpp"
#include "trailmark/clustering.hpp"
#include "trailmark/model_search.hpp"
#include "trailmark/preprocess.hpp"
#include "trailmark/trajectory_io.hpp"

namespace trailmark::pipeline {

using ordered_json = nlohmann::ordered_json;

struct RunConfig {
    std::string trial_dir;
    std::string labels_path;
    std::string out_dir;
    double fps = prep::kStandardFps;
    double coverage_threshold = 0.8;
    int smooth_window = prep::kDefaultSmoothWindow;
    std::string ae_grid = "small";  // tiny | small | full
    int kmax = 10;
    long budget = 2000;
    int folds = 5;
    std::uint64_t seed = 42;
    std::vector<std::string> regress_factors;  // e.g. {"EXC"}
    unsigned threads = 1;
};

// Hash of the analysis-relevant configuration (paths and thread counts
// excluded so reruns in different sandboxes compare equal).
std::string config_hash(const RunConfig& config);

std::vector<ae::AEHyper> named_grid(const std::string& name);

// --- stage building blocks (shared by the CLI subcommands) ---

struct IngestOutcome {
    std::vector<RawTrial> kept;
    std::vector<RawTrial> excluded;
    std::vector<ScoreRecord> labels;
    ordered_json report;
};
IngestOutcome run_ingest(const RunConfig& config);

struct PreprocessOutcome {
    prep::Dataset dataset;
    prep::SampleTensor tensor;
    ordered_json report;
};
PreprocessOutcome run_preprocess(const RunConfig& config, const std::vector<RawTrial>& kept);

struct EmbedOutcome {
    ae::AEParams params;
    std::vector<ae::MovementVector> vectors;
    std::vector<double> loss_curve;
    ordered_json report;
};
EmbedOutcome run_embed(const RunConfig& config, const prep::SampleTensor& tensor);

struct ClusterOutcome {
    cluster::ClusterModel model;           // final (after outlier exclusion refit)
    std::vector<double> inertia_by_k;      // k = 1..kmax_eff
    int chosen_k = 1;
    bool degenerate_elbow = false;
    std::vector<std::size_t> outliers;     // indices into the input vectors
    std::vector<int> assignments;          // -1 for outliers, else cluster id
    ordered_json report;
};
ClusterOutcome run_cluster(const RunConfig& config, const std::vector<ae::MovementVector>& vectors);

struct AgreeOutcome {
    double percent_agreement = 0.0;
    double kappa = 0.0;
    ordered_json report;
};
AgreeOutcome run_agree(const std::vector<ScoreRecord>& labels);

ordered_json run_utests(const ClusterOutcome& clusters, const std::vector<ae::MovementVector>& vectors,
                        const std::vector<ScoreRecord>& labels);

struct SearchOutcome {
    search::SearchResult result;
    search::FittedPipeline fitted;
    search::CvOutcome cv;
    ordered_json report;
};
// task: "score" or "cbarq:<FACTOR>".
SearchOutcome run_search(const RunConfig& config, const std::string& task,
                         const std::vector<ae::MovementVector>& vectors,
                         const std::vector<ScoreRecord>& labels,
                         const std::vector<int>* keep_mask = nullptr);

// --- dataset / vector artifacts ---

std::string serialize_dataset(const prep::SampleTensor& tensor, double fps);
prep::SampleTensor parse_dataset(const std::string& text, double* fps = nullptr);

std::string serialize_vectors(const std::vector<ae::MovementVector>& vectors);
std::vector<ae::MovementVector> parse_vectors(const std::string& text);

// --- full chain ---

struct PipelineOutcome {
    ordered_json report;
    double purity = 0.0;
    int chosen_k = 1;
    double cv_accuracy = 0.0;      // score-classification CV accuracy
    long search_evaluations = 0;
    long search_budget = 0;
};

// Runs every stage and writes the consolidated report plus stage
// artifacts under config.out_dir.
PipelineOutcome run_pipeline(const RunConfig& config);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace trailmark::pipeline
