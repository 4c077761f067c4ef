#include "trailmark/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "trailmark/error.hpp"
#include "trailmark/rng.hpp"
#include "trailmark/stats.hpp"

namespace trailmark::pipeline {

namespace {

constexpr std::uint64_t kEmbedStream = 1;
constexpr std::uint64_t kClusterStream = 2;
constexpr std::uint64_t kSearchStream = 3;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ordered_json config_json(const RunConfig& c) {
    return ordered_json{{"fps", c.fps},
                        {"coverage_threshold", c.coverage_threshold},
                        {"smooth_window", c.smooth_window},
                        {"ae_grid", c.ae_grid},
                        {"kmax", c.kmax},
                        {"budget", c.budget},
                        {"folds", c.folds},
                        {"seed", c.seed},
                        {"regress_factors", c.regress_factors}};
}

std::map<std::string, const ScoreRecord*> label_index(const std::vector<ScoreRecord>& labels) {
    std::map<std::string, const ScoreRecord*> index;
    for (const ScoreRecord& rec : labels) {
        if (!index.emplace(rec.trial_id, &rec).second)
            fail("SchemaViolation", "duplicate label row for trial '" + rec.trial_id + "'");
    }
    return index;
}

const ScoreRecord& label_for(const std::map<std::string, const ScoreRecord*>& index,
                             const std::string& trial_id) {
    const auto it = index.find(trial_id);
    if (it == index.end()) fail("SchemaViolation", "no label row for trial '" + trial_id + "'");
    return *it->second;
}

}  // namespace

std::string config_hash(const RunConfig& config) {
    return hex64(fnv1a64(config_json(config).dump()));
}

std::vector<ae::AEHyper> named_grid(const std::string& name) {
    std::vector<ae::AEHyper> grid;
    auto add = [&grid](int c1, int c2, double lr, int epochs) {
        ae::AEHyper h;
        h.c1 = c1;
        h.c2 = c2;
        h.learning_rate = lr;
        h.epochs = epochs;
        h.batch_size = 8;
        grid.push_back(h);
    };
    if (name == "full") {
        for (int c1 : {4, 8})
            for (int c2 : {4, 8})
                for (double lr : {1e-2, 1e-3})
                    for (int epochs : {200, 500}) add(c1, c2, lr, epochs);
    } else if (name == "small") {
        add(4, 4, 1e-2, 40);
        add(4, 8, 1e-2, 40);
    } else if (name == "tiny") {
        add(4, 4, 1e-2, 25);
    } else {
        fail("BadConfig", "unknown autoencoder grid '" + name + "'");
    }
    return grid;
}

IngestOutcome run_ingest(const RunConfig& config) {
    IngestOutcome out;
    std::vector<RawTrial> trials = io::load_trial_dir(config.trial_dir);
    out.labels = io::load_labels_file(config.labels_path);

    ordered_json coverage = ordered_json::array();
    for (const RawTrial& t : trials) {
        coverage.push_back({{"trial_id", t.trial_id},
                            {"coverage", io::detection_coverage(t)},
                            {"clamp_count", t.clamp_count},
                            {"kept", io::detection_coverage(t) >= config.coverage_threshold}});
    }
    auto gate = io::quality_gate(std::move(trials), config.coverage_threshold);
    out.kept = std::move(gate.kept);
    out.excluded = std::move(gate.excluded);

    out.report["n_trials"] = out.kept.size() + out.excluded.size();
    out.report["coverage_threshold"] = config.coverage_threshold;
    out.report["coverage"] = std::move(coverage);
    out.report["n_kept"] = out.kept.size();
    out.report["n_excluded"] = out.excluded.size();
    ordered_json excluded_ids = ordered_json::array();
    for (const RawTrial& t : out.excluded) excluded_ids.push_back(t.trial_id);
    out.report["excluded"] = std::move(excluded_ids);
    out.report["n_labels"] = out.labels.size();
    return out;
}

PreprocessOutcome run_preprocess(const RunConfig& config, const std::vector<RawTrial>& kept) {
    if (kept.empty()) fail("EmptyInput", "no trials passed the quality gate");
    std::vector<RawTrial> standardized;
    standardized.reserve(kept.size());
    for (const RawTrial& t : kept) standardized.push_back(prep::fill_gaps(prep::resample(t, config.fps)));

    PreprocessOutcome out;
    out.dataset = prep::smooth_dataset(prep::standardize_lengths(standardized), config.smooth_window);
    out.tensor = prep::build_matrix(out.dataset);

    out.report["n"] = out.tensor.n;
    out.report["m"] = out.tensor.length;
    out.report["channels"] = out.tensor.channels;
    out.report["fps"] = out.dataset.fps;
    out.report["smooth_window"] = config.smooth_window;
    return out;
}

EmbedOutcome run_embed(const RunConfig& config, const prep::SampleTensor& tensor) {
    const std::uint64_t stage_seed = derive_seed(config.seed, kEmbedStream);
    const std::vector<ae::AEHyper> grid = named_grid(config.ae_grid);

    EmbedOutcome out;
    ordered_json candidates = ordered_json::array();
    ae::AEHyper best = grid.front();
    if (grid.size() > 1) {
        const auto search = ae::grid_search_ae(tensor, grid, 0.25, stage_seed, config.threads);
        best = search.best;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            candidates.push_back({{"c1", grid[i].c1},
                                  {"c2", grid[i].c2},
                                  {"learning_rate", grid[i].learning_rate},
                                  {"epochs", grid[i].epochs},
                                  {"holdout_mae", search.holdout_mae[i]},
                                  {"selected", i == search.best_index}});
        }
    } else {
        best.seed = stage_seed;
        candidates.push_back({{"c1", best.c1},
                              {"c2", best.c2},
                              {"learning_rate", best.learning_rate},
                              {"epochs", best.epochs},
                              {"holdout_mae", nullptr},
                              {"selected", true}});
    }

    auto trained = ae::train_autoencoder(tensor, best);
    out.params = std::move(trained.params);
    out.loss_curve = std::move(trained.loss_curve);
    out.vectors = ae::encode(out.params, tensor);

    out.report["grid"] = config.ae_grid;
    out.report["stage_seed"] = stage_seed;
    out.report["candidates"] = std::move(candidates);
    out.report["best"] = {{"c1", best.c1},
                          {"c2", best.c2},
                          {"learning_rate", best.learning_rate},
                          {"epochs", best.epochs},
                          {"seed", best.seed}};
    out.report["loss_curve"] = out.loss_curve;
    out.report["latent_dim"] = out.vectors.empty() ? 0 : out.vectors.front().values.size();
    return out;
}

ClusterOutcome run_cluster(const RunConfig& config, const std::vector<ae::MovementVector>& vectors) {
    if (vectors.empty()) fail("EmptyInput", "no movement vectors to cluster");
    const std::uint64_t stage_seed = derive_seed(config.seed, kClusterStream);

    std::vector<std::vector<double>> xs;
    xs.reserve(vectors.size());
    for (const auto& v : vectors) xs.push_back(v.values);
    const auto n = xs.size();

    ClusterOutcome out;
    const int kmax_eff = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(std::max(1, config.kmax)), n > 1 ? n - 1 : 1));

    std::vector<cluster::ClusterModel> models;
    for (int k = 1; k <= kmax_eff; ++k) {
        models.push_back(cluster::kmeans_best_of(xs, k, derive_seed(stage_seed, static_cast<std::uint64_t>(k)),
                                                 10, 300, config.threads));
        out.inertia_by_k.push_back(models.back().inertia);
    }

    if (kmax_eff >= 3) {
        const auto elbow = cluster::elbow_select(out.inertia_by_k);
        out.chosen_k = elbow.k;
        out.degenerate_elbow = elbow.degenerate;
    } else {
        out.chosen_k = kmax_eff;  // too few samples for an elbow
    }

    cluster::ClusterModel model = models[static_cast<std::size_t>(out.chosen_k - 1)];
    out.outliers = cluster::detect_outliers(model, xs);

    out.assignments.assign(n, -1);
    if (!out.outliers.empty() && n - out.outliers.size() >= static_cast<std::size_t>(out.chosen_k)) {
        // exclude and refit once with the same k and seed
        std::vector<char> is_outlier(n, 0);
        for (std::size_t i : out.outliers) is_outlier[i] = 1;
        std::vector<std::vector<double>> kept_xs;
        std::vector<std::size_t> kept_idx;
        for (std::size_t i = 0; i < n; ++i)
            if (!is_outlier[i]) {
                kept_xs.push_back(xs[i]);
                kept_idx.push_back(i);
            }
        model = cluster::kmeans_best_of(kept_xs, out.chosen_k,
                                        derive_seed(stage_seed, static_cast<std::uint64_t>(out.chosen_k)),
                                        10, 300, config.threads);
        for (std::size_t j = 0; j < kept_idx.size(); ++j)
            out.assignments[kept_idx[j]] = model.assignments[j];
    } else {
        out.outliers.clear();  // refit impossible; keep everyone
        for (std::size_t i = 0; i < n; ++i) out.assignments[i] = model.assignments[i];
    }
    out.model = std::move(model);

    out.report["stage_seed"] = stage_seed;
    out.report["kmax"] = kmax_eff;
    out.report["inertia_by_k"] = out.inertia_by_k;
    out.report["k"] = out.chosen_k;
    out.report["degenerate_elbow"] = out.degenerate_elbow;
    out.report["seed"] = out.model.seed;
    out.report["inertia"] = out.model.inertia;
    ordered_json assignments;
    for (std::size_t i = 0; i < n; ++i)
        assignments[vectors[i].trial_id] = out.assignments[i] < 0 ? ordered_json(nullptr)
                                                                  : ordered_json(out.assignments[i]);
    out.report["assignments"] = std::move(assignments);
    ordered_json outlier_ids = ordered_json::array();
    for (std::size_t i : out.outliers) outlier_ids.push_back(vectors[i].trial_id);
    out.report["outliers"] = std::move(outlier_ids);
    out.report["centroids"] = out.model.centroids;
    return out;
}

AgreeOutcome run_agree(const std::vector<ScoreRecord>& labels) {
    if (labels.empty()) fail("EmptyInput", "no label rows");
    AgreeOutcome out;
    std::vector<std::array<SignClass, 3>> panel;
    ordered_json subjects = ordered_json::array();
    for (const ScoreRecord& rec : labels) {
        std::array<SignClass, 3> signs{};
        for (int r = 0; r < 3; ++r)
            signs[static_cast<std::size_t>(r)] =
                stats::collapse_5_to_sign(rec.rater_scores[static_cast<std::size_t>(r)]);
        panel.push_back(signs);
        std::string sign_str;
        for (SignClass s : signs) sign_str.push_back(sign_to_char(s));
        subjects.push_back({{"trial_id", rec.trial_id},
                            {"rater_signs", sign_str},
                            {"final_sign", rec.final_sign
                                               ? ordered_json(std::string(1, sign_to_char(*rec.final_sign)))
                                               : ordered_json(nullptr)}});
    }
    out.percent_agreement = stats::percent_agreement(panel);
    out.kappa = stats::free_marginal_kappa(out.percent_agreement, 3);
    out.report["n_subjects"] = labels.size();
    out.report["subjects"] = std::move(subjects);
    out.report["percent_agreement"] = out.percent_agreement;
    out.report["free_marginal_kappa"] = out.kappa;
    out.report["q"] = 3;
    return out;
}

ordered_json run_utests(const ClusterOutcome& clusters, const std::vector<ae::MovementVector>& vectors,
                        const std::vector<ScoreRecord>& labels) {
    const auto index = label_index(labels);
    ordered_json report;
    ordered_json pairs = ordered_json::array();

    // factor values grouped by cluster
    std::map<int, std::vector<const ScoreRecord*>> by_cluster;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (clusters.assignments[i] < 0) continue;
        const ScoreRecord& rec = label_for(index, vectors[i].trial_id);
        if (rec.cbarq) by_cluster[clusters.assignments[i]].push_back(&rec);
    }

    std::vector<int> ids;
    for (const auto& [c, members] : by_cluster) {
        (void)members;
        ids.push_back(c);
    }
    for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
            ordered_json entry;
            entry["clusters"] = {ids[a], ids[b]};
            ordered_json factors;
            for (std::size_t f = 0; f < kFactorCount; ++f) {
                std::vector<double> va, vb;
                for (const ScoreRecord* rec : by_cluster[ids[a]]) va.push_back((*rec->cbarq)[f]);
                for (const ScoreRecord* rec : by_cluster[ids[b]]) vb.push_back((*rec->cbarq)[f]);
                ordered_json cell;
                cell["n"] = {va.size(), vb.size()};
                if (va.empty() || vb.empty()) {
                    cell["error"] = "EmptyInput";
                } else {
                    cell["median"] = {stats::median(va), stats::median(vb)};
                    try {
                        const auto r = stats::mann_whitney(va, vb);
                        cell["u"] = r.u;
                        cell["z"] = r.z;
                        cell["p_two_sided"] = r.p_two_sided;
                        cell["method"] = r.method == stats::UTestResult::Method::exact ? "exact" : "normal";
                    } catch (const Error& e) {
                        cell["error"] = e.code();
                    }
                }
                factors[kFactorNames[f]] = std::move(cell);
            }
            entry["factors"] = std::move(factors);
            pairs.push_back(std::move(entry));
        }
    }
    report["pairs"] = std::move(pairs);
    return report;
}

SearchOutcome run_search(const RunConfig& config, const std::string& task,
                         const std::vector<ae::MovementVector>& vectors,
                         const std::vector<ScoreRecord>& labels,
                         const std::vector<int>* keep_mask) {
    const auto index = label_index(labels);
    const std::uint64_t stage_seed =
        derive_seed(derive_seed(config.seed, kSearchStream), fnv1a64(task));

    search::Targets targets;
    search::Matrix x;
    std::vector<std::string> used_ids;

    std::optional<Factor> factor;
    if (task == "score") {
        targets.task = search::Task::classification;
    } else if (task.rfind("cbarq:", 0) == 0) {
        factor = factor_from_string(task.substr(6));
        if (!factor) fail("UnknownFactorCode", "unknown factor in task '" + task + "'");
        targets.task = search::Task::regression;
    } else {
        fail("BadConfig", "unknown task '" + task + "' (expected score or cbarq:<FACTOR>)");
    }

    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (keep_mask && !(*keep_mask)[i]) continue;
        const ScoreRecord& rec = label_for(index, vectors[i].trial_id);
        if (targets.task == search::Task::classification) {
            if (!rec.final_sign) continue;  // no majority, not usable as truth
            targets.labels.push_back(static_cast<int>(*rec.final_sign));
        } else {
            if (!rec.cbarq) continue;
            // factors regressed on the normalized 0..1 scale
            targets.values.push_back((*rec.cbarq)[static_cast<std::size_t>(*factor)] / 4.0);
        }
        x.push_back(vectors[i].values);
        used_ids.push_back(vectors[i].trial_id);
    }
    if (x.empty()) fail("EmptyInput", "no labeled samples available for task " + task);

    search::SearchBudget budget;
    budget.max_evaluations = config.budget;

    SearchOutcome out;
    out.result = search::evolve_pipelines(x, targets, budget, stage_seed, config.folds, config.threads);
    out.cv = search::evaluate_pipeline_detailed(out.result.best, x, targets, config.folds,
                                                derive_seed(stage_seed, fnv1a64(genome_key(out.result.best))));
    out.fitted = search::fit_pipeline(out.result.best, x, targets,
                                      derive_seed(stage_seed, fnv1a64(genome_key(out.result.best))));

    out.report["task"] = task;
    out.report["stage_seed"] = stage_seed;
    out.report["n_samples"] = x.size();
    out.report["budget"] = budget.max_evaluations;
    out.report["population"] = budget.population;
    out.report["folds"] = config.folds;
    out.report["evaluations"] = out.result.evaluations;
    out.report["converged"] = out.result.converged;
    out.report["best_genome"] = {{"scaler", out.result.best.scaler},
                                 {"reducer", out.result.best.reducer},
                                 {"model", out.result.best.model},
                                 {"seed_idx", out.result.best.seed_idx},
                                 {"description", describe_genome(out.result.best, targets.task)}};
    out.report["best_score"] = out.result.best_score;
    if (targets.task == search::Task::classification) {
        out.report["cv_metrics"] = {{"accuracy", out.cv.mean_classification.accuracy},
                                    {"precision", out.cv.mean_classification.precision},
                                    {"recall", out.cv.mean_classification.recall},
                                    {"f1", out.cv.mean_classification.f1}};
    } else {
        out.report["cv_metrics"] = {{"mae", out.cv.mean_regression.mae},
                                    {"mse", out.cv.mean_regression.mse},
                                    {"r2", out.cv.mean_regression.r2},
                                    {"mae_raw_scale", out.cv.mean_regression.mae * 4.0}};
    }
    ordered_json generations = ordered_json::array();
    for (const auto& g : out.result.generations)
        generations.push_back({{"generation", g.generation},
                               {"best", g.best},
                               {"mean", g.mean},
                               {"evaluations", g.evaluations_after}});
    out.report["generations"] = std::move(generations);
    return out;
}

std::string serialize_dataset(const prep::SampleTensor& tensor, double fps) {
    ordered_json doc;
    doc["format"] = "trailmark-dataset";
    doc["version"] = 1;
    doc["fps"] = fps;
    doc["m"] = tensor.length;
    doc["channels"] = tensor.channels;
    doc["ids"] = tensor.ids;
    ordered_json data = ordered_json::array();
    for (std::size_t i = 0; i < tensor.n; ++i) {
        const auto s = tensor.sample(i);
        data.push_back(std::vector<double>(s.begin(), s.end()));
    }
    doc["data"] = std::move(data);
    return doc.dump(1);
}

prep::SampleTensor parse_dataset(const std::string& text, double* fps) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail("MalformedDocument", e.what());
    }
    if (doc.value("format", "") != "trailmark-dataset") fail("SchemaViolation", "not a dataset file");
    prep::SampleTensor t;
    t.length = doc.at("m").get<std::size_t>();
    t.channels = doc.at("channels").get<std::size_t>();
    t.ids = doc.at("ids").get<std::vector<std::string>>();
    const auto& data = doc.at("data");
    t.n = data.size();
    if (t.ids.size() != t.n) fail("SchemaViolation", "ids and data lengths differ");
    t.data.reserve(t.n * t.channels * t.length);
    for (const auto& row : data) {
        const auto values = row.get<std::vector<double>>();
        if (values.size() != t.channels * t.length)
            fail("SchemaViolation", "sample size differs from channels*m");
        t.data.insert(t.data.end(), values.begin(), values.end());
    }
    if (fps) *fps = doc.at("fps").get<double>();
    return t;
}

std::string serialize_vectors(const std::vector<ae::MovementVector>& vectors) {
    ordered_json doc;
    doc["format"] = "trailmark-vectors";
    doc["version"] = 1;
    doc["latent_dim"] = vectors.empty() ? 0 : vectors.front().values.size();
    ordered_json rows = ordered_json::array();
    for (const auto& v : vectors) rows.push_back({{"trial_id", v.trial_id}, {"values", v.values}});
    doc["vectors"] = std::move(rows);
    return doc.dump(1);
}

std::vector<ae::MovementVector> parse_vectors(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail("MalformedDocument", e.what());
    }
    if (doc.value("format", "") != "trailmark-vectors") fail("SchemaViolation", "not a vectors file");
    std::vector<ae::MovementVector> out;
    for (const auto& row : doc.at("vectors")) {
        ae::MovementVector v;
        v.trial_id = row.at("trial_id").get<std::string>();
        v.values = row.at("values").get<std::vector<double>>();
        out.push_back(std::move(v));
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("BadConfig", "cannot write " + path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("BadConfig", "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

PipelineOutcome run_pipeline(const RunConfig& config) {
    if (config.out_dir.empty()) fail("BadConfig", "pipeline needs an output directory");

    ordered_json report;
    report["format"] = "trailmark-report";
    report["version"] = 1;
    report["config"] = config_json(config);
    report["config_hash"] = config_hash(config);
    report["stage_seeds"] = {{"embed", derive_seed(config.seed, kEmbedStream)},
                             {"cluster", derive_seed(config.seed, kClusterStream)},
                             {"search", derive_seed(config.seed, kSearchStream)}};

    IngestOutcome ingest = run_ingest(config);
    report["ingest"] = ingest.report;

    PreprocessOutcome preprocessed = run_preprocess(config, ingest.kept);
    report["dataset"] = preprocessed.report;

    EmbedOutcome embedded = run_embed(config, preprocessed.tensor);
    report["autoencoder"] = embedded.report;
    write_text(config.out_dir + "/checkpoint.json", ae::save_checkpoint(embedded.params));
    write_text(config.out_dir + "/vectors.json", serialize_vectors(embedded.vectors));

    ClusterOutcome clustered = run_cluster(config, embedded.vectors);
    report["clustering"] = clustered.report;
    write_text(config.out_dir + "/cluster_report.json", clustered.report.dump(1));

    // agreement over the trials that entered the analysis
    const auto index = label_index(ingest.labels);
    std::vector<ScoreRecord> kept_labels;
    for (const auto& v : embedded.vectors) kept_labels.push_back(label_for(index, v.trial_id));
    AgreeOutcome agreement = run_agree(kept_labels);
    report["agreement"] = agreement.report;

    // cluster vs expert sign cross-tabulation (outliers and no-majority
    // subjects sit out)
    PipelineOutcome outcome;
    {
        std::vector<int> asg;
        std::vector<SignClass> signs;
        ordered_json skipped = ordered_json::array();
        for (std::size_t i = 0; i < embedded.vectors.size(); ++i) {
            if (clustered.assignments[i] < 0) continue;
            const ScoreRecord& rec = kept_labels[i];
            if (!rec.final_sign) {
                skipped.push_back(rec.trial_id);
                continue;
            }
            asg.push_back(clustered.assignments[i]);
            signs.push_back(*rec.final_sign);
        }
        const auto tab = stats::cross_tab(asg, signs);
        ordered_json jt;
        jt["clusters"] = tab.cluster_labels;
        std::string sign_cols;
        for (SignClass s : tab.sign_labels) sign_cols.push_back(sign_to_char(s));
        jt["signs"] = sign_cols;
        jt["counts"] = tab.counts;
        jt["total"] = tab.total;
        jt["purity"] = tab.purity;
        jt["skipped_no_majority"] = std::move(skipped);
        report["cross_tab"] = std::move(jt);
        outcome.purity = tab.purity;
    }

    report["utests"] = run_utests(clustered, embedded.vectors, ingest.labels);

    // expert-score classifier over non-outlier trials
    std::vector<int> keep_mask(embedded.vectors.size(), 1);
    for (std::size_t i = 0; i < embedded.vectors.size(); ++i)
        if (clustered.assignments[i] < 0) keep_mask[i] = 0;
    SearchOutcome score_search =
        run_search(config, "score", embedded.vectors, ingest.labels, &keep_mask);
    report["search"] = score_search.report;
    write_text(config.out_dir + "/model_score.json", search::save_model(score_search.fitted));

    ordered_json factor_reports;
    for (const std::string& name : config.regress_factors) {
        SearchOutcome fs =
            run_search(config, "cbarq:" + name, embedded.vectors, ingest.labels, &keep_mask);
        factor_reports[name] = fs.report;
        write_text(config.out_dir + "/model_cbarq_" + name + ".json", search::save_model(fs.fitted));
    }
    if (!config.regress_factors.empty()) report["factor_search"] = std::move(factor_reports);

    outcome.chosen_k = clustered.chosen_k;
    outcome.cv_accuracy = score_search.cv.mean_classification.accuracy;
    outcome.search_evaluations = score_search.result.evaluations;
    outcome.search_budget = config.budget;
    outcome.report = std::move(report);
    write_text(config.out_dir + "/consolidated_report.json", outcome.report.dump(1));
    return outcome;
}

}  // namespace trailmark::pipeline
