#include "trailmark/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "trailmark/error.hpp"
#include "trailmark/rng.hpp"
#include "trailmark/stats.hpp"
#include "trailmark/trajectory_io.hpp"

namespace trailmark::synth {

namespace {

constexpr double kWanderSd = 0.03;       // diffusion scale, units/sqrt(s)
constexpr double kBurstSeconds = 2.0;    // oscillation window after each event
constexpr double kBurstHz = 4.0;
constexpr Point2D kCenter{0.5, 0.5};
constexpr Point2D kGate{0.5, 0.85};

// Factor model: EXC falls and SDF rises affinely with the trial's mean
// dog-person distance; the remaining factors sit near fixed bases. All
// values get N(0, 0.08) jitter and clamp to [0, 4].
constexpr double kFactorNoiseSd = 0.08;
constexpr std::array<double, kFactorCount> kFactorBase = {0.8, 0.6, 0.0, 1.0, 1.2, 1.5, 0.0, 1.0};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double round6(double v) { return std::round(v * 1e6) / 1e6; }

Point2D nearest_wall_point(const Point2D& p) {
    // candidate projections onto the four walls
    const Point2D candidates[4] = {{0.0, p.y}, {1.0, p.y}, {p.x, 0.0}, {p.x, 1.0}};
    const double dist[4] = {p.x, 1.0 - p.x, p.y, 1.0 - p.y};
    std::size_t best = 0;
    for (std::size_t i = 1; i < 4; ++i)
        if (dist[i] < dist[best]) best = i;
    return candidates[best];
}

void validate(const GenConfig& c) {
    if (c.duration_s <= 0.0 || c.fps <= 0.0) fail("BadConfig", "duration and fps must be positive");
    if (c.noise_sd < 0.0) fail("BadConfig", "noise_sd must be nonnegative");
    if (c.missing_rate < 0.0 || c.missing_rate >= 1.0) fail("BadConfig", "missing_rate must lie in [0,1)");
    for (double e : c.event_times_s)
        if (e < 0.0 || e > c.duration_s) fail("BadConfig", "event times must lie within the trial");
}

}  // namespace

const char* profile_name(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::neutral: return "neutral";
        case ProfileKind::excessive: return "excessive";
        default: return "avoidant";
    }
}

SignClass profile_sign(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::neutral: return SignClass::zero;
        case ProfileKind::excessive: return SignClass::plus;
        default: return SignClass::minus;
    }
}

BehaviorProfile BehaviorProfile::preset(ProfileKind kind) {
    BehaviorProfile p;
    p.kind = kind;
    switch (kind) {
        case ProfileKind::neutral:
            break;
        case ProfileKind::excessive:
            p.approach_rate = 1.2;
            p.jump_amplitude = 0.06;
            break;
        case ProfileKind::avoidant:
            p.wall_affinity = 0.9;
            break;
    }
    return p;
}

GeneratedTrial gen_trial(const BehaviorProfile& profile, const GenConfig& config,
                         const std::string& trial_id) {
    validate(config);
    if (profile.dwell_radius <= 0.0 || profile.dwell_radius >= 0.5)
        fail("BadConfig", "dwell_radius must lie in (0, 0.5)");
    if (profile.approach_rate < 0.0 || profile.wall_affinity < 0.0 || profile.jump_amplitude < 0.0)
        fail("BadConfig", "profile rates must be nonnegative");

    Rng rng(config.seed);
    const double dt = 1.0 / config.fps;
    const auto frames = static_cast<std::size_t>(std::floor(config.duration_s * config.fps + 1e-9)) + 1;

    GeneratedTrial out;
    out.true_sign = profile_sign(profile.kind);
    out.trial.trial_id = trial_id;
    out.trial.fps_native = config.fps;
    out.trial.frames.resize(frames);

    Point2D dog = kGate;
    double mean_dist = 0.0;

    for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) * dt;
        FrameDetection& f = out.trial.frames[k];
        f.frame_index = static_cast<std::int64_t>(k);
        f.timestamp_s = t;

        const Point2D person{clamp(kCenter.x + rng.normal(0.0, config.noise_sd), 0.0, 1.0),
                             clamp(kCenter.y + rng.normal(0.0, config.noise_sd), 0.0, 1.0)};

        // drift-diffusion step for the dog state
        double drift_x = 0.0, drift_y = 0.0;
        const double dx_c = kCenter.x - dog.x, dy_c = kCenter.y - dog.y;
        const double dist_c = std::hypot(dx_c, dy_c);
        if (profile.approach_rate > 0.0 && dist_c > profile.dwell_radius) {
            drift_x += profile.approach_rate * dx_c;
            drift_y += profile.approach_rate * dy_c;
        }
        if (profile.wall_affinity > 0.0) {
            const Point2D wall = nearest_wall_point(dog);
            drift_x += profile.wall_affinity * ((wall.x - dog.x) + 0.6 * (dog.x - kCenter.x));
            drift_y += profile.wall_affinity * ((wall.y - dog.y) + 0.6 * (dog.y - kCenter.y));
        }
        const double step_sd = kWanderSd * std::sqrt(dt);
        dog.x = clamp(dog.x + drift_x * dt + rng.normal(0.0, step_sd), 0.0, 1.0);
        dog.y = clamp(dog.y + drift_y * dt + rng.normal(0.0, step_sd), 0.0, 1.0);

        // oscillation burst toward/away from the person after each event
        Point2D dog_obs = dog;
        if (profile.jump_amplitude > 0.0) {
            for (double e : config.event_times_s) {
                if (t < e || t > e + kBurstSeconds) continue;
                const double phase = std::sin(2.0 * 3.14159265358979323846 * kBurstHz * (t - e));
                double ux = dog.x - kCenter.x, uy = dog.y - kCenter.y;
                const double norm = std::hypot(ux, uy);
                if (norm > 1e-9) {
                    ux /= norm;
                    uy /= norm;
                } else {
                    ux = 0.0;
                    uy = 1.0;
                }
                dog_obs.x = clamp(dog_obs.x + profile.jump_amplitude * phase * ux, 0.0, 1.0);
                dog_obs.y = clamp(dog_obs.y + profile.jump_amplitude * phase * uy, 0.0, 1.0);
            }
        }

        mean_dist += std::hypot(dog.x - kCenter.x, dog.y - kCenter.y);

        const Point2D dog_noisy{clamp(dog_obs.x + rng.normal(0.0, config.noise_sd), 0.0, 1.0),
                                clamp(dog_obs.y + rng.normal(0.0, config.noise_sd), 0.0, 1.0)};

        bool drop_dog = false, drop_person = false;
        if (config.missing_rate > 0.0) {
            drop_dog = rng.bernoulli(config.missing_rate);
            drop_person = rng.bernoulli(config.missing_rate);
        }
        if (!drop_dog) f.dog = Point2D{round6(dog_noisy.x), round6(dog_noisy.y)};
        if (!drop_person) f.person = Point2D{round6(person.x), round6(person.y)};
    }
    out.trial.duration_s =
        out.trial.frames.back().timestamp_s - out.trial.frames.front().timestamp_s;
    mean_dist /= static_cast<double>(frames);

    for (std::size_t i = 0; i < kFactorCount; ++i)
        out.factors[i] = clamp(kFactorBase[i] + rng.normal(0.0, kFactorNoiseSd), 0.0, 4.0);
    const auto exc = static_cast<std::size_t>(Factor::EXC);
    const auto sdf = static_cast<std::size_t>(Factor::SDF);
    out.factors[exc] = clamp(4.2 - 7.0 * mean_dist + rng.normal(0.0, kFactorNoiseSd), 0.0, 4.0);
    out.factors[sdf] = clamp(7.0 * mean_dist - 0.8 + rng.normal(0.0, kFactorNoiseSd), 0.0, 4.0);
    return out;
}

Corpus gen_dataset(int n_per_profile, const std::vector<BehaviorProfile>& profiles,
                   const GenConfig& config, double rater_confusion) {
    validate(config);
    if (n_per_profile < 1) fail("BadConfig", "n_per_profile must be at least 1");
    if (profiles.empty()) fail("BadConfig", "need at least one profile");
    if (rater_confusion < 0.0 || rater_confusion >= 1.0)
        fail("BadConfig", "rater confusion must lie in [0,1)");

    Corpus corpus;
    std::uint64_t index = 0;
    for (const BehaviorProfile& profile : profiles) {
        for (int i = 0; i < n_per_profile; ++i, ++index) {
            char suffix[8];
            std::snprintf(suffix, sizeof(suffix), "%03d", i);
            const std::string id = std::string(profile_name(profile.kind)) + "_" + suffix;

            GenConfig per_trial = config;
            per_trial.seed = derive_seed(config.seed, index);
            GeneratedTrial gt = gen_trial(profile, per_trial, id);

            ScoreRecord rec;
            rec.trial_id = id;
            Rng rater_rng(derive_seed(config.seed, 0xBEEFu + index));
            std::array<SignClass, 3> signs{};
            for (int r = 0; r < 3; ++r) {
                SignClass s = gt.true_sign;
                if (rater_confusion > 0.0 && rater_rng.bernoulli(rater_confusion)) {
                    // confusion picks one of the two other signs uniformly
                    const int shift = 1 + static_cast<int>(rater_rng.below(2));
                    s = static_cast<SignClass>((static_cast<int>(s) + shift) % 3);
                }
                signs[static_cast<std::size_t>(r)] = s;
                int magnitude = 0;
                if (s != SignClass::zero) magnitude = 1 + static_cast<int>(rater_rng.below(2));
                rec.rater_scores[static_cast<std::size_t>(r)] =
                    s == SignClass::minus ? -magnitude : s == SignClass::plus ? magnitude : 0;
            }
            rec.final_sign = stats::try_majority_vote(signs);
            rec.cbarq = gt.factors;

            corpus.entries.push_back({id, profile.kind, gt.true_sign});
            corpus.labels.push_back(std::move(rec));
            corpus.trials.push_back(std::move(gt));
        }
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const GenConfig& config, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "trials");

    for (const GeneratedTrial& gt : corpus.trials)
        io::save_trial(gt.trial, (fs::path(out_dir) / "trials" / (gt.trial.trial_id + ".json")).string());

    {
        std::ofstream labels((fs::path(out_dir) / "labels.csv").string(), std::ios::binary);
        if (!labels) fail("BadConfig", "cannot write labels.csv under " + out_dir);
        labels << io::serialize_labels(corpus.labels);
    }

    nlohmann::ordered_json manifest;
    manifest["format"] = "trailmark-corpus";
    manifest["version"] = 1;
    manifest["seed"] = config.seed;
    manifest["config"] = {{"duration_s", config.duration_s},
                          {"fps", config.fps},
                          {"noise_sd", config.noise_sd},
                          {"missing_rate", config.missing_rate},
                          {"event_times_s", config.event_times_s}};
    manifest["factor_model"] =
        "EXC = clamp(4.2 - 7*mean_dist + e, 0, 4); SDF = clamp(7*mean_dist - 0.8 + e, 0, 4); "
        "others = clamp(base + e, 0, 4), e ~ N(0, 0.08); mean_dist is the trial mean "
        "dog-person-center distance";
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
        const CorpusEntry& e = corpus.entries[i];
        nlohmann::ordered_json je;
        je["trial_id"] = e.trial_id;
        je["profile"] = profile_name(e.kind);
        je["true_sign"] = std::string(1, sign_to_char(e.true_sign));
        nlohmann::ordered_json factors;
        for (std::size_t f = 0; f < kFactorCount; ++f)
            factors[kFactorNames[f]] = corpus.trials[i].factors[f];
        je["factors"] = std::move(factors);
        entries.push_back(std::move(je));
    }
    manifest["trials"] = std::move(entries);

    std::ofstream out((fs::path(out_dir) / "manifest.json").string(), std::ios::binary);
    if (!out) fail("BadConfig", "cannot write manifest.json under " + out_dir);
    out << manifest.dump(1) << '\n';
}

}  // namespace trailmark::synth
