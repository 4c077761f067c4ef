#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trailmark/types.hpp"

namespace trailmark::synth {

enum class ProfileKind { neutral, excessive, avoidant };

const char* profile_name(ProfileKind kind);
SignClass profile_sign(ProfileKind kind);

// Drift parameters for the dog's wander process. Rates are per second,
// radii and amplitudes in normalized arena units.
struct BehaviorProfile {
    ProfileKind kind = ProfileKind::neutral;
    double approach_rate = 0.0;
    double dwell_radius = 0.12;
    double jump_amplitude = 0.0;
    double wall_affinity = 0.0;

    static BehaviorProfile preset(ProfileKind kind);
};

struct GenConfig {
    double duration_s = 60.0;
    double fps = 24.0;
    double noise_sd = 0.005;
    double missing_rate = 0.0;
    std::vector<double> event_times_s{10.0, 20.0, 30.0};
    std::uint64_t seed = 0;
};

struct GeneratedTrial {
    RawTrial trial;
    SignClass true_sign = SignClass::zero;
    std::array<double, kFactorCount> factors{};  // raw 0..4 scale
};

// One seeded arena trial: the person sits at the center with Gaussian
// jitter; the dog follows a drift-diffusion wander shaped by the profile.
// Throws BadConfig.
GeneratedTrial gen_trial(const BehaviorProfile& profile, const GenConfig& config,
                         const std::string& trial_id);

struct CorpusEntry {
    std::string trial_id;
    ProfileKind kind = ProfileKind::neutral;
    SignClass true_sign = SignClass::zero;
};

struct Corpus {
    std::vector<GeneratedTrial> trials;
    std::vector<ScoreRecord> labels;
    std::vector<CorpusEntry> entries;
};

// n_per_profile trials per listed profile, plus three synthetic raters
// that reproduce the true sign with independent confusion probability
// `rater_confusion`. Deterministic by config.seed.
Corpus gen_dataset(int n_per_profile, const std::vector<BehaviorProfile>& profiles,
                   const GenConfig& config, double rater_confusion = 0.1);

// Writes trials/<id>.json, labels.csv and manifest.json under out_dir.
void write_corpus(const Corpus& corpus, const GenConfig& config, const std::string& out_dir);

}  // namespace trailmark::synth
