#pragma once

#include <span>
#include <string>
#include <vector>

#include "trailmark/types.hpp"

namespace trailmark::prep {

// Gap-free position series at a fixed rate.
struct Trajectory {
    std::vector<Point2D> points;
    double fps = 0.0;
};

// Paired dog/person series of identical length and rate.
struct TrialSeries {
    std::string trial_id;
    Trajectory dog;
    Trajectory person;
    std::size_t m = 0;
};

struct Dataset {
    std::vector<TrialSeries> samples;
    std::size_t m = 0;
    double fps = 0.0;
};

// Sample block (n, channels, length), row-major, with per-sample ids.
// Channel order is fixed: dog.x, dog.y, person.x, person.y.
struct SampleTensor {
    std::size_t n = 0;
    std::size_t channels = 0;
    std::size_t length = 0;
    std::vector<double> data;
    std::vector<std::string> ids;

    std::span<const double> sample(std::size_t i) const {
        return {data.data() + i * channels * length, channels * length};
    }
    std::span<double> sample(std::size_t i) {
        return {data.data() + i * channels * length, channels * length};
    }
};

inline constexpr double kStandardFps = 24.0;
inline constexpr int kDefaultSmoothWindow = 5;

// Re-times the trial onto the uniform grid k/target_fps spanning the
// original duration. Positions are linearly interpolated between the
// nearest detections; grid points without detections on both sides stay
// absent. Throws TooFewFrames.
RawTrial resample(const RawTrial& trial, double target_fps = kStandardFps);

// Fills interior gaps by linear interpolation and leading/trailing gaps
// by linear extrapolation from the two nearest detections, clamped to
// [0,1]. Output coverage is exactly 1. Throws ChannelTooSparse.
RawTrial fill_gaps(const RawTrial& trial);

// Centered moving average; edges shrink to symmetric sub-windows.
Trajectory smooth(const Trajectory& traj, int window);

// Truncates all trials to the shortest length (initial segment kept).
// Input trials must be gap-free and share one fps. Throws EmptyInput.
Dataset standardize_lengths(const std::vector<RawTrial>& trials);

// Smooths every trajectory of every sample in place.
Dataset smooth_dataset(Dataset dataset, int window = kDefaultSmoothWindow);

// (n, 4, m) tensor in dataset order. Throws EmptyInput.
SampleTensor build_matrix(const Dataset& dataset);

// Per-trial intermediate dump: i, dog_x, dog_y, person_x, person_y.
std::string series_csv(const TrialSeries& series);

}  // namespace trailmark::prep
