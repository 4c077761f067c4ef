#include "trailmark/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trailmark/error.hpp"

namespace trailmark::prep {

namespace {

struct ChannelAccess {
    std::optional<Point2D> FrameDetection::*point;
    std::optional<double> FrameDetection::*conf;
    const char* name;
};

constexpr ChannelAccess kChannels[2] = {
    {&FrameDetection::dog, &FrameDetection::dog_conf, "dog"},
    {&FrameDetection::person, &FrameDetection::person_conf, "person"},
};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

Point2D lerp(const Point2D& a, const Point2D& b, double w) {
    return {a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w};
}

// Linear value at time t from the segment through (ta, pa) and (tb, pb);
// extrapolates when t lies outside [ta, tb].
Point2D line_at(double ta, const Point2D& pa, double tb, const Point2D& pb, double t) {
    if (tb == ta) return pa;
    const double w = (t - ta) / (tb - ta);
    return lerp(pa, pb, w);
}

}  // namespace

RawTrial resample(const RawTrial& trial, double target_fps) {
    if (target_fps <= 0.0) fail("OutOfRange", "target fps must be positive");
    if (trial.frames.size() < 2) fail("TooFewFrames", trial.trial_id + ": resampling needs at least 2 frames");

    const double t0 = trial.frames.front().timestamp_s;
    const double span = trial.frames.back().timestamp_s - t0;
    const auto count = static_cast<std::size_t>(std::floor(span * target_fps + 1e-9)) + 1;

    RawTrial out;
    out.trial_id = trial.trial_id;
    out.fps_native = target_fps;
    out.clamp_count = trial.clamp_count;
    out.frames.resize(count);

    for (int ch = 0; ch < 2; ++ch) {
        const auto& access = kChannels[ch];
        // detected frame indices for this channel
        std::vector<std::size_t> det;
        for (std::size_t i = 0; i < trial.frames.size(); ++i)
            if (trial.frames[i].*access.point) det.push_back(i);

        std::size_t cursor = 0;  // last detection index with time <= t, advanced monotonically
        for (std::size_t k = 0; k < count; ++k) {
            FrameDetection& f = out.frames[k];
            f.frame_index = static_cast<std::int64_t>(k);
            f.timestamp_s = static_cast<double>(k) / target_fps;
            if (det.empty()) continue;
            const double t = t0 + f.timestamp_s;

            while (cursor + 1 < det.size() && trial.frames[det[cursor + 1]].timestamp_s <= t) ++cursor;

            const FrameDetection& left = trial.frames[det[cursor]];
            const bool has_left = left.timestamp_s <= t;
            const bool has_right = cursor + 1 < det.size() || left.timestamp_s >= t;
            if (!has_left || !has_right) continue;  // one-sided; stays absent

            const FrameDetection& right =
                left.timestamp_s >= t ? left : trial.frames[det[cursor + 1]];
            const Point2D pa = *(left.*access.point);
            const Point2D pb = *(right.*access.point);
            const double ta = left.timestamp_s, tb = right.timestamp_s;
            f.*access.point = (tb == ta) ? pa : line_at(ta, pa, tb, pb, t);

            const auto& ca = left.*access.conf;
            const auto& cb = right.*access.conf;
            if (ca && cb) {
                const double w = (tb == ta) ? 0.0 : (t - ta) / (tb - ta);
                f.*access.conf = *ca + (*cb - *ca) * w;
            }
        }
    }

    out.duration_s = out.frames.back().timestamp_s - out.frames.front().timestamp_s;
    return out;
}

RawTrial fill_gaps(const RawTrial& trial) {
    RawTrial out = trial;
    for (int ch = 0; ch < 2; ++ch) {
        const auto& access = kChannels[ch];
        std::vector<std::size_t> det;
        for (std::size_t i = 0; i < out.frames.size(); ++i)
            if (out.frames[i].*access.point) det.push_back(i);
        if (det.size() == out.frames.size()) continue;
        if (det.size() < 2)
            fail("ChannelTooSparse", out.trial_id + ": channel '" + access.name +
                                         "' has fewer than 2 detections");

        for (std::size_t i = 0; i < out.frames.size(); ++i) {
            if (out.frames[i].*access.point) continue;
            const double t = out.frames[i].timestamp_s;

            // bounding detections: nearest on each side, or the two nearest
            // detections for leading/trailing extrapolation
            auto right_it = std::lower_bound(det.begin(), det.end(), i);
            std::size_t a, b;
            if (right_it == det.begin()) {
                a = det[0];
                b = det[1];
            } else if (right_it == det.end()) {
                a = det[det.size() - 2];
                b = det[det.size() - 1];
            } else {
                a = *(right_it - 1);
                b = *right_it;
            }
            const FrameDetection& fa = out.frames[a];
            const FrameDetection& fb = out.frames[b];
            Point2D p = line_at(fa.timestamp_s, *(fa.*access.point), fb.timestamp_s,
                                *(fb.*access.point), t);
            p.x = clamp01(p.x);
            p.y = clamp01(p.y);
            out.frames[i].*access.point = p;
        }
    }
    return out;
}

Trajectory smooth(const Trajectory& traj, int window) {
    const std::size_t n = traj.points.size();
    if (window < 1 || window % 2 == 0 || static_cast<std::size_t>(window) > n)
        fail("BadWindow", "smoothing window must be odd, >= 1 and <= series length");
    if (window == 1) return traj;

    Trajectory out;
    out.fps = traj.fps;
    out.points.resize(n);
    const std::size_t h = static_cast<std::size_t>(window) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t half = std::min({h, i, n - 1 - i});
        double sx = 0.0, sy = 0.0;
        for (std::size_t j = i - half; j <= i + half; ++j) {
            sx += traj.points[j].x;
            sy += traj.points[j].y;
        }
        const double denom = static_cast<double>(2 * half + 1);
        out.points[i] = {sx / denom, sy / denom};
    }
    return out;
}

Dataset standardize_lengths(const std::vector<RawTrial>& trials) {
    if (trials.empty()) fail("EmptyInput", "no trials to standardize");

    const double fps = trials.front().fps_native;
    std::size_t min_len = trials.front().frames.size();
    for (const RawTrial& t : trials) {
        if (std::abs(t.fps_native - fps) > 1e-9 * std::max(1.0, fps))
            fail("FpsMismatch", t.trial_id + ": fps differs from the first trial");
        for (const FrameDetection& f : t.frames)
            if (!f.both_present())
                fail("NotGapFree", t.trial_id + ": trial has gaps; run fill_gaps first");
        min_len = std::min(min_len, t.frames.size());
    }
    if (min_len < 2) fail("TooFewFrames", "standardized length must be at least 2");

    Dataset ds;
    ds.fps = fps;
    ds.m = min_len;
    ds.samples.reserve(trials.size());
    for (const RawTrial& t : trials) {
        TrialSeries s;
        s.trial_id = t.trial_id;
        s.m = min_len;
        s.dog.fps = s.person.fps = fps;
        s.dog.points.reserve(min_len);
        s.person.points.reserve(min_len);
        for (std::size_t i = 0; i < min_len; ++i) {
            s.dog.points.push_back(*t.frames[i].dog);
            s.person.points.push_back(*t.frames[i].person);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset smooth_dataset(Dataset dataset, int window) {
    for (TrialSeries& s : dataset.samples) {
        s.dog = smooth(s.dog, window);
        s.person = smooth(s.person, window);
    }
    return dataset;
}

SampleTensor build_matrix(const Dataset& dataset) {
    if (dataset.samples.empty()) fail("EmptyInput", "dataset has no samples");
    SampleTensor t;
    t.n = dataset.samples.size();
    t.channels = 4;
    t.length = dataset.m;
    t.data.resize(t.n * t.channels * t.length);
    t.ids.reserve(t.n);
    for (std::size_t i = 0; i < t.n; ++i) {
        const TrialSeries& s = dataset.samples[i];
        t.ids.push_back(s.trial_id);
        auto block = t.sample(i);
        for (std::size_t j = 0; j < t.length; ++j) {
            block[0 * t.length + j] = s.dog.points[j].x;
            block[1 * t.length + j] = s.dog.points[j].y;
            block[2 * t.length + j] = s.person.points[j].x;
            block[3 * t.length + j] = s.person.points[j].y;
        }
    }
    return t;
}

std::string series_csv(const TrialSeries& series) {
    std::ostringstream out;
    out << "i,dog_x,dog_y,person_x,person_y\n";
    out.precision(17);
    for (std::size_t i = 0; i < series.m; ++i) {
        out << i << ',' << series.dog.points[i].x << ',' << series.dog.points[i].y << ','
            << series.person.points[i].x << ',' << series.person.points[i].y << '\n';
    }
    return out.str();
}

}  // namespace trailmark::prep
