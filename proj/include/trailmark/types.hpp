#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trailmark/error.hpp"

namespace trailmark {

// Normalized image coordinates; validation clamps to the unit square.
struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

struct FrameDetection {
    std::int64_t frame_index = 0;
    double timestamp_s = 0.0;
    std::optional<Point2D> dog;
    std::optional<Point2D> person;
    std::optional<double> dog_conf;
    std::optional<double> person_conf;

    bool both_present() const { return dog.has_value() && person.has_value(); }
};

// Tracker output for one trial, pre-standardization. Timestamps are
// strictly increasing; duration is last minus first timestamp.
struct RawTrial {
    std::string trial_id;
    double fps_native = 0.0;
    std::vector<FrameDetection> frames;
    double duration_s = 0.0;
    // Out-of-range coordinates found during validation (clamped, not fatal).
    std::int64_t clamp_count = 0;
};

// Collapsed expert score: reacts away ('-'), stable ('0'), reacts toward ('+').
enum class SignClass { minus = 0, zero = 1, plus = 2 };

inline char sign_to_char(SignClass s) {
    switch (s) {
        case SignClass::minus: return '-';
        case SignClass::zero: return '0';
        default: return '+';
    }
}

inline SignClass sign_from_char(char c) {
    switch (c) {
        case '-': return SignClass::minus;
        case '0': return SignClass::zero;
        case '+': return SignClass::plus;
        default: fail("SchemaViolation", std::string("unknown sign class '") + c + "'");
    }
}

// The eight C-BARQ behavioral factors, each scored 0..4.
enum class Factor { SDA = 0, ODA, SDF, NSF, SRB, ASB, EXC, PS };

inline constexpr int kFactorCount = 8;

inline constexpr std::array<const char*, kFactorCount> kFactorNames = {
    "SDA", "ODA", "SDF", "NSF", "SRB", "ASB", "EXC", "PS"};

std::optional<Factor> factor_from_string(const std::string& name);

// One dog's labels: three expert scores on the 5-point scale, the
// majority-vote sign (absent when the three signs all differ), and the
// C-BARQ factor scores when the owner questionnaire is available.
struct ScoreRecord {
    std::string trial_id;
    std::array<int, 3> rater_scores{};                    // each in -2..+2
    std::optional<SignClass> final_sign;
    std::optional<std::array<double, kFactorCount>> cbarq; // each in 0..4
};

}  // namespace trailmark
