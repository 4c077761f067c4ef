#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "trailmark/types.hpp"

namespace trailmark::io {

// Parses one trial document (JSON, see README for the schema).
// Out-of-range coordinates are clamped to [0,1] and counted on the trial.
// Throws MalformedDocument, SchemaViolation, NonMonotoneTimestamps.
RawTrial parse_trial(std::istream& in);
RawTrial parse_trial(const std::string& text);
RawTrial load_trial(const std::string& path);

// Inverse of parse_trial for valid trials; coordinates are written with
// 6 decimal digits, confidences as-is.
std::string serialize_trial(const RawTrial& trial);
void save_trial(const RawTrial& trial, const std::string& path);

// Fraction of frames where both dog and person are detected.
double detection_coverage(const RawTrial& trial);

struct GateResult {
    std::vector<RawTrial> kept;
    std::vector<RawTrial> excluded;
};

// Keeps trials with coverage >= threshold (inclusive); order preserved.
GateResult quality_gate(std::vector<RawTrial> trials, double threshold = 0.8);

// Label CSV: header then one row per trial. Raters are integers in -2..+2;
// the eight factor columns are either all filled (reals in 0..4) or all
// empty. final_sign is the majority vote when one exists.
std::vector<ScoreRecord> load_labels(std::istream& in);
std::vector<ScoreRecord> load_labels_file(const std::string& path);

std::string serialize_labels(const std::vector<ScoreRecord>& records);

// All *.json files in a directory, sorted by filename.
std::vector<RawTrial> load_trial_dir(const std::string& dir);

}  // namespace trailmark::io
