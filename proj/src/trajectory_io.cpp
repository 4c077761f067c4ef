#include "trailmark/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trailmark/error.hpp"
#include "trailmark/stats.hpp"

namespace trailmark {

std::optional<Factor> factor_from_string(const std::string& name) {
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (int i = 0; i < kFactorCount; ++i)
        if (upper == kFactorNames[static_cast<std::size_t>(i)]) return static_cast<Factor>(i);
    return std::nullopt;
}

}  // namespace trailmark

namespace trailmark::io {

using nlohmann::json;

namespace {

double clamp_unit(double v, std::int64_t& clamp_count) {
    if (v < 0.0) {
        ++clamp_count;
        return 0.0;
    }
    if (v > 1.0) {
        ++clamp_count;
        return 1.0;
    }
    return v;
}

std::optional<Point2D> parse_point(const json& frame, const char* key, std::int64_t& clamp_count) {
    if (!frame.contains(key) || frame[key].is_null()) return std::nullopt;
    const json& p = frame[key];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        fail("SchemaViolation", std::string(key) + " must be null or [x, y]");
    Point2D pt;
    pt.x = clamp_unit(p[0].get<double>(), clamp_count);
    pt.y = clamp_unit(p[1].get<double>(), clamp_count);
    return pt;
}

std::optional<double> parse_conf(const json& frame, const char* key) {
    if (!frame.contains(key) || frame[key].is_null()) return std::nullopt;
    if (!frame[key].is_number()) fail("SchemaViolation", std::string(key) + " must be null or a number");
    const double v = frame[key].get<double>();
    if (v < 0.0 || v > 1.0) fail("SchemaViolation", std::string(key) + " outside [0,1]");
    return v;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

RawTrial parse_trial(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail("MalformedDocument", e.what());
    }

    if (!doc.is_object()) fail("SchemaViolation", "top level must be an object");
    for (const char* key : {"trial_id", "fps", "frames"})
        if (!doc.contains(key)) fail("SchemaViolation", std::string("missing field '") + key + "'");
    if (!doc["trial_id"].is_string()) fail("SchemaViolation", "trial_id must be a string");
    if (!doc["fps"].is_number()) fail("SchemaViolation", "fps must be a number");
    if (!doc["frames"].is_array()) fail("SchemaViolation", "frames must be an array");

    RawTrial trial;
    trial.trial_id = doc["trial_id"].get<std::string>();
    trial.fps_native = doc["fps"].get<double>();
    if (trial.fps_native <= 0.0) fail("SchemaViolation", "fps must be positive");
    if (doc["frames"].empty()) fail("SchemaViolation", "frames must be nonempty");

    trial.frames.reserve(doc["frames"].size());
    for (const json& f : doc["frames"]) {
        if (!f.is_object()) fail("SchemaViolation", "frame must be an object");
        if (!f.contains("i") || !f.contains("t")) fail("SchemaViolation", "frame missing 'i' or 't'");
        if (!f["i"].is_number_integer() || f["i"].get<std::int64_t>() < 0)
            fail("SchemaViolation", "frame index must be a nonnegative integer");
        if (!f["t"].is_number() || f["t"].get<double>() < 0.0)
            fail("SchemaViolation", "frame timestamp must be a nonnegative number");

        FrameDetection det;
        det.frame_index = f["i"].get<std::int64_t>();
        det.timestamp_s = f["t"].get<double>();
        det.dog = parse_point(f, "dog", trial.clamp_count);
        det.person = parse_point(f, "person", trial.clamp_count);
        det.dog_conf = parse_conf(f, "dog_conf");
        det.person_conf = parse_conf(f, "person_conf");
        if (!det.dog) det.dog_conf.reset();
        if (!det.person) det.person_conf.reset();
        trial.frames.push_back(det);
    }

    for (std::size_t i = 1; i < trial.frames.size(); ++i) {
        if (trial.frames[i].timestamp_s <= trial.frames[i - 1].timestamp_s)
            fail("NonMonotoneTimestamps",
                 trial.trial_id + ": timestamp at frame " + std::to_string(i) + " does not increase");
        if (trial.frames[i].frame_index <= trial.frames[i - 1].frame_index)
            fail("NonMonotoneTimestamps",
                 trial.trial_id + ": frame index at position " + std::to_string(i) + " does not increase");
    }

    trial.duration_s = trial.frames.back().timestamp_s - trial.frames.front().timestamp_s;

    // Declared fps must match the observed median frame interval within 1%.
    if (trial.frames.size() >= 2) {
        std::vector<double> intervals;
        intervals.reserve(trial.frames.size() - 1);
        for (std::size_t i = 1; i < trial.frames.size(); ++i)
            intervals.push_back(trial.frames[i].timestamp_s - trial.frames[i - 1].timestamp_s);
        const double med = stats::median(std::move(intervals));
        const double implied_fps = 1.0 / med;
        if (std::abs(implied_fps - trial.fps_native) > 0.01 * trial.fps_native)
            fail("SchemaViolation", trial.trial_id + ": declared fps " + std::to_string(trial.fps_native) +
                                        " inconsistent with median frame interval");
    }
    return trial;
}

RawTrial parse_trial(const std::string& text) {
    std::istringstream in(text);
    return parse_trial(in);
}

RawTrial load_trial(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("MalformedDocument", "cannot open " + path);
    try {
        return parse_trial(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
}

std::string serialize_trial(const RawTrial& trial) {
    json doc;
    doc["trial_id"] = trial.trial_id;
    doc["fps"] = trial.fps_native;
    json frames = json::array();
    for (const FrameDetection& f : trial.frames) {
        json jf;
        jf["i"] = f.frame_index;
        jf["t"] = f.timestamp_s;
        jf["dog"] = f.dog ? json{round6(f.dog->x), round6(f.dog->y)} : json(nullptr);
        jf["person"] = f.person ? json{round6(f.person->x), round6(f.person->y)} : json(nullptr);
        jf["dog_conf"] = f.dog_conf ? json(*f.dog_conf) : json(nullptr);
        jf["person_conf"] = f.person_conf ? json(*f.person_conf) : json(nullptr);
        frames.push_back(std::move(jf));
    }
    doc["frames"] = std::move(frames);
    return doc.dump(1);
}

void save_trial(const RawTrial& trial, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("MalformedDocument", "cannot write " + path);
    out << serialize_trial(trial) << '\n';
}

double detection_coverage(const RawTrial& trial) {
    if (trial.frames.empty()) return 0.0;
    std::size_t both = 0;
    for (const FrameDetection& f : trial.frames)
        if (f.both_present()) ++both;
    return static_cast<double>(both) / static_cast<double>(trial.frames.size());
}

GateResult quality_gate(std::vector<RawTrial> trials, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0) fail("OutOfRange", "coverage threshold must be in (0,1]");
    GateResult result;
    for (auto& trial : trials) {
        if (detection_coverage(trial) >= threshold)
            result.kept.push_back(std::move(trial));
        else
            result.excluded.push_back(std::move(trial));
    }
    return result;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

constexpr std::size_t kLabelColumns = 4 + kFactorCount;

}  // namespace

std::vector<ScoreRecord> load_labels(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail("SchemaViolation", "label file is empty");
    const auto header = split_csv_line(line);
    if (header.size() != kLabelColumns)
        fail("SchemaViolation", "label header must have " + std::to_string(kLabelColumns) + " columns");
    if (header[0] != "trial_id" || header[1] != "rater1" || header[2] != "rater2" || header[3] != "rater3")
        fail("SchemaViolation", "label header must start with trial_id,rater1,rater2,rater3");
    for (std::size_t i = 0; i < kFactorCount; ++i) {
        const auto parsed = factor_from_string(header[4 + i]);
        if (!parsed || *parsed != static_cast<Factor>(i))
            fail("UnknownFactorCode", "unexpected factor column '" + header[4 + i] + "'");
    }

    std::vector<ScoreRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != kLabelColumns)
            fail("SchemaViolation", "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(kLabelColumns) + " cells, got " +
                                        std::to_string(cells.size()));
        ScoreRecord rec;
        rec.trial_id = cells[0];
        if (rec.trial_id.empty()) fail("SchemaViolation", "line " + std::to_string(line_no) + ": empty trial_id");

        for (int r = 0; r < 3; ++r) {
            int value = 0;
            try {
                std::size_t pos = 0;
                value = std::stoi(cells[static_cast<std::size_t>(1 + r)], &pos);
                if (pos != cells[static_cast<std::size_t>(1 + r)].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail("SchemaViolation", "line " + std::to_string(line_no) + ": rater score must be an integer");
            }
            if (value < -2 || value > 2)
                fail("ScoreOutOfRange", "line " + std::to_string(line_no) + ": rater score " +
                                            std::to_string(value) + " outside -2..+2");
            rec.rater_scores[static_cast<std::size_t>(r)] = value;
        }

        std::size_t filled = 0;
        std::array<double, kFactorCount> factors{};
        for (std::size_t f = 0; f < kFactorCount; ++f) {
            const std::string& cell = cells[4 + f];
            if (cell.empty()) continue;
            double value = 0.0;
            try {
                std::size_t pos = 0;
                value = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail("SchemaViolation", "line " + std::to_string(line_no) + ": factor score must be a number");
            }
            if (value < 0.0 || value > 4.0)
                fail("ScoreOutOfRange", "line " + std::to_string(line_no) + ": factor " +
                                            kFactorNames[f] + "=" + cell + " outside 0..4");
            factors[f] = value;
            ++filled;
        }
        if (filled == kFactorCount)
            rec.cbarq = factors;
        else if (filled != 0)
            fail("SchemaViolation",
                 "line " + std::to_string(line_no) + ": factor scores must be all present or all empty");

        std::array<SignClass, 3> signs{};
        for (int r = 0; r < 3; ++r)
            signs[static_cast<std::size_t>(r)] = stats::collapse_5_to_sign(rec.rater_scores[static_cast<std::size_t>(r)]);
        rec.final_sign = stats::try_majority_vote(signs);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<ScoreRecord> load_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("SchemaViolation", "cannot open " + path);
    try {
        return load_labels(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
}

std::string serialize_labels(const std::vector<ScoreRecord>& records) {
    std::ostringstream out;
    out << "trial_id,rater1,rater2,rater3";
    for (const char* name : kFactorNames) {
        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out << ',' << lower;
    }
    out << '\n';
    for (const ScoreRecord& rec : records) {
        out << rec.trial_id;
        for (int s : rec.rater_scores) out << ',' << s;
        for (std::size_t f = 0; f < kFactorCount; ++f) {
            out << ',';
            if (rec.cbarq) {
                // factors carry at most 4 decimals in our files
                std::ostringstream cell;
                cell << std::round((*rec.cbarq)[f] * 1e4) / 1e4;
                out << cell.str();
            }
        }
        out << '\n';
    }
    return out.str();
}

std::vector<RawTrial> load_trial_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) fail("SchemaViolation", dir + " is not a directory");
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    std::vector<RawTrial> trials;
    trials.reserve(paths.size());
    for (const auto& p : paths) trials.push_back(load_trial(p.string()));
    return trials;
}

}  // namespace trailmark::io
