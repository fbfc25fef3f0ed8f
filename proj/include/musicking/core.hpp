#ifndef MUSICKING_CORE_HPP
#define MUSICKING_CORE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace musicking {

/// A numeric column with explicit missing entries.
using Series = std::vector<std::optional<double>>;

inline Series to_series(std::span<const double> values) {
    return Series(values.begin(), values.end());
}

/// Non-null entries of a series, in order.
inline std::vector<double> present_values(std::span<const std::optional<double>> values) {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        if (v) {
            out.push_back(*v);
        }
    }
    return out;
}

/// Skeleton parts recorded by the pose tracker, in column order.
inline constexpr std::array<std::string_view, 12> kBodyParts = {
    "nose",   "neck",    "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
    "l_elbow", "l_wrist", "r_eye",     "l_eye",   "r_ear",   "l_ear",
};

inline constexpr std::size_t kPartCount = kBodyParts.size();

inline std::optional<std::size_t> part_index(std::string_view name) {
    for (std::size_t i = 0; i < kPartCount; ++i) {
        if (kBodyParts[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

inline constexpr std::array<std::string_view, 4> kEegChannels = {"t3", "t4", "o1", "o2"};

/// Pixel coordinates are kept verbatim: -1 marks a missed detection and a
/// confidence of 0 a detector failure. Both carry quality signal.
struct Keypoint {
    std::optional<double> x;
    std::optional<double> y;
    std::optional<double> confidence;

    bool is_sentinel() const { return (x && *x == -1.0) || (y && *y == -1.0); }
    bool operator==(const Keypoint&) const = default;
};

struct Record {
    std::optional<double> sync_delta;     // ms since previous record
    std::optional<int> chorus_id;         // 0 pre, 1..5 playthroughs, 999 post
    double backing_track_position = 0.0;  // ms from track start
    std::optional<std::int64_t> flow;
    std::optional<std::int64_t> eda;
    std::array<std::optional<std::int64_t>, 4> eeg;  // t3, t4, o1, o2
    std::array<Keypoint, kPartCount> keypoints;
    nlohmann::json extras = nlohmann::json::object();  // unknown columns, verbatim

    bool operator==(const Record&) const = default;
};

struct Session {
    std::string session_id;
    std::vector<Record> records;

    bool operator==(const Session&) const = default;
};

struct BeatGrid {
    std::vector<double> beat_times;  // seconds
    std::vector<double> bar_times;   // seconds
    double tempo_bpm = 0.0;
    double duration_s = 0.0;
    std::int64_t audio_sample_rate_hz = 0;

    bool operator==(const BeatGrid&) const = default;
};

struct ColumnQuality {
    std::string column;
    std::size_t missing_count = 0;
    double missing_pct = 0.0;
    std::size_t outlier_count = 0;
    std::size_t minus_one_count = 0;
    std::size_t zero_count = 0;
    std::size_t low_confidence_count = 0;
    bool skeleton = false;
};

struct QualityReport {
    std::string session_id;
    std::size_t record_count = 0;
    double confidence_threshold = 0.5;
    double iqr_k = 1.5;
    std::vector<ColumnQuality> columns;
};

struct BarFeatureMatrix {
    std::vector<std::size_t> bar_index;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> dropped;  // bars without records
};

// ---------------------------------------------------------------------------
// Columns

inline constexpr std::string_view kDeltaColumn = "sync_delta";
inline constexpr std::string_view kChorusColumn = "sync_chorus_id";
inline constexpr std::string_view kPositionColumn = "sync_backing_track_position";
inline constexpr std::string_view kFlowColumn = "flow";
inline constexpr std::string_view kEdaColumn = "hardware_bitalino_eda";

inline std::string eeg_column(std::size_t channel) {
    return "hardware_brainbit_eeg_" + std::string(kEegChannels.at(channel));
}

inline std::string skeleton_column(std::string_view part, std::string_view axis) {
    return "hardware_skeleton_" + std::string(part) + "_" + std::string(axis);
}

/// Canonical column names in schema order.
inline const std::vector<std::string>& canonical_columns() {
    static const std::vector<std::string> columns = [] {
        std::vector<std::string> c = {std::string(kDeltaColumn), std::string(kChorusColumn),
                                      std::string(kPositionColumn), std::string(kFlowColumn),
                                      std::string(kEdaColumn)};
        for (std::size_t i = 0; i < kEegChannels.size(); ++i) {
            c.push_back(eeg_column(i));
        }
        for (auto part : kBodyParts) {
            for (auto axis : {"x", "y", "confidence"}) {
                c.push_back(skeleton_column(part, axis));
            }
        }
        return c;
    }();
    return columns;
}

/// Maps short names ("eda", "chorus_id", "eeg_t3", ...) onto canonical ones.
inline std::string canonical_column(std::string_view name) {
    if (name == "eda") return std::string(kEdaColumn);
    if (name == "chorus_id") return std::string(kChorusColumn);
    if (name == "delta") return std::string(kDeltaColumn);
    if (name == "backing_track_position") return std::string(kPositionColumn);
    if (name.starts_with("eeg_")) return "hardware_brainbit_" + std::string(name);
    return std::string(name);
}

namespace detail {

struct SkeletonField {
    std::size_t part;
    int axis;  // 0 x, 1 y, 2 confidence
};

inline std::optional<SkeletonField> parse_skeleton_column(std::string_view name) {
    constexpr std::string_view prefix = "hardware_skeleton_";
    if (!name.starts_with(prefix)) {
        return std::nullopt;
    }
    name.remove_prefix(prefix.size());
    constexpr std::array<std::string_view, 3> suffixes = {"_x", "_y", "_confidence"};
    for (int axis = 0; axis < 3; ++axis) {
        auto suffix = suffixes[static_cast<std::size_t>(axis)];
        if (name.ends_with(suffix)) {
            auto idx = part_index(name.substr(0, name.size() - suffix.size()));
            if (idx) {
                return SkeletonField{*idx, axis};
            }
        }
    }
    return std::nullopt;
}

template <typename T>
std::optional<double> widen(const std::optional<T>& v) {
    return v ? std::optional<double>(static_cast<double>(*v)) : std::nullopt;
}

} // namespace detail

inline bool is_skeleton_column(std::string_view name) {
    return detail::parse_skeleton_column(name).has_value();
}

inline bool is_canonical_column(std::string_view name) {
    for (const auto& c : canonical_columns()) {
        if (c == name) return true;
    }
    return false;
}

/// Numeric value of `column` in `r`; non-numeric or absent extras read as null.
inline std::optional<double> column_value(const Record& r, std::string_view column) {
    if (column == kDeltaColumn) return r.sync_delta;
    if (column == kChorusColumn) return detail::widen(r.chorus_id);
    if (column == kPositionColumn) return r.backing_track_position;
    if (column == kFlowColumn) return detail::widen(r.flow);
    if (column == kEdaColumn) return detail::widen(r.eda);
    for (std::size_t i = 0; i < kEegChannels.size(); ++i) {
        if (column == eeg_column(i)) return detail::widen(r.eeg[i]);
    }
    if (auto f = detail::parse_skeleton_column(column)) {
        const auto& kp = r.keypoints[f->part];
        return f->axis == 0 ? kp.x : f->axis == 1 ? kp.y : kp.confidence;
    }
    auto it = r.extras.find(std::string(column));
    if (it != r.extras.end() && it->is_number()) {
        return it->get<double>();
    }
    return std::nullopt;
}

/// Whole column of a session. Accepts aliases; throws UnknownColumn when the
/// name is neither canonical nor an extra column of any record.
inline Series column(const Session& s, std::string_view name) {
    const std::string canonical = canonical_column(name);
    if (!is_canonical_column(canonical)) {
        bool found = false;
        for (const auto& r : s.records) {
            if (r.extras.contains(canonical)) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw Error(ErrorKind::UnknownColumn, "unknown column '" + std::string(name) + "'");
        }
    }
    Series out;
    out.reserve(s.records.size());
    for (const auto& r : s.records) {
        out.push_back(column_value(r, canonical));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

inline bool is_valid_chorus_id(int id) { return (id >= 0 && id <= 5) || id == 999; }

inline bool is_performance_chorus(int id) { return id >= 1 && id <= 5; }

inline std::vector<std::string> validate_record(const Record& r) {
    std::vector<std::string> out;
    if (r.chorus_id && !is_valid_chorus_id(*r.chorus_id)) {
        out.emplace_back("chorus_id not in {0..5,999}");
    }
    if (r.eda && *r.eda < 0) {
        out.emplace_back("eda must be >= 0");
    }
    for (std::size_t i = 0; i < r.eeg.size(); ++i) {
        if (r.eeg[i] && *r.eeg[i] < 0) {
            out.push_back("eeg_" + std::string(kEegChannels[i]) + " must be >= 0");
        }
    }
    if (r.flow && *r.flow < 0) {
        out.emplace_back("flow must be >= 0");
    }
    if (!std::isfinite(r.backing_track_position)) {
        out.emplace_back("backing_track_position not finite");
    }
    for (std::size_t p = 0; p < kPartCount; ++p) {
        const auto& kp = r.keypoints[p];
        const std::string part(kBodyParts[p]);
        if (kp.confidence && !(*kp.confidence >= 0.0 && *kp.confidence <= 1.0)) {
            out.push_back(part + ": confidence not in [0,1]");
        }
        if ((kp.x && *kp.x < -1.0) || (kp.y && *kp.y < -1.0)) {
            out.push_back(part + ": coordinate below -1");
        }
        if (kp.x && kp.y && ((*kp.x == -1.0) != (*kp.y == -1.0))) {
            out.push_back(part + ": x/y sentinel mismatch");
        }
    }
    return out;
}

inline std::vector<std::string> validate_session(const Session& s) {
    std::vector<std::string> out;
    if (s.records.empty()) {
        out.emplace_back("records empty");
        return out;
    }
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        if (i > 0 && !(s.records[i].backing_track_position > s.records[i - 1].backing_track_position)) {
            out.push_back("position not strictly increasing at index " + std::to_string(i));
        }
        for (auto& v : validate_record(s.records[i])) {
            out.push_back("record " + std::to_string(i) + ": " + v);
        }
    }
    return out;
}

/// Throws InvariantError on the first BeatGrid invariant that fails.
inline void check_beat_grid(const BeatGrid& g) {
    auto strictly_increasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] > v[i - 1])) return false;
        }
        return true;
    };
    if (!strictly_increasing(g.beat_times)) {
        throw Error(ErrorKind::InvariantError, "beat times not strictly increasing");
    }
    if (!strictly_increasing(g.bar_times)) {
        throw Error(ErrorKind::InvariantError, "bar times not strictly increasing");
    }
    std::size_t beat = 0;
    for (std::size_t b = 0; b < g.bar_times.size(); ++b) {
        const double t = g.bar_times[b];
        while (beat < g.beat_times.size() && g.beat_times[beat] < t) {
            ++beat;
        }
        if (beat == g.beat_times.size() || g.beat_times[beat] != t) {
            throw Error(ErrorKind::InvariantError, "bar time not in beats: " + nlohmann::json(t).dump());
        }
    }
    // 4/4: bars start on every fourth beat counting from the first bar.
    if (!g.bar_times.empty()) {
        std::size_t first = 0;
        while (g.beat_times[first] != g.bar_times.front()) ++first;
        for (std::size_t b = 0; b < g.bar_times.size(); ++b) {
            const std::size_t expected = first + 4 * b;
            if (expected >= g.beat_times.size() || g.beat_times[expected] != g.bar_times[b]) {
                throw Error(ErrorKind::InvariantError,
                            "bar " + std::to_string(b) + " is not on every fourth beat");
            }
        }
    }
    if (g.duration_s < 0.0 || (!g.beat_times.empty() && g.beat_times.back() > g.duration_s)) {
        throw Error(ErrorKind::InvariantError, "beats extend past duration");
    }
}

} // namespace musicking

#endif
