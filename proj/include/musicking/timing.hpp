#ifndef MUSICKING_TIMING_HPP
#define MUSICKING_TIMING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "numeric.hpp"
#include "quality.hpp"

namespace musicking::timing {

// ---------------------------------------------------------------------------
// Sampling

struct SamplingProfile {
    double mean_interval_ms = 0.0;
    double median_interval_ms = 0.0;
    double rate_hz = 0.0;
    double nyquist_hz = 0.0;
    double bin_width_ms = 0.0;
    std::map<double, std::size_t> interval_histogram;  // bin start (ms) -> count
};

namespace detail {

inline std::map<double, std::size_t> fixed_width_histogram(std::span<const double> values, double width) {
    std::map<double, std::size_t> h;
    for (double v : values) {
        ++h[std::floor(v / width) * width];
    }
    return h;
}

inline std::vector<double> position_intervals(const Session& s) {
    std::vector<double> out;
    out.reserve(s.records.size());
    for (std::size_t i = 1; i < s.records.size(); ++i) {
        out.push_back(s.records[i].backing_track_position - s.records[i - 1].backing_track_position);
    }
    return out;
}

} // namespace detail

/// Rate from the mean successive difference of backing_track_position:
/// rate = 1 / mean interval (s), Nyquist = rate / 2.
inline SamplingProfile infer_sampling_rate(const Session& s, double bin_width_ms = 5.0) {
    if (s.records.size() < 2) {
        throw Error(ErrorKind::TooFewRecords, "sampling rate needs at least 2 records");
    }
    const auto intervals = detail::position_intervals(s);
    SamplingProfile p;
    p.mean_interval_ms = numeric::mean(intervals);
    p.median_interval_ms = numeric::median(intervals);
    p.rate_hz = 1000.0 / p.mean_interval_ms;
    p.nyquist_hz = p.rate_hz / 2.0;
    p.bin_width_ms = bin_width_ms;
    p.interval_histogram = detail::fixed_width_histogram(intervals, bin_width_ms);
    return p;
}

struct DeltaProfile {
    double bin_width_ms = 0.0;
    std::map<double, std::size_t> histogram;
    std::optional<quality::OutlierEntry> outliers;  // absent with fewer than 4 deltas
};

/// Distribution of sync_delta with IQR-flagged record indices.
inline DeltaProfile delta_profile(const Session& s, double bin_width_ms = 25.0, double iqr_k = quality::kDefaultIqrK) {
    if (s.records.size() < 2) {
        throw Error(ErrorKind::TooFewRecords, "delta profile needs at least 2 records");
    }
    const Series deltas = column(s, kDeltaColumn);
    const auto present = present_values(deltas);
    DeltaProfile d;
    d.bin_width_ms = bin_width_ms;
    d.histogram = detail::fixed_width_histogram(present, bin_width_ms);
    if (present.size() >= 4) {
        d.outliers = quality::iqr_outliers(deltas, iqr_k);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Chorus segmentation

struct ChorusSegment {
    int chorus_id = 0;
    std::size_t start_index = 0;
    std::size_t end_index = 0;  // inclusive
    double start_ms = 0.0;
    double end_ms = 0.0;
    bool performance = false;

    std::size_t length() const { return end_index - start_index + 1; }
};

/// One segment per maximal run of constant chorus_id.
inline std::vector<ChorusSegment> segment_choruses(const Session& s) {
    std::vector<ChorusSegment> out;
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        if (!r.chorus_id) {
            throw Error(ErrorKind::MissingChorusIds, "record " + std::to_string(i) + " has no chorus_id");
        }
        if (out.empty() || out.back().chorus_id != *r.chorus_id) {
            out.push_back({*r.chorus_id, i, i, r.backing_track_position, r.backing_track_position,
                           is_performance_chorus(*r.chorus_id)});
        } else {
            out.back().end_index = i;
            out.back().end_ms = r.backing_track_position;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Beat grid

inline double estimate_tempo(std::span<const double> beat_times) {
    if (beat_times.size() < 2) {
        throw Error(ErrorKind::TooFewBeats, "tempo needs at least 2 beats");
    }
    std::vector<double> ibi;
    ibi.reserve(beat_times.size() - 1);
    for (std::size_t i = 1; i < beat_times.size(); ++i) {
        ibi.push_back(beat_times[i] - beat_times[i - 1]);
    }
    return 60.0 / numeric::median(std::move(ibi));
}

/// 60 / median inter-beat interval.
inline double estimate_tempo(const BeatGrid& grid) { return estimate_tempo(grid.beat_times); }

struct MusicalPosition {
    std::size_t bar_index = 0;
    std::size_t beat_index_global = 0;
    std::size_t beat_in_bar = 0;
    double offset_s = 0.0;

    auto operator<=>(const MusicalPosition&) const = default;
};

/// Position of track time `t_s` (seconds). Bars are half-open
/// [bar_start, next_bar_start); the last bar runs to duration_s. Times before
/// the first beat map to beat 0 with a negative offset.
inline MusicalPosition position_at_seconds(double t_s, const BeatGrid& grid) {
    if (!(t_s >= 0.0) || t_s > grid.duration_s) {
        throw Error(ErrorKind::OutOfTrack, "time " + std::to_string(t_s) + " s outside track");
    }
    if (grid.beat_times.empty()) {
        throw Error(ErrorKind::TooFewBeats, "grid has no beats");
    }
    MusicalPosition p;
    const auto& beats = grid.beat_times;
    auto it = std::upper_bound(beats.begin(), beats.end(), t_s);
    p.beat_index_global = it == beats.begin() ? 0 : static_cast<std::size_t>(it - beats.begin()) - 1;
    const double beat_t = beats[p.beat_index_global];
    p.offset_s = t_s - beat_t;

    const auto& bars = grid.bar_times;
    if (!bars.empty()) {
        auto bit = std::upper_bound(bars.begin(), bars.end(), beat_t);
        p.bar_index = bit == bars.begin() ? 0 : static_cast<std::size_t>(bit - bars.begin()) - 1;
        const auto bar_beat = std::lower_bound(beats.begin(), beats.end(), bars[p.bar_index]) - beats.begin();
        p.beat_in_bar = p.beat_index_global >= static_cast<std::size_t>(bar_beat)
                            ? p.beat_index_global - static_cast<std::size_t>(bar_beat)
                            : 0;
    }
    return p;
}

inline MusicalPosition assign_musical_position(double t_ms, const BeatGrid& grid) {
    return position_at_seconds(t_ms / 1000.0, grid);
}

struct AlignmentOptions {
    double offset_ms = 0.0;              // added to backing_track_position
    bool include_nonperformance = false; // keep chorus 0 / 999 records
};

struct AlignedRecord {
    std::size_t record_index = 0;
    double t_ms = 0.0;
    std::optional<int> chorus_id;
    MusicalPosition position;
};

/// Records that fall inside the track, with their musical positions.
/// Records before 0 or past duration_s are left out, as are chorus 0/999
/// records unless `include_nonperformance` is set.
inline std::vector<AlignedRecord> align_session(const Session& s, const BeatGrid& grid,
                                                const AlignmentOptions& opt = {}) {
    std::vector<AlignedRecord> out;
    out.reserve(s.records.size());
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        if (!opt.include_nonperformance && r.chorus_id && !is_performance_chorus(*r.chorus_id)) {
            continue;
        }
        const double t_ms = r.backing_track_position + opt.offset_ms;
        const double t_s = t_ms / 1000.0;
        if (!(t_s >= 0.0) || t_s > grid.duration_s) {
            continue;
        }
        out.push_back({i, t_ms, r.chorus_id, position_at_seconds(t_s, grid)});
    }
    return out;
}

enum class BarStat { Mean, Sum, Std, Min, Max };

inline std::optional<BarStat> parse_bar_stat(std::string_view name) {
    if (name == "mean") return BarStat::Mean;
    if (name == "sum") return BarStat::Sum;
    if (name == "std") return BarStat::Std;
    if (name == "min") return BarStat::Min;
    if (name == "max") return BarStat::Max;
    return std::nullopt;
}

/// Non-null values of `column_name` grouped by bar (one vector per bar).
inline std::vector<std::vector<double>> values_per_bar(const Session& s, const BeatGrid& grid,
                                                       std::string_view column_name,
                                                       const AlignmentOptions& opt = {}) {
    const Series col = column(s, column_name);
    std::vector<std::vector<double>> bars(grid.bar_times.size());
    for (const auto& a : align_session(s, grid, opt)) {
        if (col[a.record_index] && a.position.bar_index < bars.size()) {
            bars[a.position.bar_index].push_back(*col[a.record_index]);
        }
    }
    return bars;
}

inline double reduce(std::span<const double> v, BarStat stat) {
    switch (stat) {
    case BarStat::Mean: return numeric::mean(v);
    case BarStat::Sum: {
        double sum = 0.0;
        for (double x : v) sum += x;
        return sum;
    }
    case BarStat::Std: return numeric::sample_std(v);
    case BarStat::Min: return *std::min_element(v.begin(), v.end());
    case BarStat::Max: return *std::max_element(v.begin(), v.end());
    }
    return 0.0;
}

/// One slot per bar of the grid; bars without records are null.
inline Series aggregate_per_bar(const Session& s, const BeatGrid& grid, std::string_view column_name,
                                BarStat stat, const AlignmentOptions& opt = {}) {
    const auto bars = values_per_bar(s, grid, column_name, opt);
    Series out(bars.size());
    for (std::size_t b = 0; b < bars.size(); ++b) {
        if (!bars[b].empty()) {
            out[b] = reduce(bars[b], stat);
        }
    }
    return out;
}

struct ChorusBarRange {
    int chorus_id = 0;
    std::size_t first_bar = 0;
    std::size_t last_bar = 0;
};

/// Bars spanned by each chorus segment (segments lying outside the track are omitted).
inline std::vector<ChorusBarRange> chorus_bar_ranges(const Session& s, const BeatGrid& grid, double offset_ms = 0.0) {
    std::vector<ChorusBarRange> out;
    for (const auto& seg : segment_choruses(s)) {
        std::optional<ChorusBarRange> range;
        for (std::size_t i = seg.start_index; i <= seg.end_index; ++i) {
            const double t_s = (s.records[i].backing_track_position + offset_ms) / 1000.0;
            if (!(t_s >= 0.0) || t_s > grid.duration_s) continue;
            const auto bar = position_at_seconds(t_s, grid).bar_index;
            if (!range) {
                range = ChorusBarRange{seg.chorus_id, bar, bar};
            } else {
                range->last_bar = bar;
            }
        }
        if (range) out.push_back(*range);
    }
    return out;
}

} // namespace musicking::timing

#endif
