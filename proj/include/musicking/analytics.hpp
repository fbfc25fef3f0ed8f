#ifndef MUSICKING_ANALYTICS_HPP
#define MUSICKING_ANALYTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "numeric.hpp"

namespace musicking::analytics {

// ---------------------------------------------------------------------------
// Descriptive statistics

struct SeriesSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // sample (n - 1); 0 for a single value
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

inline SeriesSummary describe(std::span<const std::optional<double>> values) {
    auto v = present_values(values);
    if (v.empty()) {
        throw Error(ErrorKind::EmptySeries, "describe needs at least one value");
    }
    std::sort(v.begin(), v.end());
    SeriesSummary s;
    s.count = v.size();
    s.mean = numeric::mean(v);
    s.std = numeric::sample_std(v);
    s.min = v.front();
    s.q25 = numeric::quantile_sorted(v, 0.25);
    s.median = numeric::quantile_sorted(v, 0.5);
    s.q75 = numeric::quantile_sorted(v, 0.75);
    s.max = v.back();
    return s;
}

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

/// Equal-width bins over [min, max], last bin closed on the right. A
/// constant series is binned over [v - 0.5, v + 0.5].
inline std::vector<HistogramBin> histogram(std::span<const std::optional<double>> values, std::size_t bins) {
    if (bins < 1) {
        throw Error(ErrorKind::InvalidArgument, "histogram needs at least one bin");
    }
    const auto v = present_values(values);
    if (v.empty()) {
        throw Error(ErrorKind::EmptySeries, "histogram of an empty series");
    }
    auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    double lo = *mn_it;
    double hi = *mx_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo = lo + width * static_cast<double>(b);
        out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double x : v) {
        auto b = static_cast<std::size_t>(std::floor((x - lo) / width));
        b = std::min(b, bins - 1);
        // guard against rounding placing x just outside its bin
        while (b > 0 && x < out[b].lo) --b;
        while (b + 1 < bins && x >= out[b + 1].lo) ++b;
        ++out[b].count;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rolling windows

enum class RollingKind { Mean, Variance };

/// Trailing window stat: out[i] covers values[i-w+1 .. i]; the first w-1
/// outputs are null. Nulls inside a window are skipped.
inline Series rolling_stat(std::span<const std::optional<double>> values, std::size_t window, RollingKind kind) {
    if (window < 1) {
        throw Error(ErrorKind::InvalidArgument, "window must be at least one sample");
    }
    Series out(values.size());
    std::vector<double> buf;
    buf.reserve(window);
    for (std::size_t i = window - 1; i < values.size(); ++i) {
        buf.clear();
        for (std::size_t j = i + 1 - window; j <= i; ++j) {
            if (values[j]) buf.push_back(*values[j]);
        }
        if (kind == RollingKind::Mean) {
            if (!buf.empty()) out[i] = numeric::mean(buf);
        } else if (buf.size() >= 2) {
            out[i] = numeric::sample_variance(buf);
        }
    }
    return out;
}

/// Converts a window length in seconds to samples at `rate_hz`, rounding to
/// nearest (10 s at 7.683 Hz is 77 samples). Never below one.
inline std::size_t window_samples(double seconds, double rate_hz) {
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(seconds * rate_hz)));
}

// ---------------------------------------------------------------------------
// Peaks

struct PeakSet {
    std::vector<std::size_t> indices;
    std::vector<double> prominences;
    std::size_t min_distance_samples = 1;
    double min_prominence = 0.0;
};

namespace detail {

/// Local maxima; a plateau counts once, at its leftmost sample.
inline std::vector<std::size_t> local_maxima(std::span<const double> v) {
    std::vector<std::size_t> out;
    if (v.size() < 3) return out;
    std::size_t i = 1;
    while (i + 1 < v.size()) {
        if (v[i] > v[i - 1]) {
            std::size_t ahead = i + 1;
            while (ahead + 1 < v.size() && v[ahead] == v[i]) ++ahead;
            if (v[ahead] < v[i]) {
                out.push_back(i);
                i = ahead;
                continue;
            }
        }
        ++i;
    }
    return out;
}

/// Topographic prominence: height above the higher of the two lowest points
/// reached before meeting a strictly higher sample (or the edge) on each side.
inline double prominence(std::span<const double> v, std::size_t peak) {
    const double h = v[peak];
    double left_min = h;
    for (std::size_t j = peak; j-- > 0;) {
        if (v[j] > h) break;
        left_min = std::min(left_min, v[j]);
    }
    double right_min = h;
    for (std::size_t j = peak + 1; j < v.size(); ++j) {
        if (v[j] > h) break;
        right_min = std::min(right_min, v[j]);
    }
    return h - std::max(left_min, right_min);
}

} // namespace detail

/// Local maxima, then greedy distance suppression (higher peak wins, the
/// leftmost on ties), then the prominence filter. Suppression runs before the
/// prominence filter so raising min_prominence can only remove peaks.
inline PeakSet detect_peaks(std::span<const double> values, std::size_t min_distance_samples, double min_prominence) {
    if (min_distance_samples < 1 || !(min_prominence >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "min_distance >= 1 and min_prominence >= 0 required");
    }
    PeakSet result;
    result.min_distance_samples = min_distance_samples;
    result.min_prominence = min_prominence;

    auto peaks = detail::local_maxima(values);
    std::vector<std::size_t> order(peaks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[peaks[a]] > values[peaks[b]]; });
    std::vector<bool> keep(peaks.size(), true);
    for (std::size_t o : order) {
        if (!keep[o]) continue;
        for (std::size_t j = o; j-- > 0 && peaks[o] - peaks[j] < min_distance_samples;) keep[j] = false;
        for (std::size_t j = o + 1; j < peaks.size() && peaks[j] - peaks[o] < min_distance_samples; ++j) {
            keep[j] = false;
        }
    }
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (!keep[i]) continue;
        const double prom = detail::prominence(values, peaks[i]);
        if (prom >= min_prominence) {
            result.indices.push_back(peaks[i]);
            result.prominences.push_back(prom);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Correlation

enum class CorrelationMethod { Pearson, Spearman };

inline std::optional<CorrelationMethod> parse_correlation_method(std::string_view name) {
    if (name == "pearson") return CorrelationMethod::Pearson;
    if (name == "spearman") return CorrelationMethod::Spearman;
    return std::nullopt;
}

/// Average ranks (1-based); ties share the mean of their positions.
inline std::vector<double> midranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

inline double pearson_complete(std::span<const double> x, std::span<const double> y) {
    const double mx = numeric::mean(x);
    const double my = numeric::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorKind::DegenerateSeries, "zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace detail

/// Correlation over pairwise-complete entries.
inline double correlate(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y,
                        CorrelationMethod method = CorrelationMethod::Pearson) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch, "series lengths differ");
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            xs.push_back(*x[i]);
            ys.push_back(*y[i]);
        }
    }
    if (xs.size() < 3) {
        throw Error(ErrorKind::TooFewPairs, "correlation needs at least 3 complete pairs");
    }
    if (method == CorrelationMethod::Spearman) {
        return detail::pearson_complete(midranks(xs), midranks(ys));
    }
    return detail::pearson_complete(xs, ys);
}

struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<double>>> values;
};

using NamedSeries = std::pair<std::string, Series>;

/// Symmetric matrix with unit diagonal; pairs that cannot be correlated are null.
inline CorrelationMatrix correlation_matrix(std::span<const NamedSeries> columns,
                                            CorrelationMethod method = CorrelationMethod::Pearson) {
    if (columns.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "correlation matrix needs at least 2 columns");
    }
    const std::size_t n = columns.size();
    CorrelationMatrix m;
    m.values.assign(n, std::vector<std::optional<double>>(n));
    for (std::size_t i = 0; i < n; ++i) {
        m.names.push_back(columns[i].first);
        m.values[i][i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            try {
                const double r = correlate(columns[i].second, columns[j].second, method);
                m.values[i][j] = r;
                m.values[j][i] = r;
            } catch (const Error&) {
                // left null
            }
        }
    }
    return m;
}

struct WindowCorrelation {
    std::size_t start = 0;
    std::optional<double> r;
};

inline std::vector<WindowCorrelation> windowed_correlation(std::span<const std::optional<double>> x,
                                                           std::span<const std::optional<double>> y,
                                                           std::size_t window, std::size_t step = 1,
                                                           CorrelationMethod method = CorrelationMethod::Pearson) {
    if (window < 3 || step < 1) {
        throw Error(ErrorKind::InvalidArgument, "window >= 3 and step >= 1 required");
    }
    if (x.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch, "series lengths differ");
    }
    std::vector<WindowCorrelation> out;
    for (std::size_t i = 0; i + window <= x.size(); i += step) {
        WindowCorrelation w{i, std::nullopt};
        try {
            w.r = correlate(x.subspan(i, window), y.subspan(i, window), method);
        } catch (const Error&) {
        }
        out.push_back(w);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Skeleton activity

struct Trajectory {
    Series mean_x;
    Series mean_y;
};

/// Per record, mean x and y over `parts`, skipping sentinel (-1) or null keypoints.
inline Trajectory mean_trajectory(const Session& s, std::span<const std::string> parts) {
    if (parts.empty()) {
        throw Error(ErrorKind::InvalidArgument, "no parts given");
    }
    std::vector<std::size_t> idx;
    for (const auto& p : parts) {
        auto i = part_index(p);
        if (!i) throw Error(ErrorKind::UnknownPart, "unknown body part '" + p + "'");
        idx.push_back(*i);
    }
    Trajectory t;
    t.mean_x.reserve(s.records.size());
    t.mean_y.reserve(s.records.size());
    for (const auto& r : s.records) {
        double sx = 0.0, sy = 0.0;
        std::size_t n = 0;
        for (std::size_t i : idx) {
            const auto& kp = r.keypoints[i];
            if (!kp.x || !kp.y || kp.is_sentinel()) continue;
            sx += *kp.x;
            sy += *kp.y;
            ++n;
        }
        t.mean_x.push_back(n ? std::optional<double>(sx / static_cast<double>(n)) : std::nullopt);
        t.mean_y.push_back(n ? std::optional<double>(sy / static_cast<double>(n)) : std::nullopt);
    }
    return t;
}

struct OccupancyGrid {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    std::size_t width = 0, height = 0;
    std::vector<std::vector<std::size_t>> counts;  // [row (y)][col (x)]
    std::size_t total = 0;
};

/// Counts of valid (x, y) samples per cell over their bounding box.
inline OccupancyGrid occupancy_grid(std::span<const std::optional<double>> xs,
                                    std::span<const std::optional<double>> ys, std::size_t grid_w,
                                    std::size_t grid_h) {
    if (grid_w < 1 || grid_h < 1) {
        throw Error(ErrorKind::InvalidArgument, "grid dimensions must be >= 1");
    }
    if (xs.size() != ys.size()) {
        throw Error(ErrorKind::LengthMismatch, "coordinate series lengths differ");
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] && ys[i] && *xs[i] != -1.0 && *ys[i] != -1.0) pts.emplace_back(*xs[i], *ys[i]);
    }
    if (pts.empty()) {
        throw Error(ErrorKind::NoValidPoints, "no valid points");
    }
    OccupancyGrid g;
    g.width = grid_w;
    g.height = grid_h;
    g.x_min = g.x_max = pts.front().first;
    g.y_min = g.y_max = pts.front().second;
    for (auto [x, y] : pts) {
        g.x_min = std::min(g.x_min, x);
        g.x_max = std::max(g.x_max, x);
        g.y_min = std::min(g.y_min, y);
        g.y_max = std::max(g.y_max, y);
    }
    auto cell = [](double v, double lo, double hi, std::size_t n) -> std::size_t {
        if (hi == lo) return 0;
        const auto c = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(n)));
        return std::min(c, n - 1);
    };
    g.counts.assign(grid_h, std::vector<std::size_t>(grid_w, 0));
    for (auto [x, y] : pts) {
        ++g.counts[cell(y, g.y_min, g.y_max, grid_h)][cell(x, g.x_min, g.x_max, grid_w)];
    }
    g.total = pts.size();
    return g;
}

} // namespace musicking::analytics

#endif
