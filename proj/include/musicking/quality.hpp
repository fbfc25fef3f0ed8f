#ifndef MUSICKING_QUALITY_HPP
#define MUSICKING_QUALITY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "numeric.hpp"

namespace musicking::quality {

inline constexpr double kDefaultIqrK = 1.5;
inline constexpr double kDefaultConfidenceThreshold = 0.5;
inline constexpr std::size_t kDefaultMaxBad = 400;

struct OutlierEntry {
    double q1 = 0.0;
    double q3 = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::size_t> indices;  // positions in the input series
};

/// Tukey fences at Q1 - k*IQR and Q3 + k*IQR. Nulls are skipped and never flagged.
inline OutlierEntry iqr_outliers(std::span<const std::optional<double>> values, double k = kDefaultIqrK) {
    auto present = present_values(values);
    if (present.size() < 4) {
        throw Error(ErrorKind::TooFewValues, "IQR needs at least 4 non-null values");
    }
    std::sort(present.begin(), present.end());
    OutlierEntry e;
    e.q1 = numeric::quantile_sorted(present, 0.25);
    e.q3 = numeric::quantile_sorted(present, 0.75);
    const double iqr = e.q3 - e.q1;
    e.lower = e.q1 - k * iqr;
    e.upper = e.q3 + k * iqr;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] && (*values[i] < e.lower || *values[i] > e.upper)) {
            e.indices.push_back(i);
        }
    }
    return e;
}

inline Series impute_median(std::span<const std::optional<double>> values) {
    auto present = present_values(values);
    if (present.empty()) {
        throw Error(ErrorKind::AllMissing, "cannot impute an all-null series");
    }
    const double med = numeric::median(std::move(present));
    Series out(values.begin(), values.end());
    for (auto& v : out) {
        if (!v) v = med;
    }
    return out;
}

/// Fills interior null runs of length <= max_gap linearly. Edge runs stay null.
inline Series interpolate_gaps(std::span<const std::optional<double>> values, std::size_t max_gap) {
    Series out(values.begin(), values.end());
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i]) continue;
        if (last && i - *last > 1) {
            const std::size_t gap = i - *last - 1;
            if (gap <= max_gap) {
                const double a = *out[*last];
                const double b = *out[i];
                for (std::size_t j = *last + 1; j < i; ++j) {
                    const double t = static_cast<double>(j - *last) / static_cast<double>(i - *last);
                    out[j] = a + (b - a) * t;
                }
            }
        }
        last = i;
    }
    return out;
}

struct SentinelCounts {
    std::string column;
    std::size_t minus_one_count = 0;
    std::size_t zero_count = 0;
    std::size_t low_confidence_count = 0;  // always 0 for confidence columns
};

/// Per skeleton column (x, y, confidence for every part): rows holding -1,
/// rows holding 0, and rows whose keypoint confidence is below `threshold`.
inline std::vector<SentinelCounts> sentinel_scan(const Session& s, double threshold = kDefaultConfidenceThreshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "confidence threshold must lie in [0,1]");
    }
    std::vector<SentinelCounts> out;
    for (std::size_t p = 0; p < kPartCount; ++p) {
        for (int axis = 0; axis < 3; ++axis) {
            SentinelCounts c;
            c.column = skeleton_column(kBodyParts[p], axis == 0 ? "x" : axis == 1 ? "y" : "confidence");
            for (const auto& r : s.records) {
                const auto& kp = r.keypoints[p];
                const auto& v = axis == 0 ? kp.x : axis == 1 ? kp.y : kp.confidence;
                if (v && *v == -1.0) ++c.minus_one_count;
                if (v && *v == 0.0) ++c.zero_count;
                if (axis != 2 && kp.confidence && *kp.confidence < threshold) ++c.low_confidence_count;
            }
            out.push_back(std::move(c));
        }
    }
    return out;
}

inline std::vector<std::string> reliable_columns(std::span<const SentinelCounts> scan,
                                                 std::size_t max_bad = kDefaultMaxBad) {
    std::vector<std::string> out;
    for (const auto& c : scan) {
        if (c.minus_one_count < max_bad && c.zero_count < max_bad && c.low_confidence_count < max_bad) {
            out.push_back(c.column);
        }
    }
    return out;
}

struct IntegrityOptions {
    double confidence_threshold = kDefaultConfidenceThreshold;
    double iqr_k = kDefaultIqrK;
};

/// Missing/outlier audit over every canonical column plus numeric extras.
/// Skeleton columns additionally carry the sentinel counts.
inline QualityReport integrity_report(const Session& s, const IntegrityOptions& opt = {}) {
    QualityReport report;
    report.session_id = s.session_id;
    report.record_count = s.records.size();
    report.confidence_threshold = opt.confidence_threshold;
    report.iqr_k = opt.iqr_k;

    std::vector<std::string> names = canonical_columns();
    std::vector<std::string> extra_names;
    for (const auto& r : s.records) {
        for (const auto& [key, value] : r.extras.items()) {
            if (value.is_number() &&
                std::find(extra_names.begin(), extra_names.end(), key) == extra_names.end()) {
                extra_names.push_back(key);
            }
        }
    }
    std::sort(extra_names.begin(), extra_names.end());
    names.insert(names.end(), extra_names.begin(), extra_names.end());

    const auto scan = sentinel_scan(s, opt.confidence_threshold);
    for (const auto& name : names) {
        const Series col = column(s, name);
        ColumnQuality q;
        q.column = name;
        for (const auto& v : col) {
            if (!v) ++q.missing_count;
        }
        q.missing_pct = col.empty() ? 0.0 : 100.0 * static_cast<double>(q.missing_count) /
                                                 static_cast<double>(col.size());
        if (col.size() - q.missing_count >= 4) {
            q.outlier_count = iqr_outliers(col, opt.iqr_k).indices.size();
        }
        for (const auto& c : scan) {
            if (c.column == name) {
                q.skeleton = true;
                q.minus_one_count = c.minus_one_count;
                q.zero_count = c.zero_count;
                q.low_confidence_count = c.low_confidence_count;
            }
        }
        report.columns.push_back(std::move(q));
    }
    return report;
}

/// Median-imputes flow and sync_delta. Flow stays integral (median rounded
/// half away from zero). Skeleton sentinels are never imputed.
inline Session apply_default_imputation(const Session& s) {
    Session out = s;
    const Series flow = column(s, kFlowColumn);
    if (!present_values(flow).empty()) {
        const auto filled = impute_median(flow);
        for (std::size_t i = 0; i < out.records.size(); ++i) {
            if (!out.records[i].flow) out.records[i].flow = std::llround(*filled[i]);
        }
    }
    const Series delta = column(s, kDeltaColumn);
    if (!present_values(delta).empty()) {
        const auto filled = impute_median(delta);
        for (std::size_t i = 0; i < out.records.size(); ++i) {
            out.records[i].sync_delta = filled[i];
        }
    }
    return out;
}

} // namespace musicking::quality

#endif
