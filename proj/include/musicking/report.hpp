#ifndef MUSICKING_REPORT_HPP
#define MUSICKING_REPORT_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analytics.hpp"
#include "cluster.hpp"
#include "core.hpp"
#include "error.hpp"
#include "quality.hpp"
#include "stats.hpp"
#include "timing.hpp"

namespace musicking::report {

using Json = nlohmann::ordered_json;

inline Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json series_json(std::span<const std::optional<double>> s) {
    Json a = Json::array();
    for (const auto& v : s) a.push_back(nullable(v));
    return a;
}

inline Json to_json(const QualityReport& q) {
    Json j;
    j["session_id"] = q.session_id;
    j["record_count"] = q.record_count;
    j["confidence_threshold"] = q.confidence_threshold;
    j["iqr_k"] = q.iqr_k;
    Json cols = Json::array();
    for (const auto& c : q.columns) {
        Json o;
        o["column"] = c.column;
        o["missing_count"] = c.missing_count;
        o["missing_pct"] = c.missing_pct;
        o["outlier_count"] = c.outlier_count;
        if (c.skeleton) {
            o["minus_one_count"] = c.minus_one_count;
            o["zero_count"] = c.zero_count;
            o["low_confidence_count"] = c.low_confidence_count;
        }
        cols.push_back(std::move(o));
    }
    j["columns"] = std::move(cols);
    return j;
}

inline Json to_json(const quality::OutlierEntry& e) {
    return Json{{"q1", e.q1}, {"q3", e.q3}, {"lower_fence", e.lower}, {"upper_fence", e.upper},
                {"count", e.indices.size()}, {"indices", e.indices}};
}

inline Json to_json(std::span<const quality::SentinelCounts> scan) {
    Json a = Json::array();
    for (const auto& c : scan) {
        a.push_back({{"column", c.column},
                     {"minus_one_count", c.minus_one_count},
                     {"zero_count", c.zero_count},
                     {"low_confidence_count", c.low_confidence_count}});
    }
    return a;
}

inline Json histogram_map_json(const std::map<double, std::size_t>& h, double width) {
    Json a = Json::array();
    for (const auto& [start, count] : h) {
        a.push_back({{"bin_start", start}, {"bin_end", start + width}, {"count", count}});
    }
    return a;
}

inline Json to_json(const timing::SamplingProfile& p) {
    return Json{{"mean_interval_ms", p.mean_interval_ms},
                {"median_interval_ms", p.median_interval_ms},
                {"rate_hz", p.rate_hz},
                {"nyquist_hz", p.nyquist_hz},
                {"interval_histogram", histogram_map_json(p.interval_histogram, p.bin_width_ms)}};
}

inline Json to_json(const timing::DeltaProfile& d) {
    Json j;
    j["histogram"] = histogram_map_json(d.histogram, d.bin_width_ms);
    j["outliers"] = d.outliers ? to_json(*d.outliers) : Json(nullptr);
    return j;
}

inline Json to_json(std::span<const timing::ChorusSegment> segs) {
    Json a = Json::array();
    for (const auto& s : segs) {
        a.push_back({{"chorus_id", s.chorus_id},
                     {"start_index", s.start_index},
                     {"end_index", s.end_index},
                     {"start_ms", s.start_ms},
                     {"end_ms", s.end_ms},
                     {"records", s.length()},
                     {"performance", s.performance}});
    }
    return a;
}

inline Json to_json(const analytics::SeriesSummary& s) {
    return Json{{"count", s.count}, {"mean", s.mean}, {"std", s.std},       {"min", s.min},
                {"q25", s.q25},     {"median", s.median}, {"q75", s.q75}, {"max", s.max}};
}

inline Json to_json(std::span<const analytics::HistogramBin> bins) {
    Json a = Json::array();
    for (const auto& b : bins) a.push_back({{"bin_start", b.lo}, {"bin_end", b.hi}, {"count", b.count}});
    return a;
}

inline Json to_json(const analytics::PeakSet& p) {
    return Json{{"min_distance_samples", p.min_distance_samples},
                {"min_prominence", p.min_prominence},
                {"indices", p.indices},
                {"prominences", p.prominences}};
}

inline Json to_json(const analytics::CorrelationMatrix& m) {
    Json rows = Json::array();
    for (const auto& r : m.values) rows.push_back(series_json(r));
    return Json{{"columns", m.names}, {"matrix", std::move(rows)}};
}

inline Json to_json(const analytics::OccupancyGrid& g) {
    return Json{{"x_min", g.x_min}, {"x_max", g.x_max}, {"y_min", g.y_min}, {"y_max", g.y_max},
                {"width", g.width},  {"height", g.height}, {"total", g.total}, {"counts", g.counts}};
}

inline Json to_json(const stats::AnovaResult& r) {
    return Json{{"f_statistic", r.f_statistic}, {"p_value", r.p_value},     {"df_between", r.df_between},
                {"df_within", r.df_within},     {"ss_between", r.ss_between}, {"ss_within", r.ss_within},
                {"grand_mean", r.grand_mean},   {"group_means", r.group_means}, {"group_sizes", r.group_sizes}};
}

inline Json to_json(const BarFeatureMatrix& m) {
    return Json{{"feature_names", m.feature_names}, {"bar_index", m.bar_index}, {"rows", m.rows},
                {"dropped_bars", m.dropped}};
}

/// Assignments are keyed by bar index so they join with chorus segments.
inline Json to_json(const cluster::ClusterResult& r, std::span<const std::size_t> bar_index) {
    Json assignments = Json::array();
    for (std::size_t i = 0; i < r.assignments.size(); ++i) {
        assignments.push_back({{"bar_index", i < bar_index.size() ? bar_index[i] : i}, {"cluster", r.assignments[i]}});
    }
    return Json{{"k", r.k},
                {"seed", r.seed},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"inertia", r.inertia},
                {"sizes", r.sizes},
                {"centroids", r.centroids},
                {"assignments", std::move(assignments)}};
}

inline Json to_json(std::span<const cluster::KDiagnostic> diags) {
    Json a = Json::array();
    for (const auto& d : diags) a.push_back({{"k", d.k}, {"inertia", d.inertia}, {"silhouette", d.silhouette}});
    return a;
}

// ---------------------------------------------------------------------------
// Files

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
    }
}

inline void write_json(const std::filesystem::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

/// Delimiter-separated table; cells are JSON-formatted numbers or raw strings.
class Table {
public:
    explicit Table(std::vector<std::string> header, char delimiter = ',')
        : header_(std::move(header)), delimiter_(delimiter) {}

    void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

    static std::string cell(double v) { return Json(v).dump(); }
    static std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string(); }
    static std::string cell(std::size_t v) { return std::to_string(v); }

    std::string str() const {
        std::ostringstream out;
        write_row(out, header_);
        for (const auto& r : rows_) write_row(out, r);
        return out.str();
    }

private:
    void write_row(std::ostream& out, const std::vector<std::string>& cells) const {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << delimiter_;
            const bool quote = cells[i].find_first_of(std::string{delimiter_, '"', '\n'}) != std::string::npos;
            if (quote) {
                out << '"';
                for (char c : cells[i]) {
                    if (c == '"') out << '"';
                    out << c;
                }
                out << '"';
            } else {
                out << cells[i];
            }
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    char delimiter_;
};

/// record_index, t_ms, chorus_id, bar_index, beat_in_bar
inline Table alignment_table(std::span<const timing::AlignedRecord> aligned) {
    Table t({"record_index", "t_ms", "chorus_id", "bar_index", "beat_in_bar"});
    for (const auto& a : aligned) {
        t.add_row({Table::cell(a.record_index), Table::cell(a.t_ms),
                   a.chorus_id ? std::to_string(*a.chorus_id) : std::string(), Table::cell(a.position.bar_index),
                   Table::cell(a.position.beat_in_bar)});
    }
    return t;
}

} // namespace musicking::report

#endif
