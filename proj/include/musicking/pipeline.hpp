#ifndef MUSICKING_PIPELINE_HPP
#define MUSICKING_PIPELINE_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "analytics.hpp"
#include "cluster.hpp"
#include "core.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "quality.hpp"
#include "report.hpp"
#include "stats.hpp"
#include "svg.hpp"
#include "timing.hpp"

namespace musicking::pipeline {

namespace fs = std::filesystem;
using report::Json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;

inline constexpr const char* kDatasetEnvVar = "MUSICKING_DATASET";

struct RunConfig {
    fs::path dataset_dir;
    fs::path beat_grid_path;
    fs::path output_dir = "out";
    double confidence_threshold = quality::kDefaultConfidenceThreshold;
    double iqr_k = quality::kDefaultIqrK;
    double window_seconds = 10.0;
    bool exclude_nonperformance = true;
    std::uint64_t seed = 0;
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    double offset_ms = 0.0;
    std::optional<int> chorus;  // per-chorus clustering
    std::size_t top_n = 5;
    std::size_t jobs = 0;  // 0: hardware concurrency
    bool svg = false;

    void validate() const {
        if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "confidence threshold must lie in [0,1]");
        }
        if (!(iqr_k >= 0.0)) throw Error(ErrorKind::InvalidArgument, "iqr k must be >= 0");
        if (!(window_seconds > 0.0)) throw Error(ErrorKind::InvalidArgument, "window seconds must be > 0");
        if (k_min < 2 || k_min > k_max) throw Error(ErrorKind::InvalidRange, "k range must satisfy 2 <= min <= max");
    }
};

/// Parses "2..8" or "2-8" or a single "3".
inline std::pair<std::size_t, std::size_t> parse_k_range(const std::string& text) {
    auto to_size = [&](const std::string& s) -> std::size_t {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size() || v < 0) throw std::invalid_argument(s);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidRange, "bad k range '" + text + "'");
        }
    };
    for (const std::string sep : {"..", "-", ":"}) {
        auto pos = text.find(sep);
        if (pos != std::string::npos) {
            return {to_size(text.substr(0, pos)), to_size(text.substr(pos + sep.size()))};
        }
    }
    const auto k = to_size(text);
    return {k, k};
}

/// Flat key=value document; '#' starts a comment line.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::MalformedDocument, "config line " + std::to_string(lineno) + " has no '='");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& values) {
    auto as_double = [](const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' expects a number");
        }
    };
    auto as_bool = [](const std::string& key, const std::string& v) {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' expects true/false");
    };
    for (const auto& [key, v] : values) {
        if (key == "dataset") cfg.dataset_dir = v;
        else if (key == "grid") cfg.beat_grid_path = v;
        else if (key == "out") cfg.output_dir = v;
        else if (key == "confidence_threshold") cfg.confidence_threshold = as_double(key, v);
        else if (key == "iqr_k") cfg.iqr_k = as_double(key, v);
        else if (key == "window_seconds") cfg.window_seconds = as_double(key, v);
        else if (key == "include_nonperformance") cfg.exclude_nonperformance = !as_bool(key, v);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_double(key, v));
        else if (key == "k_range") std::tie(cfg.k_min, cfg.k_max) = parse_k_range(v);
        else if (key == "offset_ms") cfg.offset_ms = as_double(key, v);
        else if (key == "top_n") cfg.top_n = static_cast<std::size_t>(as_double(key, v));
        else if (key == "jobs") cfg.jobs = static_cast<std::size_t>(as_double(key, v));
        else if (key == "svg") cfg.svg = as_bool(key, v);
        else throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
    }
}

/// Runs fn(i) for i in [0, n) on at most `jobs` threads. The first exception
/// thrown by any item is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

inline void ensure_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorKind::IoError, "output directory not writable: " + dir.string());
    }
    const auto probe = dir / ".write_probe";
    report::write_text(probe, "");
    fs::remove(probe, ec);
}

inline Session performance_only(const Session& s) {
    Session out;
    out.session_id = s.session_id;
    for (const auto& r : s.records) {
        if (!r.chorus_id || is_performance_chorus(*r.chorus_id)) out.records.push_back(r);
    }
    return out;
}

inline Json insufficient(const std::string& why) {
    return Json{{"status", "insufficient data"}, {"reason", why}};
}

// ---------------------------------------------------------------------------
// validate

inline int cmd_validate(const RunConfig& cfg, std::ostream& log) {
    try {
        cfg.validate();
        const auto manifest = discover_dataset(cfg.dataset_dir);
        ensure_output_dir(cfg.output_dir);

        std::vector<Json> reports(manifest.entries.size());
        parallel_for(manifest.entries.size(), cfg.jobs, [&](std::size_t i) {
            const auto s = load_session(manifest.entries[i].path);
            auto doc = report::to_json(quality::integrity_report(s, {cfg.confidence_threshold, cfg.iqr_k}));
            doc["violations"] = validate_session(s);
            reports[i] = std::move(doc);
        });

        Json sessions = Json::array();
        report::Table table({"session_id", "records", "violations", "missing_values"});
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& id = manifest.entries[i].session_id;
            report::write_json(cfg.output_dir / "quality" / (id + ".json"), reports[i]);
            std::size_t missing = 0;
            for (const auto& c : reports[i]["columns"]) missing += c["missing_count"].get<std::size_t>();
            const auto violations = reports[i]["violations"].size();
            sessions.push_back({{"session_id", id},
                                {"records", manifest.entries[i].record_count},
                                {"violations", violations},
                                {"missing_values", missing}});
            table.add_row({id, report::Table::cell(manifest.entries[i].record_count),
                           report::Table::cell(violations), report::Table::cell(missing)});
        }
        Json skipped = Json::array();
        for (const auto& s : manifest.skipped) {
            skipped.push_back({{"file", s.path.filename().string()}, {"reason", s.reason}});
            log << "warning: skipped " << s.path.filename().string() << ": " << s.reason << "\n";
        }
        Json summary;
        summary["session_count"] = manifest.entries.size();
        summary["sessions"] = std::move(sessions);
        summary["skipped"] = std::move(skipped);
        report::write_json(cfg.output_dir / "dataset_summary.json", summary);
        report::write_text(cfg.output_dir / "dataset_summary.csv", table.str());
        log << "validated " << manifest.entries.size() << " session(s), skipped " << manifest.skipped.size() << "\n";
        return manifest.skipped.empty() ? kExitOk : kExitPartial;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// ---------------------------------------------------------------------------
// analyze

inline Session load_session_by_id(const RunConfig& cfg, const std::string& session_id) {
    const auto path = cfg.dataset_dir / (session_id + std::string(kSessionExtension));
    if (!fs::is_regular_file(path)) {
        throw Error(ErrorKind::UnknownSession, "no session '" + session_id + "' in " + cfg.dataset_dir.string());
    }
    return load_session(path);
}

inline constexpr std::array<std::string_view, 3> kOccupancyParts = {"l_wrist", "r_wrist", "l_ear"};

/// Full single-session bundle: ten sections, each either data or an
/// "insufficient data" marker.
inline Json analyze_session(const Session& raw, const RunConfig& cfg) {
    const Session s = quality::apply_default_imputation(raw);
    Json doc;
    doc["session_id"] = s.session_id;
    doc["record_count"] = s.records.size();

    std::optional<double> rate;
    if (s.records.size() >= 2) {
        const auto profile = timing::infer_sampling_rate(s);
        rate = profile.rate_hz;
        auto section = report::to_json(profile);
        section["delta_profile"] = report::to_json(timing::delta_profile(raw, 25.0, cfg.iqr_k));
        doc["sampling_profile"] = std::move(section);
    } else {
        doc["sampling_profile"] = insufficient("fewer than 2 records");
    }

    try {
        doc["chorus_segments"] = report::to_json(timing::segment_choruses(s));
    } catch (const Error& e) {
        doc["chorus_segments"] = insufficient(e.what());
    }

    auto summary_section = [&](std::string_view name) {
        const Series col = column(s, name);
        if (present_values(col).empty()) return insufficient("no values");
        Json j;
        j["summary"] = report::to_json(analytics::describe(col));
        j["histogram"] = report::to_json(analytics::histogram(col, 20));
        return j;
    };
    // flow before imputation so an all-null column stays visible
    doc["flow_summary"] = present_values(column(raw, kFlowColumn)).empty() ? insufficient("flow is entirely null")
                                                                           : summary_section(kFlowColumn);
    doc["eda_summary"] = summary_section(kEdaColumn);

    const std::size_t window = rate ? analytics::window_samples(cfg.window_seconds, *rate) : 1;
    {
        Json rolling;
        rolling["window_seconds"] = cfg.window_seconds;
        rolling["window_samples"] = window;
        rolling["eda_mean"] = report::series_json(
            analytics::rolling_stat(column(s, kEdaColumn), window, analytics::RollingKind::Mean));
        Json variance;
        for (std::size_t c = 0; c < kEegChannels.size(); ++c) {
            variance[eeg_column(c)] = report::series_json(
                analytics::rolling_stat(column(s, eeg_column(c)), window, analytics::RollingKind::Variance));
        }
        rolling["eeg_variance"] = std::move(variance);
        doc["rolling"] = std::move(rolling);
    }

    {
        const Series eda = column(s, kEdaColumn);
        const auto present = present_values(eda);
        if (present.size() >= 3 && rate) {
            const auto dense = quality::impute_median(eda);
            const auto values = present_values(dense);
            const auto distance = analytics::window_samples(1.0, *rate);
            const double prominence = numeric::sample_std(present);
            auto peaks = report::to_json(analytics::detect_peaks(values, distance, prominence));
            Json flow_at = Json::array();
            Json time_at = Json::array();
            for (auto i : peaks["indices"]) {
                const auto idx = i.get<std::size_t>();
                flow_at.push_back(report::nullable(detail::widen(s.records[idx].flow)));
                time_at.push_back(s.records[idx].backing_track_position);
            }
            peaks["position_ms"] = std::move(time_at);
            peaks["flow_at_peak"] = std::move(flow_at);
            doc["peaks"] = std::move(peaks);
        } else {
            doc["peaks"] = insufficient("need at least 3 EDA values and a sampling rate");
        }
    }

    {
        std::vector<analytics::NamedSeries> eeg;
        for (std::size_t c = 0; c < kEegChannels.size(); ++c) eeg.emplace_back(eeg_column(c), column(s, eeg_column(c)));
        Json corr;
        corr["pearson"] = report::to_json(analytics::correlation_matrix(eeg, analytics::CorrelationMethod::Pearson));
        corr["spearman"] = report::to_json(analytics::correlation_matrix(eeg, analytics::CorrelationMethod::Spearman));
        doc["eeg_correlations"] = std::move(corr);
    }

    {
        const auto scan = quality::sentinel_scan(s, cfg.confidence_threshold);
        Json j;
        j["confidence_threshold"] = cfg.confidence_threshold;
        j["max_bad"] = quality::kDefaultMaxBad;
        j["scan"] = report::to_json(scan);
        j["reliable_columns"] = quality::reliable_columns(scan);
        doc["skeleton_quality"] = std::move(j);
    }

    {
        const std::vector<std::string> parts(kBodyParts.begin(), kBodyParts.end());
        const auto t = analytics::mean_trajectory(s, parts);
        doc["mean_trajectory"] = Json{{"parts", parts},
                                      {"mean_x", report::series_json(t.mean_x)},
                                      {"mean_y", report::series_json(t.mean_y)}};
    }

    {
        Json grids;
        for (auto part : kOccupancyParts) {
            try {
                grids[std::string(part)] = report::to_json(analytics::occupancy_grid(
                    column(s, skeleton_column(part, "x")), column(s, skeleton_column(part, "y")), 10, 10));
            } catch (const Error& e) {
                grids[std::string(part)] = insufficient(e.what());
            }
        }
        doc["occupancy_grids"] = std::move(grids);
    }
    return doc;
}

inline void write_analyze_svgs(const Session& s, const Json& doc, const fs::path& dir) {
    const Series eda = column(s, kEdaColumn);
    if (doc["rolling"].contains("eda_mean")) {
        Series mean;
        for (const auto& v : doc["rolling"]["eda_mean"]) mean.push_back(v.is_null() ? std::nullopt : std::optional(v.get<double>()));
        const std::vector<svg::LineSeries> lines = {{"eda", "steelblue", eda}, {"moving average", "crimson", mean}};
        report::write_text(dir / "eda_moving_average.svg", svg::line_chart(s.session_id + " EDA", lines));
    }
    if (!present_values(eda).empty()) {
        const auto bins = analytics::histogram(eda, 20);
        report::write_text(dir / "eda_histogram.svg", svg::bar_chart("EDA histogram", bins));
    }
    for (auto part : kOccupancyParts) {
        const auto& g = doc["occupancy_grids"][std::string(part)];
        if (g.contains("counts")) {
            report::write_text(dir / ("occupancy_" + std::string(part) + ".svg"),
                               svg::heatmap(std::string(part) + " occupancy",
                                            g["counts"].get<std::vector<std::vector<std::size_t>>>()));
        }
    }
}

inline int cmd_analyze(const RunConfig& cfg, const std::string& session_id, std::ostream& log) {
    try {
        cfg.validate();
        ensure_output_dir(cfg.output_dir);
        const auto s = load_session_by_id(cfg, session_id);
        for (const auto& v : validate_session(s)) log << "warning: " << v << "\n";
        const auto doc = analyze_session(s, cfg);
        report::write_json(cfg.output_dir / "analyze" / (session_id + ".json"), doc);
        if (cfg.svg) write_analyze_svgs(s, doc, cfg.output_dir / "analyze" / session_id);
        log << "analyzed " << session_id << " (" << s.records.size() << " records)\n";
        return kExitOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// ---------------------------------------------------------------------------
// compare

inline Json compare_sessions(const std::vector<Session>& sessions, const RunConfig& cfg, report::Table& table) {
    if (sessions.size() < 2) {
        throw Error(ErrorKind::TooFewSessions, "compare needs at least 2 sessions");
    }
    std::vector<Session> used;
    for (const auto& s : sessions) used.push_back(cfg.exclude_nonperformance ? performance_only(s) : s);

    Json doc;
    doc["exclude_nonperformance"] = cfg.exclude_nonperformance;
    Json summaries = Json::array();
    Json boxes = Json::array();
    std::vector<Series> groups;
    for (const auto& s : used) {
        const Series eda = column(s, kEdaColumn);
        if (present_values(eda).size() < 2) continue;
        const auto d = analytics::describe(eda);
        auto row = report::to_json(d);
        row["session_id"] = s.session_id;
        summaries.push_back(row);
        table.add_row({s.session_id, report::Table::cell(d.count), report::Table::cell(d.mean),
                       report::Table::cell(d.std), report::Table::cell(d.min), report::Table::cell(d.q25),
                       report::Table::cell(d.median), report::Table::cell(d.q75), report::Table::cell(d.max)});

        const auto out = quality::iqr_outliers(eda, cfg.iqr_k);
        double whisker_lo = d.max, whisker_hi = d.min;
        for (double v : present_values(eda)) {
            if (v >= out.lower) whisker_lo = std::min(whisker_lo, v);
            if (v <= out.upper) whisker_hi = std::max(whisker_hi, v);
        }
        boxes.push_back({{"session_id", s.session_id},
                         {"median", d.median},
                         {"q1", out.q1},
                         {"q3", out.q3},
                         {"lower_fence", out.lower},
                         {"upper_fence", out.upper},
                         {"whisker_low", whisker_lo},
                         {"whisker_high", whisker_hi},
                         {"outlier_count", out.indices.size()}});
        groups.push_back(eda);
    }
    doc["eda_summary"] = std::move(summaries);
    doc["box_plots"] = std::move(boxes);
    try {
        doc["anova"] = report::to_json(stats::anova_oneway(groups));
    } catch (const Error& e) {
        doc["anova"] = insufficient(e.what());
    }

    struct Ranked {
        std::size_t index;
        double r;
    };
    std::vector<Ranked> ranked;
    for (std::size_t i = 0; i < used.size(); ++i) {
        try {
            ranked.push_back({i, analytics::correlate(column(used[i], kEdaColumn), column(used[i], kFlowColumn))});
        } catch (const Error&) {
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return std::abs(a.r) > std::abs(b.r); });
    Json top = Json::array();
    for (std::size_t t = 0; t < std::min(cfg.top_n, ranked.size()); ++t) {
        const auto& s = sessions[ranked[t].index];
        Json overlay = Json::array();
        try {
            for (const auto& seg : timing::segment_choruses(s)) {
                if (cfg.exclude_nonperformance && !seg.performance) continue;
                Json t_ms = Json::array(), eda = Json::array(), flow = Json::array();
                for (std::size_t i = seg.start_index; i <= seg.end_index; ++i) {
                    t_ms.push_back(s.records[i].backing_track_position - seg.start_ms);
                    eda.push_back(report::nullable(detail::widen(s.records[i].eda)));
                    flow.push_back(report::nullable(detail::widen(s.records[i].flow)));
                }
                overlay.push_back({{"chorus_id", seg.chorus_id}, {"t_ms", t_ms}, {"eda", eda}, {"flow", flow}});
            }
        } catch (const Error&) {
        }
        top.push_back({{"session_id", s.session_id}, {"eda_flow_pearson", ranked[t].r}, {"chorus_overlay", overlay}});
    }
    doc["top_eda_flow_correlation"] = std::move(top);
    return doc;
}

inline int cmd_compare(const RunConfig& cfg, std::ostream& log) {
    try {
        cfg.validate();
        const auto manifest = discover_dataset(cfg.dataset_dir);
        ensure_output_dir(cfg.output_dir);
        for (const auto& s : manifest.skipped) {
            log << "warning: skipped " << s.path.filename().string() << ": " << s.reason << "\n";
        }
        std::vector<Session> sessions(manifest.entries.size());
        parallel_for(sessions.size(), cfg.jobs, [&](std::size_t i) { sessions[i] = load_session(manifest.entries[i].path); });

        report::Table table({"session_id", "count", "mean", "std", "min", "25%", "50%", "75%", "max"});
        const auto doc = compare_sessions(sessions, cfg, table);
        report::write_json(cfg.output_dir / "compare.json", doc);
        report::write_text(cfg.output_dir / "compare_eda_summary.csv", table.str());
        log << "compared " << sessions.size() << " session(s)\n";
        return manifest.skipped.empty() ? kExitOk : kExitPartial;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// ---------------------------------------------------------------------------
// cluster

/// Chorus holding most of a bar's records (lowest id on ties); null when the
/// bar has no records with a chorus id.
inline std::vector<std::optional<int>> bar_majority_chorus(const Session& s, const BeatGrid& grid,
                                                           const timing::AlignmentOptions& opt) {
    std::vector<std::map<int, std::size_t>> votes(grid.bar_times.size());
    for (const auto& a : timing::align_session(s, grid, opt)) {
        if (a.chorus_id && a.position.bar_index < votes.size()) ++votes[a.position.bar_index][*a.chorus_id];
    }
    std::vector<std::optional<int>> out(votes.size());
    for (std::size_t b = 0; b < votes.size(); ++b) {
        std::size_t best = 0;
        for (const auto& [id, n] : votes[b]) {
            if (n > best) {
                best = n;
                out[b] = id;
            }
        }
    }
    return out;
}

inline Json cluster_session(const Session& s, const BeatGrid& grid, const std::string& column_name,
                            const RunConfig& cfg, std::ostream& log) {
    cluster::BarFeatureOptions opt;
    opt.alignment.offset_ms = cfg.offset_ms;
    opt.alignment.include_nonperformance = !cfg.exclude_nonperformance;
    opt.chorus = cfg.chorus;
    const auto raw = cluster::bar_features(s, grid, column_name, opt);
    const auto features = cluster::standardize(raw);
    const std::size_t rows = features.rows.size();
    if (rows < 3) {
        throw Error(ErrorKind::TooFewRows, "only " + std::to_string(rows) + " bar(s) have data");
    }
    const std::size_t k_max = std::min(cfg.k_max, rows - 1);
    if (k_max < cfg.k_max) {
        log << "warning: k range clipped to " << cfg.k_min << ".." << k_max << "\n";
    }
    const auto selection = cluster::select_k(features.rows, cfg.k_min, k_max, cfg.seed);

    Json warnings = Json::array();
    bool degenerate = true;
    for (const auto& d : selection.diagnostics) {
        if (d.silhouette != 0.0) degenerate = false;
    }
    if (degenerate) {
        const std::string msg = "silhouette table is degenerate (all scores 0); features carry no structure";
        log << "warning: " << msg << "\n";
        warnings.push_back(msg);
    }

    Json doc;
    doc["session_id"] = s.session_id;
    doc["column"] = canonical_column(column_name);
    doc["bar_count"] = grid.bar_times.size();
    doc["mode"] = cfg.chorus ? "per_chorus" : "pooled";
    if (cfg.chorus) doc["chorus"] = *cfg.chorus;
    doc["raw_features"] = report::to_json(raw);
    doc["standardized_features"] = report::to_json(features);
    doc["diagnostics"] = report::to_json(selection.diagnostics);
    doc["best_k"] = selection.best_k;
    doc["result"] = report::to_json(selection.best, features.bar_index);

    const auto majority = bar_majority_chorus(s, grid, opt.alignment);
    std::map<int, std::vector<std::size_t>> contingency;
    for (std::size_t i = 0; i < rows; ++i) {
        const auto chorus = majority[features.bar_index[i]];
        const int key = chorus ? *chorus : -1;
        auto& row = contingency[key];
        row.resize(selection.best_k, 0);
        ++row[selection.best.assignments[i]];
    }
    Json table = Json::array();
    for (const auto& [chorus, counts] : contingency) {
        table.push_back({{"chorus_id", chorus < 0 ? Json(nullptr) : Json(chorus)}, {"cluster_counts", counts}});
    }
    doc["cluster_by_chorus"] = std::move(table);
    try {
        Json ranges = Json::array();
        for (const auto& r : timing::chorus_bar_ranges(s, grid, cfg.offset_ms)) {
            ranges.push_back({{"chorus_id", r.chorus_id}, {"first_bar", r.first_bar}, {"last_bar", r.last_bar}});
        }
        doc["chorus_bar_ranges"] = std::move(ranges);
    } catch (const Error& e) {
        doc["chorus_bar_ranges"] = insufficient(e.what());
    }
    doc["warnings"] = std::move(warnings);
    return doc;
}

inline int cmd_cluster(const RunConfig& cfg, const std::string& session_id, const std::string& column_name,
                       std::ostream& log) {
    try {
        cfg.validate();
        if (cfg.beat_grid_path.empty() || !fs::is_regular_file(cfg.beat_grid_path)) {
            log << "error: beat grid file not found: '" << cfg.beat_grid_path.string() << "'\n";
            return kExitError;
        }
        ensure_output_dir(cfg.output_dir);
        const auto grid = load_beat_grid(cfg.beat_grid_path);
        const auto s = load_session_by_id(cfg, session_id);
        const auto doc = cluster_session(s, grid, column_name, cfg, log);

        const std::string stem = session_id + "_" + canonical_column(column_name);
        report::write_json(cfg.output_dir / "cluster" / (stem + ".json"), doc);
        report::Table assignments({"bar_index", "cluster"});
        for (const auto& a : doc["result"]["assignments"]) {
            assignments.add_row({std::to_string(a["bar_index"].get<std::size_t>()),
                                 std::to_string(a["cluster"].get<std::size_t>())});
        }
        report::write_text(cfg.output_dir / "cluster" / (stem + "_assignments.csv"), assignments.str());
        timing::AlignmentOptions align;
        align.offset_ms = cfg.offset_ms;
        align.include_nonperformance = true;
        report::write_text(cfg.output_dir / "cluster" / (session_id + "_alignment.csv"),
                           report::alignment_table(timing::align_session(s, grid, align)).str());
        log << "clustered " << doc["standardized_features"]["rows"].size() << " bars of " << session_id
            << ": best k = " << doc["best_k"].get<std::size_t>() << "\n";
        return kExitOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
}

} // namespace musicking::pipeline

#endif
