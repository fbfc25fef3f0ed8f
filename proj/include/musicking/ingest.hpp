#ifndef MUSICKING_INGEST_HPP
#define MUSICKING_INGEST_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "error.hpp"

namespace musicking {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

namespace detail {

inline std::optional<double> read_double(const nlohmann::json& v, std::string_view key, std::size_t row) {
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) {
        throw Error(ErrorKind::SchemaError, "field '" + std::string(key) + "' is not numeric", row);
    }
    return v.get<double>();
}

inline std::optional<std::int64_t> read_integer(const nlohmann::json& v, std::string_view key, std::size_t row) {
    if (v.is_null()) return std::nullopt;
    if (v.is_number_integer()) {
        if (v.is_number_unsigned() &&
            v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            throw Error(ErrorKind::SchemaError, "field '" + std::string(key) + "' out of range", row);
        }
        return v.get<std::int64_t>();
    }
    if (v.is_number_float()) {
        // pandas exports integer columns with nulls as floats (467.0)
        const double d = v.get<double>();
        if (!std::isfinite(d) || d != std::trunc(d) || std::abs(d) > 9.007199254740992e15) {
            throw Error(ErrorKind::SchemaError, "field '" + std::string(key) + "' is not an integer", row);
        }
        return static_cast<std::int64_t>(d);
    }
    throw Error(ErrorKind::SchemaError, "field '" + std::string(key) + "' is not numeric", row);
}

inline Record parse_record(const nlohmann::json& obj, std::size_t row) {
    if (!obj.is_object()) {
        throw Error(ErrorKind::SchemaError, "record is not an object", row);
    }
    Record r;
    bool have_position = false;
    for (const auto& [key, value] : obj.items()) {
        if (key == kPositionColumn || key == "backing_track_position") {
            auto p = read_double(value, key, row);
            if (!p) {
                throw Error(ErrorKind::SchemaError, "required field 'backing_track_position' is null", row);
            }
            r.backing_track_position = *p;
            have_position = true;
        } else if (key == kDeltaColumn) {
            r.sync_delta = read_double(value, key, row);
        } else if (key == kChorusColumn) {
            auto id = read_integer(value, key, row);
            if (id && (*id < std::numeric_limits<int>::min() || *id > std::numeric_limits<int>::max())) {
                throw Error(ErrorKind::SchemaError, "field 'sync_chorus_id' out of range", row);
            }
            r.chorus_id = id ? std::optional<int>(static_cast<int>(*id)) : std::nullopt;
        } else if (key == kFlowColumn) {
            r.flow = read_integer(value, key, row);
        } else if (key == kEdaColumn) {
            r.eda = read_integer(value, key, row);
        } else if (auto f = parse_skeleton_column(key)) {
            auto& kp = r.keypoints[f->part];
            auto v = read_double(value, key, row);
            (f->axis == 0 ? kp.x : f->axis == 1 ? kp.y : kp.confidence) = v;
        } else {
            bool eeg = false;
            for (std::size_t i = 0; i < kEegChannels.size(); ++i) {
                if (key == eeg_column(i)) {
                    r.eeg[i] = read_integer(value, key, row);
                    eeg = true;
                    break;
                }
            }
            if (!eeg) {
                r.extras[key] = value;
            }
        }
    }
    if (!have_position) {
        throw Error(ErrorKind::SchemaError, "required field 'backing_track_position' missing", row);
    }
    return r;
}

template <typename T>
nlohmann::ordered_json nullable(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

} // namespace detail

/// Parses a session document: a top-level array of flat record objects.
/// Records keep file order; unknown keys land in Record::extras.
inline Session parse_session_file(std::string_view bytes, std::string session_id = {}) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedDocument, e.what());
    }
    if (!doc.is_array()) {
        throw Error(ErrorKind::MalformedDocument, "session document must be an array of records");
    }
    Session s;
    s.session_id = std::move(session_id);
    s.records.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        s.records.push_back(detail::parse_record(doc[i], i));
    }
    return s;
}

inline nlohmann::ordered_json record_to_json(const Record& r) {
    nlohmann::ordered_json o;
    o[std::string(kDeltaColumn)] = detail::nullable(r.sync_delta);
    o[std::string(kChorusColumn)] = detail::nullable(r.chorus_id);
    o[std::string(kPositionColumn)] = r.backing_track_position;
    o[std::string(kFlowColumn)] = detail::nullable(r.flow);
    o[std::string(kEdaColumn)] = detail::nullable(r.eda);
    for (std::size_t i = 0; i < kEegChannels.size(); ++i) {
        o[eeg_column(i)] = detail::nullable(r.eeg[i]);
    }
    for (std::size_t p = 0; p < kPartCount; ++p) {
        const auto& kp = r.keypoints[p];
        o[skeleton_column(kBodyParts[p], "x")] = detail::nullable(kp.x);
        o[skeleton_column(kBodyParts[p], "y")] = detail::nullable(kp.y);
        o[skeleton_column(kBodyParts[p], "confidence")] = detail::nullable(kp.confidence);
    }
    for (const auto& [key, value] : r.extras.items()) {
        o[key] = nlohmann::ordered_json::parse(value.dump());
    }
    return o;
}

inline std::string serialize_session(const Session& s) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : s.records) {
        doc.push_back(record_to_json(r));
    }
    return doc.dump();
}

inline BeatGrid parse_beat_grid(std::string_view bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedDocument, e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorKind::MalformedDocument, "beat grid must be an object");
    }
    BeatGrid g;
    try {
        g.tempo_bpm = doc.at("tempo_bpm").get<double>();
        g.duration_s = doc.at("duration_s").get<double>();
        g.audio_sample_rate_hz = doc.at("audio_sample_rate_hz").get<std::int64_t>();
        g.beat_times = doc.at("beats_s").get<std::vector<double>>();
        g.bar_times = doc.at("bars_s").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedDocument, e.what());
    }
    check_beat_grid(g);
    return g;
}

inline std::string serialize_beat_grid(const BeatGrid& g) {
    nlohmann::ordered_json doc;
    doc["tempo_bpm"] = g.tempo_bpm;
    doc["duration_s"] = g.duration_s;
    doc["audio_sample_rate_hz"] = g.audio_sample_rate_hz;
    doc["beats_s"] = g.beat_times;
    doc["bars_s"] = g.bar_times;
    return doc.dump(2);
}

inline BeatGrid load_beat_grid(const fs::path& path) { return parse_beat_grid(read_file(path)); }

inline Session load_session(const fs::path& path) {
    return parse_session_file(read_file(path), path.stem().string());
}

// ---------------------------------------------------------------------------
// Dataset discovery

inline constexpr std::string_view kSessionExtension = ".json";

struct ManifestEntry {
    std::string session_id;
    fs::path path;
    std::size_t record_count = 0;
};

struct SkippedFile {
    fs::path path;
    std::string reason;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<SkippedFile> skipped;

    const ManifestEntry* find(std::string_view session_id) const {
        for (const auto& e : entries) {
            if (e.session_id == session_id) return &e;
        }
        return nullptr;
    }
};

/// Lists every session file under `dir` (non-recursive), sorted by session id.
/// Files that fail to parse are reported in `skipped` instead of aborting.
inline DatasetManifest discover_dataset(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error(ErrorKind::IoError, "not a readable directory: " + dir.string());
    }
    fs::directory_iterator it(dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoError, "cannot read " + dir.string() + ": " + ec.message());
    }
    std::vector<fs::path> files;
    for (const auto& entry : it) {
        if (entry.is_regular_file() && entry.path().extension() == kSessionExtension) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });

    DatasetManifest manifest;
    for (const auto& path : files) {
        try {
            auto s = load_session(path);
            manifest.entries.push_back({s.session_id, path, s.records.size()});
        } catch (const Error& e) {
            manifest.skipped.push_back({path, e.what()});
        }
    }
    return manifest;
}

} // namespace musicking

#endif
