#include <gtest/gtest.h>

#include <random>

#include "support/synthetic.hpp"

using namespace musicking;
namespace mt = musicking::testing;

namespace {

ErrorKind kind_of(const std::function<void()>& fn, std::optional<std::size_t>* row = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (row) *row = e.row();
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST(ParseSession, ThreeRecords) {
    const auto s = parse_session_file(
        R"([{"sync_backing_track_position": 0, "hardware_bitalino_eda": 467, "sync_chorus_id": 1},
            {"sync_backing_track_position": 130.5, "hardware_bitalino_eda": null, "sync_chorus_id": 1},
            {"sync_backing_track_position": 261, "flow": 62.0, "sync_chorus_id": 999}])",
        "abc");
    ASSERT_EQ(s.records.size(), 3u);
    EXPECT_EQ(s.session_id, "abc");
    EXPECT_EQ(s.records[0].eda, 467);
    EXPECT_FALSE(s.records[1].eda);
    EXPECT_DOUBLE_EQ(s.records[1].backing_track_position, 130.5);
    EXPECT_EQ(s.records[2].flow, 62);
    EXPECT_EQ(s.records[2].chorus_id, 999);
    EXPECT_FALSE(s.records[0].keypoints[0].x);
}

TEST(ParseSession, MissingPositionReportsRow) {
    std::optional<std::size_t> row;
    const auto kind = kind_of(
        [] {
            parse_session_file(R"([{"sync_backing_track_position": 0}, {"sync_backing_track_position": 1},
                                   {"hardware_bitalino_eda": 3}])");
        },
        &row);
    EXPECT_EQ(kind, ErrorKind::SchemaError);
    EXPECT_EQ(row, 2u);
}

TEST(ParseSession, ExtraColumnPreserved) {
    const auto s = parse_session_file(R"([{"backing_track_position": 5, "foo": "bar"}])");
    EXPECT_EQ(s.records[0].extras.at("foo"), "bar");
    EXPECT_DOUBLE_EQ(s.records[0].backing_track_position, 5.0);
}

TEST(ParseSession, RejectsMalformedAndBadTypes) {
    EXPECT_EQ(kind_of([] { parse_session_file("[{"); }), ErrorKind::MalformedDocument);
    EXPECT_EQ(kind_of([] { parse_session_file(R"({"a": 1})"); }), ErrorKind::MalformedDocument);
    EXPECT_EQ(kind_of([] { parse_session_file(R"([{"sync_backing_track_position": 0, "flow": 2.5}])"); }),
              ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([] { parse_session_file(R"([{"sync_backing_track_position": 0, "flow": 1e300}])"); }),
              ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([] {
                  parse_session_file(R"([{"sync_backing_track_position": 0, "hardware_bitalino_eda": "x"}])");
              }),
              ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([] { parse_session_file(R"([{"sync_backing_track_position": null}])"); }),
              ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([] { parse_session_file("[3]"); }), ErrorKind::SchemaError);
}

TEST(ParseSession, RoundTripProperty) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto s = mt::random_session(rng, static_cast<std::size_t>(rng() % 50), "rt");
        const auto back = parse_session_file(serialize_session(s), "rt");
        ASSERT_EQ(back, s) << "trial " << trial;
    }
}

TEST(ParseSession, PreservesOrder) {
    const auto s = parse_session_file(
        R"([{"sync_backing_track_position": 30}, {"sync_backing_track_position": 10},
            {"sync_backing_track_position": 20}])");
    ASSERT_EQ(s.records.size(), 3u);
    EXPECT_EQ(s.records[0].backing_track_position, 30);
    EXPECT_EQ(s.records[1].backing_track_position, 10);
    EXPECT_EQ(s.records[2].backing_track_position, 20);
}

TEST(BeatGridParse, Fixture) {
    const auto g = mt::fixture_grid();
    EXPECT_DOUBLE_EQ(g.tempo_bpm, 60.09);
    EXPECT_DOUBLE_EQ(g.duration_s, 331.5);
    EXPECT_EQ(g.audio_sample_rate_hz, 22050);
    EXPECT_EQ(g.bar_times.size(), 38u + 30u + 13u);
    EXPECT_DOUBLE_EQ(g.beat_times.front(), 0.55727891);
}

TEST(BeatGridParse, BarOffBeatIsInvariantError) {
    const std::string doc =
        R"({"tempo_bpm": 60, "duration_s": 2, "audio_sample_rate_hz": 22050, "beats_s": [0.5, 1.5], "bars_s": [1.0]})";
    EXPECT_EQ(kind_of([&] { parse_beat_grid(doc); }), ErrorKind::InvariantError);
    EXPECT_EQ(kind_of([] { parse_beat_grid(R"({"tempo_bpm": 60})"); }), ErrorKind::MalformedDocument);
}

TEST(BeatGridParse, RoundTrip) {
    const auto g = mt::fixture_grid();
    EXPECT_EQ(parse_beat_grid(serialize_beat_grid(g)), g);
}

TEST(Discover, TwentyFiveFiles) {
    const auto dir = mt::scratch_dir("discover25");
    std::mt19937_64 rng(5);
    for (int i = 0; i < 25; ++i) {
        mt::write_session(dir, mt::random_session(rng, 10, "session_" + std::to_string(100 + i)));
    }
    report::write_text(dir / "notes.txt", "not a session");
    const auto m = discover_dataset(dir);
    EXPECT_EQ(m.entries.size(), 25u);
    EXPECT_TRUE(m.skipped.empty());
    EXPECT_EQ(m.entries.front().session_id, "session_100");
    EXPECT_EQ(m.entries.back().session_id, "session_124");
    EXPECT_EQ(m.entries[3].record_count, 10u);
    EXPECT_NE(m.find("session_110"), nullptr);
}

TEST(Discover, EmptyDirectory) {
    const auto m = discover_dataset(mt::scratch_dir("discover_empty"));
    EXPECT_TRUE(m.entries.empty());
    EXPECT_TRUE(m.skipped.empty());
}

TEST(Discover, CorruptFileSkipped) {
    const auto dir = mt::scratch_dir("discover_corrupt");
    std::mt19937_64 rng(6);
    mt::write_session(dir, mt::random_session(rng, 5, "a"));
    mt::write_session(dir, mt::random_session(rng, 5, "b"));
    report::write_text(dir / "c.json", "[{\"sync_backing_track_position\": ");
    const auto m = discover_dataset(dir);
    EXPECT_EQ(m.entries.size(), 2u);
    ASSERT_EQ(m.skipped.size(), 1u);
    EXPECT_EQ(m.skipped[0].path.filename(), "c.json");
}

TEST(Discover, MissingDirectoryIsIoError) {
    EXPECT_EQ(kind_of([] { discover_dataset("/nonexistent/musicking"); }), ErrorKind::IoError);
}
