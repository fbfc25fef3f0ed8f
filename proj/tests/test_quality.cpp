#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace musicking;
namespace mt = musicking::testing;

namespace {

Series S(std::initializer_list<std::optional<double>> v) { return Series(v); }

Series random_series(std::mt19937_64& rng, std::size_t n, double null_p) {
    Series s(n);
    std::normal_distribution<double> z(0.0, 10.0);
    for (auto& v : s) {
        if (!mt::coin(rng, null_p)) v = std::round(z(rng) * 4.0) / 4.0;
    }
    return s;
}

} // namespace

TEST(IqrOutliers, FlagsHighValue) {
    const auto e = quality::iqr_outliers(S({1, 2, 3, 4, 100}), 1.5);
    EXPECT_DOUBLE_EQ(e.q1, 2.0);
    EXPECT_DOUBLE_EQ(e.q3, 4.0);
    EXPECT_DOUBLE_EQ(e.upper, 7.0);
    EXPECT_EQ(e.indices, std::vector<std::size_t>{4});
}

TEST(IqrOutliers, ConstantAndInside) {
    EXPECT_TRUE(quality::iqr_outliers(S({5, 5, 5, 5})).indices.empty());
    EXPECT_TRUE(quality::iqr_outliers(S({1, 2, 3, 4})).indices.empty());
}

TEST(IqrOutliers, NullsSkippedAndTooFew) {
    const auto e = quality::iqr_outliers(S({1, std::nullopt, 2, 3, 4, 100}));
    EXPECT_EQ(e.indices, std::vector<std::size_t>{5});
    EXPECT_THROW(quality::iqr_outliers(S({1, 2, std::nullopt, 3})), Error);
}

TEST(IqrOutliers, DeltaSpikeFlagged) {
    Series d(50, 130.0);
    d.push_back(216.0);
    EXPECT_EQ(quality::iqr_outliers(d).indices, std::vector<std::size_t>{50});
}

TEST(IqrOutliers, Properties) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = random_series(rng, 4 + rng() % 60, 0.1);
        if (present_values(s).size() < 4) continue;
        const auto narrow = quality::iqr_outliers(s, 1.5);
        const auto wide = quality::iqr_outliers(s, 3.0);
        EXPECT_LE(narrow.lower, narrow.upper);
        EXPECT_TRUE(std::includes(narrow.indices.begin(), narrow.indices.end(), wide.indices.begin(),
                                  wide.indices.end()));
        for (auto i : narrow.indices) {
            ASSERT_TRUE(s[i]);
            EXPECT_TRUE(*s[i] < narrow.lower || *s[i] > narrow.upper);
        }
        const auto present = present_values(s);
        EXPECT_DOUBLE_EQ(narrow.q1, oracle::quantile(present, 0.25L));
        EXPECT_DOUBLE_EQ(narrow.q3, oracle::quantile(present, 0.75L));
    }
}

TEST(ImputeMedian, Examples) {
    EXPECT_EQ(quality::impute_median(S({1, std::nullopt, 3})), S({1, 2, 3}));
    EXPECT_EQ(quality::impute_median(S({7, 7, std::nullopt})), S({7, 7, 7}));
    try {
        quality::impute_median(S({std::nullopt, std::nullopt}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AllMissing);
    }
}

TEST(ImputeMedian, Properties) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = random_series(rng, 1 + rng() % 40, 0.3);
        const auto present = present_values(s);
        if (present.empty()) continue;
        const auto out = quality::impute_median(s);
        ASSERT_EQ(out.size(), s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            ASSERT_TRUE(out[i]);
            if (s[i]) EXPECT_EQ(*out[i], *s[i]);
        }
        EXPECT_DOUBLE_EQ(numeric::median(present_values(out)), numeric::median(present));
    }
}

TEST(InterpolateGaps, Examples) {
    EXPECT_EQ(quality::interpolate_gaps(S({0, std::nullopt, 2}), 1), S({0, 1, 2}));
    EXPECT_EQ(quality::interpolate_gaps(S({0, std::nullopt, std::nullopt, 3}), 1),
              S({0, std::nullopt, std::nullopt, 3}));
    EXPECT_EQ(quality::interpolate_gaps(S({std::nullopt, 1, 2}), 5), S({std::nullopt, 1, 2}));
    EXPECT_EQ(quality::interpolate_gaps(S({0, std::nullopt, std::nullopt, 3}), 2), S({0, 1, 2, 3}));
}

TEST(InterpolateGaps, Properties) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = random_series(rng, rng() % 40, 0.4);
        const std::size_t max_gap = rng() % 4;
        const auto out = quality::interpolate_gaps(s, max_gap);
        ASSERT_EQ(out.size(), s.size());
        // walk null runs and check each against the rules
        for (std::size_t i = 0; i < s.size();) {
            if (s[i]) {
                EXPECT_EQ(out[i], s[i]);
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < s.size() && !s[j]) ++j;
            const bool interior = i > 0 && j < s.size();
            const bool fill = interior && j - i <= max_gap;
            for (std::size_t m = i; m < j; ++m) {
                EXPECT_EQ(out[m].has_value(), fill);
                if (fill) {
                    EXPECT_GE(*out[m], std::min(*s[i - 1], *s[j]) - 1e-12);
                    EXPECT_LE(*out[m], std::max(*s[i - 1], *s[j]) + 1e-12);
                }
            }
            i = j;
        }
    }
}

TEST(SentinelScan, ReplicaCounts) {
    const auto scan = quality::sentinel_scan(mt::sentinel_replica(), 0.5);
    auto find = [&](const std::string& name) {
        return *std::find_if(scan.begin(), scan.end(), [&](const auto& c) { return c.column == name; });
    };
    const auto rx = find("hardware_skeleton_r_wrist_x");
    EXPECT_EQ(rx.minus_one_count, 412u);
    EXPECT_EQ(rx.low_confidence_count, 2531u);
    EXPECT_EQ(find("hardware_skeleton_nose_y").low_confidence_count, 0u);
    EXPECT_EQ(find("hardware_skeleton_l_elbow_confidence").zero_count, 816u);
}

TEST(SentinelScan, AllConfidentColumnIsClean) {
    const auto scan = quality::sentinel_scan(mt::session_at({0, 130, 260}));
    EXPECT_EQ(scan.size(), 3 * kPartCount);
    for (const auto& c : scan) {
        EXPECT_EQ(c.minus_one_count + c.zero_count + c.low_confidence_count, 0u) << c.column;
    }
}

TEST(SentinelScan, OrderInvariant) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = mt::random_session(rng, 40);
        const auto a = quality::sentinel_scan(s, 0.4);
        std::shuffle(s.records.begin(), s.records.end(), rng);
        const auto b = quality::sentinel_scan(s, 0.4);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].minus_one_count, b[i].minus_one_count);
            EXPECT_EQ(a[i].zero_count, b[i].zero_count);
            EXPECT_EQ(a[i].low_confidence_count, b[i].low_confidence_count);
        }
    }
}

TEST(SentinelScan, ThresholdRange) { EXPECT_THROW(quality::sentinel_scan(mt::session_at({0}), 1.5), Error); }

TEST(ReliableColumns, ReplicaFilter) {
    const auto scan = quality::sentinel_scan(mt::sentinel_replica());
    const auto keep = quality::reliable_columns(scan, 400);
    auto has = [&](const std::string& c) { return std::find(keep.begin(), keep.end(), c) != keep.end(); };
    for (std::string axis : {"x", "y", "confidence"}) {
        EXPECT_FALSE(has("hardware_skeleton_r_wrist_" + axis));
        EXPECT_FALSE(has("hardware_skeleton_l_elbow_" + axis));
        EXPECT_TRUE(has("hardware_skeleton_r_elbow_" + axis));
        EXPECT_TRUE(has("hardware_skeleton_nose_" + axis));
    }
    EXPECT_FALSE(has("hardware_skeleton_l_shoulder_x"));
    EXPECT_TRUE(has("hardware_skeleton_l_shoulder_confidence"));
}

TEST(ReliableColumns, Extremes) {
    const auto clean = quality::sentinel_scan(mt::session_at({0, 130}));
    EXPECT_EQ(quality::reliable_columns(clean).size(), clean.size());
    EXPECT_TRUE(quality::reliable_columns(clean, 0).empty());
}

TEST(IntegrityReport, MissingFlowCount) {
    const auto q = quality::integrity_report(mt::sentinel_replica());
    EXPECT_EQ(q.record_count, 2552u);
    for (const auto& c : q.columns) {
        if (c.column == "flow") EXPECT_EQ(c.missing_count, 3u);
        else EXPECT_EQ(c.missing_count, 0u) << c.column;
    }
}

TEST(IntegrityReport, AllMinusOneColumn) {
    auto s = mt::session_at({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    for (auto& r : s.records) r.keypoints[0] = mt::sentinel_kp();
    const auto q = quality::integrity_report(s);
    const auto it = std::find_if(q.columns.begin(), q.columns.end(),
                                 [](const auto& c) { return c.column == "hardware_skeleton_nose_x"; });
    ASSERT_NE(it, q.columns.end());
    EXPECT_EQ(it->minus_one_count, 10u);
    EXPECT_EQ(it->missing_count, 0u);
}

TEST(Imputation, FlowAndDeltaOnly) {
    auto s = mt::session_at({0, 130, 260, 390});
    s.records[1].flow.reset();
    s.records[0].sync_delta.reset();
    s.records[2].chorus_id.reset();
    s.records[3].keypoints[0] = mt::sentinel_kp();
    s.records[0].flow = 40;
    s.records[2].flow = 61;
    const auto out = quality::apply_default_imputation(s);
    EXPECT_EQ(out.records[1].flow, 50);
    EXPECT_EQ(out.records[0].sync_delta, 130.0);
    EXPECT_FALSE(out.records[2].chorus_id);
    EXPECT_EQ(out.records[3].keypoints[0], mt::sentinel_kp());
}
