#include <gtest/gtest.h>

#include <map>
#include <set>
#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace musicking;
using cluster::Matrix;
namespace mt = musicking::testing;

namespace {

Matrix blobs(std::uint64_t seed, const std::vector<std::vector<double>>& centres, std::size_t per, double sd) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, sd);
    Matrix X;
    for (const auto& c : centres) {
        for (std::size_t i = 0; i < per; ++i) {
            std::vector<double> p;
            for (double v : c) p.push_back(v + z(rng));
            X.push_back(p);
        }
    }
    return X;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    Matrix X(n, std::vector<double>(d));
    for (auto& row : X) {
        for (auto& v : row) v = mt::uniform(rng, -5.0, 5.0);
    }
    return X;
}

/// Relabels clusters by order of first appearance.
std::vector<std::size_t> canonical(const std::vector<std::size_t>& a) {
    std::map<std::size_t, std::size_t> m;
    std::vector<std::size_t> out;
    for (auto l : a) {
        auto [it, _] = m.emplace(l, m.size());
        out.push_back(it->second);
    }
    return out;
}

void expect_non_increasing(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        EXPECT_LE(trace[i], trace[i - 1] * (1.0 + 1e-12) + 1e-12) << "step " << i;
    }
}

} // namespace

TEST(BarFeatures, FixtureShape) {
    const auto g = mt::fixture_grid();
    const auto m = cluster::bar_features(mt::corpus_session(g, "c", 1), g, "eda");
    EXPECT_EQ(m.rows.size(), 81u);
    EXPECT_TRUE(m.dropped.empty());
    EXPECT_EQ(m.feature_names,
              (std::vector<std::string>{"hardware_bitalino_eda_mean", "hardware_bitalino_eda_std",
                                        "hardware_bitalino_eda_min", "hardware_bitalino_eda_max"}));
    for (const auto& row : m.rows) {
        ASSERT_EQ(row.size(), 4u);
        EXPECT_LE(row[2], row[0]);
        EXPECT_LE(row[0], row[3]);
    }
}

TEST(BarFeatures, ConstantColumnStandardizesToZero) {
    const auto g = mt::fixture_grid();
    const auto m = cluster::standardize(cluster::bar_features(mt::corpus_session(g, "c", 1, mt::flat_regime), g, "eda"));
    for (const auto& row : m.rows) {
        for (double v : row) EXPECT_EQ(v, 0.0);
    }
}

TEST(BarFeatures, PartialCoverageDropsBars) {
    const auto g = mt::fixture_grid();
    std::vector<double> pos;
    for (double t = 0; t < g.bar_times[10] * 1000.0; t += 130.0) pos.push_back(t);
    const auto m = cluster::bar_features(mt::session_at(pos), g, "eda");
    EXPECT_EQ(m.rows.size(), 10u);
    ASSERT_EQ(m.dropped.size(), 71u);
    EXPECT_EQ(m.dropped.front(), 10u);
    EXPECT_EQ(m.dropped.back(), 80u);
}

TEST(BarFeatures, PerChorusMode) {
    const auto g = mt::fixture_grid();
    cluster::BarFeatureOptions opt;
    opt.chorus = 2;
    const auto m = cluster::bar_features(mt::corpus_session(g, "c", 1), g, "eda", opt);
    EXPECT_GT(m.rows.size(), 10u);
    EXPECT_LT(m.rows.size(), 20u);
}

TEST(BarFeatures, StandardizedColumnsHaveUnitScale) {
    const auto g = mt::fixture_grid();
    const auto m = cluster::standardize(cluster::bar_features(mt::corpus_session(g, "c", 4), g, "eda"));
    for (std::size_t j = 0; j < 4; ++j) {
        double s = 0, ss = 0;
        for (const auto& row : m.rows) s += row[j];
        for (const auto& row : m.rows) ss += row[j] * row[j];
        const double n = static_cast<double>(m.rows.size());
        EXPECT_NEAR(s / n, 0.0, 1e-12);
        EXPECT_NEAR(ss / n, 1.0, 1e-12);
    }
}

TEST(KMeans, TwoPairsAnySeed) {
    const Matrix X = {{0, 0}, {0, 1}, {10, 10}, {10, 11}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = cluster::kmeans_fit(X, 2, seed);
        EXPECT_EQ(r.assignments[0], r.assignments[1]);
        EXPECT_EQ(r.assignments[2], r.assignments[3]);
        EXPECT_NE(r.assignments[0], r.assignments[2]);
        EXPECT_DOUBLE_EQ(r.inertia, 1.0);
        EXPECT_EQ(r.seed, seed);
    }
}

TEST(KMeans, SingleClusterAndOnePerPoint) {
    const Matrix X = {{1, 2}, {3, 4}, {5, 9}};
    const auto one = cluster::kmeans_fit(X, 1, 0);
    EXPECT_DOUBLE_EQ(one.centroids[0][0], 3.0);
    EXPECT_DOUBLE_EQ(one.centroids[0][1], 5.0);
    EXPECT_DOUBLE_EQ(one.inertia, 8.0 + 26.0);
    const auto all = cluster::kmeans_fit(X, 3, 0);
    EXPECT_EQ(all.inertia, 0.0);
    EXPECT_EQ(all.sizes, (std::vector<std::size_t>{1, 1, 1}));
}

TEST(KMeans, Errors) {
    const Matrix X = {{1}, {2}};
    EXPECT_THROW(cluster::kmeans_fit(X, 0, 0), Error);
    EXPECT_THROW(cluster::kmeans_fit(X, 3, 0), Error);
    const Matrix bad = {{1}, {std::nan("")}};
    EXPECT_THROW(cluster::kmeans_fit(bad, 1, 0), Error);
}

TEST(KMeans, InvariantsAndTrace) {
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 30, d = 1 + rng() % 4;
        const std::size_t k = 1 + rng() % std::min<std::size_t>(n, 5);
        const auto X = random_matrix(rng, n, d);
        const auto r = cluster::kmeans_fit(X, k, rng());
        std::size_t total = 0;
        for (auto s : r.sizes) total += s;
        EXPECT_EQ(total, n);
        for (auto a : r.assignments) EXPECT_LT(a, k);
        EXPECT_GE(r.inertia, 0.0);
        expect_non_increasing(r.inertia_trace);
        EXPECT_EQ(r.inertia, r.inertia_trace.back());
    }
}

TEST(KMeans, Deterministic) {
    std::mt19937_64 rng(83);
    const auto X = random_matrix(rng, 40, 3);
    const auto a = cluster::kmeans_best_of(X, 4, 99);
    const auto b = cluster::kmeans_best_of(X, 4, 99);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, PermutationInvariantUpToLabels) {
    const auto X = blobs(3, {{0, 0}, {8, 0}, {0, 8}}, 10, 0.5);
    std::vector<std::size_t> perm(X.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix Y;
    for (auto i : perm) Y.push_back(X[i]);
    const auto a = cluster::kmeans_best_of(X, 3, 0);
    const auto b = cluster::kmeans_best_of(Y, 3, 0);
    std::vector<std::size_t> mapped;
    for (auto i : perm) mapped.push_back(a.assignments[i]);
    EXPECT_EQ(canonical(mapped), canonical(b.assignments));
    EXPECT_NEAR(a.inertia, b.inertia, 1e-9);
}

TEST(KMeans, BestOfMatchesExhaustiveOptimum) {
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 8, d = 1 + rng() % 3;
        const std::size_t k = 1 + rng() % std::min<std::size_t>(n, 3);
        const auto X = random_matrix(rng, n, d);
        const auto r = cluster::kmeans_best_of(X, k, 0);
        const double want = oracle::optimal_inertia(X, k);
        EXPECT_NEAR(r.inertia, want, 1e-9 * std::max(1.0, want)) << "trial " << trial;
    }
}

TEST(Silhouette, SeparatedBlobs) {
    const auto X = blobs(7, {{0, 0}, {20, 20}}, 15, 0.5);
    const auto r = cluster::kmeans_best_of(X, 2, 0);
    EXPECT_GT(cluster::silhouette(X, r), 0.9);
}

TEST(Silhouette, SingletonsScoreZero) {
    const Matrix X = {{0}, {1}, {5}};
    const auto r = cluster::kmeans_fit(X, 3, 0);
    EXPECT_EQ(cluster::silhouette(X, r), 0.0);
}

TEST(Silhouette, UniformNoiseNearZeroAndOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        Matrix X(60, std::vector<double>(10));
        for (auto& row : X) {
            for (auto& v : row) v = mt::uniform(rng, 0.0, 1.0);
        }
        const auto r = cluster::kmeans_best_of(X, 2, seed);
        const double s = cluster::silhouette(X, r);
        EXPECT_LT(std::abs(s), 0.3);
        EXPECT_NEAR(s, oracle::silhouette(X, r.assignments, 2), 1e-12);
    }
}

TEST(Silhouette, RandomLabelsOracle) {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 20;
        const std::size_t k = 2 + rng() % (n - 1);
        const auto X = random_matrix(rng, n, 2);
        cluster::ClusterResult r;
        r.k = k;
        r.assignments.resize(n);
        for (auto& a : r.assignments) a = rng() % k;
        // silhouette is undefined with a single occupied cluster
        if (std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size() < 2) continue;
        EXPECT_NEAR(cluster::silhouette(X, r), oracle::silhouette(X, r.assignments, k), 1e-12);
    }
}

TEST(SelectK, ThreeBlobs) {
    const auto X = blobs(11, {{0, 0}, {10, 0}, {5, 9}}, 12, 0.6);
    const auto sel = cluster::select_k(X, 2, 6, 0);
    EXPECT_EQ(sel.best_k, 3u);
    EXPECT_EQ(sel.diagnostics.size(), 5u);
    for (const auto& d : sel.diagnostics) {
        if (d.k != 3) EXPECT_LT(d.silhouette, sel.diagnostics[1].silhouette);
    }
}

TEST(SelectK, TwoBlobs) {
    const auto X = blobs(13, {{0, 0, 0}, {9, 9, 9}}, 15, 0.6);
    EXPECT_EQ(cluster::select_k(X, 2, 6, 0).best_k, 2u);
}

TEST(SelectK, InvalidRange) {
    const auto X = blobs(13, {{0, 0}}, 10, 1.0);
    try {
        cluster::select_k(X, 5, 4, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidRange);
    }
    EXPECT_THROW(cluster::select_k(X, 1, 3, 0), Error);
    EXPECT_THROW(cluster::select_k(X, 2, 10, 0), Error);
}
