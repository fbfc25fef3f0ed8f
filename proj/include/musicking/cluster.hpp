#ifndef MUSICKING_CLUSTER_HPP
#define MUSICKING_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "numeric.hpp"
#include "timing.hpp"

namespace musicking::cluster {

using Matrix = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Per-bar features

struct BarFeatureOptions {
    timing::AlignmentOptions alignment;
    std::optional<int> chorus;  // restrict to one chorus (per-chorus mode)
};

/// [mean, std, min, max] of `column_name` per bar; bars without records are
/// dropped and listed in `dropped`. Values are raw; see standardize().
inline BarFeatureMatrix bar_features(const Session& s, const BeatGrid& grid, std::string_view column_name,
                                     const BarFeatureOptions& opt = {}) {
    const std::string name = canonical_column(column_name);
    std::vector<std::vector<double>> bars;
    if (opt.chorus) {
        Session filtered;
        filtered.session_id = s.session_id;
        for (const auto& r : s.records) {
            if (r.chorus_id == opt.chorus) filtered.records.push_back(r);
        }
        auto alignment = opt.alignment;
        alignment.include_nonperformance = true;
        (void)column(s, name);  // unknown columns fail even when the filter empties the session
        bars = timing::values_per_bar(filtered, grid, name, alignment);
    } else {
        bars = timing::values_per_bar(s, grid, name, opt.alignment);
    }

    BarFeatureMatrix m;
    m.feature_names = {name + "_mean", name + "_std", name + "_min", name + "_max"};
    for (std::size_t b = 0; b < bars.size(); ++b) {
        const auto& v = bars[b];
        if (v.empty()) {
            m.dropped.push_back(b);
            continue;
        }
        m.bar_index.push_back(b);
        m.rows.push_back({timing::reduce(v, timing::BarStat::Mean), timing::reduce(v, timing::BarStat::Std),
                          timing::reduce(v, timing::BarStat::Min), timing::reduce(v, timing::BarStat::Max)});
    }
    return m;
}

/// Per-column z-scores (population std). Zero-variance columns become zeros.
inline BarFeatureMatrix standardize(BarFeatureMatrix m) {
    if (m.rows.empty()) return m;
    const std::size_t d = m.feature_names.size();
    const auto n = static_cast<double>(m.rows.size());
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const auto& r : m.rows) mean += r[j];
        mean /= n;
        double ss = 0.0;
        for (const auto& r : m.rows) ss += (r[j] - mean) * (r[j] - mean);
        const double sd = std::sqrt(ss / n);
        for (auto& r : m.rows) {
            r[j] = sd > 0.0 ? (r[j] - mean) / sd : 0.0;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// k-means

struct ClusterResult {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    Matrix centroids;
    double inertia = 0.0;
    std::vector<std::size_t> sizes;
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    std::vector<double> inertia_trace;  // SS around the updated centroids, per iteration
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Raw engine output only, so seeded runs agree across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

inline Matrix kmeans_plus_plus(const Matrix& X, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = X.size();
    std::vector<bool> chosen(n, false);
    std::vector<std::size_t> centers;
    centers.push_back(uniform_index(rng, n));
    chosen[centers.back()] = true;
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        const auto& last = X[centers.back()];
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(X[i], last));
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double u = unit_uniform(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > u) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // every remaining point coincides with a center
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) free.push_back(i);
            }
            pick = free[uniform_index(rng, free.size())];
        }
        centers.push_back(pick);
        chosen[pick] = true;
    }
    Matrix out;
    for (auto c : centers) out.push_back(X[c]);
    return out;
}

inline std::size_t nearest(std::span<const double> x, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = squared_distance(x, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = squared_distance(x, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace detail

/// Hartigan single-point transfers: moves any point whose relocation strictly
/// lowers the objective, until none does. Refines a Lloyd fixed point.
inline bool hartigan_pass(const Matrix& X, std::vector<std::size_t>& assignments, Matrix& centroids,
                          std::vector<std::size_t>& sizes) {
    const std::size_t d = X.front().size();
    bool moved_any = false;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const std::size_t from = assignments[i];
        if (sizes[from] < 2) continue;
        const double nf = static_cast<double>(sizes[from]);
        const double remove_gain = nf / (nf - 1.0) * detail::squared_distance(X[i], centroids[from]);
        std::size_t to = from;
        double best_cost = remove_gain;
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (c == from) continue;
            const double nc = static_cast<double>(sizes[c]);
            const double add_cost = nc / (nc + 1.0) * detail::squared_distance(X[i], centroids[c]);
            if (add_cost < best_cost * (1.0 - 1e-12)) {
                best_cost = add_cost;
                to = c;
            }
        }
        if (to == from) continue;
        const double nt = static_cast<double>(sizes[to]);
        for (std::size_t j = 0; j < d; ++j) {
            centroids[from][j] = (centroids[from][j] * nf - X[i][j]) / (nf - 1.0);
            centroids[to][j] = (centroids[to][j] * nt + X[i][j]) / (nt + 1.0);
        }
        --sizes[from];
        ++sizes[to];
        assignments[i] = to;
        moved_any = true;
    }
    return moved_any;
}

inline void check_matrix(const Matrix& X) {
    if (X.empty()) return;
    const std::size_t d = X.front().size();
    for (const auto& row : X) {
        if (row.size() != d) {
            throw Error(ErrorKind::InvalidArgument, "ragged feature matrix");
        }
        for (double v : row) {
            if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "feature matrix has non-finite entries");
        }
    }
}

inline constexpr double kDefaultTol = 1e-6;
inline constexpr std::size_t kDefaultMaxIter = 300;

/// k-means++ seeding followed by Lloyd iterations until the largest centroid
/// shift drops below `tol`. An emptied cluster takes the point farthest from
/// its current centroid. A converged fit is then polished with Hartigan
/// transfers; each accepted transfer appends to the inertia trace.
inline ClusterResult kmeans_fit(const Matrix& X, std::size_t k, std::uint64_t seed,
                                std::size_t max_iter = kDefaultMaxIter, double tol = kDefaultTol) {
    if (k < 1) throw Error(ErrorKind::InvalidK, "k must be >= 1");
    if (X.size() < k) throw Error(ErrorKind::TooFewRows, "fewer rows than clusters");
    check_matrix(X);

    const std::size_t n = X.size();
    const std::size_t d = X.front().size();
    std::mt19937_64 rng(seed);

    ClusterResult r;
    r.k = k;
    r.seed = seed;
    r.centroids = detail::kmeans_plus_plus(X, k, rng);
    r.assignments.assign(n, 0);

    for (std::size_t it = 0; it < std::max<std::size_t>(max_iter, 1); ++it) {
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            r.assignments[i] = detail::nearest(X[i], r.centroids);
            ++sizes[r.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[r.assignments[i]] < 2) continue;
                const double dist = detail::squared_distance(X[i], r.centroids[r.assignments[i]]);
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            --sizes[r.assignments[far]];
            r.assignments[far] = c;
            sizes[c] = 1;
            r.centroids[c] = X[far];
        }

        Matrix updated(k, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) updated[r.assignments[i]][j] += X[i][j];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) updated[c][j] /= static_cast<double>(sizes[c]);
            shift = std::max(shift, std::sqrt(detail::squared_distance(updated[c], r.centroids[c])));
        }
        r.centroids = std::move(updated);
        r.sizes = std::move(sizes);

        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            inertia += detail::squared_distance(X[i], r.centroids[r.assignments[i]]);
        }
        r.inertia_trace.push_back(inertia);
        r.inertia = inertia;
        r.iterations = it + 1;
        if (shift < tol) {
            r.converged = true;
            break;
        }
    }

    std::size_t polish = 0;
    while (polish++ < max_iter && hartigan_pass(X, r.assignments, r.centroids, r.sizes)) {
        // recompute exactly so drift from the incremental updates never accumulates
        Matrix exact(k, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) exact[r.assignments[i]][j] += X[i][j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) exact[c][j] /= static_cast<double>(r.sizes[c]);
        }
        r.centroids = std::move(exact);
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            inertia += detail::squared_distance(X[i], r.centroids[r.assignments[i]]);
        }
        r.inertia_trace.push_back(inertia);
        r.inertia = inertia;
    }
    return r;
}

/// Best (lowest-inertia) of `n_init` fits seeded seed, seed + 1, ...
inline ClusterResult kmeans_best_of(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t n_init = 10,
                                    std::size_t max_iter = kDefaultMaxIter, double tol = kDefaultTol) {
    ClusterResult best;
    for (std::size_t s = 0; s < std::max<std::size_t>(n_init, 1); ++s) {
        auto r = kmeans_fit(X, k, seed + s, max_iter, tol);
        if (s == 0 || r.inertia < best.inertia) best = std::move(r);
    }
    return best;
}

/// Mean silhouette with Euclidean distance; points in singleton clusters score 0.
inline double silhouette(const Matrix& X, const ClusterResult& result) {
    const std::size_t n = X.size();
    if (result.k < 2 || result.k > n || result.assignments.size() != n) {
        throw Error(ErrorKind::InvalidK, "silhouette needs 2 <= k <= rows");
    }
    std::vector<std::size_t> sizes(result.k, 0);
    for (auto a : result.assignments) ++sizes[a];

    double total = 0.0;
    std::vector<double> sum_to(result.k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = result.assignments[i];
        if (sizes[own] < 2) continue;
        std::fill(sum_to.begin(), sum_to.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sum_to[result.assignments[j]] += std::sqrt(detail::squared_distance(X[i], X[j]));
        }
        const double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < result.k; ++c) {
            if (c != own && sizes[c] > 0) b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
        }
        if (std::isinf(b)) continue;
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

struct KDiagnostic {
    std::size_t k = 0;
    double inertia = 0.0;
    double silhouette = 0.0;
};

struct KSelection {
    std::size_t best_k = 0;
    std::vector<KDiagnostic> diagnostics;
    ClusterResult best;
};

/// Fits every k in [k_min, k_max] and picks the highest silhouette (smaller k on ties).
inline KSelection select_k(const Matrix& X, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                           std::size_t n_init = 10) {
    if (k_min < 2 || k_min > k_max || X.size() < 2 || k_max > X.size() - 1) {
        throw Error(ErrorKind::InvalidRange, "k range must satisfy 2 <= k_min <= k_max <= rows - 1");
    }
    KSelection sel;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto r = kmeans_best_of(X, k, seed, n_init);
        const double score = silhouette(X, r);
        sel.diagnostics.push_back({k, r.inertia, score});
        if (score > best_score) {
            best_score = score;
            sel.best_k = k;
            sel.best = std::move(r);
        }
    }
    return sel;
}

} // namespace musicking::cluster

#endif
