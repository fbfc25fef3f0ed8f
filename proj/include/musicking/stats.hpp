#ifndef MUSICKING_STATS_HPP
#define MUSICKING_STATS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "core.hpp"
#include "error.hpp"

namespace musicking::stats {

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double beta_continued_fraction(double a, double b, double x, double rel_tol) {
    constexpr double tiny = 1e-300;
    constexpr int max_iter = 100000;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < rel_tol) break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0, x in [0, 1].
inline double incomplete_beta(double a, double b, double x, double rel_tol = 1e-12) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "incomplete_beta domain: a, b > 0 and 0 <= x <= 1");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    // long double: the lgamma terms cancel heavily once a + b is large
    const long double la = a, lb = b, lx = x;
    const long double log_front =
        std::lgamma(la + lb) - std::lgamma(la) - std::lgamma(lb) + la * std::log(lx) + lb * std::log1p(-lx);
    const double front = static_cast<double>(std::exp(log_front));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_continued_fraction(a, b, x, rel_tol) / a;
    }
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x, rel_tol) / b;
}

/// P(F > f) for the F distribution with (df1, df2) degrees of freedom.
inline double f_survival(double f, double df1, double df2) {
    if (!(f > 0.0)) return 1.0;
    if (std::isinf(f)) return 0.0;
    // Survival = I_{df2 / (df2 + df1 f)}(df2 / 2, df1 / 2); evaluated directly
    // on the small tail so tiny p-values do not cancel against 1.
    const double x = df2 / (df2 + df1 * f);
    return incomplete_beta(df2 / 2.0, df1 / 2.0, x);
}

inline double f_cdf(double f, double df1, double df2) {
    if (!(f > 0.0)) return 0.0;
    const double x = df1 * f / (df1 * f + df2);
    return incomplete_beta(df1 / 2.0, df2 / 2.0, x);
}

struct AnovaResult {
    double f_statistic = 0.0;
    double p_value = 1.0;
    std::size_t df_between = 0;
    std::size_t df_within = 0;
    double ss_between = 0.0;
    double ss_within = 0.0;
    std::vector<double> group_means;
    std::vector<std::size_t> group_sizes;
    double grand_mean = 0.0;
};

/// Classic one-way ANOVA over unbalanced groups; nulls are ignored.
inline AnovaResult anova_oneway(std::span<const Series> groups) {
    if (groups.size() < 2) {
        throw Error(ErrorKind::TooFewGroups, "ANOVA needs at least 2 groups");
    }
    std::vector<std::vector<double>> data;
    data.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        data.push_back(present_values(groups[g]));
        if (data.back().size() < 2) {
            throw Error(ErrorKind::TooFewValues, "group " + std::to_string(g) + " has fewer than 2 values");
        }
    }

    AnovaResult r;
    std::size_t total = 0;
    double grand_sum = 0.0;
    for (const auto& d : data) {
        double sum = 0.0;
        for (double v : d) sum += v;
        r.group_means.push_back(sum / static_cast<double>(d.size()));
        r.group_sizes.push_back(d.size());
        grand_sum += sum;
        total += d.size();
    }
    r.grand_mean = grand_sum / static_cast<double>(total);
    for (std::size_t g = 0; g < data.size(); ++g) {
        const double dm = r.group_means[g] - r.grand_mean;
        r.ss_between += static_cast<double>(data[g].size()) * dm * dm;
        for (double v : data[g]) {
            r.ss_within += (v - r.group_means[g]) * (v - r.group_means[g]);
        }
    }
    if (!(r.ss_within > 0.0)) {
        throw Error(ErrorKind::DegenerateVariance, "every group is constant; F is undefined");
    }
    r.df_between = data.size() - 1;
    r.df_within = total - data.size();
    const double ms_between = r.ss_between / static_cast<double>(r.df_between);
    const double ms_within = r.ss_within / static_cast<double>(r.df_within);
    r.f_statistic = ms_between / ms_within;
    r.p_value = f_survival(r.f_statistic, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
    return r;
}

} // namespace musicking::stats

#endif
