#pragma once

// Brute-force dense-grid reference implementations used to validate the
// exact breakpoint algebra. Grids are double-valued at 1 ns resolution;
// random test curves keep breakpoints on integer nanoseconds so grid extrema
// coincide with the exact ones up to floating-point noise.

#include <tsn/curve.hpp>
#include <tsn/minplus.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline std::vector<double> grid(const tsn::Curve& c) {
    std::int64_t h = tsn::floor_int(c.horizon());
    std::vector<double> g(static_cast<std::size_t>(h) + 1);
    g[0] = 0.0;
    const auto& segs = c.segments();
    std::size_t si = 0;
    for (std::int64_t t = 1; t <= h; ++t) {
        while (si + 1 < segs.size() && segs[si + 1].start < t) ++si;
        const tsn::Segment& s = segs[si];
        g[static_cast<std::size_t>(t)] =
            tsn::to_double(s.value) + tsn::to_double(s.slope) * (t - tsn::to_double(s.start));
    }
    return g;
}

inline double conv_at(const std::vector<double>& x, const std::vector<double>& y, std::int64_t t) {
    double best = x[static_cast<std::size_t>(t)] + y[0];
    for (std::int64_t s = 0; s <= t; ++s)
        best = std::min(best, x[static_cast<std::size_t>(t - s)] + y[static_cast<std::size_t>(s)]);
    return best;
}

inline double deconv_at(const std::vector<double>& x, const std::vector<double>& y,
                        std::int64_t t) {
    std::int64_t h = static_cast<std::int64_t>(x.size()) - 1;
    double best = x[static_cast<std::size_t>(t)] - y[0];
    for (std::int64_t u = 0; u <= h - t; ++u)
        best = std::max(best, x[static_cast<std::size_t>(t + u)] - y[static_cast<std::size_t>(u)]);
    return best;
}

inline double h_dev(const std::vector<double>& x, const std::vector<double>& y) {
    std::int64_t h = static_cast<std::int64_t>(x.size()) - 1;
    double best = 0.0;
    const double eps = 1e-6;
    for (std::int64_t t = 0; t <= h; ++t) {
        double level = x[static_cast<std::size_t>(t)];
        auto it = std::lower_bound(y.begin(), y.end(), level - eps);
        if (it == y.end()) return -1.0;  // not attained
        double d = static_cast<double>(it - y.begin()) - static_cast<double>(t);
        best = std::max(best, d);
    }
    return best;
}

inline double v_dev(const std::vector<double>& x, const std::vector<double>& y) {
    double best = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) best = std::max(best, x[t] - y[t]);
    return best;
}

// Random non-decreasing piecewise-linear curve with integer-ns breakpoints
// and gentle rational slopes (so grid extrema match exact ones within 1 bit).
inline tsn::Curve random_curve(std::mt19937_64& rng, std::int64_t horizon_ns) {
    std::uniform_int_distribution<int> npieces(1, 6);
    std::uniform_int_distribution<std::int64_t> tdist(1, horizon_ns - 1);
    std::uniform_int_distribution<int> jump(0, 40000);
    std::uniform_int_distribution<int> snum(0, 4);
    std::uniform_int_distribution<int> sden(10, 25);
    int n = npieces(rng);
    std::vector<std::int64_t> starts{0};
    for (int i = 0; i < n; ++i) starts.push_back(tdist(rng));
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    std::vector<tsn::Segment> segs;
    tsn::Rat v = 0;
    tsn::Rat prev_start = 0;
    tsn::Rat prev_slope = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        tsn::Rat st(starts[i]);
        v += prev_slope * (st - prev_start);
        v += jump(rng);
        tsn::Rat slope(snum(rng), sden(rng));
        segs.push_back({st, v, slope});
        prev_start = st;
        prev_slope = slope;
    }
    return tsn::Curve(std::move(segs), tsn::Rat(horizon_ns));
}

}  // namespace oracle
