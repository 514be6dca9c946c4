#pragma once

#include "credit.hpp"  // Interval
#include "rational.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct GclError : std::runtime_error {
    explicit GclError(const std::string& what) : std::runtime_error(what) {}
};

struct GateSpec {
    std::string id;
    Rat period;  // T ns
    Rat length;  // L ns
    std::vector<Interval> domain;  // allowed start times J; empty = [0, T)

    void validate() const {
        if (period <= 0) throw GclError("gate period must be positive");
        if (length <= 0 || length > period) throw GclError("gate length must be in (0, T]");
        for (const auto& iv : domain)
            if (iv.begin < 0 || iv.end > period || iv.end < iv.begin)
                throw GclError("start domain outside [0, T)");
    }
};

inline Rat rat_gcd(const Rat& a, const Rat& b) {
    using boost::multiprecision::cpp_int;
    cpp_int n = gcd(numerator(a) * denominator(b), numerator(b) * denominator(a));
    Rat r(n);
    return r / Rat(denominator(a) * denominator(b));
}

inline Rat rat_lcm(const Rat& a, const Rat& b) {
    using boost::multiprecision::cpp_int;
    cpp_int n = lcm(numerator(a) * denominator(b), numerator(b) * denominator(a));
    Rat r(n);
    return r / Rat(denominator(a) * denominator(b));
}

inline Rat rat_mod(const Rat& x, const Rat& m) {
    Rat r = x - Rat(floor_int(x / m)) * m;
    if (r < 0) r += m;
    if (r >= m) r -= m;
    return r;
}

// Largest stretch the pair admits at these starts: both eta-scaled windows
// fit between consecutive openings iff eta*L_i <= m and eta*L_j <= g - m.
struct PairStretch {
    Rat g;    // gcd of the two periods
    Rat m;    // (t_j - t_i) mod g
    Rat eta;  // min(m/L_i, (g - m)/L_j); 0 when the starts coincide mod g
    std::int64_t q;  // quotient floor((t_j - t_i)/g)
};

inline PairStretch pair_stretch(const GateSpec& gi, const Rat& ti, const GateSpec& gj,
                                const Rat& tj) {
    PairStretch ps;
    ps.g = rat_gcd(gi.period, gj.period);
    ps.m = rat_mod(tj - ti, ps.g);
    ps.q = floor_int((tj - ti) / ps.g);
    ps.eta = (ps.m == 0) ? Rat(0) : std::min(ps.m / gi.length, (ps.g - ps.m) / gj.length);
    return ps;
}

inline bool check_nonoverlap(const GateSpec& gi, const Rat& ti, const GateSpec& gj,
                             const Rat& tj) {
    PairStretch ps = pair_stretch(gi, ti, gj, tj);
    return gi.length <= ps.m && ps.m <= ps.g - gj.length;
}

struct GateSchedule {
    std::vector<Rat> starts;  // aligned with the gate list
    Rat eta = 0;              // achieved stretch
};

struct SynthesisResult {
    bool feasible = false;  // some placement with eta > 0 exists
    bool shortened = false; // eta < 1: only reduced budgets fit
    GateSchedule schedule;
    std::optional<std::pair<std::size_t, std::size_t>> blocking_pair;
};

namespace detail {

inline Rat schedule_eta(const std::vector<GateSpec>& gates, const std::vector<Rat>& starts,
                        std::size_t upto, const Rat& eta_max) {
    Rat eta = eta_max;
    for (std::size_t i = 0; i < upto; ++i)
        for (std::size_t j = i + 1; j < upto; ++j)
            eta = std::min(eta, pair_stretch(gates[i], starts[i], gates[j], starts[j]).eta);
    return eta;
}

inline std::vector<Rat> grid_points(const GateSpec& g, const Rat& grid) {
    std::vector<Interval> dom = g.domain;
    if (dom.empty()) dom.push_back({Rat(0), g.period});
    std::vector<Rat> pts;
    for (const auto& iv : dom) {
        Rat t = Rat(ceil_int(iv.begin / grid)) * grid;
        if (t > iv.end) t = iv.begin;
        bool any = false;
        for (; t < iv.end || (!any && t <= iv.end); t += grid) {
            pts.push_back(t);
            any = true;
        }
        if (!any) pts.push_back(iv.begin);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// exact single-coordinate maximization of the schedule stretch: eta(t_k) is
// a min of piecewise-linear functions of t_k, so the optimum sits at a
// domain endpoint or at a vertex where two binding constraints cross
inline void refine_coordinate(const std::vector<GateSpec>& gates, std::vector<Rat>& starts,
                              std::size_t k, const Rat& eta_max) {
    std::vector<Rat> cands{starts[k]};
    std::vector<Interval> dom = gates[k].domain;
    if (dom.empty()) dom.push_back({Rat(0), gates[k].period});
    for (const auto& iv : dom) cands.push_back(iv.begin);
    for (std::size_t j = 0; j < gates.size(); ++j) {
        if (j == k) continue;
        Rat g = rat_gcd(gates[k].period, gates[j].period);
        // vertex of min(m/L_k, (g-m)/L_j) with m = (t_j - t_k) mod g
        Rat mstar = g * gates[k].length / (gates[k].length + gates[j].length);
        // and of the reversed orientation min(m'/L_j, (g-m')/L_k)
        Rat mstar2 = g - g * gates[j].length / (gates[j].length + gates[k].length);
        for (const Rat& m : {mstar, mstar2}) {
            Rat base = rat_mod(starts[j] - m, g);
            for (const auto& iv : dom) {
                Rat t = iv.begin + rat_mod(base - iv.begin, g);
                for (; t <= iv.end; t += g) cands.push_back(t);
            }
        }
    }
    auto ok = [&](const Rat& t) {
        for (const auto& iv : dom)
            if (t >= iv.begin && t <= iv.end && t < gates[k].period) return true;
        return false;
    };
    Rat best_eta(-1), best_t = starts[k];
    std::sort(cands.begin(), cands.end());
    for (const Rat& t : cands) {
        if (!ok(t)) continue;
        std::vector<Rat> trial = starts;
        trial[k] = t;
        Rat e = schedule_eta(gates, trial, gates.size(), eta_max);
        if (e > best_eta) {
            best_eta = e;
            best_t = t;
        }
    }
    starts[k] = best_t;
}

}  // namespace detail

// Exhaustive depth-first search over discretized start times maximizing the
// exact pairwise stretch, followed by coordinate-wise exact vertex
// refinement. Deterministic: first (lexicographically smallest) maximizer
// wins.
inline SynthesisResult synthesize(const std::vector<GateSpec>& gates, const Rat& grid = Rat(1000),
                                  const Rat& eta_max = Rat(1000)) {
    if (gates.empty()) throw GclError("no gates to schedule");
    if (gates.size() > 16) throw GclError("exact search limited to 16 gates");
    for (const auto& g : gates) g.validate();

    std::vector<std::vector<Rat>> pts;
    for (const auto& g : gates) pts.push_back(detail::grid_points(g, grid));
    // the stretch only depends on start differences: with unconstrained
    // domains the first gate can be pinned
    bool translation_invariant = true;
    for (const auto& g : gates)
        if (!g.domain.empty()) translation_invariant = false;
    if (translation_invariant && !pts[0].empty()) pts[0] = {pts[0].front()};

    std::vector<Rat> starts(gates.size(), Rat(0)), best;
    Rat best_eta(-1);
    auto dfs = [&](auto&& self, std::size_t k, const Rat& prefix_eta) -> void {
        if (k == gates.size()) {
            if (prefix_eta > best_eta) {
                best_eta = prefix_eta;
                best = starts;
            }
            return;
        }
        for (const Rat& t : pts[k]) {
            starts[k] = t;
            Rat e = prefix_eta;
            for (std::size_t i = 0; i < k && e > best_eta; ++i)
                e = std::min(e, pair_stretch(gates[i], starts[i], gates[k], t).eta);
            if (e <= best_eta) continue;
            self(self, k + 1, e);
        }
    };
    dfs(dfs, 0, eta_max);

    SynthesisResult res;
    if (best.empty() || best_eta <= 0) {
        // no placement separates some pair: name the tightest one
        res.feasible = false;
        if (!best.empty()) {
            for (std::size_t i = 0; i < gates.size() && !res.blocking_pair; ++i)
                for (std::size_t j = i + 1; j < gates.size(); ++j)
                    if (pair_stretch(gates[i], best[i], gates[j], best[j]).eta <= 0) {
                        res.blocking_pair = {i, j};
                        break;
                    }
            res.schedule.starts = best;
        }
        return res;
    }
    // exact vertex polish (coordinate ascent, terminates at a fixpoint)
    for (int pass = 0; pass < 8; ++pass) {
        Rat before = detail::schedule_eta(gates, best, gates.size(), eta_max);
        for (std::size_t k = 0; k < gates.size(); ++k)
            detail::refine_coordinate(gates, best, k, eta_max);
        if (detail::schedule_eta(gates, best, gates.size(), eta_max) == before) break;
    }
    res.feasible = true;
    res.schedule.starts = best;
    res.schedule.eta = detail::schedule_eta(gates, best, gates.size(), eta_max);
    res.shortened = res.schedule.eta < 1;
    return res;
}

struct Overlap {
    std::size_t gate_i, gate_j;
    Rat begin, end;
};

// Exhaustive interval-arithmetic check over one full lcm hyperperiod of all
// gate periods, with the schedule's eta-scaled window lengths.
inline std::vector<Overlap> verify_schedule(const GateSchedule& schedule,
                                            const std::vector<GateSpec>& gates) {
    if (schedule.starts.size() != gates.size())
        throw GclError("schedule/gate arity mismatch");
    Rat big = 1;
    for (const auto& g : gates) big = rat_lcm(big, g.period);
    Rat count = 0;
    for (const auto& g : gates) count += big / g.period;
    if (count > 200000) throw GclError("hyperperiod too large; coarsen the time base");

    Rat eta = schedule.eta > 0 ? schedule.eta : Rat(1);
    std::vector<Overlap> report;
    for (std::size_t i = 0; i < gates.size(); ++i) {
        for (std::size_t j = i + 1; j < gates.size(); ++j) {
            Rat li = eta * gates[i].length, lj = eta * gates[j].length;
            Rat si = rat_mod(schedule.starts[i], gates[i].period);
            Rat sj = rat_mod(schedule.starts[j], gates[j].period);
            for (Rat a = si; a < big; a += gates[i].period) {
                // only openings of j that can reach [a, a + li)
                Rat b0 = sj + Rat(floor_int((a - lj - sj) / gates[j].period)) * gates[j].period;
                for (Rat b = b0; b < a + li; b += gates[j].period) {
                    Rat lo = std::max(a, b), hi = std::min(a + li, b + lj);
                    if (lo < hi) report.push_back({i, j, lo, hi});
                }
            }
        }
    }
    std::sort(report.begin(), report.end(),
              [](const Overlap& x, const Overlap& y) { return x.begin < y.begin; });
    return report;
}

}  // namespace tsn
