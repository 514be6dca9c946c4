#pragma once

#include "rational.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tsn {

struct CurveError : std::runtime_error {
    explicit CurveError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an operation needs curve values beyond the stored horizon.
struct HorizonExhausted : CurveError {
    explicit HorizonExhausted(const std::string& what) : CurveError(what) {}
};

// One linear piece. `value` is the right limit at `start`; the curve is
// left-continuous everywhere and evaluates to 0 at t = 0.
struct Segment {
    Rat start;
    Rat value;
    Rat slope;
};

// Finite-horizon piecewise-linear function. Arrival and service curves are
// non-negative and non-decreasing; the same representation also carries the
// intermediate (possibly dipping) bracket expressions used to assemble
// service curves, so monotonicity is checked on demand, not in the
// constructor.
class Curve {
  public:
    Curve(std::vector<Segment> segs, Rat horizon)
        : segs_(std::move(segs)), horizon_(std::move(horizon)) {
        if (horizon_ <= 0) throw CurveError("curve horizon must be positive");
        if (segs_.empty()) throw CurveError("curve needs at least one segment");
        if (segs_[0].start != 0) throw CurveError("first segment must start at 0");
        for (std::size_t i = 1; i < segs_.size(); ++i) {
            if (segs_[i].start <= segs_[i - 1].start)
                throw CurveError("segment starts must be strictly increasing");
        }
        while (!segs_.empty() && segs_.back().start >= horizon_) segs_.pop_back();
        normalize();
    }

    static Curve zero(const Rat& horizon) {
        return Curve({{Rat(0), Rat(0), Rat(0)}}, horizon);
    }

    // value0 + slope * t for t > 0 (and 0 at t = 0).
    static Curve affine(const Rat& value0, const Rat& slope, const Rat& horizon) {
        return Curve({{Rat(0), value0, slope}}, horizon);
    }

    const std::vector<Segment>& segments() const { return segs_; }
    const Rat& horizon() const { return horizon_; }

    // Left-continuous evaluation; value(0) = 0 by causality.
    Rat value(const Rat& t) const {
        check_domain(t);
        if (t == 0) return Rat(0);
        const Segment& s = segs_[index_left(t)];
        return s.value + s.slope * (t - s.start);
    }

    // Right limit at t (the value "just after" t).
    Rat right_value(const Rat& t) const {
        check_domain(t);
        const Segment& s = segs_[index_right(t)];
        return s.value + s.slope * (t - s.start);
    }

    Rat slope_after(const Rat& t) const {
        check_domain(t);
        return segs_[index_right(t)].slope;
    }

    Rat end_slope() const { return segs_.back().slope; }

    bool non_decreasing() const {
        Rat prev = 0;
        for (std::size_t i = 0; i < segs_.size(); ++i) {
            if (segs_[i].slope < 0) return false;
            if (segs_[i].value < prev) return false;
            Rat end = (i + 1 < segs_.size()) ? segs_[i + 1].start : horizon_;
            prev = segs_[i].value + segs_[i].slope * (end - segs_[i].start);
        }
        return true;
    }

    bool non_negative() const {
        for (const Segment& s : segs_) {
            if (s.value < 0) return false;
        }
        return non_decreasing() ? true : min_value() >= 0;
    }

    Rat min_value() const {
        Rat m = 0;
        for (std::size_t i = 0; i < segs_.size(); ++i) {
            Rat end = (i + 1 < segs_.size()) ? segs_[i + 1].start : horizon_;
            m = std::min(m, std::min(segs_[i].value,
                                     segs_[i].value + segs_[i].slope * (end - segs_[i].start)));
        }
        return m;
    }

    void require_valid(const char* what = "curve") const {
        if (!non_decreasing() || segs_[0].value < 0)
            throw CurveError(std::string(what) + " is not a non-negative non-decreasing curve");
    }

    Curve scaled(const Rat& f) const {
        std::vector<Segment> out = segs_;
        for (Segment& s : out) {
            s.value *= f;
            s.slope *= f;
        }
        return Curve(std::move(out), horizon_);
    }

    Curve plus_const(const Rat& c) const {
        std::vector<Segment> out = segs_;
        for (Segment& s : out) s.value += c;
        return Curve(std::move(out), horizon_);
    }

    Curve truncated(const Rat& horizon) const {
        if (horizon > horizon_)
            throw HorizonExhausted("cannot extend a curve beyond its horizon");
        return Curve(segs_, horizon);
    }

    // Non-decreasing closure: t -> sup of the curve over (0, t].
    Curve closure() const {
        std::vector<Segment> out;
        Rat m = segs_[0].value;
        for (std::size_t i = 0; i < segs_.size(); ++i) {
            const Segment& s = segs_[i];
            Rat end = (i + 1 < segs_.size()) ? segs_[i + 1].start : horizon_;
            if (s.value >= m) {
                if (s.slope >= 0) {
                    out.push_back({s.start, s.value, s.slope});
                    m = s.value + s.slope * (end - s.start);
                } else {
                    out.push_back({s.start, s.value, Rat(0)});
                    m = s.value;
                }
            } else if (s.slope > 0 && s.value + s.slope * (end - s.start) > m) {
                // below the running sup: flat until the piece catches up
                Rat cross = s.start + (m - s.value) / s.slope;
                out.push_back({s.start, m, Rat(0)});
                out.push_back({cross, m, s.slope});
                m = s.value + s.slope * (end - s.start);
            } else {
                out.push_back({s.start, m, Rat(0)});
            }
        }
        return Curve(std::move(out), horizon_);
    }

    Curve clamped_nonneg() const;

    bool operator==(const Curve& o) const {
        return horizon_ == o.horizon_ && segs_.size() == o.segs_.size() &&
               std::equal(segs_.begin(), segs_.end(), o.segs_.begin(),
                          [](const Segment& a, const Segment& b) {
                              return a.start == b.start && a.value == b.value &&
                                     a.slope == b.slope;
                          });
    }

  private:
    void check_domain(const Rat& t) const {
        if (t < 0) throw CurveError("evaluation at negative time");
        if (t > horizon_)
            throw HorizonExhausted("evaluation at t=" + rat_str(t) + " beyond horizon " +
                                   rat_str(horizon_));
    }

    // last segment with start < t (segment 0 for t at/before its start)
    std::size_t index_left(const Rat& t) const {
        std::size_t lo = 0, hi = segs_.size();
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (segs_[mid].start < t)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    // last segment with start <= t
    std::size_t index_right(const Rat& t) const {
        std::size_t lo = 0, hi = segs_.size();
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (segs_[mid].start <= t)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    void normalize() {
        std::vector<Segment> out;
        out.reserve(segs_.size());
        for (const Segment& s : segs_) {
            if (!out.empty()) {
                const Segment& p = out.back();
                if (s.slope == p.slope && s.value == p.value + p.slope * (s.start - p.start))
                    continue;
            }
            out.push_back(s);
        }
        segs_ = std::move(out);
    }

    std::vector<Segment> segs_;
    Rat horizon_;
};

enum class CombineMode { Min, Max };

// Pointwise min/max of two curves over the smaller horizon, inserting exact
// crossing breakpoints.
inline Curve combine(const Curve& a, const Curve& b, CombineMode mode) {
    Rat h = std::min(a.horizon(), b.horizon());
    std::vector<Rat> starts;
    for (const Segment& s : a.segments())
        if (s.start < h) starts.push_back(s.start);
    for (const Segment& s : b.segments())
        if (s.start < h) starts.push_back(s.start);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    const bool want_min = (mode == CombineMode::Min);
    std::vector<Segment> out;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        const Rat& s = starts[k];
        Rat e = (k + 1 < starts.size()) ? starts[k + 1] : h;
        Rat va = a.right_value(s), sa = a.slope_after(s);
        Rat vb = b.right_value(s), sb = b.slope_after(s);
        bool a_wins;
        if (va != vb)
            a_wins = want_min ? (va < vb) : (va > vb);
        else
            a_wins = want_min ? (sa <= sb) : (sa >= sb);
        Rat v = a_wins ? va : vb, sl = a_wins ? sa : sb;
        Rat vo = a_wins ? vb : va, so = a_wins ? sb : sa;
        out.push_back({s, v, sl});
        if (sa != sb && va != vb) {
            Rat cross = s + (vo - v) / (sl - so);
            if (cross > s && cross < e) out.push_back({cross, v + sl * (cross - s), so});
        }
    }
    return Curve(std::move(out), h);
}

inline Curve curve_min(const Curve& a, const Curve& b) { return combine(a, b, CombineMode::Min); }
inline Curve curve_max(const Curve& a, const Curve& b) { return combine(a, b, CombineMode::Max); }

inline Curve Curve::clamped_nonneg() const {
    return curve_max(*this, Curve::zero(horizon_));
}

inline Curve add(const Curve& a, const Curve& b) {
    Rat h = std::min(a.horizon(), b.horizon());
    std::vector<Rat> starts;
    for (const Segment& s : a.segments())
        if (s.start < h) starts.push_back(s.start);
    for (const Segment& s : b.segments())
        if (s.start < h) starts.push_back(s.start);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    std::vector<Segment> out;
    for (const Rat& s : starts)
        out.push_back({s, a.right_value(s) + b.right_value(s), a.slope_after(s) + b.slope_after(s)});
    return Curve(std::move(out), h);
}

inline Curve subtract(const Curve& a, const Curve& b) { return add(a, b.scaled(Rat(-1))); }

// Replace r with combine(r, s) on the window (from, to], keeping r elsewhere.
inline Curve splice_combine(const Curve& r, const Curve& s, const Rat& from_in, const Rat& to_in,
                            CombineMode mode) {
    Curve c = combine(r, s, mode);
    Rat h = r.horizon();
    Rat from = std::min(from_in, h), to = std::min(to_in, h);
    std::vector<Segment> out;
    auto copy_window = [&out](const Curve& src, const Rat& a, const Rat& b) {
        if (a >= b) return;
        out.push_back({a, src.right_value(a), src.slope_after(a)});
        for (const Segment& seg : src.segments())
            if (seg.start > a && seg.start < b) out.push_back(seg);
    };
    copy_window(r, Rat(0), from);
    copy_window(c, from, to);
    copy_window(r, to, h);
    if (out.empty() || out[0].start != 0) out.insert(out.begin(), {Rat(0), r.right_value(Rat(0)), r.slope_after(Rat(0))});
    return Curve(std::move(out), h);
}

// t -> x(t + dt) for t in [0, x.horizon - dt]
inline Curve shift_left(const Curve& x, const Rat& dt) {
    if (dt < 0 || dt >= x.horizon()) throw CurveError("shift_left beyond horizon");
    std::vector<Segment> out;
    out.push_back({Rat(0), x.right_value(dt), x.slope_after(dt)});
    for (const Segment& s : x.segments())
        if (s.start > dt) out.push_back({s.start - dt, s.value, s.slope});
    return Curve(std::move(out), x.horizon() - dt);
}

// t -> x(t - dt) for t > dt, and `fill` (constant) for t <= dt
inline Curve shift_right(const Curve& x, const Rat& dt, const Rat& horizon,
                         const Rat& fill = Rat(0)) {
    if (dt < 0) throw CurveError("negative shift");
    std::vector<Segment> out;
    if (dt > 0) out.push_back({Rat(0), fill, Rat(0)});
    for (const Segment& s : x.segments()) {
        Rat st = s.start + dt;
        if (st < horizon) out.push_back({st, s.value, s.slope});
    }
    if (out.empty() || out[0].start != 0) out.insert(out.begin(), {Rat(0), fill, Rat(0)});
    return Curve(std::move(out), horizon);
}

// t -> c - y(anchor - t) for t in [0, anchor] (time reversal), extended flat
// at its last value up to `horizon`.
inline Curve reversed_from(const Curve& y, const Rat& anchor, const Rat& c, const Rat& horizon) {
    if (anchor < 0 || anchor > y.horizon()) throw CurveError("reversal anchor outside horizon");
    std::vector<Segment> out;
    if (anchor == 0) return Curve({{Rat(0), c, Rat(0)}}, horizon);
    // walk y's pieces that cover (0, anchor], emitting in reversed order
    std::vector<Segment> cover;
    for (const Segment& s : y.segments())
        if (s.start < anchor) cover.push_back(s);
    for (std::size_t i = cover.size(); i-- > 0;) {
        Rat seg_end = (i + 1 < cover.size()) ? cover[i + 1].start : anchor;
        // y arg in (cover[i].start, seg_end] maps to t in [anchor-seg_end, anchor-cover[i].start)
        Rat t0 = anchor - seg_end;
        Rat v0 = c - (cover[i].value + cover[i].slope * (seg_end - cover[i].start));
        out.push_back({t0, v0, cover[i].slope});
    }
    // beyond t = anchor the reversal is exhausted; hold the last value
    Rat v_end = c - y.right_value(Rat(0));
    if (anchor < horizon) out.push_back({anchor, v_end, Rat(0)});
    std::vector<Segment> clipped;
    for (const Segment& s : out)
        if (s.start < horizon) clipped.push_back(s);
    return Curve(std::move(clipped), horizon);
}

}  // namespace tsn
