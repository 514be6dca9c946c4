#pragma once

#include "curve.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsn {

// Canonical curve shapes.
struct CurveShape {
    enum class Tag { LeakyBucket, RateLatency, Staircase, AffinePieces } tag;
    Rat b, r;          // leaky bucket: burst bits, rate bits/ns
    Rat R, T;          // rate latency: rate bits/ns, latency ns
    Rat step, period, offset;  // staircase
    std::vector<Segment> pieces;

    static CurveShape leaky_bucket(Rat b, Rat r) {
        CurveShape s{Tag::LeakyBucket, {}, {}, {}, {}, {}, {}, {}, {}};
        s.b = std::move(b);
        s.r = std::move(r);
        return s;
    }
    static CurveShape rate_latency(Rat R, Rat T) {
        CurveShape s{Tag::RateLatency, {}, {}, {}, {}, {}, {}, {}, {}};
        s.R = std::move(R);
        s.T = std::move(T);
        return s;
    }
    static CurveShape staircase(Rat step, Rat period, Rat offset) {
        CurveShape s{Tag::Staircase, {}, {}, {}, {}, {}, {}, {}, {}};
        s.step = std::move(step);
        s.period = std::move(period);
        s.offset = std::move(offset);
        return s;
    }
    static CurveShape affine_pieces(std::vector<Segment> pieces) {
        CurveShape s{Tag::AffinePieces, {}, {}, {}, {}, {}, {}, {}, {}};
        s.pieces = std::move(pieces);
        return s;
    }
};

inline Curve make_curve(const CurveShape& shape, const Rat& horizon) {
    if (horizon <= 0) throw CurveError("make_curve: horizon must be positive");
    switch (shape.tag) {
        case CurveShape::Tag::LeakyBucket:
            if (shape.b < 0 || shape.r < 0) throw CurveError("leaky bucket: negative parameter");
            return Curve::affine(shape.b, shape.r, horizon);
        case CurveShape::Tag::RateLatency: {
            if (shape.R < 0 || shape.T < 0) throw CurveError("rate latency: negative parameter");
            if (shape.T == 0) return Curve::affine(Rat(0), shape.R, horizon);
            std::vector<Segment> segs{{Rat(0), Rat(0), Rat(0)}};
            if (shape.T < horizon) segs.push_back({shape.T, Rat(0), shape.R});
            return Curve(std::move(segs), horizon);
        }
        case CurveShape::Tag::Staircase: {
            if (shape.step < 0 || shape.period <= 0 || shape.offset < 0)
                throw CurveError("staircase: invalid parameter");
            std::vector<Segment> segs;
            if (shape.offset > 0) segs.push_back({Rat(0), Rat(0), Rat(0)});
            Rat t = shape.offset;
            Rat v = shape.step;
            while (t < horizon) {
                segs.push_back({t, v, Rat(0)});
                t += shape.period;
                v += shape.step;
            }
            if (segs.empty()) segs.push_back({Rat(0), Rat(0), Rat(0)});
            return Curve(std::move(segs), horizon);
        }
        case CurveShape::Tag::AffinePieces:
            return Curve(shape.pieces, horizon);
    }
    throw CurveError("make_curve: unknown shape");
}

// (x (+) y)(t) = inf over 0 <= s <= t of x(t-s) + y(s), exact on the
// breakpoint representation: the infimum at each t is attained at a piece
// endpoint of s -> x(t-s)+y(s), so the result is the pointwise min of the
// shifted-curve family indexed by breakpoints of either operand.
inline Curve convolve(const Curve& x, const Curve& y) {
    Rat h = std::min(x.horizon(), y.horizon());
    // s = 0 member: x(t) + y(0) = x(t)
    Curve r = Curve(x.segments(), x.horizon()).truncated(h);
    for (const Segment& s : y.segments()) {
        if (s.start <= 0 || s.start >= h) continue;
        Curve m = shift_right(x, s.start, h).plus_const(y.value(s.start));
        r = splice_combine(r, m, s.start, h, CombineMode::Min);
    }
    // t-s = a_i members: y(t - a_i) + x(a_i)
    for (const Segment& s : x.segments()) {
        if (s.start >= h) continue;
        Curve m = shift_right(y, s.start, h).plus_const(x.value(s.start));
        r = splice_combine(r, m, s.start, h, CombineMode::Min);
    }
    return r;
}

// (x (/) y)(t) = sup over u >= 0 (u <= horizon - t) of x(t+u) - y(u).
inline Curve deconvolve(const Curve& x, const Curve& y) {
    Rat h = std::min(x.horizon(), y.horizon());
    Curve xt = Curve(x.segments(), x.horizon()).truncated(h);
    Curve yt = Curve(y.segments(), y.horizon()).truncated(h);
    if (xt.end_slope() > yt.end_slope())
        throw HorizonExhausted(
            "deconvolve: arrival outpaces service at the horizon; enlarge the horizon");
    // u = b_j members: x(t + b_j) - y(b_j), valid for t <= h - b_j
    Curve r = Curve(xt.segments(), h);  // u = 0
    for (const Segment& s : yt.segments()) {
        if (s.start <= 0 || s.start >= h) continue;
        Curve base = shift_left(xt, s.start).plus_const(-yt.value(s.start));
        Rat dom_end = h - s.start;
        // extend flat past the member's domain so all splices share horizon h
        std::vector<Segment> segs = base.segments();
        if (dom_end < h) segs.push_back({dom_end, base.value(dom_end), Rat(0)});
        Curve m(std::move(segs), h);
        r = splice_combine(r, m, Rat(0), dom_end, CombineMode::Max);
    }
    // u -> (a_i - t)+ members: the sup can ride the top of an arrival jump,
    // so anchor at the right limit of x at each breakpoint
    for (const Segment& s : xt.segments()) {
        if (s.start <= 0) continue;
        Curve m = reversed_from(yt, s.start, xt.right_value(s.start), h);
        r = splice_combine(r, m, Rat(0), s.start, CombineMode::Max);
    }
    // boundary u = h - t: x(h) - y(h - t)
    {
        Curve m = reversed_from(yt, h, xt.value(h), h);
        r = splice_combine(r, m, Rat(0), h, CombineMode::Max);
    }
    return r;
}

// smallest s with curve reaching level v (inf form); throws HorizonExhausted
// when the level is never reached.
inline Rat pseudo_inverse(const Curve& c, const Rat& v) {
    if (v <= 0) return Rat(0);
    const auto& segs = c.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        Rat end = (i + 1 < segs.size()) ? segs[i + 1].start : c.horizon();
        if (segs[i].value >= v) return segs[i].start;
        Rat vend = segs[i].value + segs[i].slope * (end - segs[i].start);
        if (vend >= v) return segs[i].start + (v - segs[i].value) / segs[i].slope;
    }
    throw HorizonExhausted("level " + rat_str(v) + " not reached within horizon");
}

// h(alpha, beta): sup over t of inf{d >= 0 : alpha(t) <= beta(t+d)}.
inline Rat horizontal_deviation(const Curve& alpha, const Curve& beta) {
    Rat h = std::min(alpha.horizon(), beta.horizon());
    Curve a = Curve(alpha.segments(), alpha.horizon()).truncated(h);
    Curve b = Curve(beta.segments(), beta.horizon()).truncated(h);
    if (a.value(h) > b.value(h))
        throw HorizonExhausted("horizontal deviation not attained within horizon");

    Rat best = 0;
    auto consider = [&](const Rat& t, const Rat& level) {
        if (level <= 0) return;
        Rat d = pseudo_inverse(b, level) - t;
        if (d > best) best = d;
    };
    // candidates: alpha's breakpoints (left and right levels)...
    for (const Segment& s : a.segments()) {
        consider(s.start, a.value(s.start));
        consider(s.start, s.value);
    }
    consider(h, a.value(h));
    // ...and the earliest preimages under alpha of beta's kink levels
    for (const Segment& s : b.segments()) {
        for (const Rat& level : {b.value(s.start), s.value}) {
            if (level <= 0 || level > a.value(h)) continue;
            Rat t = pseudo_inverse(a, level);
            consider(t, level);
            consider(t, a.value(t));
        }
    }
    return best;
}

// v(alpha, beta): sup over t of alpha(t) - beta(t), clipped at 0.
inline Rat vertical_deviation(const Curve& alpha, const Curve& beta) {
    Rat h = std::min(alpha.horizon(), beta.horizon());
    Rat best = 0;
    auto consider = [&](const Rat& t) {
        Rat d1 = alpha.value(t) - beta.value(t);
        Rat d2 = alpha.right_value(t) - beta.right_value(t);
        if (d1 > best) best = d1;
        if (d2 > best) best = d2;
    };
    for (const Segment& s : alpha.segments())
        if (s.start <= h) consider(s.start);
    for (const Segment& s : beta.segments())
        if (s.start <= h) consider(s.start);
    Rat dh = alpha.value(h) - beta.value(h);
    if (dh > best) best = dh;
    return best;
}

// Eq-2.9 style output bound, refined with upper-service information when
// available: min(sigma, (alpha (+) beta_max) (/) beta).
inline Curve output_bound(const Curve& alpha, const Curve& beta,
                          const std::optional<Curve>& beta_max = std::nullopt,
                          const std::optional<Curve>& sigma = std::nullopt) {
    Curve base = beta_max ? deconvolve(convolve(alpha, *beta_max), beta) : deconvolve(alpha, beta);
    if (sigma) return curve_min(*sigma, base);
    return base;
}

// Smallest leaky bucket dominating a non-decreasing curve: rate = final
// slope, burst = sup(curve - rate*t). Used to keep propagated per-flow
// arrival curves compact; always a valid (conservative) arrival bound.
inline Curve leaky_hull(const Curve& c) {
    Rat r = c.end_slope();
    Rat b = 0;
    for (const Segment& s : c.segments()) {
        Rat cand = s.value - r * s.start;
        if (cand > b) b = cand;
        Rat left = c.value(s.start) - r * s.start;
        if (left > b) b = left;
    }
    Rat at_h = c.value(c.horizon()) - r * c.horizon();
    if (at_h > b) b = at_h;
    return Curve::affine(b, r, c.horizon());
}

}  // namespace tsn
