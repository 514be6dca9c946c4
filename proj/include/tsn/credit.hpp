#pragma once

#include "rational.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct CreditError : std::runtime_error {
    explicit CreditError(const std::string& what) : std::runtime_error(what) {}
};

enum class AvbClass { A, B };

// Credit-based shaper parameters for one AVB class on one port.
// All rates in bits/ns, frame sizes in bits.
struct CreditParams {
    AvbClass cls;
    Rat idle_slope;       // I^x > 0
    Rat send_slope;       // S^x = I^x - C < 0
    Rat link_rate;        // C
    Rat max_interfering;  // largest lower-priority frame that can block the class
    Rat max_own;          // largest frame of the class itself

    void validate() const {
        if (link_rate <= 0) throw CreditError("link rate must be positive");
        if (idle_slope <= 0) throw CreditError("idle slope must be positive");
        if (send_slope >= 0) throw CreditError("send slope must be negative");
        if (idle_slope - send_slope != link_rate)
            throw CreditError("send slope must equal idle slope minus link rate");
        if (max_interfering < 0 || max_own < 0) throw CreditError("negative frame size");
    }
};

struct CreditBounds {
    Rat v_max;
    Rat v_min;
};

// Credit extrema. Class B needs the class A parameters because its worst
// case stacks a blocking frame, a full class A frame, and the drain of the
// accumulated class A credit.
inline CreditBounds credit_bounds(const CreditParams& p,
                                  const std::optional<CreditParams>& class_a = std::nullopt) {
    p.validate();
    const Rat& C = p.link_rate;
    if (p.cls == AvbClass::A) {
        return {p.max_interfering / C * p.idle_slope, p.max_own / C * p.send_slope};
    }
    if (!class_a) throw CreditError("class B bounds need the class A parameters");
    class_a->validate();
    const CreditParams& a = *class_a;
    Rat v_max = p.idle_slope * (p.max_interfering / C + a.max_own / C -
                                (a.max_interfering / C) * (a.idle_slope / a.send_slope));
    Rat v_min = p.max_own / C * p.send_slope;
    return {v_max, v_min};
}

struct PhaseTimes {
    Rat dt_plus;   // time to climb from 0 to V_max at the idle slope
    Rat dt_minus;  // time to fall from V_max to V_min at the send slope
};

inline PhaseTimes phase_times(const CreditParams& p, const Rat& v_max, const Rat& v_min) {
    if (p.idle_slope == 0 || p.send_slope == 0) throw CreditError("zero slope in phase times");
    if (v_max < 0 || v_min > 0) throw CreditError("phase times expect V_max >= 0 >= V_min");
    return {v_max / p.idle_slope, (v_max - v_min) / -p.send_slope};
}

// Lemma-form timing differences, all in the signed convention where
// dt_minus uses the (negative) send slope directly.
struct LemmaTimes {
    Rat a1_idle;  // dt^{B+} - dt^{A+}
    Rat a1_send;  // dt^{B-} - dt^{A-} (signed)
    Rat a2_a;     // dt^{A-} - dt^{A+} (signed)
    Rat a2_b;     // dt^{B-} - dt^{B+} (signed)
};

// Closed forms for the phase-time differences. Note the sign choices: the
// denominator uses C + S^B and the numerator I.V_min - C.V_max, which makes
// the forms below agree with the defining differences identically.
inline LemmaTimes lemma_times(const CreditParams& pa, const CreditParams& pb,
                              const Rat& vmax_a, const Rat& vmin_a, const Rat& vmax_b,
                              const Rat& vmin_b) {
    const Rat C = pa.link_rate;
    LemmaTimes lt;
    lt.a1_idle = (pa.idle_slope * (vmax_b - vmax_a) - vmax_a * (pb.send_slope - pa.send_slope)) /
                 (pa.idle_slope * (C + pb.send_slope));
    lt.a1_send = (pa.send_slope * (vmax_b - vmin_b) - pb.send_slope * (vmax_a - vmin_a)) /
                 (pa.send_slope * pb.send_slope);
    lt.a2_a = (C * vmax_a - pa.idle_slope * vmin_a) / (pa.idle_slope * (pa.idle_slope - C));
    lt.a2_b = (C * vmax_b - pb.idle_slope * vmin_b) / (pb.idle_slope * (pb.idle_slope - C));
    return lt;
}

struct GeometryAnchors {
    Rat t_m;        // segment start
    Rat t_m1;       // segment end
    Rat vmax_a_m;   // class A credit at t_m
    Rat vmax_b_m;   // class B credit at t_m
    Rat t_1, t_2;   // zero-crossing segment endpoints
    Rat v_1, v_2;   // credit at t_1 (positive) and t_2 (negative)
    Rat vmax_b_1, vmax_b_2;  // class B credit at t_1 / t_2
};

struct CreditGeometry {
    Rat t_same;   // both classes hold the same credit
    Rat v_same;
    Rat t_eq;     // the bracketed credit line crosses zero
    Rat k;        // split ratio of [t_1, t_2] at the crossing
    Rat v_mid_b;  // class B credit at t_eq
    bool intersection_at_midpoint;
};

// Intersection and zero-crossing geometry of the two credit lines rising
// from t_m with the idle slopes, plus the zero crossing of a falling credit
// segment between (t_1, v_1) and (t_2, v_2).
inline CreditGeometry credit_geometry(const CreditParams& pa, const CreditParams& pb,
                                      const GeometryAnchors& g) {
    if (pa.idle_slope == pb.idle_slope)
        throw CreditError("parallel idle slopes have no intersection");
    CreditGeometry out;
    out.t_same = g.t_m + (g.vmax_b_m - g.vmax_a_m) / (pa.idle_slope - pb.idle_slope);
    out.v_same = g.vmax_a_m + pa.idle_slope * (g.vmax_b_m - g.vmax_a_m) /
                                  (pa.idle_slope - pb.idle_slope);
    if (!(g.v_1 > 0 && g.v_2 < 0))
        throw CreditError("zero-crossing segment must bracket zero");
    if (g.t_2 <= g.t_1) throw CreditError("zero-crossing segment endpoints out of order");
    out.k = -g.v_1 / g.v_2;
    out.t_eq = (g.t_1 + out.k * g.t_2) / (out.k + 1);
    out.v_mid_b = (g.vmax_b_1 + out.k * g.vmax_b_2) / (out.k + 1);
    out.intersection_at_midpoint = (g.t_m1 > g.t_m) &&
                                   (out.t_same == (g.t_m + g.t_m1) / 2);
    return out;
}

// ---------------------------------------------------------------------------
// Event-exact credit trace oracle
// ---------------------------------------------------------------------------

enum class CreditCause { IdleGain, SendDrain, Frozen, Reset };

struct CreditEvent {
    Rat time;
    Rat credit;
    CreditCause cause;  // slope in force after this event
};

struct CreditTrace {
    std::vector<CreditEvent> events;
    Rat end_time;
    Rat end_credit;

    Rat max_credit() const {
        Rat m = 0;
        for (const auto& e : events) m = std::max(m, e.credit);
        return std::max(m, end_credit);
    }
    Rat min_credit() const {
        Rat m = 0;
        for (const auto& e : events) m = std::min(m, e.credit);
        return std::min(m, end_credit);
    }
};

struct Interval {
    Rat begin, end;
};

struct FrameArrival {
    Rat time;
    Rat bits;
};

enum class IntegrationMode { NonPreemption, Preemption };

// Simulates one class's credit evolution against explicit gate-open windows
// and link-busy (interference) intervals. Semantics: +I while backlogged (or
// recovering from negative credit) with the gate open, S while sending,
// frozen while the gate is closed, snap to 0 when the queue empties at
// positive credit.
inline CreditTrace credit_trace_oracle(const CreditParams& p,
                                       const std::vector<Interval>& gate_open,
                                       std::vector<FrameArrival> arrivals,
                                       IntegrationMode mode,
                                       const std::vector<Interval>& link_busy = {},
                                       Rat end_time = Rat(0)) {
    p.validate();
    std::sort(arrivals.begin(), arrivals.end(),
              [](const FrameArrival& x, const FrameArrival& y) { return x.time < y.time; });
    for (const auto& iv : gate_open)
        if (iv.end <= iv.begin) throw CreditError("empty gate interval");
    for (const auto& iv : link_busy)
        if (iv.end <= iv.begin) throw CreditError("empty busy interval");
    if (end_time == 0) {
        for (const auto& iv : gate_open) end_time = std::max(end_time, iv.end);
        for (const auto& iv : link_busy) end_time = std::max(end_time, iv.end);
        for (const auto& a : arrivals) end_time = std::max(end_time, a.time + a.bits / p.link_rate);
        end_time += (p.max_own + p.max_interfering + Rat(1)) / p.idle_slope;
    }

    auto inside = [](const std::vector<Interval>& ivs, const Rat& t) {
        for (const auto& iv : ivs)
            if (t >= iv.begin && t < iv.end) return true;
        return false;
    };
    // next boundary strictly after t
    auto next_boundary = [&](const Rat& t) {
        Rat nb = end_time;
        auto upd = [&](const Rat& c) {
            if (c > t && c < nb) nb = c;
        };
        for (const auto& iv : gate_open) {
            upd(iv.begin);
            upd(iv.end);
        }
        for (const auto& iv : link_busy) {
            upd(iv.begin);
            upd(iv.end);
        }
        return nb;
    };
    // time the gate next closes at or after t (end_time if it never does)
    auto gate_close_after = [&](const Rat& t) {
        for (const auto& iv : gate_open)
            if (t >= iv.begin && t < iv.end) return std::min(iv.end, end_time);
        return t;  // gate closed now
    };

    CreditTrace trace;
    Rat t = 0, credit = 0;
    std::size_t next_arrival = 0;
    std::vector<Rat> queue;  // pending frame sizes, FIFO
    Rat sending_until = -1;  // > t while a frame is on the wire
    Rat send_remaining = 0;  // bits left of the frame in service (preemption)

    auto record = [&](const Rat& time, const Rat& c, CreditCause cause) {
        trace.events.push_back({time, c, cause});
    };

    int guard = 0;
    while (t < end_time && ++guard < 1000000) {
        // admit arrivals at time t
        while (next_arrival < arrivals.size() && arrivals[next_arrival].time <= t) {
            queue.push_back(arrivals[next_arrival].bits);
            ++next_arrival;
        }
        Rat t_next_arrival =
            (next_arrival < arrivals.size()) ? arrivals[next_arrival].time : end_time;
        bool open = inside(gate_open, t);
        bool busy = inside(link_busy, t);

        if (send_remaining > 0 && open) {
            // frame (or fragment) in service: drain at S until it finishes,
            // the gate closes, or the horizon ends
            Rat finish = t + send_remaining / p.link_rate;
            Rat close = gate_close_after(t);
            Rat until = std::min({finish, close, end_time});
            record(t, credit, CreditCause::SendDrain);
            credit += p.send_slope * (until - t);
            send_remaining -= p.link_rate * (until - t);
            t = until;
            if (send_remaining == 0) {
                queue.erase(queue.begin());
                if (queue.empty() && credit > 0) {
                    record(t, credit, CreditCause::Reset);
                    credit = 0;
                }
            } else if (mode == IntegrationMode::NonPreemption && t < end_time) {
                throw CreditError("non-preempted frame interrupted by gate close");
            }
            continue;
        }
        if (send_remaining > 0 && !open) {
            // preemption mode: frame suspended, credit frozen
            Rat until = std::min(next_boundary(t), end_time);
            record(t, credit, CreditCause::Frozen);
            t = until;
            continue;
        }

        if (!open) {
            // gate closed: frozen
            Rat until = std::min({next_boundary(t), t_next_arrival, end_time});
            record(t, credit, CreditCause::Frozen);
            t = until;
            continue;
        }

        if (!queue.empty() && !busy && credit >= 0) {
            // start the next frame if it fits (non-preemption) or regardless
            Rat bits = queue.front();
            Rat close = gate_close_after(t);
            bool fits = t + bits / p.link_rate <= close;
            if (fits || mode == IntegrationMode::Preemption) {
                send_remaining = bits;
                continue;
            }
            // cannot start: wait with gate open, credit accrues
            Rat until = std::min({close, t_next_arrival, end_time});
            record(t, credit, CreditCause::IdleGain);
            credit += p.idle_slope * (until - t);
            t = until;
            continue;
        }

        if (!queue.empty()) {
            // waiting (interference or negative credit): gain at I
            Rat until = std::min({next_boundary(t), t_next_arrival, end_time});
            if (credit < 0 && !busy) {
                // may start once credit reaches 0
                Rat zero_at = t - credit / p.idle_slope;
                until = std::min(until, zero_at);
            }
            record(t, credit, CreditCause::IdleGain);
            credit += p.idle_slope * (until - t);
            t = until;
            continue;
        }

        // queue empty
        if (credit > 0) {
            record(t, credit, CreditCause::Reset);
            credit = 0;
            continue;
        }
        if (credit < 0) {
            // recover toward 0 at I
            Rat zero_at = t - credit / p.idle_slope;
            Rat until = std::min({zero_at, next_boundary(t), t_next_arrival, end_time});
            record(t, credit, CreditCause::IdleGain);
            credit += p.idle_slope * (until - t);
            t = until;
            continue;
        }
        // idle at zero credit
        Rat until = std::min(t_next_arrival, end_time);
        record(t, credit, CreditCause::Frozen);
        t = until;
    }
    if (guard >= 1000000) throw CreditError("credit trace did not terminate");
    trace.end_time = t;
    trace.end_credit = credit;
    return trace;
}

}  // namespace tsn
