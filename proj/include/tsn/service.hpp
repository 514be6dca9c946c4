#pragma once

#include "credit.hpp"
#include "minplus.hpp"
#include "schedule.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct ServiceError : std::runtime_error {
    explicit ServiceError(const std::string& what) : std::runtime_error(what) {}
};

// Everything the curve families need about one egress port.
struct SchedulerContext {
    PortSchedule schedule;
    Rat link_rate;  // C bits/ns
    std::optional<CreditParams> class_a;
    std::optional<CreditParams> class_b;
    Rat l_syn = 0;  // syn window paired with each TT window, ns
    Rat l_gb = 0;   // guard band (non-preemption), ns
    Rat l_oh = 0;   // per-fragment overhead (preemption), ns
    Rat t_syn = 0;  // schedule phase, ns
    Rat r_index = Rat(1);
    int z = 1;
    bool as_printed = false;  // reproduce the literal max-form TT service

    Rat shrink_factor() const {
        Rat f(1);
        for (int i = 0; i < z; ++i) f *= r_index;
        return f;
    }
    bool shrunk() const { return r_index < 1; }

    // TT windows with the shrink substitution applied to their lengths
    std::vector<GclWindow> tt_windows() const {
        std::vector<GclWindow> out;
        Rat f = shrink_factor();
        for (const GclWindow& w : schedule.windows)
            if (w.kind == WindowKind::TT) out.push_back({w.kind, w.offset, w.length * f});
        return out;
    }

    void validate() const {
        if (link_rate <= 0) throw ServiceError("link rate must be positive");
        if (r_index <= 0 || r_index > 1) throw ServiceError("r_index must be in (0, 1]");
        if (schedule.hyperperiod <= 0 && !schedule.windows.empty())
            throw ServiceError("hyperperiod must be positive");
        Rat total = 0;
        for (const GclWindow& w : tt_windows()) {
            if (w.length < 0 || w.offset < 0 || w.offset >= schedule.hyperperiod)
                throw ServiceError("window outside the hyperperiod");
            total += w.length;
        }
        if (total > schedule.hyperperiod)
            throw ServiceError("TT windows exceed the hyperperiod");
    }
};

namespace detail {

// height * max(0, ceil((t - shift)/period)) as a left-continuous staircase
inline Curve ceil_step_curve(const Rat& height, const Rat& period, const Rat& shift,
                             const Rat& horizon) {
    if (height == 0) return Curve::zero(horizon);
    std::int64_t k = (shift >= 0) ? 0 : ceil_int(-shift / period);
    Rat t = shift + Rat(k) * period;
    std::vector<Segment> segs;
    if (t > 0) segs.push_back({Rat(0), Rat(k) * height, Rat(0)});
    while (t < horizon) {
        segs.push_back({t < 0 ? Rat(0) : t, Rat(k + 1) * height, Rat(0)});
        t += period;
        ++k;
    }
    if (segs.empty()) segs.push_back({Rat(0), Rat(0), Rat(0)});
    return Curve(std::move(segs), horizon);
}

// height * max(0, floor((t - shift)/period))
inline Curve floor_step_curve(const Rat& height, const Rat& period, const Rat& shift,
                              const Rat& horizon) {
    return ceil_step_curve(height, period, shift + period, horizon);
}

// height * 1{t > shift}
inline Curve unit_step_curve(const Rat& height, const Rat& shift, const Rat& horizon) {
    if (height == 0 || shift >= horizon) return Curve::zero(horizon);
    std::vector<Segment> segs;
    if (shift > 0) segs.push_back({Rat(0), Rat(0), Rat(0)});
    segs.push_back({std::max(shift, Rat(0)), height, Rat(0)});
    return Curve(std::move(segs), horizon);
}

// offset of window j relative to window i, modulo the hyperperiod
inline Rat rotated_offset(const Rat& oj, const Rat& oi, const Rat& period) {
    Rat d = oj - oi;
    while (d < 0) d += period;
    while (d >= period) d -= period;
    return d;
}

template <typename TermFn>
Curve rotation_max(const std::vector<GclWindow>& windows, const Rat& period, const Rat& horizon,
                   TermFn term) {
    Curve best = Curve::zero(horizon);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        Curve sum = Curve::zero(horizon);
        for (std::size_t j = 0; j < windows.size(); ++j) {
            Rat o = rotated_offset(windows[j].offset, windows[i].offset, period);
            sum = add(sum, term(windows[j], o));
        }
        best = (i == 0) ? sum : curve_max(best, sum);
    }
    return best;
}

}  // namespace detail

// Aggregate arrival curve of the traffic that preempts/blocks AVB service:
// non-preemption folds the syn window and guard band into each TT step;
// preemption returns the TT-only staircase (the syn+overhead staircase is
// separate, see syn_overhead_arrival).
inline Curve tt_aggregate_arrival(const SchedulerContext& ctx, Scheduler scheduler, Mode mode,
                                  const Rat& horizon) {
    ctx.validate();
    std::vector<GclWindow> ws = ctx.tt_windows();
    if (ws.empty()) return Curve::zero(horizon);
    const Rat& C = ctx.link_rate;
    const Rat& T = ctx.schedule.hyperperiod;
    if (scheduler == Scheduler::CbsTas) {
        if (mode == Mode::NonPreemption) {
            Rat band = ctx.l_syn + ctx.l_gb;
            return detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
                return detail::ceil_step_curve((w.length + band) * C, T, o + ctx.l_gb, horizon);
            });
        }
        return detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
            return detail::ceil_step_curve(w.length * C, T, o, horizon);
        });
    }
    // CBS+SP: event-triggered steps, no hyperperiod division
    if (mode == Mode::NonPreemption) {
        return detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
            Rat height = ctx.shrunk() ? (w.length + ctx.l_syn) * C : Rat(2) * w.length * C;
            return detail::unit_step_curve(height, o, horizon);
        });
    }
    return detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
        return detail::unit_step_curve(w.length * C, o, horizon);
    });
}

// Preemption-mode syn + fragmentation-overhead staircase, one band after
// each TT/CDT window.
inline Curve syn_overhead_arrival(const SchedulerContext& ctx, Scheduler scheduler,
                                  const Rat& horizon) {
    ctx.validate();
    std::vector<GclWindow> ws = ctx.tt_windows();
    if (ws.empty()) return Curve::zero(horizon);
    const Rat& C = ctx.link_rate;
    const Rat& T = ctx.schedule.hyperperiod;
    Rat height = (ctx.l_syn + ctx.l_oh) * C;
    if (scheduler == Scheduler::CbsTas) {
        return detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
            return detail::floor_step_curve(height, T, o + w.length + ctx.l_syn, horizon);
        });
    }
    return detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
        return detail::unit_step_curve(height, o + w.length + ctx.l_syn, horizon);
    });
}

// Lower service curve left for TT traffic. Default: the exact periodic
// window pattern (closed for T - L, then open for L, phase t_syn). The
// as_printed flag reproduces the literal max-form instead.
inline Curve tt_service_curve(const SchedulerContext& ctx, Scheduler scheduler, Mode /*mode*/,
                              const Rat& horizon) {
    ctx.validate();
    const Rat& C = ctx.link_rate;
    const Rat& T = ctx.schedule.hyperperiod;
    Rat L = 0;
    for (const GclWindow& w : ctx.tt_windows()) L += w.length;
    if (ctx.tt_windows().empty()) return Curve::zero(horizon);
    if (L > T) throw ServiceError("TT windows exceed the hyperperiod");

    std::vector<Segment> segs{{Rat(0), Rat(0), Rat(0)}};
    auto push = [&](const Rat& start, const Rat& value, const Rat& slope) {
        if (start >= horizon || start < 0) return;
        if (segs.back().start == start) segs.back() = {start, value, slope};
        else segs.push_back({start, value, slope});
    };
    if (scheduler == Scheduler::CbsSp) {
        if (ctx.t_syn >= horizon) return Curve::zero(horizon);
        if (ctx.as_printed) {
            // C * max(L, t - (T - L))+ past t_syn
            Curve flat = detail::unit_step_curve(C * L, ctx.t_syn, horizon);
            Rat start = std::max(ctx.t_syn, T - L);
            push(start, C * (start - (T - L)), C);
            return curve_max(flat, Curve(std::move(segs), horizon));
        }
        // min form: wait T - L past the phase, then one window's worth at C
        Rat open = ctx.t_syn + (T - L);
        push(open, Rat(0), C);
        push(open + L, C * L, Rat(0));
        return Curve(std::move(segs), horizon);
    }
    if (ctx.as_printed) {
        // per period k: C * (x - k(T - L)) for x in [kT, (k+1)T), x = t - t_syn
        Rat t = ctx.t_syn;
        std::int64_t k = 0;
        while (t < horizon) {
            push(t, Rat(k) * L * C, C);
            t += T;
            ++k;
        }
        return Curve(std::move(segs), horizon);
    }
    // exact window pattern: flat for T - L, slope C for L, each period
    if (L == T) {
        push(ctx.t_syn, Rat(0), C);
        return Curve(std::move(segs), horizon);
    }
    Rat t = ctx.t_syn;
    Rat v = 0;
    while (t < horizon) {
        push(t, v, Rat(0));
        push(t + (T - L), v, C);
        v += C * L;
        t += T;
    }
    return Curve(std::move(segs), horizon);
}

// Theorem-form AVB service curves from explicit arrival curves. The running
// sup (non-decreasing closure) keeps the bracket a valid service curve where
// it dips.
inline Curve avb_service_np(const Curve& alpha_syn_tt, const Rat& link_rate,
                            const Rat& idle_slope, const Rat& v_max, const Rat& horizon) {
    if (idle_slope <= 0) throw ServiceError("idle slope must be positive");
    Curve line = Curve::affine(Rat(0), Rat(1), horizon);
    Curve a = Curve(alpha_syn_tt.segments(), alpha_syn_tt.horizon()).truncated(horizon);
    Curve bracket = subtract(line, a.scaled(Rat(1) / link_rate)).plus_const(-v_max / idle_slope);
    return bracket.scaled(idle_slope).clamped_nonneg().closure();
}

inline Curve avb_service_p(const Curve& alpha_tt, const Curve& alpha_syn, const Rat& link_rate,
                           const Rat& idle_slope, const Rat& v_max, const Rat& horizon) {
    if (idle_slope <= 0) throw ServiceError("idle slope must be positive");
    Curve line = Curve::affine(Rat(0), Rat(1), horizon);
    Curve att = Curve(alpha_tt.segments(), alpha_tt.horizon()).truncated(horizon);
    Curve asn = Curve(alpha_syn.segments(), alpha_syn.horizon()).truncated(horizon);
    Curve bracket = subtract(subtract(line, att.scaled(Rat(1) / link_rate)),
                             asn.scaled(Rat(1) / idle_slope))
                        .plus_const(-v_max / idle_slope);
    return bracket.scaled(idle_slope).clamped_nonneg().closure();
}

namespace detail {

inline std::pair<Rat, Rat> class_credit(const SchedulerContext& ctx, AvbClass cls) {
    if (cls == AvbClass::A) {
        if (!ctx.class_a) throw ServiceError("missing class A credit parameters");
        return {ctx.class_a->idle_slope, credit_bounds(*ctx.class_a).v_max};
    }
    if (!ctx.class_b) throw ServiceError("missing class B credit parameters");
    return {ctx.class_b->idle_slope, credit_bounds(*ctx.class_b, ctx.class_a).v_max};
}

}  // namespace detail

inline Curve avb_service_curve(const SchedulerContext& ctx, AvbClass cls, Scheduler scheduler,
                               Mode mode, const Rat& horizon) {
    ctx.validate();
    if (scheduler == Scheduler::CbsTas && ctx.tt_windows().empty())
        throw ServiceError("CBS+TAS needs TT windows");
    auto [idle, v_max] = detail::class_credit(ctx, cls);
    if (mode == Mode::NonPreemption) {
        Curve a = tt_aggregate_arrival(ctx, scheduler, mode, horizon);
        return avb_service_np(a, ctx.link_rate, idle, v_max, horizon);
    }
    Curve att = tt_aggregate_arrival(ctx, scheduler, mode, horizon);
    Curve asn = syn_overhead_arrival(ctx, scheduler, horizon);
    return avb_service_p(att, asn, ctx.link_rate, idle, v_max, horizon);
}

// Shrink-mode amplified curve: the same bracket, scaled by 1/r_index.
inline Curve avb_service_curve_amplified(const SchedulerContext& ctx, AvbClass cls,
                                         Scheduler scheduler, Mode mode, const Rat& horizon) {
    if (ctx.r_index > 1) throw ServiceError("amplified curve needs r_index <= 1");
    Curve base = avb_service_curve(ctx, cls, scheduler, mode, horizon);
    return base.scaled(Rat(1) / ctx.shrink_factor());
}

// GCL-scaled service: TT arrival with window length eta * L_TT, bracket with
// an optional max-frame blocking term l_bar (time units) subtracted.
inline Curve gcl_scaled_service(const SchedulerContext& ctx, const Rat& eta, AvbClass cls,
                                const Rat& horizon, const Rat& l_bar = Rat(0)) {
    ctx.validate();
    if (eta < 1) throw ServiceError("eta below the feasibility floor");
    if (l_bar < 0) throw ServiceError("negative blocking term");
    std::vector<GclWindow> ws = ctx.tt_windows();
    const Rat& C = ctx.link_rate;
    const Rat& T = ctx.schedule.hyperperiod;
    Curve a = ws.empty()
                  ? Curve::zero(horizon)
                  : detail::rotation_max(ws, T, horizon, [&](const GclWindow& w, const Rat& o) {
                        return detail::ceil_step_curve(eta * w.length * C, T, o, horizon);
                    });
    auto [idle, v_max] = detail::class_credit(ctx, cls);
    Curve line = Curve::affine(Rat(0), Rat(1), horizon);
    Curve bracket = subtract(line, a.scaled(Rat(1) / C))
                        .plus_const(-v_max / idle - l_bar / C);
    return bracket.scaled(idle).clamped_nonneg().closure();
}

}  // namespace tsn
