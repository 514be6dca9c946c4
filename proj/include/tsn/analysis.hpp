#pragma once

#include "minplus.hpp"
#include "model.hpp"
#include "service.hpp"
#include "sim.hpp"

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct AnalysisError : std::runtime_error {
    explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

struct AnalysisRequest {
    std::optional<Scheduler> scheduler;  // override every port's scheduler
    std::optional<Mode> mode;            // override every port's mode
    Rat r_index = Rat(1);                // < 1 applies the amplified service
    bool strict_tqueue = false;          // report one max-frame time per hop
    std::optional<Rat> horizon;          // analysis horizon ns
    bool include_sync = true;            // worst-case startup-cycle offset
};

// delay bound with port context attached to horizon failures
inline Rat per_port_delay(const Curve& alpha, const Curve& beta, const std::string& port = "") {
    try {
        return horizontal_deviation(alpha, beta);
    } catch (const HorizonExhausted& e) {
        if (port.empty()) throw;
        throw AnalysisError(port + ": " + e.what());
    }
}

struct HopTerm {
    std::string port;
    Rat t_queue = 0;  // FIFO term (0 unless strict accounting)
    Rat d_h = 0;      // horizontal deviation at the port
    Rat l_c = 0;      // own transmission time
};

struct FlowBound {
    std::string flow, dst;
    TrafficClass cls = TrafficClass::BE;
    std::string scheduler, mode;
    Rat r_index = Rat(1);
    Rat sync = 0;  // worst-case startup-cycle offset
    std::vector<HopTerm> hops;

    Rat bound() const {
        Rat b = sync;
        for (const HopTerm& h : hops) b += h.t_queue + h.d_h + h.l_c;
        return b;
    }
};

struct DelayReport {
    std::vector<FlowBound> rows;

    void to_csv(std::ostream& out) const {
        out << "flow,dst,class,scheduler,mode,r_index,hops,sync_ns,t_queue_ns,dh_ns,lc_ns,"
               "bound_ns\n";
        for (const FlowBound& r : rows) {
            Rat tq = 0, dh = 0, lc = 0;
            for (const HopTerm& h : r.hops) {
                tq += h.t_queue;
                dh += h.d_h;
                lc += h.l_c;
            }
            out << r.flow << ',' << r.dst << ',' << detail::class_name(r.cls) << ','
                << r.scheduler << ',' << r.mode << ',' << rat_str(r.r_index) << ','
                << r.hops.size() << ',' << rat_str(r.sync) << ',' << rat_str(tq) << ','
                << rat_str(dh) << ',' << rat_str(lc) << ',' << rat_str(r.bound()) << '\n';
        }
    }
};

namespace detail {

inline int class_bucket(TrafficClass c) {
    switch (c) {
        case TrafficClass::TT:
        case TrafficClass::CDT: return 0;
        case TrafficClass::A: return 1;
        case TrafficClass::B: return 2;
        case TrafficClass::BE: return 3;
    }
    return 3;
}

inline const char* bucket_name(int b) {
    switch (b) {
        case 0: return "tt";
        case 1: return "classA";
        case 2: return "classB";
    }
    return "be";
}

struct AnalysisPath {
    std::size_t flow = 0;              // index into cfg.flows
    std::vector<std::string> route;    // node ids
    std::vector<std::string> ports;    // directed hop ports
    int bucket = 3;
    Rat bits = 0, rate = 0;            // leaky-bucket source parameters
    std::vector<Rat> lc;               // per-hop transmission time
    std::vector<Rat> dh;               // per-hop deviation (fixed point)
};

struct AnalysisPort {
    std::string id;
    Rat rate = 0;
    std::optional<PortSchedule> sched;       // request overrides applied
    std::optional<SchedulerContext> ctx;
    Rat max_frame_bits = 0;                  // across every class at the port
    std::array<std::optional<Curve>, 3> beta;  // tt / A / B, arrival-independent
};

// [C*t - sum(minus)]+ closure: leftover strict-priority service
inline Curve leftover_service(const Rat& C, const Rat& horizon,
                              const std::vector<const Curve*>& minus) {
    Curve b = Curve::affine(Rat(0), C, horizon);
    for (const Curve* m : minus) b = subtract(b, *m);
    return b.clamped_nonneg().closure();
}

}  // namespace detail

inline DelayReport analyze(const Config& cfg, const AnalysisRequest& req) {
    if (req.r_index <= 0 || req.r_index > 1)
        throw AnalysisError("r_index must be in (0, 1]");
    Rat H = req.horizon ? *req.horizon : std::min(cfg.options.horizon, ms(50));
    if (H <= 0) throw AnalysisError("horizon must be positive");

    // enumerate analyzed paths and the ports they cross
    std::vector<detail::AnalysisPath> paths;
    std::map<std::string, detail::AnalysisPort> ports;
    for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
        const FlowSpec& f = cfg.flows[i];
        for (const auto& route : f.routes) {
            detail::AnalysisPath p;
            p.flow = i;
            p.route = route;
            p.bucket = detail::class_bucket(f.cls);
            p.bits = Rat(f.size_bytes) * 8;
            // indexed TT frames travel as shrunk codes
            if (p.bucket == 0) p.bits *= req.r_index;
            p.rate = p.bits / f.period;
            for (std::size_t j = 0; j + 1 < route.size(); ++j) {
                const LinkSpec* link = cfg.network.find_link(route[j], route[j + 1]);
                if (!link)
                    throw AnalysisError("route of " + f.id + " crosses missing link " +
                                        route[j] + "-" + route[j + 1]);
                std::string pid = port_id(route[j], route[j + 1]);
                p.ports.push_back(pid);
                p.lc.push_back(p.bits / link->rate);
                p.dh.push_back(Rat(0));
                auto& ap = ports[pid];
                ap.id = pid;
                ap.rate = link->rate;
                ap.max_frame_bits = std::max(ap.max_frame_bits, p.bits);
            }
            paths.push_back(std::move(p));
        }
    }

    // per-port contexts and arrival-independent service curves
    std::map<std::string, std::array<bool, 4>> has_traffic;
    std::map<std::string, std::array<Rat, 4>> max_class_bits;
    for (const auto& p : paths)
        for (const auto& pid : p.ports) {
            has_traffic[pid][p.bucket] = true;
            max_class_bits[pid][p.bucket] =
                std::max(max_class_bits[pid][p.bucket], p.bits);
        }
    const Rat fallback_frame = Rat(1518) * 8;
    for (auto& [pid, ap] : ports) {
        auto it = cfg.schedules.find(pid);
        if (it == cfg.schedules.end()) continue;
        PortSchedule sched = it->second;
        if (req.scheduler) sched.scheduler = *req.scheduler;
        if (req.mode) sched.mode = *req.mode;
        ap.sched = sched;
        SchedulerContext ctx;
        ctx.schedule = sched;
        ctx.link_rate = ap.rate;
        for (const GclWindow& w : sched.windows) {
            if (w.kind == WindowKind::Syn) ctx.l_syn += w.length;
            if (w.kind == WindowKind::GuardBand) ctx.l_gb += w.length;
        }
        ctx.l_oh = Rat(24) * 8 / ap.rate;  // fragment resume overhead
        ctx.r_index = req.r_index;
        const auto& mc = max_class_bits[pid];
        auto frame = [&](int b) { return mc[b] > 0 ? mc[b] : fallback_frame; };
        if (sched.idle_slope_a > 0)
            ctx.class_a = CreditParams{AvbClass::A, sched.idle_slope_a,
                                       sched.idle_slope_a - ap.rate, ap.rate,
                                       std::max(frame(2), frame(3)), frame(1)};
        if (sched.idle_slope_b > 0)
            ctx.class_b = CreditParams{AvbClass::B, sched.idle_slope_b,
                                       sched.idle_slope_b - ap.rate, ap.rate,
                                       frame(3), frame(2)};
        ap.ctx = ctx;
        const auto& ht = has_traffic[pid];
        if (sched.scheduler != Scheduler::CbsTas) continue;  // SP curves need arrivals
        try {
            if (ht[0]) {
                // the GCL keeps its window budget; shrinking only reduces the
                // time TT actually occupies (the AVB interference term)
                SchedulerContext full = ctx;
                full.r_index = Rat(1);
                ap.beta[0] = tt_service_curve(full, sched.scheduler, sched.mode, H);
            }
            std::optional<Curve> interference;
            for (int b : {1, 2}) {
                if (!ht[b]) continue;
                if ((b == 1 && !ctx.class_a) || (b == 2 && !ctx.class_b))
                    throw AnalysisError(pid + ": " + detail::bucket_name(b) +
                                        " traffic without an idle slope");
                if (!interference) {
                    // preemption trades the guard band for a small per-window
                    // syn + fragmentation overhead; both freeze the credit, so
                    // both weigh as link occupancy
                    interference = tt_aggregate_arrival(ctx, sched.scheduler, sched.mode, H);
                    if (sched.mode == Mode::Preemption)
                        interference = add(*interference,
                                           syn_overhead_arrival(ctx, sched.scheduler, H));
                }
                const CreditParams& cp = (b == 1) ? *ctx.class_a : *ctx.class_b;
                Rat vmax = (b == 1) ? credit_bounds(cp).v_max
                                    : credit_bounds(cp, ctx.class_a).v_max;
                Curve base = avb_service_np(*interference, ap.rate, cp.idle_slope, vmax, H);
                ap.beta[b] = ctx.shrunk() ? base.scaled(Rat(1) / ctx.shrink_factor()) : base;
            }
        } catch (const ServiceError& e) {
            throw AnalysisError(pid + ": " + e.what());
        } catch (const CreditError& e) {
            throw AnalysisError(pid + ": " + e.what());
        }
    }

    // least fixed point: port delays from aggregates, bursts from upstream
    // delays; converges within max-hops passes for feed-forward route sets
    auto strict_tq = [&](const detail::AnalysisPort& ap) {
        return req.strict_tqueue ? ap.max_frame_bits / ap.rate : Rat(0);
    };
    std::map<std::string, std::array<Rat, 4>> port_delay;
    bool converged = false;
    for (int pass = 0; pass < 64 && !converged; ++pass) {
        // class aggregates from the current prefix delays
        std::map<std::string, std::array<std::optional<Curve>, 4>> alpha;
        for (const auto& p : paths) {
            Rat prefix = 0;
            for (std::size_t h = 0; h < p.ports.size(); ++h) {
                const detail::AnalysisPort& ap = ports.at(p.ports[h]);
                Curve a = Curve::affine(p.bits + p.rate * prefix, p.rate, H);
                auto& slot = alpha[p.ports[h]][p.bucket];
                slot = slot ? add(*slot, a) : a;
                prefix += strict_tq(ap) + p.dh[h] + p.lc[h];
            }
        }
        std::map<std::string, std::array<Rat, 4>> next;
        for (auto& [pid, ap] : ports) {
            const auto& al = alpha[pid];
            bool tas = ap.sched && ap.sched->scheduler == Scheduler::CbsTas;
            Mode pmode = ap.sched ? ap.sched->mode : Mode::NonPreemption;
            const auto& mc = max_class_bits[pid];
            for (int b = 0; b < 4; ++b) {
                if (!al[b]) continue;
                std::optional<Curve> beta = b < 3 ? ap.beta[b] : std::nullopt;
                if (!beta && b == 0) {
                    // strict priority: full rate after one blocking frame
                    Rat blocking = Rat(1216);  // two min fragments + resume
                    if (pmode == Mode::NonPreemption) {
                        blocking = std::max({mc[1], mc[2], mc[3]});
                        if (blocking == 0) blocking = fallback_frame;
                    }
                    beta = make_curve(CurveShape::rate_latency(ap.rate, blocking / ap.rate), H);
                } else if (!beta && b <= 2 && ap.ctx &&
                           (b == 1 ? ap.ctx->class_a.has_value()
                                   : ap.ctx->class_b.has_value())) {
                    // SP theorem form against the actual scheduled-traffic load
                    const CreditParams& cp = (b == 1) ? *ap.ctx->class_a : *ap.ctx->class_b;
                    Rat vmax = (b == 1) ? credit_bounds(cp).v_max
                                        : credit_bounds(cp, ap.ctx->class_a).v_max;
                    Curve a0 = al[0] ? *al[0] : Curve::zero(H);
                    Curve base = avb_service_np(a0, ap.rate, cp.idle_slope, vmax, H);
                    beta = ap.ctx->shrunk() ? base.scaled(Rat(1) / ap.ctx->shrink_factor())
                                            : base;
                } else if (!beta) {
                    // leftover service (BE, or any class on an unscheduled port)
                    std::vector<const Curve*> minus;
                    std::optional<Curve> prot;
                    if (ap.ctx && tas) {
                        prot = tt_aggregate_arrival(*ap.ctx, ap.sched->scheduler,
                                                    ap.sched->mode, H);
                        if (ap.sched->mode == Mode::Preemption)
                            prot = add(*prot, syn_overhead_arrival(
                                                  *ap.ctx, ap.sched->scheduler, H));
                        minus.push_back(&*prot);
                    } else if (al[0]) {
                        minus.push_back(&*al[0]);
                    }
                    for (int hb = 1; hb < b; ++hb)
                        if (al[hb]) minus.push_back(&*al[hb]);
                    beta = detail::leftover_service(ap.rate, H, minus);
                }
                next[pid][b] = per_port_delay(
                    *al[b], *beta,
                    "port " + pid + " " + detail::bucket_name(b));
            }
        }
        converged = (next == port_delay);
        port_delay = std::move(next);
        for (auto& p : paths)
            for (std::size_t h = 0; h < p.ports.size(); ++h)
                p.dh[h] = port_delay.at(p.ports[h])[p.bucket];
    }
    if (!converged) throw AnalysisError("per-hop delays did not converge");

    DelayReport rep;
    Rat sync = req.include_sync ? SyncPhases{}.frame_send_begin() : Rat(0);
    for (const auto& p : paths) {
        const FlowSpec& f = cfg.flows[p.flow];
        FlowBound row;
        row.flow = f.id;
        row.dst = p.route.back();
        row.cls = f.cls;
        row.r_index = req.r_index;
        row.sync = sync;
        std::set<std::string> scheds, modes;
        for (std::size_t h = 0; h < p.ports.size(); ++h) {
            const detail::AnalysisPort& ap = ports.at(p.ports[h]);
            row.hops.push_back({p.ports[h], strict_tq(ap), p.dh[h], p.lc[h]});
            if (ap.sched) {
                scheds.insert(detail::scheduler_name(ap.sched->scheduler));
                modes.insert(detail::mode_name(ap.sched->mode));
            }
        }
        auto tag = [](const std::set<std::string>& s) {
            if (s.empty()) return std::string("none");
            if (s.size() == 1) return *s.begin();
            return std::string("mixed");
        };
        row.scheduler = req.scheduler ? detail::scheduler_name(*req.scheduler) : tag(scheds);
        row.mode = req.mode ? detail::mode_name(*req.mode) : tag(modes);
        rep.rows.push_back(std::move(row));
    }
    std::sort(rep.rows.begin(), rep.rows.end(), [](const FlowBound& a, const FlowBound& b) {
        if (a.flow != b.flow) return a.flow < b.flow;
        return a.dst < b.dst;
    });
    return rep;
}

// source-burst curve samples for plotting: per scheduled port, per class,
// the aggregate arrival and the service curve on a uniform grid
inline void curve_samples_csv(const Config& cfg, const AnalysisRequest& req, std::ostream& out,
                              int samples = 200) {
    Rat H = req.horizon ? *req.horizon : std::min(cfg.options.horizon, ms(50));
    out << "port,class,curve,t_ns,bits\n";
    std::map<std::string, std::array<std::optional<Curve>, 4>> alpha;
    for (const FlowSpec& f : cfg.flows)
        for (const auto& route : f.routes)
            for (std::size_t j = 0; j + 1 < route.size(); ++j) {
                std::string pid = port_id(route[j], route[j + 1]);
                Curve a = flow_arrival_curve(f, H);
                auto& slot = alpha[pid][detail::class_bucket(f.cls)];
                slot = slot ? add(*slot, a) : a;
            }
    for (const auto& [pid, sched_base] : cfg.schedules) {
        auto it = alpha.find(pid);
        if (it == alpha.end()) continue;
        auto [u, v] = split_port(pid);
        const LinkSpec* link = cfg.network.find_link(u, v);
        if (!link) continue;
        PortSchedule sched = sched_base;
        if (req.scheduler) sched.scheduler = *req.scheduler;
        if (req.mode) sched.mode = *req.mode;
        SchedulerContext ctx;
        ctx.schedule = sched;
        ctx.link_rate = link->rate;
        for (const GclWindow& w : sched.windows) {
            if (w.kind == WindowKind::Syn) ctx.l_syn += w.length;
            if (w.kind == WindowKind::GuardBand) ctx.l_gb += w.length;
        }
        ctx.l_oh = Rat(24) * 8 / link->rate;
        ctx.r_index = req.r_index;
        const Rat fallback = Rat(1518) * 8;
        if (sched.idle_slope_a > 0)
            ctx.class_a = CreditParams{AvbClass::A, sched.idle_slope_a,
                                       sched.idle_slope_a - link->rate, link->rate, fallback,
                                       fallback};
        if (sched.idle_slope_b > 0)
            ctx.class_b = CreditParams{AvbClass::B, sched.idle_slope_b,
                                       sched.idle_slope_b - link->rate, link->rate, fallback,
                                       fallback};
        for (int b = 0; b < 3; ++b) {
            if (!it->second[b]) continue;
            std::optional<Curve> beta;
            if (b == 0) beta = tt_service_curve(ctx, sched.scheduler, sched.mode, H);
            else {
                AvbClass cls = (b == 1) ? AvbClass::A : AvbClass::B;
                beta = ctx.shrunk() ? avb_service_curve_amplified(ctx, cls, sched.scheduler,
                                                                  sched.mode, H)
                                    : avb_service_curve(ctx, cls, sched.scheduler, sched.mode, H);
            }
            for (int k = 0; k <= samples; ++k) {
                Rat t = H * k / samples;
                out << pid << ',' << detail::bucket_name(b) << ",alpha," << rat_str(t) << ','
                    << rat_str(it->second[b]->value(t)) << '\n';
                out << pid << ',' << detail::bucket_name(b) << ",beta," << rat_str(t) << ','
                    << rat_str(beta->value(t)) << '\n';
            }
        }
    }
}

}  // namespace tsn
