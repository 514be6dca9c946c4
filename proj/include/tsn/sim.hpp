#pragma once

#include "credit.hpp"
#include "model.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct SimError : std::runtime_error {
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

struct SimOptions {
    std::uint64_t seed = 0;
    Rat duration = 0;            // ns
    bool preamble_on = true;     // 20 B preamble + IFG per wire frame
    bool random_phases = false;  // per-flow release offsets from the seeded rng
    Rat propagation = 0;         // ns per link
    std::int64_t min_fragment_bytes = 64;
    std::int64_t resume_overhead_bytes = 24;
    bool sync_enabled = true;
};

// startup synchronization slots; data may flow only in the frame-send phase
struct SyncPhases {
    Rat initial = us(200);
    Rat fixed_frame = us(500);
    Rat ack = ms(1);
    Rat buffer = us(250);
    Rat finish = us(200);

    Rat frame_send_begin() const { return initial + fixed_frame + ack + buffer; }
};

struct TraceEvent {
    Rat time;
    std::string event, node, port, flow;
    std::int64_t seq = 0;
    std::string detail;
};

struct TraceLog {
    std::vector<TraceEvent> events;

    void to_csv(std::ostream& out) const {
        out << "time_ns,event,node,port,flow,seq,detail\n";
        for (const auto& e : events)
            out << rat_str(e.time) << ',' << e.event << ',' << e.node << ',' << e.port << ','
                << e.flow << ',' << e.seq << ',' << e.detail << '\n';
    }
};

struct FlowStats {
    std::string flow, dst;
    std::int64_t released = 0, delivered = 0, dropped = 0;
    bool has_stats = false;  // false when nothing was delivered
    Rat min_delay = 0, max_delay = 0, mean_delay = 0, jitter = 0;
};

struct MeasuredReport {
    std::vector<FlowStats> rows;

    void to_csv(std::ostream& out) const {
        out << "flow,dst,released,delivered,dropped,min_ns,mean_ns,max_ns,jitter_ns\n";
        for (const auto& r : rows) {
            out << r.flow << ',' << r.dst << ',' << r.released << ',' << r.delivered << ','
                << r.dropped << ',';
            if (r.has_stats)
                out << rat_str(r.min_delay) << ',' << rat_str(r.mean_delay) << ','
                    << rat_str(r.max_delay) << ',' << rat_str(r.jitter);
            else
                out << ",,,";
            out << '\n';
        }
    }
};

namespace detail {

inline int priority_of(TrafficClass c) {
    switch (c) {
        case TrafficClass::TT:
        case TrafficClass::CDT: return 7;
        case TrafficClass::A: return 6;
        case TrafficClass::B: return 5;
        case TrafficClass::BE: return 1;
    }
    return 0;
}

struct SimFrame {
    std::string flow;
    std::int64_t seq = 0;
    Rat total_bits = 0;
    Rat remaining_bits = 0;
    Rat extra_bits = 0;  // pending resume overhead for the next fragment
    Rat release = 0;
    std::size_t route = 0, hop = 0;
    int fragments = 0;
};

struct ClassCredit {
    bool enabled = false;
    Rat idle = 0, send = 0;
    Rat credit = 0;
    CreditCause cause = CreditCause::Reset;
};

struct SimPort {
    std::string id, from, to;
    Rat rate = 0;
    const PortSchedule* sched = nullptr;  // null: always open, no shaper
    std::array<std::deque<SimFrame>, 8> queues;
    std::array<ClassCredit, 8> cbs;  // indexed by priority, A/B only
    Rat credit_time = 0;
    bool busy = false;
    SimFrame current;
    int current_prio = 0;
    Rat tx_start = 0, tx_payload = 0;
    std::uint64_t tx_gen = 0;

    bool gated() const { return sched && sched->scheduler == Scheduler::CbsTas; }
    bool backlog(int prio) const { return !queues[prio].empty(); }
};

enum class EvKind { Phase = 0, TxEnd = 1, Arrival = 2, Release = 3, Check = 4 };

struct Ev {
    Rat time;
    int rank;
    std::string port, flow;
    std::int64_t seq = 0;
    EvKind kind;
    std::uint64_t gen = 0;
    SimFrame frame;  // for Arrival / Release

    bool operator>(const Ev& o) const {
        if (time != o.time) return time > o.time;
        if (rank != o.rank) return rank > o.rank;
        if (port != o.port) return port > o.port;
        if (flow != o.flow) return flow > o.flow;
        return seq > o.seq;
    }
};

}  // namespace detail

class SimulatorInstance {
  public:
    SimulatorInstance(const Config& config, const SimOptions& options)
        : cfg_(config), opt_(options) {
        if (opt_.duration <= 0) throw SimError("simulation duration must be positive");
        std::set<std::string> flow_ids;
        Rat max_hyper = 0;
        for (const auto& f : cfg_.flows)
            if (!flow_ids.insert(f.id).second) throw SimError("duplicate flow id: " + f.id);
        for (const auto& f : cfg_.flows) {
            for (std::size_t r = 0; r < f.routes.size(); ++r) {
                const auto& route = f.routes[r];
                for (std::size_t j = 0; j + 1 < route.size(); ++j) {
                    const LinkSpec* link = cfg_.network.find_link(route[j], route[j + 1]);
                    if (!link)
                        throw SimError("route of " + f.id + " crosses missing link " +
                                       route[j] + "-" + route[j + 1]);
                    ensure_port(route[j], route[j + 1], link->rate);
                }
            }
        }
        for (const auto& [id, p] : ports_)
            if (p.sched) max_hyper = std::max(max_hyper, p.sched->hyperperiod);
        if (max_hyper > 0 && opt_.duration < 2 * max_hyper)
            throw SimError("duration shorter than two hyperperiods");
        if (opt_.sync_enabled &&
            opt_.duration <= phases_.frame_send_begin() + phases_.finish)
            throw SimError("duration too short for the synchronization phases");
    }

    TraceLog run() {
        std::mt19937_64 rng(opt_.seed);
        trace_ = TraceLog{};
        eq_ = {};
        delivered_bits_.clear();
        released_ = 0;

        Rat data_begin = opt_.sync_enabled ? phases_.frame_send_begin() : Rat(0);
        Rat data_end = opt_.sync_enabled ? opt_.duration - phases_.finish : opt_.duration;
        data_begin_ = data_begin;
        data_end_ = data_end;
        if (opt_.sync_enabled) schedule_sync_events();

        // periodic releases, phased from the start of the frame-send slot
        for (const auto& f : cfg_.flows) {
            if (f.routes.empty()) continue;
            Rat offset = 0;
            if (opt_.random_phases) {
                std::uniform_int_distribution<std::int64_t> d(0, 999);
                offset = f.period * d(rng) / 1000;
            }
            for (Rat t = data_begin + offset; t < data_end; t += f.period) {
                std::int64_t seq = static_cast<std::int64_t>((t - data_begin - offset) / f.period);
                for (std::size_t r = 0; r < f.routes.size(); ++r) {
                    detail::SimFrame fr;
                    fr.flow = f.id;
                    fr.seq = seq;
                    fr.total_bits = Rat(f.size_bytes) * 8;
                    fr.remaining_bits = fr.total_bits;
                    fr.release = t;
                    fr.route = r;
                    detail::Ev ev{t, 3, "", f.id, seq, detail::EvKind::Release, 0, fr};
                    eq_.push(ev);
                }
            }
        }
        // gate-boundary wakeups for every scheduled port
        for (auto& [id, p] : ports_) {
            if (!p.gated()) continue;
            for (Rat base = 0; base < opt_.duration; base += p.sched->hyperperiod)
                for (const auto& w : p.sched->windows) {
                    push_check(id, base + w.offset);
                    push_check(id, base + w.offset + w.length);
                }
        }

        while (!eq_.empty()) {
            detail::Ev ev = eq_.top();
            eq_.pop();
            if (ev.time > opt_.duration) break;
            switch (ev.kind) {
                case detail::EvKind::Phase:
                    log(ev.time, "sync-phase-change", ev.flow, "", "", 0, ev.port);
                    break;
                case detail::EvKind::Release: on_release(ev); break;
                case detail::EvKind::Arrival: on_arrival(ev); break;
                case detail::EvKind::TxEnd: on_tx_end(ev); break;
                case detail::EvKind::Check: on_check(ev); break;
            }
        }
        for (auto& [id, p] : ports_) update_credits(p, opt_.duration);
        // anything still queued or in flight counts as dropped
        std::sort(trace_.events.begin(), trace_.events.end(),
                  [](const TraceEvent& a, const TraceEvent& b) {
                      if (a.time != b.time) return a.time < b.time;
                      if (a.event != b.event) return a.event < b.event;
                      if (a.flow != b.flow) return a.flow < b.flow;
                      return a.seq < b.seq;
                  });
        return trace_;
    }

  private:
    void ensure_port(const std::string& u, const std::string& v, const Rat& rate) {
        std::string id = port_id(u, v);
        if (ports_.count(id)) return;
        detail::SimPort p;
        p.id = id;
        p.from = u;
        p.to = v;
        p.rate = rate;
        auto it = cfg_.schedules.find(id);
        if (it != cfg_.schedules.end()) {
            p.sched = &it->second;
            p.cbs[6] = {it->second.idle_slope_a > 0, it->second.idle_slope_a,
                        it->second.idle_slope_a - rate, Rat(0), CreditCause::Reset};
            p.cbs[5] = {it->second.idle_slope_b > 0, it->second.idle_slope_b,
                        it->second.idle_slope_b - rate, Rat(0), CreditCause::Reset};
        }
        ports_[id] = std::move(p);
    }

    void schedule_sync_events() {
        Rat t = 0;
        auto phase = [&](const std::string& name, const Rat& len, const std::string& note) {
            eq_.push({t, 0, note, name, 0, detail::EvKind::Phase, 0, {}});
            t += len;
        };
        phase("initial", phases_.initial, "");
        phase("fixed-frame-propagation", phases_.fixed_frame, "fixed frame 70B payload 32B");
        phase("ack", phases_.ack, "ack 64B");
        phase("buffer", phases_.buffer, "");
        phase("frame-send", opt_.duration - phases_.finish - t, "");
        phase("finish", phases_.finish, "finish 64B");
    }

    Rat preamble_bits() const { return opt_.preamble_on ? Rat(20 * 8) : Rat(0); }
    Rat min_frag_bits() const { return Rat(opt_.min_fragment_bytes) * 8; }

    int flow_priority(const std::string& id) const {
        for (const auto& f : cfg_.flows)
            if (f.id == id) return detail::priority_of(f.cls);
        return 0;
    }
    const FlowSpec& flow_of(const std::string& id) const {
        for (const auto& f : cfg_.flows)
            if (f.id == id) return f;
        throw SimError("unknown flow " + id);
    }

    // gate state of a priority queue at time t: {open, close_time}; closed
    // gates report the next opening instead
    std::pair<bool, Rat> gate(const detail::SimPort& p, int prio, const Rat& t) const {
        Rat inf = opt_.duration + 1;
        if (!p.gated()) return {true, inf};
        Rat T = p.sched->hyperperiod;
        Rat phase = rat_mod_sim(t, T);
        if (prio == 7) {
            // scheduled traffic transmits only inside its protected windows
            Rat next_open = inf;
            for (const auto& w : p.sched->windows) {
                if (w.kind != WindowKind::TT) continue;
                if (w.offset <= phase && phase < w.offset + w.length)
                    return {true, t - phase + w.offset + w.length};
                Rat start = (phase < w.offset) ? t - phase + w.offset : t - phase + T + w.offset;
                next_open = std::min(next_open, start);
            }
            return {false, next_open};
        }
        // other queues stay open except while a protected band holds the link
        Rat next_block = inf;
        for (const auto& w : p.sched->windows) {
            if (w.kind == WindowKind::AVB) continue;
            if (w.offset <= phase && phase < w.offset + w.length)
                return {false, t - phase + w.offset + w.length};
            Rat start = (phase < w.offset) ? t - phase + w.offset : t - phase + T + w.offset;
            next_block = std::min(next_block, start);
        }
        return {true, next_block};
    }

    static Rat rat_mod_sim(const Rat& x, const Rat& m) {
        Rat r = x - Rat(floor_int(x / m)) * m;
        if (r < 0) r += m;
        if (r >= m) r -= m;
        return r;
    }

    void log(const Rat& t, const std::string& event, const std::string& node,
             const std::string& port, const std::string& flow, std::int64_t seq,
             const std::string& detail_str) {
        trace_.events.push_back({t, event, node, port, flow, seq, detail_str});
    }

    void push_check(const std::string& port, const Rat& t) {
        if (t > opt_.duration) return;
        eq_.push({t, 4, port, "", 0, detail::EvKind::Check, 0, {}});
    }

    // advance both CBS credits of a port to time t, emitting credit events
    // at every slope change
    void update_credits(detail::SimPort& p, const Rat& t) {
        for (int prio : {6, 5}) {
            auto& c = p.cbs[prio];
            if (!c.enabled) continue;
            Rat ct = p.credit_time;
            while (ct < t) {
                auto [open, edge] = gate(p, prio, ct);
                Rat stop = std::min(edge, t);
                bool sending = p.busy && p.current_prio == prio;
                CreditCause cause;
                Rat slope;
                if (sending) {
                    cause = CreditCause::SendDrain;
                    slope = c.send;
                } else if (!open) {
                    cause = CreditCause::Frozen;
                    slope = 0;
                } else if (p.backlog(prio) || c.credit < 0) {
                    cause = CreditCause::IdleGain;
                    slope = c.idle;
                } else {
                    if (c.credit > 0) {
                        c.credit = 0;
                        emit_credit(p, prio, ct, CreditCause::Reset, c);
                    }
                    cause = CreditCause::Reset;
                    slope = 0;
                }
                // idle recovery stops at zero when nothing is queued
                if (cause == CreditCause::IdleGain && !p.backlog(prio) && c.credit < 0) {
                    Rat zero_at = ct + (-c.credit) / c.idle;
                    if (zero_at < stop) stop = zero_at;
                }
                if (cause != c.cause) emit_credit(p, prio, ct, cause, c);
                c.credit += slope * (stop - ct);
                ct = stop;
            }
        }
        p.credit_time = t;
    }

    void emit_credit(detail::SimPort& p, int prio, const Rat& t, CreditCause cause,
                     detail::ClassCredit& c) {
        c.cause = cause;
        const char* name = cause == CreditCause::IdleGain    ? "idle-gain"
                           : cause == CreditCause::SendDrain ? "send-drain"
                           : cause == CreditCause::Frozen    ? "frozen"
                                                             : "reset";
        log(t, "credit-event", p.from, p.id, prio == 6 ? "classA" : "classB", 0,
            std::string(name) + " " + rat_str(c.credit));
    }

    void on_release(detail::Ev& ev) {
        const FlowSpec& f = flow_of(ev.flow);
        const auto& route = f.routes[ev.frame.route];
        ++released_;
        log(ev.time, "frame-arrival", route[0], "", ev.flow, ev.seq, "release");
        deliver_to_port(ev.frame, route, ev.time);
    }

    void deliver_to_port(detail::SimFrame fr, const std::vector<std::string>& route,
                         const Rat& t) {
        if (fr.hop + 1 >= route.size()) {  // reached the destination node
            log(t, "deliver", route.back(), "", fr.flow, fr.seq,
                "delay " + rat_str(t - fr.release));
            delivered_bits_[fr.flow] += fr.total_bits;
            return;
        }
        std::string pid = port_id(route[fr.hop], route[fr.hop + 1]);
        detail::Ev ev{t, 2, pid, fr.flow, fr.seq, detail::EvKind::Arrival, 0, fr};
        eq_.push(ev);
    }

    void on_arrival(detail::Ev& ev) {
        detail::SimPort& p = ports_.at(ev.port);
        update_credits(p, ev.time);
        int prio = flow_priority(ev.flow);
        p.queues[prio].push_back(ev.frame);
        if (ev.frame.hop > 0)
            log(ev.time, "frame-arrival", p.from, p.id, ev.flow, ev.seq, "");
        // a TT arrival preempts a lower-priority frame in flight (Qbu, SP)
        if (prio == 7 && p.busy && p.current_prio < 7 && !p.gated() &&
            port_mode(p) == Mode::Preemption)
            preempt_now(p, ev.time);
        push_check(ev.port, ev.time);
    }

    Mode port_mode(const detail::SimPort& p) const {
        return p.sched ? p.sched->mode : Mode::NonPreemption;
    }

    void preempt_now(detail::SimPort& p, const Rat& t) {
        Rat sent_payload = (t - p.tx_start) * p.rate - preamble_bits() -
                           (p.current.fragments > 0 ? Rat(opt_.resume_overhead_bytes) * 8 : 0);
        Rat cut = std::max(sent_payload, min_frag_bits());
        if (p.tx_payload - cut < min_frag_bits()) return;  // too late to split
        Rat end = p.tx_start + (cut + preamble_bits() +
                                (p.current.fragments > 0 ? Rat(opt_.resume_overhead_bytes) * 8
                                                         : Rat(0))) /
                                   p.rate;
        p.tx_payload = cut;
        ++p.tx_gen;
        eq_.push({end, 1, p.id, p.current.flow, p.current.seq, detail::EvKind::TxEnd, p.tx_gen, {}});
        log(t, "preempt-hold", p.from, p.id, p.current.flow, p.current.seq, "");
    }

    void on_tx_end(detail::Ev& ev) {
        detail::SimPort& p = ports_.at(ev.port);
        if (ev.gen != p.tx_gen) return;  // superseded by a preemption split
        update_credits(p, ev.time);
        detail::SimFrame fr = p.current;
        p.busy = false;
        fr.remaining_bits -= p.tx_payload;
        update_credits(p, ev.time);  // reset happens with the link idle
        if (fr.remaining_bits > 0) {
            ++fr.fragments;
            fr.extra_bits = Rat(opt_.resume_overhead_bytes) * 8;
            p.queues[p.current_prio].push_front(fr);
            log(ev.time, "preempt-release", p.from, p.id, fr.flow, fr.seq,
                "remaining " + rat_str(fr.remaining_bits));
        } else {
            log(ev.time, "transmission-end", p.from, p.id, fr.flow, fr.seq,
                fr.fragments > 0 ? "fragments " + std::to_string(fr.fragments + 1) : "");
            const FlowSpec& f = flow_of(fr.flow);
            detail::SimFrame next = fr;
            next.hop += 1;
            next.remaining_bits = next.total_bits;
            next.fragments = 0;
            next.extra_bits = 0;
            deliver_to_port(next, f.routes[fr.route], ev.time + opt_.propagation);
        }
        push_check(ev.port, ev.time);
    }

    void on_check(detail::Ev& ev) {
        detail::SimPort& p = ports_.at(ev.port);
        Rat t = ev.time;
        if (p.busy) return;
        if (t < data_begin_) {
            push_check(ev.port, data_begin_);
            return;
        }
        if (t >= data_end_) return;
        update_credits(p, t);
        for (int prio : {7, 6, 5, 1}) {
            if (p.queues[prio].empty()) continue;
            detail::SimFrame& fr = p.queues[prio].front();
            auto [open, edge] = gate(p, prio, t);
            if (!open) {
                push_check(ev.port, edge);
                continue;
            }
            auto& c = p.cbs[prio];
            if (c.enabled && c.credit < 0) {
                push_check(ev.port, t + (-c.credit) / c.idle);
                continue;
            }
            Rat wire = fr.remaining_bits + preamble_bits() + fr.extra_bits;
            Rat tx = wire / p.rate;
            Rat window = edge - t;
            bool fits = tx <= window;
            Rat capacity = window * p.rate - preamble_bits() - fr.extra_bits;
            bool splittable = p.gated() && port_mode(p) == Mode::Preemption && prio != 7 &&
                              capacity >= min_frag_bits() &&
                              fr.remaining_bits >= 2 * min_frag_bits();
            if (!fits && !splittable) continue;  // length-aware gating
            p.busy = true;
            p.current = fr;
            p.current_prio = prio;
            p.tx_start = t;
            // a fragment may not leave a tail below the minimum fragment size
            p.tx_payload = fits ? fr.remaining_bits
                                : std::min(capacity, fr.remaining_bits - min_frag_bits());
            p.queues[prio].pop_front();
            ++p.tx_gen;
            Rat end = t + (p.tx_payload + preamble_bits() + fr.extra_bits) / p.rate;
            log(t, "transmission-start", p.from, p.id, p.current.flow, p.current.seq,
                fits ? "" : "split");
            update_credits(p, t);  // switch the class slope to send-drain
            eq_.push({end, 1, p.id, p.current.flow, p.current.seq, detail::EvKind::TxEnd,
                      p.tx_gen, {}});
            return;
        }
    }

    Config cfg_;
    SimOptions opt_;
    SyncPhases phases_;
    std::map<std::string, detail::SimPort> ports_;
    std::priority_queue<detail::Ev, std::vector<detail::Ev>, std::greater<detail::Ev>> eq_;
    TraceLog trace_;
    std::map<std::string, Rat> delivered_bits_;
    std::int64_t released_ = 0;
    Rat data_begin_ = 0, data_end_ = 0;
};

inline SimulatorInstance build_sim(const Config& config, const SimOptions& options) {
    return SimulatorInstance(config, options);
}

// per-flow delay statistics reconstructed from the trace
inline MeasuredReport measure(const TraceLog& trace, const std::vector<FlowSpec>& flows) {
    std::map<std::pair<std::string, std::string>, std::vector<Rat>> delays;
    std::map<std::string, std::int64_t> released;
    for (const auto& e : trace.events) {
        if (e.event == "frame-arrival" && e.detail == "release") ++released[e.flow];
        if (e.event == "deliver") {
            Rat d = 0;
            auto pos = e.detail.find(' ');
            if (pos != std::string::npos) d = Rat(e.detail.substr(pos + 1));
            delays[{e.flow, e.node}].push_back(d);
        }
    }
    MeasuredReport rep;
    for (const auto& f : flows) {
        std::set<std::string> dsts(f.dst.begin(), f.dst.end());
        for (const auto& r : f.routes)
            if (!r.empty()) dsts.insert(r.back());
        for (const auto& d : dsts) {
            FlowStats st;
            st.flow = f.id;
            st.dst = d;
            st.released = released.count(f.id) ? released[f.id] : 0;
            auto it = delays.find({f.id, d});
            if (it != delays.end() && !it->second.empty()) {
                st.delivered = static_cast<std::int64_t>(it->second.size());
                st.has_stats = true;
                Rat sum = 0;
                st.min_delay = it->second.front();
                st.max_delay = it->second.front();
                for (const auto& x : it->second) {
                    sum += x;
                    st.min_delay = std::min(st.min_delay, x);
                    st.max_delay = std::max(st.max_delay, x);
                }
                st.mean_delay = sum / Rat(st.delivered);
                st.jitter = st.max_delay - st.min_delay;
            }
            st.dropped = st.released - st.delivered;
            rep.rows.push_back(std::move(st));
        }
    }
    std::sort(rep.rows.begin(), rep.rows.end(), [](const FlowStats& a, const FlowStats& b) {
        if (a.flow != b.flow) return a.flow < b.flow;
        return a.dst < b.dst;
    });
    return rep;
}

// ---- index-table frame shrinking (encode at the talker, decode at the
// listener; misses fall back to plain frames) ----

struct TtFrame {
    std::string flow;
    std::int64_t value = 0;
    std::int64_t size_bytes = 0;
};

struct WireFrame {
    bool indexed = false;
    std::string table;     // table id when indexed, flow id otherwise
    std::string code_hex;  // empty unless indexed
    std::int64_t size_bytes = 0;
};

struct IndexedResult {
    std::vector<WireFrame> wire;
    std::vector<TtFrame> restored;
};

inline Rat index_ratio(const IndexTable& table, const std::vector<FlowSpec>& flows) {
    if (table.rows.empty()) throw SimError("index table " + table.id + " has no rows");
    Rat total = 0;
    for (const auto& fid : table.flows)
        for (const auto& f : flows)
            if (f.id == fid) total += Rat(f.size_bytes);
    if (total <= 0) throw SimError("index table " + table.id + " encodes no payload");
    return Rat(table.rows.front().code_bytes()) / total;
}

// sum of the geometric shrink series r + r^2 + ... = r / (1 - r)
inline Rat shrink_series(const Rat& r) {
    if (r <= 0 || r >= 1) throw SimError("shrink ratio must lie in (0, 1)");
    return r / (1 - r);
}

inline IndexedResult encode_decode_indexed(const std::vector<TtFrame>& frames,
                                           const std::vector<IndexTable>& tables,
                                           const std::vector<FlowSpec>& flows) {
    for (const auto& t : tables) {
        std::set<std::vector<std::int64_t>> combos;
        for (const auto& r : t.rows)
            if (!combos.insert(r.values).second)
                throw SimError("ambiguous index table " + t.id + ": duplicate value combination");
    }
    IndexedResult res;
    std::vector<bool> used(frames.size(), false);
    for (const auto& t : tables) {
        // gather exactly one pending frame per participating flow
        std::vector<std::size_t> picks;
        for (const auto& fid : t.flows) {
            std::optional<std::size_t> found;
            for (std::size_t i = 0; i < frames.size(); ++i)
                if (!used[i] && frames[i].flow == fid && !found) found = i;
            if (!found) break;
            picks.push_back(*found);
        }
        if (picks.size() != t.flows.size()) continue;
        std::vector<std::int64_t> combo;
        for (std::size_t i : picks) combo.push_back(frames[i].value);
        const IndexRow* hit = nullptr;
        for (const auto& r : t.rows)
            if (r.values == combo) hit = &r;
        if (!hit) continue;  // miss: frames go out unshrunk
        for (std::size_t i : picks) used[i] = true;
        WireFrame w;
        w.indexed = true;
        w.table = t.id;
        w.code_hex = hit->code_hex;
        w.size_bytes = std::max<std::int64_t>(64, hit->code_bytes());
        res.wire.push_back(std::move(w));
        // decode: the listener shares the table and the flow specs
        for (std::size_t k = 0; k < t.flows.size(); ++k) {
            TtFrame orig;
            orig.flow = t.flows[k];
            orig.value = hit->values[k];
            for (const auto& f : flows)
                if (f.id == orig.flow) orig.size_bytes = f.size_bytes;
            res.restored.push_back(std::move(orig));
        }
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (used[i]) continue;
        res.wire.push_back({false, frames[i].flow, "", frames[i].size_bytes});
        res.restored.push_back(frames[i]);
    }
    return res;
}

}  // namespace tsn
