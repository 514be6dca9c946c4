#pragma once

#include "analysis.hpp"
#include "gcl.hpp"
#include "routing.hpp"
#include "sim.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsn {

struct PipelineError : std::runtime_error {
    explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

struct PipelineRequest {
    Config config;
    std::string out_dir = ".";
    std::optional<Scheduler> scheduler;
    std::optional<Mode> mode;
    bool both_modes = false;  // analyze: emit joined np/p columns
    Rat r_index = Rat(1);
    std::optional<Rat> horizon;
    bool strict_tqueue = false;
    std::uint64_t seed = 0;
    Rat duration = ms(10);
    std::ostream* log = &std::cout;
};

namespace detail {

inline void write_artifact(const PipelineRequest& req, const std::string& name,
                           const std::function<void(std::ostream&)>& emit) {
    std::filesystem::create_directories(req.out_dir);
    std::filesystem::path path = std::filesystem::path(req.out_dir) / name;
    std::ofstream out(path);
    if (!out.good()) throw PipelineError("cannot write " + path.string());
    emit(out);
    if (req.log) *req.log << "wrote " << path.string() << "\n";
}

inline AnalysisRequest analysis_request(const PipelineRequest& req) {
    AnalysisRequest a;
    a.scheduler = req.scheduler;
    a.mode = req.mode;
    a.r_index = req.r_index;
    a.strict_tqueue = req.strict_tqueue;
    a.horizon = req.horizon;
    return a;
}

inline Config overridden_config(const PipelineRequest& req) {
    Config c = req.config;
    for (auto& [pid, ps] : c.schedules) {
        if (req.scheduler) ps.scheduler = *req.scheduler;
        if (req.mode) ps.mode = *req.mode;
    }
    return c;
}

// wire sizes under index shrinking: frames travel as codes
inline Config shrunk_config(const Config& base, const Rat& r) {
    Config c = base;
    if (r >= 1) return c;
    for (auto& f : c.flows)
        if (f.cls == TrafficClass::TT || f.cls == TrafficClass::CDT)
            f.size_bytes = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(floor_int(Rat(f.size_bytes) * r)));
    return c;
}

}  // namespace detail

inline int cmd_analyze(const PipelineRequest& req) {
    AnalysisRequest areq = detail::analysis_request(req);
    int status = 0;
    if (req.both_modes) {
        areq.mode = Mode::NonPreemption;
        DelayReport np = analyze(req.config, areq);
        areq.mode = Mode::Preemption;
        DelayReport p = analyze(req.config, areq);
        if (np.rows.size() != p.rows.size())
            throw PipelineError("mode reports disagree on the analyzed flow set");
        detail::write_artifact(req, "bounds.csv", [&](std::ostream& out) {
            out << "flow,dst,class,scheduler,r_index,hops,sync_ns,bound_np_ns,bound_p_ns,"
                   "ordering\n";
            for (std::size_t i = 0; i < np.rows.size(); ++i) {
                const FlowBound& a = np.rows[i];
                const FlowBound& b = p.rows[i];
                if (a.flow != b.flow || a.dst != b.dst)
                    throw PipelineError("mode reports disagree on row order");
                bool avb = a.cls == TrafficClass::A || a.cls == TrafficClass::B;
                std::string verdict = "-";
                if (avb) {
                    verdict = b.bound() <= a.bound() ? "ok" : "violated";
                    if (verdict == "violated") status = 1;
                }
                out << a.flow << ',' << a.dst << ',' << detail::class_name(a.cls) << ','
                    << a.scheduler << ',' << rat_str(a.r_index) << ',' << a.hops.size() << ','
                    << rat_str(a.sync) << ',' << rat_str(a.bound()) << ',' << rat_str(b.bound())
                    << ',' << verdict << '\n';
            }
        });
        areq.mode = Mode::NonPreemption;
    } else {
        DelayReport rep = analyze(req.config, areq);
        detail::write_artifact(req, "bounds.csv",
                               [&](std::ostream& out) { rep.to_csv(out); });
    }
    detail::write_artifact(req, "curves.csv", [&](std::ostream& out) {
        curve_samples_csv(req.config, areq, out);
    });
    return status;
}

inline int cmd_simulate(const PipelineRequest& req) {
    Config cfg = detail::overridden_config(req);
    SimOptions opt;
    opt.seed = req.seed;
    opt.duration = req.duration;
    TraceLog trace = build_sim(cfg, opt).run();
    MeasuredReport measured = measure(trace, cfg.flows);
    detail::write_artifact(req, "trace.csv", [&](std::ostream& out) { trace.to_csv(out); });
    detail::write_artifact(req, "measured.csv",
                           [&](std::ostream& out) { measured.to_csv(out); });
    for (const FlowStats& r : measured.rows) {
        if (r.delivered + r.dropped != r.released || r.dropped < 0) return 1;
        if (r.has_stats && !(r.min_delay <= r.mean_delay && r.mean_delay <= r.max_delay))
            return 1;
    }
    return 0;
}

inline int cmd_synth_gcl(const PipelineRequest& req) {
    Config cfg = req.config;
    int status = 0;
    std::vector<std::string> summary;
    for (auto& [pid, ps] : cfg.schedules) {
        if (ps.windows.empty()) continue;
        std::vector<GateSpec> gates;
        for (std::size_t i = 0; i < ps.windows.size(); ++i)
            gates.push_back({pid + "#" + std::to_string(i), ps.hyperperiod,
                             ps.windows[i].length, {}});
        SynthesisResult res = synthesize(gates, us(1));
        if (!res.feasible) {
            status = 1;
            std::string why = pid + ",infeasible,0";
            if (res.blocking_pair)
                why += "," + gates[res.blocking_pair->first].id + "|" +
                       gates[res.blocking_pair->second].id;
            summary.push_back(why + ",");
            continue;
        }
        Rat eta = std::min(res.schedule.eta, Rat(1));
        std::vector<Overlap> overlaps = verify_schedule(res.schedule, gates);
        if (!overlaps.empty()) status = 1;
        for (std::size_t i = 0; i < ps.windows.size(); ++i) {
            ps.windows[i].offset = rat_mod(res.schedule.starts[i], ps.hyperperiod);
            if (res.shortened) ps.windows[i].length = ps.windows[i].length * eta;
        }
        std::sort(ps.windows.begin(), ps.windows.end(),
                  [](const GclWindow& a, const GclWindow& b) { return a.offset < b.offset; });
        summary.push_back(pid + "," + (res.shortened ? "shortened" : "feasible") + "," +
                          rat_str(res.schedule.eta) + "," +
                          std::to_string(overlaps.size()) + ",");
    }
    detail::write_artifact(req, "gcl.csv", [&](std::ostream& out) {
        out << "port,status,eta,overlaps,blocking\n";
        for (const auto& line : summary) out << line << '\n';
    });
    detail::write_artifact(req, "config.json", [&](std::ostream& out) {
        out << to_json(cfg).dump(2) << '\n';
    });
    return status;
}

inline int cmd_route(const PipelineRequest& req) {
    const Config& cfg = req.config;
    RoutingProblem prob;
    prob.alpha = cfg.options.alpha_routing;
    for (const Node& n : cfg.network.nodes) {
        prob.nodes.push_back(n.id);
        if (n.kind == NodeKind::Switch) {
            prob.bridges.push_back(n.id);
            prob.element_cost[n.id] = Rat(1);
        }
    }
    for (const LinkSpec& l : cfg.network.links) {
        prob.candidate_links.push_back({l.a, l.b});
        prob.element_cost[link_id(l.a, l.b)] = Rat(1);
        prob.link_rate = l.rate;
    }
    for (const FlowSpec& f : cfg.flows)
        for (const std::string& d : f.dst)
            prob.messages.push_back({f.dst.size() > 1 ? f.id + ":" + d : f.id, f.src, d,
                                     Rat(f.size_bytes) * 8, f.period, f.tolerance});

    RoutingSolution sol = synthesize_topology(prob);
    CostBreakdown cb = cost(sol, prob);
    int status = cb.overlap_infinite ? 1 : 0;

    detail::write_artifact(req, "routes.csv", [&](std::ostream& out) {
        out << "message,copy,hops,path\n";
        for (const auto& [id, routes] : sol.routes)
            for (std::size_t k = 0; k < routes.size(); ++k) {
                out << id << ',' << k << ',' << routes[k].size() - 1 << ',';
                for (std::size_t j = 0; j < routes[k].size(); ++j)
                    out << (j ? "->" : "") << routes[k][j];
                out << '\n';
            }
    });
    detail::write_artifact(req, "cost.csv", [&](std::ostream& out) {
        out << "c_cost,c_hops,alpha,c_overlap,total,used_nlr,bridges,links\n";
        out << rat_str(cb.c_cost) << ',' << rat_str(cb.c_hops) << ','
            << rat_str(prob.alpha) << ',' << (cb.overlap_infinite ? "inf" : "0") << ','
            << rat_str(cb.total) << ',' << (sol.used_nlr ? 1 : 0) << ','
            << sol.retained_bridges.size() << ',' << sol.retained_links.size() << '\n';
    });
    detail::write_artifact(req, "faults.csv", [&](std::ostream& out) {
        out << "failed_element,undeliverable,messages\n";
        std::set<std::string> elements(sol.retained_bridges.begin(),
                                       sol.retained_bridges.end());
        elements.insert(sol.retained_links.begin(), sol.retained_links.end());
        for (const std::string& e : elements) {
            RoutingSolution after = inject_fault_and_reroute(sol, e, prob);
            out << e << ',' << after.failures.size() << ',';
            for (std::size_t i = 0; i < after.failures.size(); ++i)
                out << (i ? ";" : "") << after.failures[i];
            out << '\n';
        }
    });
    return status;
}

inline int cmd_compare(const PipelineRequest& req) {
    AnalysisRequest areq = detail::analysis_request(req);
    DelayReport bounds = analyze(req.config, areq);
    std::map<std::pair<std::string, std::string>, Rat> bound;
    std::map<std::pair<std::string, std::string>, TrafficClass> cls;
    for (const FlowBound& r : bounds.rows) {
        bound[{r.flow, r.dst}] = r.bound();
        cls[{r.flow, r.dst}] = r.cls;
    }

    Config sim_cfg = detail::shrunk_config(detail::overridden_config(req), req.r_index);
    SimOptions opt;
    opt.seed = req.seed;
    opt.duration = req.duration;
    MeasuredReport measured = measure(build_sim(sim_cfg, opt).run(), sim_cfg.flows);

    int status = 0;
    detail::write_artifact(req, "compare.csv", [&](std::ostream& out) {
        out << "flow,dst,class,delivered,bound_ns,sim_max_ns,slack_ns,verdict\n";
        for (const FlowStats& r : measured.rows) {
            auto it = bound.find({r.flow, r.dst});
            if (it == bound.end()) throw PipelineError("no bound for flow " + r.flow);
            out << r.flow << ',' << r.dst << ',' << detail::class_name(cls[{r.flow, r.dst}])
                << ',' << r.delivered << ',' << rat_str(it->second) << ',';
            if (r.has_stats) {
                bool ok = r.max_delay <= it->second;
                if (!ok) status = 1;
                out << rat_str(r.max_delay) << ',' << rat_str(it->second - r.max_delay) << ','
                    << (ok ? "PASS" : "FAIL");
            } else {
                out << ",," << "PASS";
            }
            out << '\n';
        }
    });
    return status;
}

inline int run_pipeline(const PipelineRequest& req, const std::string& subcommand) {
    if (subcommand == "analyze") return cmd_analyze(req);
    if (subcommand == "simulate") return cmd_simulate(req);
    if (subcommand == "synth-gcl") return cmd_synth_gcl(req);
    if (subcommand == "route") return cmd_route(req);
    if (subcommand == "compare") return cmd_compare(req);
    throw PipelineError("unknown subcommand: " + subcommand);
}

}  // namespace tsn
