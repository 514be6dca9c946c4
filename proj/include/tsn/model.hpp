#pragma once

#include "minplus.hpp"
#include "schedule.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

enum class NodeKind { EndSystem, Switch, Clock };
enum class TrafficClass { TT, CDT, A, B, BE };

struct Node {
    std::string id;
    NodeKind kind;
};

struct LinkSpec {
    std::string a, b;
    Rat rate;  // bits/ns, full duplex
};

struct NetworkModel {
    std::vector<Node> nodes;
    std::vector<LinkSpec> links;

    const LinkSpec* find_link(const std::string& u, const std::string& v) const {
        for (const auto& l : links)
            if ((l.a == u && l.b == v) || (l.a == v && l.b == u)) return &l;
        return nullptr;
    }
    bool has_node(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return true;
        return false;
    }
};

struct FlowSpec {
    std::string id;
    TrafficClass cls = TrafficClass::BE;
    std::string src;
    std::vector<std::string> dst;
    std::int64_t size_bytes = 0;
    Rat period = 0;  // ns
    int tolerance = 1;
    std::vector<std::vector<std::string>> routes;  // node-id lists, may be empty
};

struct IndexRow {
    std::string code_hex;
    std::vector<std::int64_t> values;

    std::int64_t code_bytes() const {
        return static_cast<std::int64_t>((code_hex.size() + 1) / 2);
    }
};

struct IndexTable {
    std::string id;
    std::vector<std::string> flows;  // participating TT flow ids
    std::vector<IndexRow> rows;
};

struct AnalysisOptions {
    Rat horizon = ms(500);  // ns
    Rat alpha_routing = Rat(1);
    std::uint64_t seed = 0;
};

struct Config {
    NetworkModel network;
    std::vector<FlowSpec> flows;
    std::map<std::string, PortSchedule> schedules;
    std::vector<IndexTable> index_tables;
    AnalysisOptions options;
};

// egress port naming: the directed hop from u to v is "u->v"
inline std::string port_id(const std::string& u, const std::string& v) { return u + "->" + v; }

inline std::pair<std::string, std::string> split_port(const std::string& port) {
    auto pos = port.find("->");
    if (pos == std::string::npos || pos == 0 || pos + 2 >= port.size())
        throw ModelError("malformed port id: " + port);
    return {port.substr(0, pos), port.substr(pos + 2)};
}

namespace detail {

inline Rat rat_from_json(const nlohmann::json& j, const std::string& where) {
    if (j.is_number_integer()) return Rat(j.get<std::int64_t>());
    if (j.is_number_float()) {
        double d = j.get<double>();
        return Rat(static_cast<std::int64_t>(std::llround(d * 1e6)), 1000000);
    }
    throw ModelError(where + ": expected a number");
}

inline nlohmann::json json_from_rat(const Rat& v) {
    if (denominator(v) == 1) return static_cast<std::int64_t>(numerator(v));
    return to_double(v);
}

inline TrafficClass class_from(const std::string& s) {
    if (s == "TT") return TrafficClass::TT;
    if (s == "CDT") return TrafficClass::CDT;
    if (s == "A") return TrafficClass::A;
    if (s == "B") return TrafficClass::B;
    if (s == "BE") return TrafficClass::BE;
    throw ModelError("unknown traffic class: " + s);
}
inline std::string class_name(TrafficClass c) {
    switch (c) {
        case TrafficClass::TT: return "TT";
        case TrafficClass::CDT: return "CDT";
        case TrafficClass::A: return "A";
        case TrafficClass::B: return "B";
        case TrafficClass::BE: return "BE";
    }
    return "?";
}

inline NodeKind kind_from(const std::string& s) {
    if (s == "end-system") return NodeKind::EndSystem;
    if (s == "switch") return NodeKind::Switch;
    if (s == "clock") return NodeKind::Clock;
    throw ModelError("unknown node kind: " + s);
}
inline std::string kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::EndSystem: return "end-system";
        case NodeKind::Switch: return "switch";
        case NodeKind::Clock: return "clock";
    }
    return "?";
}

inline Scheduler scheduler_from(const std::string& s) {
    if (s == "cbs-tas") return Scheduler::CbsTas;
    if (s == "cbs-sp") return Scheduler::CbsSp;
    throw ModelError("unknown scheduler: " + s);
}
inline std::string scheduler_name(Scheduler s) {
    return s == Scheduler::CbsTas ? "cbs-tas" : "cbs-sp";
}

inline Mode mode_from(const std::string& s) {
    if (s == "non-preemption") return Mode::NonPreemption;
    if (s == "preemption") return Mode::Preemption;
    throw ModelError("unknown integration mode: " + s);
}
inline std::string mode_name(Mode m) {
    return m == Mode::NonPreemption ? "non-preemption" : "preemption";
}

inline WindowKind window_kind_from(const std::string& s) {
    if (s == "tt") return WindowKind::TT;
    if (s == "avb") return WindowKind::AVB;
    if (s == "syn") return WindowKind::Syn;
    if (s == "guard-band") return WindowKind::GuardBand;
    if (s == "overhead") return WindowKind::Overhead;
    throw ModelError("unknown window kind: " + s);
}
inline std::string window_kind_name(WindowKind k) {
    switch (k) {
        case WindowKind::TT: return "tt";
        case WindowKind::AVB: return "avb";
        case WindowKind::Syn: return "syn";
        case WindowKind::GuardBand: return "guard-band";
        case WindowKind::Overhead: return "overhead";
    }
    return "?";
}

}  // namespace detail

inline void validate(const Config& c) {
    std::set<std::string> ids;
    for (const auto& n : c.network.nodes)
        if (!ids.insert(n.id).second) throw ModelError("duplicate node id: " + n.id);
    for (const auto& l : c.network.links) {
        if (!ids.count(l.a)) throw ModelError("unknown node id: " + l.a);
        if (!ids.count(l.b)) throw ModelError("unknown node id: " + l.b);
        if (l.a == l.b) throw ModelError("link endpoints must differ: " + l.a);
        if (l.rate <= 0) throw ModelError("link rate must be positive: " + l.a + "-" + l.b);
    }
    std::set<std::string> flow_ids;
    for (const auto& f : c.flows) {
        if (!flow_ids.insert(f.id).second) throw ModelError("duplicate flow id: " + f.id);
        if (f.size_bytes < 64 || f.size_bytes > 1518)
            throw ModelError("frame size outside [64, 1518] bytes: " + f.id);
        if (f.period <= 0) throw ModelError("flow period must be positive: " + f.id);
        if (f.tolerance < 1) throw ModelError("tolerance must be at least 1: " + f.id);
        if (!ids.count(f.src)) throw ModelError("unknown node id: " + f.src);
        for (const auto& d : f.dst)
            if (!ids.count(d)) throw ModelError("unknown node id: " + d);
        for (const auto& r : f.routes)
            for (const auto& n : r)
                if (!ids.count(n)) throw ModelError("unknown node id in route of " + f.id);
    }
    for (const auto& [port, sch] : c.schedules) {
        if (sch.port != port) throw ModelError("schedule key/port mismatch: " + port);
        auto [u, v] = split_port(port);
        const LinkSpec* link = c.network.find_link(u, v);
        if (!link) throw ModelError("port does not match any link: " + port);
        if (sch.hyperperiod <= 0) throw ModelError("hyperperiod must be positive: " + port);
        if (sch.idle_slope_a < 0 || sch.idle_slope_b < 0 ||
            sch.idle_slope_a + sch.idle_slope_b > link->rate)
            throw ModelError("idle-slope sum exceeds link rate on port " + port);
        for (const auto& w : sch.windows) {
            if (w.offset < 0 || w.offset >= sch.hyperperiod || w.length <= 0 ||
                w.offset + w.length > sch.hyperperiod)
                throw ModelError("window outside the hyperperiod on port " + port);
        }
        for (std::size_t i = 0; i < sch.windows.size(); ++i)
            for (std::size_t j = i + 1; j < sch.windows.size(); ++j) {
                const auto& a = sch.windows[i];
                const auto& b = sch.windows[j];
                if (a.offset < b.offset + b.length && b.offset < a.offset + a.length)
                    throw ModelError("overlapping windows on port " + port);
            }
    }
    for (const auto& t : c.index_tables) {
        std::int64_t encoded = 0;
        for (const auto& fid : t.flows) {
            bool found = false;
            for (const auto& f : c.flows)
                if (f.id == fid) {
                    encoded += f.size_bytes;
                    found = true;
                }
            if (!found) throw ModelError("index table " + t.id + " references unknown flow " + fid);
        }
        std::set<std::string> codes;
        for (const auto& row : t.rows) {
            if (!codes.insert(row.code_hex).second)
                throw ModelError("duplicate index code in table " + t.id);
            if (row.code_bytes() >= encoded)
                throw ModelError("index code as long as the encoded payload in table " + t.id);
        }
    }
    if (c.options.horizon <= 0) throw ModelError("analysis horizon must be positive");
}

inline Config load_config(const nlohmann::json& doc) {
    using detail::rat_from_json;
    Config c;
    for (const auto& n : doc.value("network", nlohmann::json::object()).value("nodes", nlohmann::json::array()))
        c.network.nodes.push_back({n.at("id").get<std::string>(),
                                   detail::kind_from(n.at("kind").get<std::string>())});
    for (const auto& l : doc.value("network", nlohmann::json::object()).value("links", nlohmann::json::array()))
        c.network.links.push_back({l.at("a").get<std::string>(), l.at("b").get<std::string>(),
                                   rat_from_json(l.at("rate_mbps"), "rate_mbps") / 1000});
    for (const auto& f : doc.value("flows", nlohmann::json::array())) {
        FlowSpec fs;
        fs.id = f.at("id").get<std::string>();
        fs.cls = detail::class_from(f.at("class").get<std::string>());
        fs.src = f.at("src").get<std::string>();
        for (const auto& d : f.at("dst")) fs.dst.push_back(d.get<std::string>());
        fs.size_bytes = f.at("size_bytes").get<std::int64_t>();
        fs.period = rat_from_json(f.at("period_us"), "period_us") * 1000;
        fs.tolerance = f.value("tolerance", 1);
        for (const auto& r : f.value("route", nlohmann::json::array())) {
            std::vector<std::string> route;
            for (const auto& n : r) route.push_back(n.get<std::string>());
            fs.routes.push_back(std::move(route));
        }
        c.flows.push_back(std::move(fs));
    }
    for (const auto& s : doc.value("schedules", nlohmann::json::array())) {
        PortSchedule ps;
        ps.port = s.at("port").get<std::string>();
        ps.hyperperiod = rat_from_json(s.at("hyperperiod_us"), "hyperperiod_us") * 1000;
        ps.scheduler = detail::scheduler_from(s.at("scheduler").get<std::string>());
        ps.mode = detail::mode_from(s.at("mode").get<std::string>());
        auto [u, v] = split_port(ps.port);
        const LinkSpec* link = c.network.find_link(u, v);
        if (!link) throw ModelError("port does not match any link: " + ps.port);
        ps.idle_slope_a = rat_from_json(s.at("idle_slope_a_pct"), "idle_slope_a_pct") / 100 * link->rate;
        ps.idle_slope_b = rat_from_json(s.at("idle_slope_b_pct"), "idle_slope_b_pct") / 100 * link->rate;
        for (const auto& w : s.value("windows", nlohmann::json::array()))
            ps.windows.push_back({detail::window_kind_from(w.at("kind").get<std::string>()),
                                  rat_from_json(w.at("offset_us"), "offset_us") * 1000,
                                  rat_from_json(w.at("length_us"), "length_us") * 1000});
        if (c.schedules.count(ps.port)) throw ModelError("duplicate schedule for port " + ps.port);
        c.schedules[ps.port] = std::move(ps);
    }
    for (const auto& t : doc.value("index_tables", nlohmann::json::array())) {
        IndexTable it;
        it.id = t.at("id").get<std::string>();
        for (const auto& f : t.at("flows")) it.flows.push_back(f.get<std::string>());
        for (const auto& r : t.at("rows")) {
            IndexRow row;
            row.code_hex = r.at("code_hex").get<std::string>();
            for (const auto& v : r.at("values")) row.values.push_back(v.get<std::int64_t>());
            it.rows.push_back(std::move(row));
        }
        c.index_tables.push_back(std::move(it));
    }
    if (doc.contains("options")) {
        const auto& o = doc.at("options");
        if (o.contains("horizon_us"))
            c.options.horizon = rat_from_json(o.at("horizon_us"), "horizon_us") * 1000;
        if (o.contains("alpha_routing"))
            c.options.alpha_routing = rat_from_json(o.at("alpha_routing"), "alpha_routing");
        c.options.seed = o.value("seed", std::uint64_t{0});
    }
    validate(c);
    return c;
}

inline nlohmann::json to_json(const Config& c) {
    using detail::json_from_rat;
    nlohmann::json doc;
    doc["network"]["nodes"] = nlohmann::json::array();
    for (const auto& n : c.network.nodes)
        doc["network"]["nodes"].push_back({{"id", n.id}, {"kind", detail::kind_name(n.kind)}});
    doc["network"]["links"] = nlohmann::json::array();
    for (const auto& l : c.network.links)
        doc["network"]["links"].push_back(
            {{"a", l.a}, {"b", l.b}, {"rate_mbps", json_from_rat(l.rate * 1000)}});
    doc["flows"] = nlohmann::json::array();
    for (const auto& f : c.flows) {
        nlohmann::json jf{{"id", f.id},
                          {"class", detail::class_name(f.cls)},
                          {"src", f.src},
                          {"dst", f.dst},
                          {"size_bytes", f.size_bytes},
                          {"period_us", json_from_rat(f.period / 1000)},
                          {"tolerance", f.tolerance}};
        if (!f.routes.empty()) jf["route"] = f.routes;
        doc["flows"].push_back(std::move(jf));
    }
    doc["schedules"] = nlohmann::json::array();
    for (const auto& [port, s] : c.schedules) {
        auto [u, v] = split_port(port);
        const LinkSpec* link = c.network.find_link(u, v);
        nlohmann::json js{{"port", s.port},
                          {"hyperperiod_us", json_from_rat(s.hyperperiod / 1000)},
                          {"scheduler", detail::scheduler_name(s.scheduler)},
                          {"mode", detail::mode_name(s.mode)},
                          {"idle_slope_a_pct", json_from_rat(s.idle_slope_a / link->rate * 100)},
                          {"idle_slope_b_pct", json_from_rat(s.idle_slope_b / link->rate * 100)}};
        js["windows"] = nlohmann::json::array();
        for (const auto& w : s.windows)
            js["windows"].push_back({{"kind", detail::window_kind_name(w.kind)},
                                     {"offset_us", json_from_rat(w.offset / 1000)},
                                     {"length_us", json_from_rat(w.length / 1000)}});
        doc["schedules"].push_back(std::move(js));
    }
    doc["index_tables"] = nlohmann::json::array();
    for (const auto& t : c.index_tables) {
        nlohmann::json jt{{"id", t.id}, {"flows", t.flows}};
        jt["rows"] = nlohmann::json::array();
        for (const auto& r : t.rows)
            jt["rows"].push_back({{"code_hex", r.code_hex}, {"values", r.values}});
        doc["index_tables"].push_back(std::move(jt));
    }
    doc["options"] = {{"horizon_us", json_from_rat(c.options.horizon / 1000)},
                      {"alpha_routing", json_from_rat(c.options.alpha_routing)},
                      {"seed", c.options.seed}};
    return doc;
}

// leaky bucket with a one-maximum-frame burst
inline Curve flow_arrival_curve(const FlowSpec& flow, const Rat& horizon) {
    Rat b = Rat(flow.size_bytes) * 8;
    return make_curve(CurveShape::leaky_bucket(b, b / flow.period), horizon);
}

inline bool flow_uses_port(const FlowSpec& flow, const std::string& port) {
    if (port.empty()) return true;  // port-agnostic aggregate
    auto [u, v] = split_port(port);
    for (const auto& r : flow.routes)
        for (std::size_t j = 0; j + 1 < r.size(); ++j)
            if (r[j] == u && r[j + 1] == v) return true;
    return false;
}

inline Curve class_aggregate(const std::vector<FlowSpec>& flows, TrafficClass cls,
                             const std::string& port, const Rat& horizon) {
    Curve sum = Curve::affine(Rat(0), Rat(0), horizon);
    for (const auto& f : flows)
        if (f.cls == cls && flow_uses_port(f, port)) sum = add(sum, flow_arrival_curve(f, horizon));
    return sum;
}

}  // namespace tsn
