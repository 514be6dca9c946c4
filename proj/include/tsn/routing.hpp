#pragma once

#include "gcl.hpp"
#include "rational.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsn {

struct RoutingError : std::runtime_error {
    explicit RoutingError(const std::string& what) : std::runtime_error(what) {}
};

struct RoutingMessage {
    std::string id;
    std::string src, dst;
    Rat size_bits;
    Rat period;  // ns
    int tolerance = 1;
};

inline std::string link_id(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
}

struct RoutingProblem {
    std::vector<std::string> nodes;    // end systems and candidate bridges
    std::vector<std::string> bridges;  // candidate bridge subset
    std::vector<std::pair<std::string, std::string>> candidate_links;
    std::map<std::string, Rat> element_cost;  // bridge id or link_id(a,b); absent = 0
    std::vector<RoutingMessage> messages;
    Rat alpha = Rat(1);
    Rat congestion_factor = Rat(3, 2);  // adjacent-hop weight update
    Rat link_rate = Rat(1, 10);         // bits/ns, for schedulability gates
    Rat synth_grid = Rat(1000);

    Rat cost_of(const std::string& element) const {
        std::string key = element.substr(0, element.find('#'));
        auto it = element_cost.find(key);
        return it == element_cost.end() ? Rat(0) : it->second;
    }
};

struct RoutingSolution {
    // message id -> list of link-disjoint routes (node sequences)
    std::map<std::string, std::vector<std::vector<std::string>>> routes;
    std::set<std::string> retained_bridges;
    std::set<std::string> retained_links;
    std::vector<std::string> failures;  // delivery-failure records
    bool used_nlr = false;
};

struct CostBreakdown {
    Rat c_cost = 0;
    Rat c_hops = 0;
    bool overlap_infinite = false;  // C_overlap is 0 or +inf, nothing between
    Rat total = 0;                  // meaningful only when !overlap_infinite
};

struct WeightedGraph {
    std::map<std::string, std::map<std::string, Rat>> adj;

    void add(const std::string& a, const std::string& b, const Rat& w) {
        adj[a][b] = w;
        adj[b][a] = w;
    }
    void remove(const std::string& a, const std::string& b) {
        adj[a].erase(b);
        adj[b].erase(a);
    }
    bool has(const std::string& a, const std::string& b) const {
        auto it = adj.find(a);
        return it != adj.end() && it->second.count(b);
    }
};

namespace detail {

// Dijkstra with deterministic lexicographic tie-break on the full path
inline std::vector<std::string> shortest_path(const WeightedGraph& g, const std::string& src,
                                              const std::string& dst) {
    std::map<std::string, Rat> dist;
    std::map<std::string, std::vector<std::string>> path;
    std::set<std::string> done;
    dist[src] = 0;
    path[src] = {src};
    while (true) {
        std::string u;
        for (const auto& [n, d] : dist)
            if (!done.count(n) && (u.empty() || d < dist[u] || (d == dist[u] && n < u))) u = n;
        if (u.empty()) return {};
        if (u == dst) return path[u];
        done.insert(u);
        auto it = g.adj.find(u);
        if (it == g.adj.end()) continue;
        for (const auto& [v, w] : it->second) {
            if (done.count(v)) continue;
            Rat nd = dist[u] + w;
            std::vector<std::string> np = path[u];
            np.push_back(v);
            if (!dist.count(v) || nd < dist[v] || (nd == dist[v] && np < path[v])) {
                dist[v] = nd;
                path[v] = np;
            }
        }
    }
}

}  // namespace detail

struct DisjointPaths {
    std::vector<std::vector<std::string>> paths;
    bool complete = false;  // found all k requested
};

// Modified Yen: iterated cheapest path, excluding links of accepted paths
// and inflating weights of links adjacent to their interior nodes.
inline DisjointPaths k_disjoint_paths(WeightedGraph graph, const std::string& src,
                                      const std::string& dst, int k,
                                      const Rat& congestion = Rat(3, 2)) {
    if (src == dst) throw RoutingError("source equals destination: " + src);
    if (k < 1) throw RoutingError("tolerance must be at least 1");
    DisjointPaths out;
    for (int i = 0; i < k; ++i) {
        std::vector<std::string> p = detail::shortest_path(graph, src, dst);
        if (p.empty()) break;
        for (std::size_t j = 0; j + 1 < p.size(); ++j) graph.remove(p[j], p[j + 1]);
        for (std::size_t j = 1; j + 1 < p.size(); ++j)
            for (auto& [v, w] : graph.adj[p[j]]) {
                w *= congestion;
                graph.adj[v][p[j]] = w;
            }
        out.paths.push_back(std::move(p));
    }
    out.complete = static_cast<int>(out.paths.size()) == k;
    return out;
}

namespace detail {

// arc weight = element cost plus alpha, so every hop carries the same
// penalty the total cost charges it
inline WeightedGraph problem_graph(const RoutingProblem& p) {
    WeightedGraph g;
    for (const auto& [a, b] : p.candidate_links) {
        Rat w = p.cost_of(link_id(a, b)) + p.alpha;
        g.add(a, b, w > 0 ? w : Rat(1));
    }
    return g;
}

// C_overlap: 0 iff every retained link admits an overlap-free gate schedule
// (eta >= 1) for the messages routed over it
inline bool schedulable(const RoutingSolution& s, const RoutingProblem& p) {
    std::map<std::string, std::vector<GateSpec>> per_link;
    for (const auto& m : p.messages) {
        auto it = s.routes.find(m.id);
        if (it == s.routes.end()) continue;
        for (const auto& route : it->second)
            for (std::size_t j = 0; j + 1 < route.size(); ++j)
                per_link[link_id(route[j], route[j + 1])].push_back(
                    {m.id, m.period, m.size_bits / p.link_rate, {}});
    }
    for (auto& [link, gates] : per_link) {
        if (gates.size() < 2) continue;
        // contiguous packing into one gcd frame: starts in [0, g0) with
        // disjoint windows satisfy every pairwise separation, so a total
        // length fitting the gcd is sufficient without any search
        Rat g0 = gates[0].period, total = 0, points = 0;
        for (const auto& g : gates) {
            g0 = rat_gcd(g0, g.period);
            total += g.length;
            points += g.period / p.synth_grid;
        }
        if (total <= g0) continue;
        // exact search only while it stays tractable; otherwise the packing
        // bound is the acceptance test
        if (gates.size() > 16 || points > 4096) return false;
        SynthesisResult r = synthesize(gates, p.synth_grid, Rat(1));
        if (!r.feasible || r.schedule.eta < 1) return false;
    }
    return true;
}

}  // namespace detail

inline CostBreakdown cost(const RoutingSolution& s, const RoutingProblem& p) {
    CostBreakdown c;
    for (const auto& b : s.retained_bridges) c.c_cost += p.cost_of(b);
    for (const auto& l : s.retained_links) c.c_cost += p.cost_of(l);
    for (const auto& [id, routes] : s.routes)
        for (const auto& r : routes)
            if (!r.empty()) c.c_hops += Rat(static_cast<std::int64_t>(r.size()) - 1);
    c.overlap_infinite = !detail::schedulable(s, p);
    c.total = c.c_cost + p.alpha * c.c_hops;
    return c;
}

namespace detail {

inline void retain(RoutingSolution& s, const RoutingProblem& p) {
    s.retained_bridges.clear();
    s.retained_links.clear();
    std::set<std::string> bridge_set(p.bridges.begin(), p.bridges.end());
    for (const auto& [id, routes] : s.routes) {
        for (const auto& r : routes) {
            for (const auto& n : r)
                if (bridge_set.count(n)) s.retained_bridges.insert(n);
            for (std::size_t j = 0; j + 1 < r.size(); ++j)
                s.retained_links.insert(link_id(r[j], r[j + 1]));
        }
    }
}

inline std::vector<RoutingMessage> by_bandwidth(const RoutingProblem& p) {
    std::vector<RoutingMessage> ms = p.messages;
    std::sort(ms.begin(), ms.end(), [](const RoutingMessage& a, const RoutingMessage& b) {
        Rat ba = a.size_bits / a.period, bb = b.size_bits / b.period;
        if (ba != bb) return ba > bb;
        return a.id < b.id;
    });
    return ms;
}

}  // namespace detail

// Network-level-redundancy baseline: one full network copy per tolerance
// level, each message sent over the same single route in every copy.
inline RoutingSolution nlr_baseline(const RoutingProblem& p) {
    WeightedGraph g = detail::problem_graph(p);
    RoutingSolution s;
    s.used_nlr = true;
    int copies = 1;
    for (const auto& m : p.messages) copies = std::max(copies, m.tolerance);
    for (const auto& m : detail::by_bandwidth(p)) {
        DisjointPaths dp = k_disjoint_paths(g, m.src, m.dst, 1, p.congestion_factor);
        if (dp.paths.empty()) throw RoutingError("message not routable: " + m.id);
        for (int c = 0; c < m.tolerance; ++c) s.routes[m.id].push_back(dp.paths[0]);
    }
    detail::retain(s, p);
    // duplicated copies of every retained element
    std::set<std::string> bridges = s.retained_bridges, links = s.retained_links;
    for (int c = 2; c <= copies; ++c) {
        for (const auto& b : bridges) s.retained_bridges.insert(b + "#" + std::to_string(c));
        for (const auto& l : links) s.retained_links.insert(l + "#" + std::to_string(c));
    }
    return s;
}

// Greedy synthesis over the full candidate graph, with the NLR construction
// evaluated as a candidate so the cheaper of the two is returned.
inline RoutingSolution synthesize_topology(const RoutingProblem& p) {
    WeightedGraph g = detail::problem_graph(p);
    RoutingSolution s;
    for (const auto& m : detail::by_bandwidth(p)) {
        DisjointPaths dp = k_disjoint_paths(g, m.src, m.dst, m.tolerance, p.congestion_factor);
        if (!dp.complete)
            throw RoutingError("tolerance " + std::to_string(m.tolerance) +
                               " unreachable for message " + m.id);
        s.routes[m.id] = dp.paths;
    }
    detail::retain(s, p);
    RoutingSolution nlr = nlr_baseline(p);
    CostBreakdown cg = cost(s, p), cn = cost(nlr, p);
    if (!cn.overlap_infinite && (cg.overlap_infinite || cn.total < cg.total)) return nlr;
    return s;
}

// Marks one element faulty. Messages keep any surviving disjoint route
// untouched; a message left with no surviving route is rerouted over the
// surviving retained elements, or recorded as undeliverable.
inline RoutingSolution inject_fault_and_reroute(const RoutingSolution& solution,
                                                const std::string& failed,
                                                const RoutingProblem& p) {
    RoutingSolution s = solution;
    auto route_uses = [&](const std::vector<std::string>& r) {
        for (const auto& n : r)
            if (n == failed) return true;
        for (std::size_t j = 0; j + 1 < r.size(); ++j)
            if (link_id(r[j], r[j + 1]) == failed) return true;
        return false;
    };
    // surviving topology: retained elements minus the failed one
    WeightedGraph g;
    for (const auto& l : s.retained_links) {
        std::string base = l.substr(0, l.find('#'));
        auto bar = base.find('|');
        std::string a = base.substr(0, bar), b = base.substr(bar + 1);
        if (l == failed || a == failed || b == failed) continue;
        Rat w = p.cost_of(base) + p.alpha;
        g.add(a, b, w > 0 ? w : Rat(1));
    }
    for (const auto& m : p.messages) {
        auto it = s.routes.find(m.id);
        if (it == s.routes.end()) continue;
        auto& routes = it->second;
        std::size_t before = routes.size();
        routes.erase(std::remove_if(routes.begin(), routes.end(), route_uses), routes.end());
        if (routes.size() == before) continue;  // untouched by the fault
        if (!routes.empty()) continue;          // a disjoint route survives as-is
        DisjointPaths dp = k_disjoint_paths(g, m.src, m.dst, 1, p.congestion_factor);
        if (dp.paths.empty()) {
            s.failures.push_back(m.id);
            continue;
        }
        routes = dp.paths;
    }
    detail::retain(s, p);
    return s;
}

}  // namespace tsn
