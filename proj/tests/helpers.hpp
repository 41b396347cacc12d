#pragma once

#include <algorithm>
#include <chrono>
#include <initializer_list>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "departnet/graph.hpp"
#include "departnet/ingest.hpp"

namespace testing {

using departnet::Edge;
using departnet::EmployeeId;
using departnet::Graph;

// Graph from (u, v, w) triples in any order; nodes are the endpoints plus `extra`.
inline Graph make_graph(std::initializer_list<std::tuple<EmployeeId, EmployeeId, double>> triples,
                        std::vector<EmployeeId> extra = {}) {
    std::vector<Edge> edges;
    std::vector<EmployeeId> nodes = std::move(extra);
    for (auto [u, v, w] : triples) {
        if (u > v) std::swap(u, v);
        edges.push_back({u, v, w});
        nodes.push_back(u);
        nodes.push_back(v);
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return Graph(std::move(nodes), std::move(edges));
}

// Erdos-Renyi graph on up to `max_nodes` nodes with weights in (0, 10].
// Some node ids are skipped so local and global indices differ.
inline Graph random_graph(std::mt19937_64& rng, int max_nodes, bool allow_isolated = true) {
    std::uniform_int_distribution<int> size(0, max_nodes);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = size(rng);
    const double p = unit(rng);
    std::vector<EmployeeId> ids;
    EmployeeId next = 0;
    for (int i = 0; i < n; ++i) {
        next += 1 + static_cast<EmployeeId>(unit(rng) < 0.3);
        ids.push_back(next);
    }
    std::vector<Edge> edges;
    std::vector<EmployeeId> nodes;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (unit(rng) < p) {
                edges.push_back({ids[i], ids[j], 10.0 * (1.0 - unit(rng))});
                nodes.push_back(ids[i]);
                nodes.push_back(ids[j]);
            }
    if (allow_isolated)
        for (auto id : ids)
            if (unit(rng) < 0.2) nodes.push_back(id);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return Graph(std::move(nodes), std::move(edges));
}

inline departnet::Timestamp at_day(int day, int hour = 12) {
    using namespace std::chrono;
    const sys_days origin{year{2021} / January / 4};
    return duration_cast<milliseconds>((origin + days{day} + hours{hour}).time_since_epoch()).count();
}

inline departnet::EventRecord dm(EmployeeId from, EmployeeId to, departnet::Timestamp ts = 0) {
    return {ts, from, {to}, departnet::EventKind::direct, 0};
}

inline departnet::EventRecord group(EmployeeId from, std::vector<EmployeeId> to, int size,
                                    departnet::Timestamp ts = 0) {
    return {ts, from, std::move(to), departnet::EventKind::group, size};
}

}  // namespace testing
