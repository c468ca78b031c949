#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "navigscene/errors.hpp"
#include "navigscene/geo.hpp"
#include "navigscene/rng.hpp"

#include <json.hpp>

namespace navigscene::routesim {

inline constexpr double kDefaultSpeedMps = 10.0;

// Heading deltas below 30 degrees read as "keep going"; 150 and above is a
// reversal. In between, the sign picks the side.
inline constexpr double kStraightThresholdDeg = 30.0;
inline constexpr double kUturnThresholdDeg = 150.0;

enum class ManeuverKind { left, right, straight, u_turn, merge, exit, roundabout };

inline const char* to_string(ManeuverKind k) {
    switch (k) {
        case ManeuverKind::left: return "left";
        case ManeuverKind::right: return "right";
        case ManeuverKind::straight: return "straight";
        case ManeuverKind::u_turn: return "u-turn";
        case ManeuverKind::merge: return "merge";
        case ManeuverKind::exit: return "exit";
        case ManeuverKind::roundabout: return "roundabout";
    }
    return "straight";
}

inline ManeuverKind maneuver_kind_from_string(const std::string& s) {
    if (s == "left") return ManeuverKind::left;
    if (s == "right") return ManeuverKind::right;
    if (s == "straight") return ManeuverKind::straight;
    if (s == "u-turn") return ManeuverKind::u_turn;
    if (s == "merge") return ManeuverKind::merge;
    if (s == "exit") return ManeuverKind::exit;
    if (s == "roundabout") return ManeuverKind::roundabout;
    throw ValidationError("unknown maneuver kind: " + s);
}

struct Maneuver {
    ManeuverKind kind = ManeuverKind::straight;
    double distance_from_prev_m = 0.0;  // from the previous maneuver, or the route start
    bool has_signal = false;
};

struct RoadNode {
    int id = 0;
    geo::GeoCoordinate position;
    bool has_signal = false;
};

struct RoadEdge {
    int a = 0;
    int b = 0;
    double length_m = 0.0;
    std::string road_name;
};

struct RoadGraph {
    std::vector<RoadNode> nodes;
    std::vector<RoadEdge> edges;
    std::uint64_t seed = 0;
};

struct Route {
    std::vector<int> node_path;
    double total_length_m = 0.0;
    double duration_s = 0.0;
    std::vector<Maneuver> maneuvers;
    // Geometry of the traversed path, one entry per node in node_path.
    std::vector<geo::GeoCoordinate> polyline;
    std::vector<double> leg_lengths_m;  // node_path.size() - 1 entries
};

struct RouteFrame {
    int index = 0;
    geo::GeoCoordinate position;
    double heading_deg = 0.0;  // clockwise from north, [0, 360)
    std::optional<Maneuver> next_maneuver;
    double dist_to_next_maneuver_m = 0.0;  // 0 when no maneuver remains
};

// Bearing from a to b in degrees clockwise from north, using the local
// equirectangular approximation (fine at road-network scale).
inline double heading_deg(const geo::GeoCoordinate& a, const geo::GeoCoordinate& b) {
    const double mid_lat = geo::kRadPerDeg * 0.5 * (a.lat + b.lat);
    const double east = geo::normalize_longitude(b.lon - a.lon) * std::cos(mid_lat);
    const double north = b.lat - a.lat;
    double h = geo::kDegPerRad * std::atan2(east, north);
    if (h < 0.0) h += 360.0;
    return h;
}

// Signed turn angle in (-180, 180]; positive turns right.
inline double heading_delta_deg(double heading_in, double heading_out) {
    double d = std::fmod(heading_out - heading_in, 360.0);
    if (d > 180.0) d -= 360.0;
    if (d <= -180.0) d += 360.0;
    return d;
}

inline ManeuverKind classify_turn(double delta_deg) {
    const double mag = std::fabs(delta_deg);
    if (mag < kStraightThresholdDeg) return ManeuverKind::straight;
    if (mag >= kUturnThresholdDeg) return ManeuverKind::u_turn;
    return delta_deg > 0.0 ? ManeuverKind::right : ManeuverKind::left;
}

namespace detail {

inline const std::array<const char*, 16>& name_pool() {
    static const std::array<const char*, 16> pool = {
        "Oak",    "Maple",  "Cedar",    "Elm",     "Pine",   "Birch",
        "Walnut", "Aspen",  "Juniper",  "Magnolia", "Sycamore", "Poplar",
        "Hawthorn", "Willow", "Chestnut", "Spruce"};
    return pool;
}

}  // namespace detail

// Deterministic grid road network. Rows become streets, columns avenues;
// names and traffic-signal placement are drawn from the seed, node
// coordinates from repeated east/north offsets of the origin.
inline RoadGraph synthesize_graph(std::uint64_t seed, int grid_w, int grid_h,
                                  const geo::GeoCoordinate& origin, double spacing_m) {
    if (grid_w < 2 || grid_h < 2)
        throw InvalidDimsError("grid must be at least 2x2, got " + std::to_string(grid_w) + "x" +
                               std::to_string(grid_h));
    if (!(spacing_m > 0.0)) throw ValidationError("spacing_m must be > 0");

    Rng rng(seed);
    const auto& pool = detail::name_pool();

    std::vector<std::string> row_roads(static_cast<std::size_t>(grid_h));
    for (auto& name : row_roads) name = std::string(pool[rng.next_index(pool.size())]) + " Street";
    std::vector<std::string> col_roads(static_cast<std::size_t>(grid_w));
    for (auto& name : col_roads) name = std::string(pool[rng.next_index(pool.size())]) + " Avenue";

    RoadGraph g;
    g.seed = seed;
    g.nodes.reserve(static_cast<std::size_t>(grid_w) * grid_h);
    for (int j = 0; j < grid_h; ++j) {
        for (int i = 0; i < grid_w; ++i) {
            RoadNode node;
            node.id = j * grid_w + i;
            node.position = geo::offset_coordinate(
                origin, geo::TranslationVector(i * spacing_m, j * spacing_m));
            node.has_signal = rng.next_bool(0.35);
            g.nodes.push_back(std::move(node));
        }
    }
    for (int j = 0; j < grid_h; ++j)
        for (int i = 0; i + 1 < grid_w; ++i)
            g.edges.push_back({j * grid_w + i, j * grid_w + i + 1, spacing_m,
                               row_roads[static_cast<std::size_t>(j)]});
    for (int j = 0; j + 1 < grid_h; ++j)
        for (int i = 0; i < grid_w; ++i)
            g.edges.push_back({j * grid_w + i, (j + 1) * grid_w + i, spacing_m,
                               col_roads[static_cast<std::size_t>(i)]});
    return g;
}

inline nlohmann::ordered_json graph_to_json(const RoadGraph& g) {
    nlohmann::ordered_json j;
    j["seed"] = g.seed;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes)
        j["nodes"].push_back({{"id", n.id},
                              {"lat", n.position.lat},
                              {"lon", n.position.lon},
                              {"signal", n.has_signal}});
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back(
            {{"a", e.a}, {"b", e.b}, {"length_m", e.length_m}, {"road", e.road_name}});
    return j;
}

inline RoadGraph graph_from_json(const nlohmann::ordered_json& j) {
    RoadGraph g;
    try {
        g.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& n : j.at("nodes")) {
            RoadNode node;
            node.id = n.at("id").get<int>();
            node.position = geo::GeoCoordinate(n.at("lat").get<double>(), n.at("lon").get<double>());
            node.has_signal = n.at("signal").get<bool>();
            g.nodes.push_back(std::move(node));
        }
        for (const auto& e : j.at("edges")) {
            RoadEdge edge;
            edge.a = e.at("a").get<int>();
            edge.b = e.at("b").get<int>();
            edge.length_m = e.at("length_m").get<double>();
            edge.road_name = e.at("road").get<std::string>();
            if (!(edge.length_m > 0.0)) throw ValidationError("edge length_m must be > 0");
            g.edges.push_back(std::move(edge));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad road graph document: ") + e.what());
    }
    return g;
}

namespace detail {

// Squared local distance good enough for nearest-node snapping.
inline double snap_metric(const geo::GeoCoordinate& a, const geo::GeoCoordinate& b) {
    const double dlat = a.lat - b.lat;
    const double dlon = geo::normalize_longitude(a.lon - b.lon) *
                        std::cos(geo::kRadPerDeg * 0.5 * (a.lat + b.lat));
    return dlat * dlat + dlon * dlon;
}

inline std::size_t node_index_by_id(const RoadGraph& g, int id) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (g.nodes[i].id == id) return i;
    throw ValidationError("edge references unknown node id " + std::to_string(id));
}

inline std::size_t nearest_node(const RoadGraph& g, const geo::GeoCoordinate& p) {
    if (g.nodes.empty()) throw ValidationError("graph has no nodes");
    std::size_t best = 0;
    double best_d = snap_metric(g.nodes[0].position, p);
    for (std::size_t i = 1; i < g.nodes.size(); ++i) {
        const double d = snap_metric(g.nodes[i].position, p);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

// Shortest route by edge length between the graph nodes nearest to src and
// dst. Maneuvers are annotated at every intermediate node from the change of
// heading; duration assumes constant speed.
inline Route plan_route(const RoadGraph& graph, const geo::GeoCoordinate& src,
                        const geo::GeoCoordinate& dst, double speed_mps = kDefaultSpeedMps) {
    if (!(speed_mps > 0.0)) throw ValidationError("speed_mps must be > 0");
    const std::size_t n = graph.nodes.size();
    if (n == 0) throw ValidationError("graph has no nodes");

    const std::size_t start = detail::nearest_node(graph, src);
    const std::size_t goal = detail::nearest_node(graph, dst);
    if (start == goal)
        throw DegenerateRouteError("source and destination snap to node " +
                                   std::to_string(graph.nodes[start].id));

    // adjacency: node index -> (neighbor index, edge length)
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& e : graph.edges) {
        const std::size_t ia = detail::node_index_by_id(graph, e.a);
        const std::size_t ib = detail::node_index_by_id(graph, e.b);
        adj[ia].emplace_back(ib, e.length_m);
        adj[ib].emplace_back(ia, e.length_m);
    }
    for (auto& neighbors : adj) std::sort(neighbors.begin(), neighbors.end());

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<std::size_t> prev(n, n);
    using QueueItem = std::pair<double, std::size_t>;
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
    dist[start] = 0.0;
    queue.emplace(0.0, start);
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u == goal) break;
        for (const auto& [v, len] : adj[u]) {
            if (d + len < dist[v]) {
                dist[v] = d + len;
                prev[v] = u;
                queue.emplace(dist[v], v);
            }
        }
    }
    if (dist[goal] == kInf)
        throw NoPathError("no path between node " + std::to_string(graph.nodes[start].id) +
                          " and node " + std::to_string(graph.nodes[goal].id));

    std::vector<std::size_t> path;
    for (std::size_t u = goal; u != n; u = prev[u]) path.push_back(u);
    std::reverse(path.begin(), path.end());

    Route route;
    route.node_path.reserve(path.size());
    route.polyline.reserve(path.size());
    for (const std::size_t i : path) {
        route.node_path.push_back(graph.nodes[i].id);
        route.polyline.push_back(graph.nodes[i].position);
    }
    route.leg_lengths_m.reserve(path.size() - 1);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        double len = 0.0;
        for (const auto& [v, l] : adj[path[k]])
            if (v == path[k + 1]) {
                len = l;
                break;
            }
        route.leg_lengths_m.push_back(len);
        route.total_length_m += len;
    }
    route.duration_s = route.total_length_m / speed_mps;

    double cum = 0.0, prev_maneuver_at = 0.0;
    for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        cum += route.leg_lengths_m[k - 1];
        const double in = heading_deg(route.polyline[k - 1], route.polyline[k]);
        const double out = heading_deg(route.polyline[k], route.polyline[k + 1]);
        Maneuver m;
        m.kind = classify_turn(heading_delta_deg(in, out));
        m.distance_from_prev_m = cum - prev_maneuver_at;
        m.has_signal = graph.nodes[path[k]].has_signal;
        route.maneuvers.push_back(m);
        prev_maneuver_at = cum;
    }
    return route;
}

// Cumulative arc position of each maneuver along the route.
inline std::vector<double> maneuver_arc_positions(const Route& route) {
    std::vector<double> arcs;
    arcs.reserve(route.maneuvers.size());
    double cum = 0.0;
    for (const auto& m : route.maneuvers) {
        cum += m.distance_from_prev_m;
        arcs.push_back(cum);
    }
    return arcs;
}

// F frames evenly spaced in arc length, endpoints included.
inline std::vector<RouteFrame> sample_frames(const Route& route, int frame_count) {
    if (frame_count < 2)
        throw BadFrameCountError("frame count must be >= 2, got " + std::to_string(frame_count));
    if (route.polyline.size() < 2 || !(route.total_length_m > 0.0))
        throw DegenerateRouteError("cannot sample frames of a degenerate route");

    std::vector<double> cum(route.polyline.size(), 0.0);
    for (std::size_t k = 0; k + 1 < route.polyline.size(); ++k)
        cum[k + 1] = cum[k] + route.leg_lengths_m[k];
    const std::vector<double> maneuver_arcs = maneuver_arc_positions(route);

    std::vector<RouteFrame> frames;
    frames.reserve(static_cast<std::size_t>(frame_count));
    for (int k = 0; k < frame_count; ++k) {
        const double s = (k == frame_count - 1)
                             ? route.total_length_m
                             : route.total_length_m * k / (frame_count - 1);

        std::size_t leg = route.leg_lengths_m.size() - 1;
        for (std::size_t i = 0; i + 1 < cum.size(); ++i)
            if (s < cum[i + 1]) {
                leg = i;
                break;
            }
        const double leg_len = route.leg_lengths_m[leg];
        const double f = leg_len > 0.0 ? (s - cum[leg]) / leg_len : 0.0;
        const auto& a = route.polyline[leg];
        const auto& b = route.polyline[leg + 1];

        RouteFrame frame;
        frame.index = k;
        frame.position = geo::GeoCoordinate(
            a.lat + f * (b.lat - a.lat), a.lon + f * geo::normalize_longitude(b.lon - a.lon));
        frame.heading_deg = heading_deg(a, b);
        for (std::size_t m = 0; m < maneuver_arcs.size(); ++m) {
            if (maneuver_arcs[m] > s) {
                frame.next_maneuver = route.maneuvers[m];
                frame.dist_to_next_maneuver_m = maneuver_arcs[m] - s;
                break;
            }
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace navigscene::routesim
