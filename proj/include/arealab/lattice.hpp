#pragma once

#include "arealab/core.hpp"

#include <json.hpp>

#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace arealab {

using Coord = std::vector<double>;

struct Site {
    int   index = 0;
    Coord coords;
};

/// Finite lattice with Euclidean coordinates and an undirected adjacency graph.
/// Immutable after construction; the graph is guaranteed connected.
class Lattice {
    public:
    Lattice() = default;

    /// Custom adjacency. Sites must be indexed 0..N-1 in order.
    Lattice(int dimension, double spacing, std::vector<Site> sites, std::vector<std::pair<int, int>> edges)
        : dim_(dimension), spacing_(spacing), sites_(std::move(sites)), edges_(std::move(edges)) {
        require(dim_ >= 1, "lattice dimension must be >= 1");
        require(spacing_ > 0, "lattice spacing must be positive");
        require(!sites_.empty(), "lattice must contain at least one site");
        for(std::size_t i = 0; i < sites_.size(); ++i) {
            require(sites_[i].index == static_cast<int>(i), "site indices must be 0..N-1 in order");
            require(static_cast<int>(sites_[i].coords.size()) == dim_, "site coordinate has wrong dimension");
        }
        adj_.assign(sites_.size(), {});
        for(auto [a, b] : edges_) {
            require(a >= 0 && b >= 0 && a < size() && b < size(), "edge refers to a missing site");
            require(a != b, "self-loop edges are not allowed");
            adj_[a].push_back(b);
            adj_[b].push_back(a);
        }
        for(auto &nb : adj_) std::sort(nb.begin(), nb.end());
        auto reach = bfs(0);
        if(std::find(reach.begin(), reach.end(), -1) != reach.end()) throw ModelError("lattice adjacency graph is not connected");
    }

    [[nodiscard]] int                                     dimension() const { return dim_; }
    [[nodiscard]] double                                  spacing() const { return spacing_; }
    [[nodiscard]] int                                     size() const { return static_cast<int>(sites_.size()); }
    [[nodiscard]] const std::vector<Site>                &sites() const { return sites_; }
    [[nodiscard]] const Site                             &site(int s) const { return sites_.at(s); }
    [[nodiscard]] const std::vector<std::pair<int, int>> &edges() const { return edges_; }
    [[nodiscard]] const std::vector<int>                 &neighbors(int s) const { return adj_.at(s); }

    /// Graph distances from s to every site (-1 when unreachable).
    [[nodiscard]] std::vector<int> bfs(int s) const {
        std::vector<int> dist(sites_.size(), -1);
        std::deque<int>  queue{s};
        dist.at(s) = 0;
        while(!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for(int v : adj_[u]) {
                if(dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        return dist;
    }

    [[nodiscard]] double euclidean(int a, int b) const { return euclidean(sites_.at(a).coords, sites_.at(b).coords); }

    static double euclidean(const Coord &x, const Coord &y) {
        double s = 0;
        for(std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return std::sqrt(s);
    }

    [[nodiscard]] Coord centroid() const {
        Coord c(dim_, 0.0);
        for(const auto &s : sites_)
            for(int d = 0; d < dim_; ++d) c[d] += s.coords[d];
        for(auto &x : c) x /= static_cast<double>(sites_.size());
        return c;
    }

    private:
    int                              dim_     = 0;
    double                           spacing_ = 1.0;
    std::vector<Site>                sites_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>>    adj_;
};

/// Hypercubic lattice with open boundaries and nearest-neighbour edges.
/// Site index is row-major with the first axis running fastest.
inline Lattice build_lattice(int dimension, const std::vector<int> &extents, double spacing) {
    if(dimension <= 0) throw ParameterError("build_lattice: dimension must be >= 1");
    if(extents.empty()) throw ParameterError("build_lattice: extents must not be empty");
    require(static_cast<int>(extents.size()) == dimension, "build_lattice: need one extent per dimension");
    for(int e : extents) require(e > 0, "build_lattice: extents must be positive");
    require(spacing > 0, "build_lattice: spacing must be positive");

    const int count = std::accumulate(extents.begin(), extents.end(), 1, std::multiplies<>());
    std::vector<int> stride(dimension, 1);
    for(int d = 1; d < dimension; ++d) stride[d] = stride[d - 1] * extents[d - 1];

    std::vector<Site>                sites;
    std::vector<std::pair<int, int>> edges;
    for(int i = 0; i < count; ++i) {
        Site s{i, Coord(dimension)};
        for(int d = 0; d < dimension; ++d) {
            int x       = (i / stride[d]) % extents[d];
            s.coords[d] = spacing * x;
            if(x + 1 < extents[d]) edges.emplace_back(i, i + stride[d]);
        }
        sites.push_back(std::move(s));
    }
    std::sort(edges.begin(), edges.end());
    return Lattice(dimension, spacing, std::move(sites), std::move(edges));
}

inline int graph_distance(const Lattice &lat, int s, int t) {
    require(s >= 0 && s < lat.size() && t >= 0 && t < lat.size(), "graph_distance: site out of range");
    int d = lat.bfs(s)[t];
    if(d < 0) throw ModelError("graph_distance: sites are not connected");
    return d;
}

struct BallSet {
    int              center = 0;
    int              k      = 1;
    std::vector<int> members; // sorted

    [[nodiscard]] bool contains(int s) const { return std::binary_search(members.begin(), members.end(), s); }
};

/// B_s^k = { s' : graph distance(s, s') < k }.
inline BallSet ball(const Lattice &lat, int s, int k) {
    if(k <= 0) throw ParameterError("ball: radius k must be >= 1");
    require(s >= 0 && s < lat.size(), "ball: site out of range");
    BallSet b{s, k, {}};
    auto    dist = lat.bfs(s);
    for(int t = 0; t < lat.size(); ++t)
        if(dist[t] >= 0 && dist[t] < k) b.members.push_back(t);
    return b;
}

struct SiteOrdering {
    Coord            origin;
    std::vector<int> order;
    std::string      tie_rule = "lexicographic by coordinates";
};

/// Sites sorted by Euclidean distance to origin; equal distances (to 1e-12 relative)
/// fall back to lexicographic coordinate order, then site index.
inline SiteOrdering order_sites_by_radius(const Lattice &lat, const Coord &origin) {
    require(static_cast<int>(origin.size()) == lat.dimension(), "order_sites_by_radius: origin has wrong dimension");
    SiteOrdering ord{origin, std::vector<int>(lat.size()), "lexicographic by coordinates"};
    std::iota(ord.order.begin(), ord.order.end(), 0);
    std::vector<double> r(lat.size());
    for(int s = 0; s < lat.size(); ++s) r[s] = Lattice::euclidean(lat.site(s).coords, origin);
    std::stable_sort(ord.order.begin(), ord.order.end(), [&](int a, int b) {
        const double tol = 1e-12 * std::max({1.0, r[a], r[b]});
        if(std::abs(r[a] - r[b]) > tol) return r[a] < r[b];
        const auto &ca = lat.site(a).coords, &cb = lat.site(b).coords;
        if(ca != cb) return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
        return a < b;
    });
    return ord;
}

struct LatticeConstants {
    double a0 = 0;
    double n0 = 0;
    bool   n0_is_estimate = true;
};

/// a0 = max over distinct pairs of l_E / l_G (exhaustive). n0 is estimated from closed
/// axis-aligned boxes of side equal to the lattice spacing, with corners sampled on a
/// quarter-spacing grid covering the lattice bounding box.
inline LatticeConstants verify_constants(const Lattice &lat) {
    LatticeConstants c;
    c.a0 = 0;
    for(int s = 0; s < lat.size(); ++s) {
        auto dist = lat.bfs(s);
        for(int t = s + 1; t < lat.size(); ++t) c.a0 = std::max(c.a0, lat.euclidean(s, t) / dist[t]);
    }
    if(lat.size() == 1) c.a0 = 1.0;

    const int    D    = lat.dimension();
    const double side = lat.spacing();
    const double step = side / 4.0;
    Coord        lo(D, std::numeric_limits<double>::max()), hi(D, std::numeric_limits<double>::lowest());
    for(const auto &s : lat.sites())
        for(int d = 0; d < D; ++d) {
            lo[d] = std::min(lo[d], s.coords[d]);
            hi[d] = std::max(hi[d], s.coords[d]);
        }
    std::vector<int> ticks(D);
    for(int d = 0; d < D; ++d) ticks[d] = static_cast<int>(std::floor((hi[d] - lo[d] + side) / step + 1e-9)) + 1;
    const double     eps = 1e-12 * side;
    std::vector<int> idx(D, 0);
    int              best = 0;
    while(true) {
        Coord corner(D);
        for(int d = 0; d < D; ++d) corner[d] = lo[d] - side + step * idx[d];
        int count = 0;
        for(const auto &s : lat.sites()) {
            bool inside = true;
            for(int d = 0; d < D && inside; ++d) inside = s.coords[d] >= corner[d] - eps && s.coords[d] <= corner[d] + side + eps;
            count += inside;
        }
        best  = std::max(best, count);
        int d = 0;
        while(d < D && ++idx[d] >= ticks[d]) idx[d++] = 0;
        if(d == D) break;
    }
    c.n0 = best / std::pow(side, D);
    return c;
}

inline nlohmann::json to_json(const Lattice &lat) {
    nlohmann::json j;
    j["dimension"] = lat.dimension();
    j["spacing"]   = lat.spacing();
    j["sites"]     = nlohmann::json::array();
    for(const auto &s : lat.sites()) j["sites"].push_back({{"index", s.index}, {"coords", s.coords}});
    j["edges"] = nlohmann::json::array();
    for(auto [a, b] : lat.edges()) j["edges"].push_back({a, b});
    return j;
}

inline Lattice lattice_from_json(const nlohmann::json &j) {
    std::vector<Site> sites;
    for(const auto &s : j.at("sites")) sites.push_back({s.at("index").get<int>(), s.at("coords").get<Coord>()});
    std::vector<std::pair<int, int>> edges;
    for(const auto &e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return Lattice(j.at("dimension").get<int>(), j.at("spacing").get<double>(), std::move(sites), std::move(edges));
}

} // namespace arealab
