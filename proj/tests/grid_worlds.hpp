#pragma once

// Shared helpers for exercising the coordinated search on small grid worlds
// where the full tensor-product roadmap can be enumerated exactly.

#include <algorithm>
#include <deque>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "mrrefine/drrt.hpp"

namespace gridworlds {

// Unit-spacing W x H grid graph in the plane, theta = 0, 4-neighbor edges.
inline mrrefine::Roadmap grid_roadmap(int w, int h, int start_cell, int goal_cell) {
    using namespace mrrefine;
    Roadmap rm;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            rm.vertices.push_back(geom::pose(double(x), double(y), 0.0));
    rm.adjacency.resize(rm.vertices.size());
    auto link = [&](int a, int b) {
        double len = geom::se2_distance(rm.vertices[size_t(a)], rm.vertices[size_t(b)]);
        rm.edges.push_back({a, b, len});
        rm.adjacency[size_t(a)].push_back({b, len});
        rm.adjacency[size_t(b)].push_back({a, len});
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int v = y * w + x;
            if (x + 1 < w) link(v, v + 1);
            if (y + 1 < h) link(v, v + w);
        }
    rm.start_index = start_cell;
    rm.goal_index = goal_cell;
    rm.connected = true;
    return rm;
}

// Owns roadmaps so Stage pointers stay valid for the fixture's lifetime.
struct Fixture {
    std::deque<mrrefine::Roadmap> roadmaps;
    std::vector<mrrefine::RobotTrack> tracks;

    void add_robot(double radius) { tracks.push_back({mrrefine::geom::Disc{radius}, {}}); }

    void add_stage(size_t robot, mrrefine::Roadmap rm, std::string id,
                   std::vector<std::string> preds = {}) {
        roadmaps.push_back(std::move(rm));
        tracks[robot].stages.push_back(
            {std::move(id), &roadmaps.back(), std::move(preds), std::nullopt, nullptr});
    }

    mrrefine::geom::Aabb bounds() const {
        mrrefine::geom::Aabb b{1e9, 1e9, -1e9, -1e9};
        for (const mrrefine::Roadmap& rm : roadmaps)
            for (const auto& v : rm.vertices) {
                b.xmin = std::min(b.xmin, v.x - 1.0);
                b.xmax = std::max(b.xmax, v.x + 1.0);
                b.ymin = std::min(b.ymin, v.y - 1.0);
                b.ymax = std::max(b.ymax, v.y + 1.0);
            }
        return b;
    }
};

// Random two-robot instance over one shared grid; instances 40+ get two
// chained stages per robot with crossed ordering gates.
inline Fixture random_instance(uint64_t family_seed, int inst) {
    using namespace mrrefine;
    Rng gen = rng_for(family_seed, "drrt-grid", uint64_t(inst), 0);
    int w = gen.uniform_int(1, 5);
    int h = gen.uniform_int(1, 5);
    while (w * h < 3) {
        w = gen.uniform_int(1, 5);
        h = gen.uniform_int(1, 5);
    }
    const int cells = w * h;
    int s0 = gen.uniform_int(0, cells - 1);
    int s1 = gen.uniform_int(0, cells - 1);
    while (s1 == s0) s1 = gen.uniform_int(0, cells - 1);

    Fixture fx;
    fx.add_robot(0.3);
    fx.add_robot(0.3);
    if (inst < 40) {
        fx.add_stage(0, grid_roadmap(w, h, s0, gen.uniform_int(0, cells - 1)), "a1");
        fx.add_stage(1, grid_roadmap(w, h, s1, gen.uniform_int(0, cells - 1)), "b1");
    } else {
        int g0 = gen.uniform_int(0, cells - 1), g0b = gen.uniform_int(0, cells - 1);
        int g1 = gen.uniform_int(0, cells - 1), g1b = gen.uniform_int(0, cells - 1);
        fx.add_stage(0, grid_roadmap(w, h, s0, g0), "a1");
        fx.add_stage(0, grid_roadmap(w, h, g0, g0b), "a2", {"b1"});
        fx.add_stage(1, grid_roadmap(w, h, s1, g1), "b1");
        fx.add_stage(1, grid_roadmap(w, h, g1, g1b), "b2", {"a1"});
    }
    return fx;
}

// Exhaustive BFS over the explicit tensor-product roadmap, built from the
// same per-edge validity and firing primitives as the search under test.
inline bool tensor_bfs_solvable(const std::vector<mrrefine::RobotTrack>& tracks,
                                double check_step) {
    using namespace mrrefine;
    const size_t n = tracks.size();
    using State = std::vector<int>;  // stage[0..n) then vertex[0..n)

    auto canonical = [&](std::vector<int> stage, std::vector<int> vertex) {
        std::set<std::string> progress;
        for (size_t ri = 0; ri < n; ++ri)
            for (int s = 0; s < stage[ri]; ++s)
                progress.insert(tracks[ri].stages[size_t(s)].action_id);
        fire_fixpoint(tracks, stage, vertex, progress);
        State st = stage;
        st.insert(st.end(), vertex.begin(), vertex.end());
        return st;
    };
    auto configs_of = [&](const State& st) {
        std::vector<geom::Pose2> q(n);
        for (size_t ri = 0; ri < n; ++ri) q[ri] = track_config(tracks[ri], st[ri], st[n + ri]);
        return q;
    };
    auto done = [&](const State& st) {
        for (size_t ri = 0; ri < n; ++ri)
            if (st[ri] < int(tracks[ri].stages.size())) return false;
        return true;
    };

    std::vector<int> stage0(n, 0), vertex0(n);
    for (size_t ri = 0; ri < n; ++ri) vertex0[ri] = tracks[ri].stages[0].roadmap->start_index;
    State init = canonical(stage0, vertex0);

    std::set<State> seen{init};
    std::queue<State> frontier;
    frontier.push(init);
    while (!frontier.empty()) {
        State cur = frontier.front();
        frontier.pop();
        if (done(cur)) return true;

        // Joint moves: each robot stays or steps to one neighbor; at least
        // one robot moves.
        std::vector<std::vector<int>> options(n);
        for (size_t ri = 0; ri < n; ++ri) {
            options[ri].push_back(cur[n + ri]);  // stay
            if (cur[ri] < int(tracks[ri].stages.size())) {
                const Roadmap& rm = *tracks[ri].stages[size_t(cur[ri])].roadmap;
                for (const auto& [u, len] : rm.adjacency[size_t(cur[n + ri])])
                    options[ri].push_back(u);
            }
        }
        std::vector<size_t> od(n, 0);
        for (;;) {
            std::vector<int> vtx(n);
            bool moved = false;
            for (size_t ri = 0; ri < n; ++ri) {
                vtx[ri] = options[ri][od[ri]];
                if (vtx[ri] != cur[n + ri]) moved = true;
            }
            if (moved) {
                std::vector<int> stage(cur.begin(), cur.begin() + long(n));
                std::vector<geom::Pose2> from = configs_of(cur);
                std::vector<geom::Pose2> to(n);
                for (size_t ri = 0; ri < n; ++ri)
                    to[ri] = track_config(tracks[ri], stage[ri], vtx[ri]);
                if (edge_valid_composite(tracks, stage, from, to, check_step)) {
                    State nxt = canonical(stage, vtx);
                    if (seen.insert(nxt).second) frontier.push(nxt);
                }
            }
            size_t ri = 0;
            while (ri < n && ++od[ri] == options[ri].size()) od[ri++] = 0;
            if (ri == n) break;
        }
    }
    return false;
}

}  // namespace gridworlds
