#include "mrrefine/drrt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <chrono>
#include <queue>

namespace mrrefine {

namespace {

double lever_of(const RobotTrack& track, int stage) {
    double lever = geom::bounding_radius(track.body);
    if (stage < static_cast<int>(track.stages.size())) {
        const auto& held = track.stages[size_t(stage)].held;
        if (held)
            lever = std::max(lever, geom::norm({held->gamma.x, held->gamma.y}) +
                                        geom::bounding_radius(held->shape));
    }
    return lever;
}

bool robots_clear(const RobotTrack& ta, int sa, const geom::Pose2& qa, const RobotTrack& tb,
                  int sb, const geom::Pose2& qb) {
    const std::optional<HeldBody>* ha = nullptr;
    if (sa < static_cast<int>(ta.stages.size())) ha = &ta.stages[size_t(sa)].held;
    const std::optional<HeldBody>* hb = nullptr;
    if (sb < static_cast<int>(tb.stages.size())) hb = &tb.stages[size_t(sb)].held;

    if (geom::collide(ta.body, qa, tb.body, qb)) return false;
    if (ha && *ha) {
        const geom::Pose2 pa = geom::compose(qa, (*ha)->gamma);
        if (geom::collide((*ha)->shape, pa, tb.body, qb)) return false;
        if (hb && *hb &&
            geom::collide((*ha)->shape, pa, (*hb)->shape, geom::compose(qb, (*hb)->gamma)))
            return false;
    }
    if (hb && *hb &&
        geom::collide(ta.body, qa, (*hb)->shape, geom::compose(qb, (*hb)->gamma)))
        return false;
    return true;
}

}  // namespace

geom::Pose2 track_config(const RobotTrack& track, int stage, int vertex) {
    if (track.stages.empty()) return {};
    if (stage >= static_cast<int>(track.stages.size())) {
        const Roadmap& last = *track.stages.back().roadmap;
        return last.vertices[size_t(last.goal_index)];
    }
    return track.stages[size_t(stage)].roadmap->vertices[size_t(vertex)];
}

bool gate_allows(const Stage& stage, const std::set<std::string>& progress) {
    for (const std::string& p : stage.preds)
        if (!progress.count(p)) return false;
    return true;
}

std::vector<std::string> fire_fixpoint(const std::vector<RobotTrack>& tracks,
                                       std::vector<int>& stage, std::vector<int>& vertex,
                                       std::set<std::string>& progress) {
    std::vector<std::string> fired;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t ri = 0; ri < tracks.size(); ++ri) {
            const RobotTrack& t = tracks[ri];
            if (stage[ri] >= static_cast<int>(t.stages.size())) continue;
            const Stage& st = t.stages[size_t(stage[ri])];
            if (vertex[ri] != st.roadmap->goal_index) continue;
            if (!gate_allows(st, progress)) continue;
            fired.push_back(st.action_id);
            progress.insert(st.action_id);
            ++stage[ri];
            if (stage[ri] < static_cast<int>(t.stages.size()))
                vertex[ri] = t.stages[size_t(stage[ri])].roadmap->start_index;
            changed = true;
        }
    }
    return fired;
}

std::vector<int> oracle_expand(const std::vector<RobotTrack>& tracks,
                               const std::vector<int>& stage, const std::vector<int>& vertex,
                               const std::vector<geom::Pose2>& target) {
    std::vector<int> next(vertex);
    for (size_t ri = 0; ri < tracks.size(); ++ri) {
        const RobotTrack& t = tracks[ri];
        if (stage[ri] >= static_cast<int>(t.stages.size())) continue;
        const Roadmap& rm = *t.stages[size_t(stage[ri])].roadmap;
        int best = vertex[ri];
        double best_d = geom::se2_distance(rm.vertices[size_t(best)], target[ri]);
        for (const auto& [u, len] : rm.adjacency[size_t(vertex[ri])]) {
            (void)len;
            const double d = geom::se2_distance(rm.vertices[size_t(u)], target[ri]);
            if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && u < best)) {
                best = u;
                best_d = d;
            }
        }
        next[ri] = best;
    }
    if (next == vertex) {
        // Every robot preferred to stay; an edge must move someone, so make
        // the single move that gets closest to the target.
        int best_r = -1, best_v = -1;
        double best_d = std::numeric_limits<double>::max();
        for (size_t ri = 0; ri < tracks.size(); ++ri) {
            const RobotTrack& t = tracks[ri];
            if (stage[ri] >= static_cast<int>(t.stages.size())) continue;
            const Roadmap& rm = *t.stages[size_t(stage[ri])].roadmap;
            for (const auto& [u, len] : rm.adjacency[size_t(vertex[ri])]) {
                (void)len;
                const double d = geom::se2_distance(rm.vertices[size_t(u)], target[ri]);
                if (d < best_d) {
                    best_d = d;
                    best_r = static_cast<int>(ri);
                    best_v = u;
                }
            }
        }
        if (best_r >= 0) next[size_t(best_r)] = best_v;
    }
    return next;
}

bool edge_valid_composite(const std::vector<RobotTrack>& tracks, const std::vector<int>& stage,
                          const std::vector<geom::Pose2>& from,
                          const std::vector<geom::Pose2>& to, double check_step) {
    const size_t n = tracks.size();
    std::vector<double> dur(n, 0.0);
    double total = 0.0;    // longest travel duration
    double max_disp = 0.0; // largest swept body-point distance
    for (size_t ri = 0; ri < n; ++ri) {
        dur[ri] = geom::se2_distance(from[ri], to[ri]);
        total = std::max(total, dur[ri]);
        const double trans = std::hypot(to[ri].x - from[ri].x, to[ri].y - from[ri].y);
        const double rot = std::abs(geom::angle_diff(from[ri].theta, to[ri].theta));
        max_disp = std::max(max_disp, trans + rot * lever_of(tracks[ri], stage[ri]));
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(max_disp / (check_step / 2.0))));
    std::vector<geom::Pose2> q(n);
    for (int k = 0; k <= steps; ++k) {
        const double t = total * k / steps;
        for (size_t ri = 0; ri < n; ++ri)
            q[ri] = dur[ri] <= 0.0 ? to[ri]
                                   : geom::interpolate(from[ri], to[ri],
                                                       std::min(1.0, t / dur[ri]));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                if (dur[i] <= 0.0 && dur[j] <= 0.0) continue;  // both parked the whole edge
                if (!robots_clear(tracks[i], stage[i], q[i], tracks[j], stage[j], q[j]))
                    return false;
            }
    }
    return true;
}

std::optional<CompositeSolution> drrt_search(const std::vector<RobotTrack>& tracks,
                                             const geom::Aabb& bounds, const DrrtParams& params,
                                             Rng& rng) {
    const size_t n = tracks.size();

    struct Node {
        std::vector<int> stage;
        std::vector<int> vertex;
        std::vector<geom::Pose2> configs;
        std::vector<std::string> fired;
        std::set<std::string> progress;
        int parent = -1;
        double duration = 0.0;
    };

    auto configs_of = [&](const std::vector<int>& stage, const std::vector<int>& vertex) {
        std::vector<geom::Pose2> qs(n);
        for (size_t ri = 0; ri < n; ++ri)
            qs[ri] = track_config(tracks[ri], stage[ri], vertex[ri]);
        return qs;
    };
    auto all_done = [&](const std::vector<int>& stage) {
        for (size_t ri = 0; ri < n; ++ri)
            if (stage[ri] < static_cast<int>(tracks[ri].stages.size())) return false;
        return true;
    };

    std::vector<Node> nodes;
    std::map<std::pair<std::vector<int>, std::vector<int>>, int> seen;

    // Graph distance to each stage's goal vertex (Dijkstra), so goal-biased
    // expansions can descend along the roadmap instead of chasing the
    // metric, which strands robots in local minima of dense roadmaps.
    std::vector<std::vector<std::vector<double>>> goal_dist(n);
    for (size_t ri = 0; ri < n; ++ri) {
        goal_dist[ri].resize(tracks[ri].stages.size());
        for (size_t si = 0; si < tracks[ri].stages.size(); ++si) {
            const Roadmap& rm = *tracks[ri].stages[si].roadmap;
            auto& dist = goal_dist[ri][si];
            dist.assign(rm.vertices.size(), std::numeric_limits<double>::max());
            using Item = std::pair<double, int>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
            dist[size_t(rm.goal_index)] = 0.0;
            pq.push({0.0, rm.goal_index});
            while (!pq.empty()) {
                auto [d, v] = pq.top();
                pq.pop();
                if (d > dist[size_t(v)]) continue;
                for (const auto& [u, len] : rm.adjacency[size_t(v)])
                    if (d + len < dist[size_t(u)]) {
                        dist[size_t(u)] = d + len;
                        pq.push({d + len, u});
                    }
            }
        }
    }
    auto goal_step = [&](size_t ri, int stage, int v) {
        const Roadmap& rm = *tracks[ri].stages[size_t(stage)].roadmap;
        const auto& dist = goal_dist[ri][size_t(stage)];
        int best = v;
        double bd = dist[size_t(v)];
        for (const auto& [u, len] : rm.adjacency[size_t(v)]) {
            (void)len;
            if (dist[size_t(u)] < bd - 1e-12 ||
                (std::abs(dist[size_t(u)] - bd) <= 1e-12 && u < best)) {
                best = u;
                bd = dist[size_t(u)];
            }
        }
        return best;
    };

    Node root;
    root.stage.assign(n, 0);
    root.vertex.resize(n, 0);
    for (size_t ri = 0; ri < n; ++ri)
        root.vertex[ri] = tracks[ri].stages.empty()
                              ? 0
                              : tracks[ri].stages.front().roadmap->start_index;
    root.fired = fire_fixpoint(tracks, root.stage, root.vertex, root.progress);
    root.configs = configs_of(root.stage, root.vertex);
    seen[{root.stage, root.vertex}] = 0;
    nodes.push_back(std::move(root));

    int goal_node = all_done(nodes[0].stage) ? 0 : -1;

    const auto t0 = std::chrono::steady_clock::now();
    const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(params.time_limit_s));
    // Bail out early when the frontier stalls: a composite state whose
    // remaining work is physically blocked (e.g. a finished robot parked in
    // the last corridor) never improves, and retrying upstream choices is
    // cheaper than grinding out the full iteration budget.
    int best_sum = 0;
    for (size_t ri = 0; ri < n; ++ri) best_sum += nodes[0].stage[ri];
    int last_improve = 0;
    const int stall_limit = std::max(2000, params.max_iters / 10);
    for (int iter = 0; iter < params.max_iters && goal_node < 0; ++iter) {
        if (std::chrono::steady_clock::now() > deadline) break;
        if (iter - last_improve > stall_limit) break;
        // Sample a composite target, find the nearest tree node.
        const bool biased = rng.unit() < params.goal_bias;
        std::vector<geom::Pose2> target(n);
        for (size_t ri = 0; ri < n; ++ri)
            target[ri] = {rng.uniform(bounds.xmin, bounds.xmax),
                          rng.uniform(bounds.ymin, bounds.ymax), rng.angle()};
        int near = 0;
        double near_d = std::numeric_limits<double>::max();
        for (size_t vi = 0; vi < nodes.size(); ++vi) {
            double d = 0.0;
            for (size_t ri = 0; ri < n; ++ri)
                d += geom::se2_distance(nodes[vi].configs[ri], target[ri]);
            if (d < near_d) {
                near_d = d;
                near = static_cast<int>(vi);
            }
        }
        // Outcome of steering the near node toward a neighbouring composite
        // vertex: a fresh tree node, a jump onto an already-explored node
        // (no edge needed — its path from the root is already in the tree),
        // or a rejection.
        enum class Reach { NoMove, Invalid, Created, Existing };
        struct ReachResult {
            Reach kind;
            int index;
        };
        auto try_reach = [&](const std::vector<int>& vtx) -> ReachResult {
            if (vtx == nodes[size_t(near)].vertex) return {Reach::NoMove, -1};
            Node cand;
            cand.stage = nodes[size_t(near)].stage;
            cand.vertex = vtx;
            cand.progress = nodes[size_t(near)].progress;
            cand.fired = fire_fixpoint(tracks, cand.stage, cand.vertex, cand.progress);
            auto key = std::make_pair(cand.stage, cand.vertex);
            if (auto it = seen.find(key); it != seen.end())
                return {Reach::Existing, it->second};
            cand.configs = configs_of(nodes[size_t(near)].stage, vtx);
            if (!edge_valid_composite(tracks, nodes[size_t(near)].stage,
                                      nodes[size_t(near)].configs, cand.configs,
                                      params.check_step))
                return {Reach::Invalid, -1};
            double dur = 0.0;
            for (size_t ri = 0; ri < n; ++ri)
                dur = std::max(dur, geom::se2_distance(nodes[size_t(near)].configs[ri],
                                                       cand.configs[ri]));
            cand.parent = near;
            cand.duration = dur;
            seen[key] = static_cast<int>(nodes.size());
            int sum = 0;
            for (size_t ri = 0; ri < n; ++ri) sum += cand.stage[ri];
            if (sum > best_sum) {
                best_sum = sum;
                last_improve = iter;
            }
            nodes.push_back(std::move(cand));
            if (all_done(nodes.back().stage)) goal_node = static_cast<int>(nodes.size()) - 1;
            return {Reach::Created, static_cast<int>(nodes.size()) - 1};
        };

        if (!biased) {
            try_reach(oracle_expand(tracks, nodes[size_t(near)].stage,
                                    nodes[size_t(near)].vertex, target));
            continue;
        }

        // Biased iteration: connect toward the per-robot roadmap goals.
        // Repeatedly step each robot one edge down its roadmap's
        // shortest-path-to-goal tree, following the existing tree through
        // states it already knows; when the joint step is blocked, detour by
        // moving one robot at a time, laggards first, trying neighbors in
        // order of increasing graph distance to goal. Keeps extending until
        // stuck.
        for (int hops = 0; goal_node < 0 && hops < 4096; ++hops) {
            std::vector<int> nv = nodes[size_t(near)].vertex;
            for (size_t ri = 0; ri < n; ++ri) {
                const int s = nodes[size_t(near)].stage[ri];
                if (s >= static_cast<int>(tracks[ri].stages.size())) continue;
                const Stage& st = tracks[ri].stages[size_t(s)];
                const int step = goal_step(ri, s, nv[ri]);
                // A robot whose action is still gate-blocked would only park
                // on its goal and obstruct the others; hold it back instead.
                if (step == st.roadmap->goal_index &&
                    !gate_allows(st, nodes[size_t(near)].progress))
                    continue;
                nv[ri] = step;
            }
            const ReachResult jr = try_reach(nv);
            if ((jr.kind == Reach::Created || jr.kind == Reach::Existing) &&
                jr.index != near) {
                near = jr.index;
                continue;
            }
            bool extended = false;
            std::vector<size_t> order;
            for (size_t ri = 0; ri < n; ++ri)
                if (nodes[size_t(near)].stage[ri] <
                    static_cast<int>(tracks[ri].stages.size()))
                    order.push_back(ri);
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                double da = goal_dist[a][size_t(nodes[size_t(near)].stage[a])]
                                     [size_t(nodes[size_t(near)].vertex[a])];
                double db = goal_dist[b][size_t(nodes[size_t(near)].stage[b])]
                                     [size_t(nodes[size_t(near)].vertex[b])];
                return da != db ? da > db : a < b;
            });
            for (size_t ri : order) {
                const int s = nodes[size_t(near)].stage[ri];
                const int v = nodes[size_t(near)].vertex[ri];
                const Roadmap& rm = *tracks[ri].stages[size_t(s)].roadmap;
                const auto& dist = goal_dist[ri][size_t(s)];
                std::vector<int> nbrs;
                for (const auto& [u, len] : rm.adjacency[size_t(v)]) {
                    (void)len;
                    if (dist[size_t(u)] < std::numeric_limits<double>::max())
                        nbrs.push_back(u);
                }
                std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
                    return dist[size_t(a)] != dist[size_t(b)]
                               ? dist[size_t(a)] < dist[size_t(b)]
                               : a < b;
                });
                for (int u : nbrs) {
                    std::vector<int> alt = nodes[size_t(near)].vertex;
                    alt[ri] = u;
                    // Only fresh nodes count here; hopping to explored states
                    // sideways would let the detour walk in circles.
                    const ReachResult rr = try_reach(alt);
                    if (rr.kind == Reach::Created) {
                        near = rr.index;
                        extended = true;
                        break;
                    }
                }
                if (extended) break;
            }
            if (!extended) break;
        }
    }

    if (goal_node < 0) return std::nullopt;

    std::vector<int> chain;
    for (int v = goal_node; v != -1; v = nodes[size_t(v)].parent) chain.push_back(v);
    std::reverse(chain.begin(), chain.end());

    // Shortcut the tree path: between firings the stage vector is constant,
    // so any collision-free straight composite segment can replace the
    // wandering stretch the tree happened to grow through.
    std::vector<Waypoint> wps;
    std::vector<std::vector<int>> stages;
    for (int v : chain) {
        const Node& nd = nodes[size_t(v)];
        wps.push_back({nd.configs, nd.fired, nd.duration});
        stages.push_back(nd.stage);
    }
    auto seg_duration = [&](const std::vector<geom::Pose2>& a, const std::vector<geom::Pose2>& b) {
        double d = 0.0;
        for (size_t ri = 0; ri < n; ++ri) d = std::max(d, geom::se2_distance(a[ri], b[ri]));
        return d;
    };
    for (bool improved = true; improved;) {
        improved = false;
        for (size_t i = 0; i + 2 < wps.size(); ++i) {
            for (size_t j = wps.size() - 1; j > i + 1; --j) {
                bool quiet = true;
                for (size_t k = i + 1; k < j && quiet; ++k)
                    if (!wps[k].fired.empty()) quiet = false;
                if (!quiet) continue;
                double skipped = 0.0;
                for (size_t k = i + 1; k <= j; ++k) skipped += wps[k].duration;
                const double direct = seg_duration(wps[i].configs, wps[j].configs);
                if (direct >= skipped - 1e-9) continue;
                if (!edge_valid_composite(tracks, stages[i], wps[i].configs, wps[j].configs,
                                          params.check_step))
                    continue;
                // Unlike tree edges, the direct segment leaves the roadmaps,
                // so each moving robot also needs a static swept check.
                bool statics_ok = true;
                for (size_t ri = 0; ri < n && statics_ok; ++ri) {
                    const int s = stages[i][ri];
                    if (s >= static_cast<int>(tracks[ri].stages.size())) continue;
                    if (geom::se2_distance(wps[i].configs[ri], wps[j].configs[ri]) <= 0.0)
                        continue;
                    const Stage& st = tracks[ri].stages[size_t(s)];
                    if (!st.obstacles) continue;
                    statics_ok = sweep_valid(tracks[ri].body, st.held, wps[i].configs[ri],
                                             wps[j].configs[ri], *st.obstacles,
                                             params.check_step / 2.0);
                }
                if (!statics_ok) continue;
                wps[j].duration = direct;
                wps.erase(wps.begin() + long(i) + 1, wps.begin() + long(j));
                stages.erase(stages.begin() + long(i) + 1, stages.begin() + long(j));
                improved = true;
                break;
            }
        }
    }

    CompositeSolution sol;
    for (const Waypoint& wp : wps) sol.makespan += wp.duration;
    sol.waypoints = std::move(wps);
    return sol;
}

}  // namespace mrrefine
