#include "mrrefine/prm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

namespace mrrefine {

bool config_valid(const geom::Shape& body, const std::optional<HeldBody>& held,
                  const geom::Pose2& q, const std::vector<Obstacle>& obstacles) {
    for (const Obstacle& ob : obstacles) {
        if (held && ob.kind == Obstacle::Movable && ob.id == held->movable) continue;
        if (geom::collide(body, q, ob.shape, ob.pose)) return false;
        if (held &&
            geom::collide(held->shape, geom::compose(q, held->gamma), ob.shape, ob.pose))
            return false;
    }
    return true;
}

bool sweep_valid(const geom::Shape& body, const std::optional<HeldBody>& held,
                 const geom::Pose2& from, const geom::Pose2& to,
                 const std::vector<Obstacle>& obstacles, double max_disp) {
    const double trans = std::hypot(to.x - from.x, to.y - from.y);
    const double dtheta = std::abs(geom::angle_diff(from.theta, to.theta));
    double lever = geom::bounding_radius(body);
    if (held)
        lever = std::max(lever, geom::norm({held->gamma.x, held->gamma.y}) +
                                    geom::bounding_radius(held->shape));
    const double disp = trans + dtheta * lever;
    const int n = std::max(1, static_cast<int>(std::ceil(disp / max_disp)));
    for (int i = 0; i <= n; ++i) {
        const geom::Pose2 q = geom::interpolate(from, to, static_cast<double>(i) / n);
        if (!config_valid(body, held, q, obstacles)) return false;
    }
    return true;
}

Roadmap build_roadmap(const RobotSpec& robot, const geom::Pose2& start, const geom::Pose2& goal,
                      const std::vector<Obstacle>& obstacles, const std::optional<HeldBody>& held,
                      const geom::Aabb& bounds, const PrmParams& params, Rng& rng) {
    Roadmap rm;
    rm.vertices.push_back(start);
    rm.vertices.push_back(goal);
    rm.start_index = 0;
    rm.goal_index = 1;

    const long budget = 20L * params.n_samples;
    long trials = 0;
    while (static_cast<int>(rm.vertices.size()) < params.n_samples + 2 && trials < budget) {
        ++trials;
        geom::Pose2 q{rng.uniform(bounds.xmin, bounds.xmax),
                      rng.uniform(bounds.ymin, bounds.ymax), rng.angle()};
        if (config_valid(robot.body, held, q, obstacles)) rm.vertices.push_back(q);
    }

    const int nv = static_cast<int>(rm.vertices.size());
    rm.adjacency.assign(size_t(nv), {});
    std::vector<std::vector<bool>> linked(size_t(nv), std::vector<bool>(size_t(nv), false));
    const double max_disp = params.check_step / 2.0;
    for (int i = 0; i < nv; ++i) {
        // k nearest neighbors of vertex i
        std::vector<std::pair<double, int>> near;
        near.reserve(size_t(nv));
        for (int j = 0; j < nv; ++j)
            if (j != i) near.push_back({geom::se2_distance(rm.vertices[size_t(i)],
                                                           rm.vertices[size_t(j)]),
                                        j});
        const size_t k = std::min<size_t>(size_t(params.k_neighbors), near.size());
        std::partial_sort(near.begin(), near.begin() + static_cast<long>(k), near.end());
        for (size_t ni = 0; ni < k; ++ni) {
            const int j = near[ni].second;
            if (linked[size_t(i)][size_t(j)]) continue;
            linked[size_t(i)][size_t(j)] = linked[size_t(j)][size_t(i)] = true;
            if (!sweep_valid(robot.body, held, rm.vertices[size_t(i)], rm.vertices[size_t(j)],
                             obstacles, max_disp))
                continue;
            const double len = near[ni].first;
            rm.edges.push_back({i, j, len});
            rm.adjacency[size_t(i)].push_back({j, len});
            rm.adjacency[size_t(j)].push_back({i, len});
        }
    }
    rm.connected = !shortest_path(rm).empty();
    return rm;
}

std::vector<int> shortest_path(const Roadmap& rm) {
    const int nv = static_cast<int>(rm.vertices.size());
    std::vector<double> dist(size_t(nv), std::numeric_limits<double>::max());
    std::vector<int> parent(size_t(nv), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[size_t(rm.start_index)] = 0.0;
    pq.push({0.0, rm.start_index});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[size_t(v)]) continue;
        if (v == rm.goal_index) break;
        for (const auto& [u, len] : rm.adjacency[size_t(v)]) {
            if (d + len < dist[size_t(u)]) {
                dist[size_t(u)] = d + len;
                parent[size_t(u)] = v;
                pq.push({d + len, u});
            }
        }
    }
    if (dist[size_t(rm.goal_index)] == std::numeric_limits<double>::max()) return {};
    std::vector<int> path;
    for (int v = rm.goal_index; v != -1; v = parent[size_t(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    if (path.front() != rm.start_index) return {};
    return path;
}

std::vector<Obstacle> action_obstacles(const Scenario& scene, const AbstractAction& a,
                                       const CollisionCache& cache) {
    std::vector<Obstacle> out;
    for (size_t fi = 0; fi < scene.fixed.size(); ++fi)
        out.push_back({scene.fixed[fi].shape, scene.fixed[fi].pose, Obstacle::Fixed,
                       static_cast<int>(fi) + 1});
    for (const CacheEntry& e : cache.relevant.at(a.id)) {
        if (a.kind == ActionKind::Transfer && e.movable == a.m) continue;  // held
        out.push_back({scene.movable(e.movable).body, e.pose, Obstacle::Movable, e.movable});
    }
    return out;
}

IndividualResult plan_individual(const Scenario& scene, const TaskPlan& plan,
                                 const PlacementSolution& placements,
                                 const TransitionSolution& transitions, const PrmParams& params,
                                 uint64_t seed, uint64_t attempt) {
    const auto t0 = std::chrono::steady_clock::now();
    IndividualPlan out;
    out.per_robot.resize(plan.per_robot.size());
    const geom::Aabb bounds = scene.bounds();

    for (size_t ri = 0; ri < plan.per_robot.size(); ++ri) {
        const RobotSpec& robot = scene.robots[ri];
        geom::Pose2 cur = scene.initial.robot_configs[ri];
        for (size_t ai = 0; ai < plan.per_robot[ri].size(); ++ai) {
            const AbstractAction& a = plan.actions[size_t(plan.per_robot[ri][ai])];
            ActionPlan ap;
            ap.action_id = a.id;
            ap.obstacles = action_obstacles(scene, a, placements.cache);
            if (a.kind == ActionKind::Transfer) {
                const Grasp& g = transitions.grasp_of.at(
                    plan.actions[size_t(plan.per_robot[ri][ai - 1])].id);
                ap.held = HeldBody{a.m, scene.movable(a.m).body, g.gamma};
            }
            const geom::Pose2 goal = transitions.config_of.at(a.id);
            if (!config_valid(robot.body, ap.held, cur, ap.obstacles))
                return StepFailure{a.id, "start transition configuration in collision", {a.m}};
            if (!config_valid(robot.body, ap.held, goal, ap.obstacles))
                return StepFailure{a.id, "goal transition configuration in collision", {a.m}};
            Rng rng = rng_for(seed, "prm", (uint64_t(ri) << 16) | uint64_t(ai), attempt);
            ap.roadmap =
                build_roadmap(robot, cur, goal, ap.obstacles, ap.held, bounds, params, rng);
            if (!ap.roadmap.connected)
                return StepFailure{a.id, "Disconnected", {a.m}};
            ap.path = shortest_path(ap.roadmap);
            cur = goal;
            out.per_robot[ri].push_back(std::move(ap));
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (elapsed > params.time_limit_s)
                return StepFailure{a.id, "individual planning time limit exceeded", {}, true};
        }
    }
    return out;
}

}  // namespace mrrefine
