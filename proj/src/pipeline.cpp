#include "mrrefine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"

namespace mrrefine {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Full: return "full";
        case Mode::Merge12: return "merge12";
        case Mode::Merge123: return "merge123";
        case Mode::Synchronous: return "synchronous";
    }
    return "full";
}

std::optional<Mode> parse_mode(const std::string& s) {
    if (s == "full") return Mode::Full;
    if (s == "merge12") return Mode::Merge12;
    if (s == "merge123") return Mode::Merge123;
    if (s == "synchronous") return Mode::Synchronous;
    return std::nullopt;
}

namespace {

std::string policy_name(Policy p) {
    switch (p) {
        case Policy::Stop: return "stop";
        case Policy::Backtrack: return "backtrack";
        case Policy::ExtendSamples: return "extend_samples";
    }
    return "backtrack";
}

Policy policy_from(const std::string& s) {
    if (s == "stop") return Policy::Stop;
    if (s == "extend_samples") return Policy::ExtendSamples;
    return Policy::Backtrack;
}

json pose_json(const geom::Pose2& p) { return json::array({p.x, p.y, p.theta}); }

geom::Pose2 pose_from(const json& j) {
    return geom::pose(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

OrderingSet final_prec(const TaskPlan& plan,
                       const std::vector<std::pair<std::string, std::string>>& induced) {
    OrderingSet prec = plan.prec;
    for (const auto& [b, a] : induced) prec = prec.with_edge(b, a);
    return prec;
}

std::vector<RobotTrack> build_tracks(const Scenario& scene, const TaskPlan& plan,
                                     const IndividualPlan& individual,
                                     const OrderingSet& prec) {
    std::vector<RobotTrack> tracks(scene.robots.size());
    for (size_t ri = 0; ri < scene.robots.size(); ++ri) {
        tracks[ri].body = scene.robots[ri].body;
        for (size_t ai = 0; ai < plan.per_robot[ri].size(); ++ai) {
            const AbstractAction& a = plan.actions[size_t(plan.per_robot[ri][ai])];
            const ActionPlan& ap = individual.per_robot[ri][ai];
            Stage st;
            st.action_id = a.id;
            st.roadmap = &ap.roadmap;
            st.held = ap.held;
            st.obstacles = &ap.obstacles;
            for (const auto& [before, after] : prec.edges())
                if (after == a.id) st.preds.push_back(before);
            tracks[ri].stages.push_back(std::move(st));
        }
    }
    return tracks;
}

/// Merged-step ablations: for every placement candidate examined, Step-2
/// grasp work (merge12) and Step-3 roadmap construction (merge123) run
/// before the candidate's ordering consistency is even looked at, so almost
/// all of that work is discarded. The selected placements themselves match
/// what the staged pipeline would accept.
PlacementResult solve_placements_interleaved(const Scenario& scene, const TaskPlan& plan,
                                             const PipelineParams& params,
                                             Clock::time_point deadline) {
    const auto epochs = movable_epochs(plan, scene);
    std::vector<RegionProblem> problems;
    try {
        problems = build_region_problems(scene, plan, epochs, params.n_place, params.seed);
    } catch (const NoSamples& e) {
        return Infeasible{e.what(), false};
    }

    const geom::Aabb bounds = scene.bounds();
    OrderingSet prec_acc = plan.prec;
    PlacementSolution out;

    for (RegionProblem& rp : problems) {
        if (rp.vars.empty()) continue;
        std::vector<std::vector<int>> valid(rp.vars.size());
        auto refresh_valid = [&]() {
            for (size_t vi = 0; vi < rp.vars.size(); ++vi) {
                valid[vi].clear();
                for (size_t si = 0; si < rp.vars[vi].samples.size(); ++si)
                    if (rp.vars[vi].clear_of_fixed[si])
                        valid[vi].push_back(static_cast<int>(si));
                if (valid[vi].empty()) return false;
            }
            return true;
        };
        if (!refresh_valid())
            return Infeasible{"region " + std::to_string(rp.region) +
                                  ": no fixed-clear samples within the drawn set",
                              false};

        std::vector<size_t> idx(rp.vars.size(), 0);
        bool exhausted = false;
        std::optional<std::vector<int>> best_combo;
        std::vector<std::pair<std::string, std::string>> best_edges;
        uint64_t combo_counter = 0;
        uint64_t redraw_round = 0;
        while (!exhausted) {
            if (Clock::now() > deadline)
                return Infeasible{"time limit during merged placement search", true};
            std::vector<int> combo(rp.vars.size());
            for (size_t vi = 0; vi < rp.vars.size(); ++vi) combo[vi] = valid[vi][idx[vi]];

            bool candidate_ok = true;
            for (size_t vi = 0; vi < rp.vars.size() && candidate_ok; ++vi) {
                const RegionVar& var = rp.vars[vi];
                const AbstractAction& a = plan.action(var.add_action);
                const geom::Pose2 p = var.samples[size_t(combo[vi])];
                Rng grng = rng_for(params.seed, "merge-grasp",
                                   (uint64_t(rp.region) << 32) | combo_counter, vi);
                auto grasps =
                    sample_grasps(scene.robot(a.r), scene.movable(a.m), grng, params.n_grasp);
                int gi_ok = -1;
                for (size_t gi = 0; gi < grasps.size(); ++gi) {
                    const geom::Pose2 q = solve_kin(grasps[gi], p);
                    bool clear = true;
                    for (const FixedObject& f : scene.fixed)
                        if (geom::collide(scene.robot(a.r).body, q, f.shape, f.pose)) {
                            clear = false;
                            break;
                        }
                    if (clear) {
                        gi_ok = static_cast<int>(gi);
                        break;
                    }
                }
                if (gi_ok < 0) {
                    candidate_ok = false;
                    break;
                }
                if (params.mode == Mode::Merge123) {
                    // Motion work per candidate: a transfer roadmap to the
                    // candidate placement, thrown away with the candidate.
                    std::vector<Obstacle> obs;
                    for (size_t fi = 0; fi < scene.fixed.size(); ++fi)
                        obs.push_back({scene.fixed[fi].shape, scene.fixed[fi].pose,
                                       Obstacle::Fixed, static_cast<int>(fi) + 1});
                    for (size_t mi = 0; mi < scene.movables.size(); ++mi)
                        if (static_cast<int>(mi) + 1 != a.m)
                            obs.push_back({scene.movables[mi].body,
                                           scene.initial.movable_poses[mi], Obstacle::Movable,
                                           static_cast<int>(mi) + 1});
                    HeldBody held{a.m, scene.movable(a.m).body,
                                  grasps[size_t(gi_ok)].gamma};
                    PrmParams pp;
                    pp.n_samples = params.n_prm;
                    pp.k_neighbors = params.k_prm;
                    pp.check_step = params.check_step;
                    Rng rrng = rng_for(params.seed, "merge-prm",
                                       (uint64_t(rp.region) << 32) | combo_counter, vi);
                    const geom::Pose2 q = solve_kin(grasps[size_t(gi_ok)], p);
                    Roadmap rm =
                        build_roadmap(scene.robot(a.r),
                                      scene.initial.robot_configs[size_t(a.r - 1)], q, obs,
                                      held, bounds, pp, rrng);
                    if (!rm.connected) candidate_ok = false;
                }
            }

            if (candidate_ok) {
                const ComboOutcome oc = evaluate_combination(scene, rp, combo, prec_acc);
                if (oc.workable && oc.edges.empty()) {
                    best_combo = combo;
                    best_edges.clear();
                    break;
                }
                if (oc.workable &&
                    (!best_combo || oc.edges.size() < best_edges.size())) {
                    best_combo = combo;
                    best_edges = oc.edges;
                }
            }

            ++combo_counter;
            size_t d = 0;
            while (d < idx.size()) {
                if (++idx[d] < valid[d].size()) break;
                idx[d] = 0;
                ++d;
            }
            exhausted = d == idx.size();
            if (exhausted && !best_combo) {
                // The merged search has no global view to blame a candidate
                // on, so it can only redraw placements and grind on; the
                // deadline is the real stopping rule.
                ++redraw_round;
                for (size_t vi = 0; vi < rp.vars.size(); ++vi) {
                    RegionVar& var = rp.vars[vi];
                    const RegionSpec& w = scene.region(rp.region);
                    Rng rng = rng_for(params.seed, "merge-redraw",
                                      (uint64_t(rp.region) << 32) | redraw_round, vi);
                    var.samples = sample_placement(
                        w, scene.movable(var.epoch->movable).body, rng, params.n_place);
                    var.clear_of_fixed.clear();
                    for (const geom::Pose2& p : var.samples) {
                        bool clear = true;
                        for (const auto& f : scene.fixed)
                            if (geom::collide(scene.movable(var.epoch->movable).body, p,
                                              f.shape, f.pose)) {
                                clear = false;
                                break;
                            }
                        var.clear_of_fixed.push_back(clear ? 1 : 0);
                    }
                }
                if (!refresh_valid())
                    return Infeasible{"region " + std::to_string(rp.region) +
                                          ": no fixed-clear samples within the drawn set",
                                      false};
                std::fill(idx.begin(), idx.end(), 0);
                exhausted = false;
            }
        }
        for (size_t vi = 0; vi < rp.vars.size(); ++vi)
            out.pose_of[rp.vars[vi].add_action] = rp.vars[vi].samples[size_t((*best_combo)[vi])];
        for (const auto& [b, a] : best_edges) {
            prec_acc = prec_acc.with_edge(b, a);
            out.induced.push_back({b, a});
        }
        out.chosen[rp.region] = *best_combo;
    }

    out.cache = build_cache(scene, plan, epochs, prec_acc, out.pose_of);
    return out;
}

/// Phase-based baseline: every ready robot runs its next action along its
/// Step-3 path while the rest idle; conflicts between two movers idle the
/// lower-indexed one, and a mover blocked by a parked robot gets one
/// reroute around the parked bodies before it too idles.
struct SyncState {
    std::optional<CompositeSolution> composite;
    bool timed_out = false;
    std::string detail;
};

std::vector<geom::Pose2> path_configs(const ActionPlan& ap) {
    std::vector<geom::Pose2> out;
    for (int v : ap.path) out.push_back(ap.roadmap.vertices[size_t(v)]);
    return out;
}

geom::Pose2 along_polyline(const std::vector<geom::Pose2>& poly, double s) {
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
        const double len = geom::se2_distance(poly[i], poly[i + 1]);
        if (s <= len || i + 2 == poly.size()) {
            if (len <= 0.0) continue;
            return geom::interpolate(poly[i], poly[i + 1], std::min(1.0, s / len));
        }
        s -= len;
    }
    return poly.back();
}

double polyline_length(const std::vector<geom::Pose2>& poly) {
    double len = 0.0;
    for (size_t i = 0; i + 1 < poly.size(); ++i)
        len += geom::se2_distance(poly[i], poly[i + 1]);
    return len;
}

SyncState solve_sync_composite(const Scenario& scene, const TaskPlan& plan,
                               const PlacementSolution& placements,
                               const TransitionSolution& transitions,
                               const IndividualPlan& individual, const PipelineParams& params,
                               Clock::time_point deadline) {
    const size_t nr = scene.robots.size();
    TaskPlan gated = plan;  // phase gating must respect the induced orderings too
    gated.prec = final_prec(plan, placements.induced);
    std::set<std::string> completed;
    std::vector<size_t> next_idx(nr, 0);
    std::vector<geom::Pose2> cur = scene.initial.robot_configs;
    std::vector<std::optional<HeldBody>> holding(nr);

    CompositeSolution comp;
    comp.waypoints.push_back({cur, {}, 0.0});

    auto body_pair_clear = [&](size_t i, const geom::Pose2& qi,
                               const std::optional<HeldBody>& hi, size_t j,
                               const geom::Pose2& qj, const std::optional<HeldBody>& hj) {
        if (geom::collide(scene.robots[i].body, qi, scene.robots[j].body, qj)) return false;
        if (hi) {
            const geom::Pose2 pi = geom::compose(qi, hi->gamma);
            if (geom::collide(hi->shape, pi, scene.robots[j].body, qj)) return false;
            if (hj && geom::collide(hi->shape, pi, hj->shape, geom::compose(qj, hj->gamma)))
                return false;
        }
        if (hj &&
            geom::collide(scene.robots[i].body, qi, hj->shape, geom::compose(qj, hj->gamma)))
            return false;
        return true;
    };

    const size_t phase_limit = plan.actions.size() * 4 + 8;
    for (size_t phase = 0; completed.size() < plan.actions.size(); ++phase) {
        if (phase >= phase_limit) return {std::nullopt, false, "phase limit exceeded"};
        if (Clock::now() > deadline)
            return {std::nullopt, true, "time limit during synchronous composition"};

        const std::set<std::string> ready = ready_actions(gated, completed);
        std::vector<int> act_of(nr, -1);  // action index, -1 = idle
        for (size_t ri = 0; ri < nr; ++ri) {
            if (next_idx[ri] >= plan.per_robot[ri].size()) continue;
            const int ai = plan.per_robot[ri][next_idx[ri]];
            if (ready.count(plan.actions[size_t(ai)].id)) act_of[ri] = ai;
        }

        std::vector<std::vector<geom::Pose2>> poly(nr);
        std::vector<std::optional<HeldBody>> held_in_phase(holding);
        for (size_t ri = 0; ri < nr; ++ri) {
            if (act_of[ri] < 0) continue;
            const ActionPlan& ap = individual.per_robot[ri][next_idx[ri]];
            poly[ri] = path_configs(ap);
            held_in_phase[ri] = ap.held;
        }

        std::vector<int> reroutes(nr, 0);
        for (;;) {  // conflict resolution for this phase
            if (Clock::now() > deadline)
                return {std::nullopt, true, "time limit during synchronous composition"};
            double dmax = 0.0, disp = 0.0;
            for (size_t ri = 0; ri < nr; ++ri)
                if (act_of[ri] >= 0) {
                    const double len = polyline_length(poly[ri]);
                    dmax = std::max(dmax, len);
                    disp = std::max(disp, 2.0 * len);
                }
            int ci = -1, cj = -1;
            const int steps =
                std::max(1, static_cast<int>(std::ceil(disp / (params.check_step / 2.0))));
            for (int k = 0; k <= steps && ci < 0; ++k) {
                const double t = dmax * k / steps;
                std::vector<geom::Pose2> q(cur);
                for (size_t ri = 0; ri < nr; ++ri)
                    if (act_of[ri] >= 0) q[ri] = along_polyline(poly[ri], t);
                for (size_t i = 0; i < nr && ci < 0; ++i)
                    for (size_t j = i + 1; j < nr; ++j) {
                        if (act_of[i] < 0 && act_of[j] < 0) continue;
                        if (!body_pair_clear(i, q[i], held_in_phase[i], j, q[j],
                                             held_in_phase[j])) {
                            ci = static_cast<int>(i);
                            cj = static_cast<int>(j);
                            break;
                        }
                    }
            }
            if (ci < 0) break;

            const bool mi = act_of[size_t(ci)] >= 0, mj = act_of[size_t(cj)] >= 0;
            if (mi && mj) {
                act_of[size_t(ci)] = -1;  // lower-indexed mover idles
                held_in_phase[size_t(ci)] = holding[size_t(ci)];
                continue;
            }
            const size_t mover = mi ? size_t(ci) : size_t(cj);
            if (reroutes[mover] == 0) {
                ++reroutes[mover];
                const ActionPlan& ap = individual.per_robot[mover][next_idx[mover]];
                std::vector<Obstacle> obs = ap.obstacles;
                for (size_t rj = 0; rj < nr; ++rj) {
                    if (rj == mover) continue;
                    obs.push_back({scene.robots[rj].body, cur[rj], Obstacle::Fixed,
                                   -static_cast<int>(rj) - 1});
                    if (holding[rj])
                        obs.push_back({holding[rj]->shape,
                                       geom::compose(cur[rj], holding[rj]->gamma),
                                       Obstacle::Fixed, -100 - static_cast<int>(rj)});
                }
                PrmParams pp;
                pp.n_samples = params.n_prm;
                pp.k_neighbors = params.k_prm;
                pp.check_step = params.check_step;
                Rng rng = rng_for(params.seed, "sync-reroute", mover, phase);
                const geom::Pose2 goal = poly[mover].back();
                Roadmap rm = build_roadmap(scene.robots[mover], cur[mover], goal, obs,
                                           held_in_phase[mover], scene.bounds(), pp, rng);
                if (rm.connected) {
                    std::vector<geom::Pose2> np;
                    for (int v : shortest_path(rm)) np.push_back(rm.vertices[size_t(v)]);
                    poly[mover] = std::move(np);
                    continue;
                }
            }
            act_of[mover] = -1;
            held_in_phase[mover] = holding[mover];
        }

        bool any_active = false;
        for (size_t ri = 0; ri < nr; ++ri) any_active |= act_of[ri] >= 0;
        if (!any_active) return {std::nullopt, false, "synchronous deadlock"};

        // Emit composite waypoints at every path-vertex event time.
        std::vector<double> times{0.0};
        double dmax = 0.0;
        for (size_t ri = 0; ri < nr; ++ri) {
            if (act_of[ri] < 0) continue;
            double s = 0.0;
            for (size_t k = 0; k + 1 < poly[ri].size(); ++k) {
                s += geom::se2_distance(poly[ri][k], poly[ri][k + 1]);
                times.push_back(s);
            }
            dmax = std::max(dmax, s);
        }
        times.push_back(dmax);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                    times.end());

        for (size_t k = 1; k < times.size(); ++k) {
            std::vector<geom::Pose2> q(cur);
            for (size_t ri = 0; ri < nr; ++ri)
                if (act_of[ri] >= 0) q[ri] = along_polyline(poly[ri], times[k]);
            comp.waypoints.push_back({q, {}, times[k] - times[k - 1]});
            comp.makespan += times[k] - times[k - 1];
        }

        Waypoint& endwp = comp.waypoints.back();
        for (size_t ri = 0; ri < nr; ++ri) {
            if (act_of[ri] < 0) continue;
            const AbstractAction& a = plan.actions[size_t(act_of[ri])];
            endwp.fired.push_back(a.id);
            completed.insert(a.id);
            cur[ri] = poly[ri].back();
            if (a.kind == ActionKind::Transit)
                holding[ri] = HeldBody{a.m, scene.movable(a.m).body, transitions.grasp_of.at(a.id).gamma};
            else
                holding[ri].reset();
            ++next_idx[ri];
        }
    }
    return {comp, false, ""};
}

}  // namespace

RunReport refine(const Scenario& scene, const TaskPlan& plan, const PipelineParams& params) {
    RunReport report;
    const auto t0 = Clock::now();
    const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>(params.time_limit_s));
    const geom::Aabb bounds = scene.bounds();

    PlacementTabu ptabu;
    GraspTabu gtabu;
    const char* log_env = std::getenv("MRREFINE_LOG");
    const bool dbg = log_env && std::string_view(log_env) == "debug";
    auto trace = [&](const std::string& msg) {
        if (dbg) std::fprintf(stderr, "[mrrefine] %s\n", msg.c_str());
    };
    auto finish = [&](Outcome oc, std::string detail) {
        report.outcome = oc;
        report.detail = std::move(detail);
        report.planning_time_s = seconds_since(t0);
        return report;
    };

    for (int pa = 0; pa < 8; ++pa) {
        if (Clock::now() > deadline) return finish(Outcome::Timeout, "overall time limit");

        // ---- Step 1 ----
        const auto s1 = Clock::now();
        PlacementResult pres;
        if (params.mode == Mode::Merge12 || params.mode == Mode::Merge123) {
            pres = solve_placements_interleaved(scene, plan, params, deadline);
        } else {
            PlaceParams pp;
            pp.n_place = params.n_place;
            pp.time_limit_s = params.step_time_limit_s;
            pp.extend_samples = params.policy == Policy::ExtendSamples;
            pres = solve_placements(scene, plan, pp, params.seed, &ptabu);
        }
        report.step_time_s[0] += seconds_since(s1);
        if (std::holds_alternative<Infeasible>(pres)) {
            const Infeasible& inf = std::get<Infeasible>(pres);
            return finish(inf.timed_out ? Outcome::Timeout : Outcome::Infeasible,
                          "placements: " + inf.reason);
        }
        const PlacementSolution placements = std::get<PlacementSolution>(pres);

        bool back_to_placements = false;
        for (int ga = 0; ga < 8 && !back_to_placements; ++ga) {
            if (Clock::now() > deadline) return finish(Outcome::Timeout, "overall time limit");

            // ---- Step 2 ----
            const auto s2 = Clock::now();
            TransitionParams tp;
            tp.n_grasp = params.n_grasp;
            tp.time_limit_s = params.step_time_limit_s;
            TransitionResult tres =
                solve_transitions(scene, plan, placements, tp, params.seed, &gtabu);
            report.step_time_s[1] += seconds_since(s2);
            if (std::holds_alternative<StepFailure>(tres)) {
                const StepFailure& f = std::get<StepFailure>(tres);
                if (f.timed_out || Clock::now() > deadline)
                    return finish(Outcome::Timeout, "transitions: " + f.cause);
                if (params.policy == Policy::Stop)
                    return finish(Outcome::Infeasible,
                                  "transitions: " + f.action_id + ": " + f.cause);
                trace("step2 failed: " + f.action_id + ": " + f.cause);
                for (const auto& [w, combo] : placements.chosen) ptabu[w].insert(combo);
                ++report.backtracks;
                back_to_placements = true;
                break;
            }
            const TransitionSolution transitions = std::get<TransitionSolution>(tres);

            for (int ma = 0; ma < 3; ++ma) {
                if (Clock::now() > deadline)
                    return finish(Outcome::Timeout, "overall time limit");

                // ---- Step 3 ----
                const auto s3 = Clock::now();
                PrmParams pmp;
                pmp.n_samples = params.n_prm;
                pmp.k_neighbors = params.k_prm;
                pmp.check_step = params.check_step;
                pmp.time_limit_s = params.step_time_limit_s;
                IndividualResult ires = plan_individual(scene, plan, placements, transitions,
                                                        pmp, params.seed, uint64_t(ma));
                report.step_time_s[2] += seconds_since(s3);
                if (std::holds_alternative<StepFailure>(ires)) {
                    const StepFailure& f = std::get<StepFailure>(ires);
                    trace("step3 failed: " + f.action_id + ": " + f.cause);
                    if (f.timed_out || Clock::now() > deadline)
                        return finish(Outcome::Timeout, "motion: " + f.cause);
                    continue;  // reseeded roadmaps on the next attempt
                }
                const IndividualPlan individual = std::get<IndividualPlan>(ires);
                const OrderingSet prec = final_prec(plan, placements.induced);

                // ---- Step 4 ----
                const auto s4 = Clock::now();
                std::optional<CompositeSolution> comp;
                bool timed_out4 = false;
                std::string detail4;
                if (params.mode == Mode::Synchronous) {
                    SyncState st = solve_sync_composite(scene, plan, placements, transitions,
                                                        individual, params, deadline);
                    comp = st.composite;
                    timed_out4 = st.timed_out;
                    detail4 = st.detail;
                } else {
                    const std::vector<RobotTrack> tracks =
                        build_tracks(scene, plan, individual, prec);
                    DrrtParams dp;
                    dp.max_iters = params.drrt_iters;
                    dp.goal_bias = params.goal_bias;
                    dp.check_step = params.check_step;
                    dp.time_limit_s = params.drrt_time_limit_s;
                    for (int da = 0; da < 3 && !comp; ++da) {
                        Rng rng = rng_for(params.seed, "drrt", uint64_t(ma), uint64_t(da));
                        comp = drrt_search(tracks, bounds, dp, rng);
                        if (!comp && (Clock::now() > deadline ||
                                      seconds_since(s4) > params.drrt_time_limit_s * 3))
                            timed_out4 = true;
                        if (timed_out4) break;
                    }
                    detail4 = "coordination: no composite path";
                }
                report.step_time_s[3] += seconds_since(s4);
                if (timed_out4 && Clock::now() > deadline)
                    return finish(Outcome::Timeout, detail4.empty() ? "overall time limit"
                                                                    : detail4);
                if (!comp) {
                    trace("step4 failed: " + detail4);
                    continue;  // retry with freshly seeded Step-3 roadmaps
                }

                Solution sol;
                sol.seed = params.seed;
                sol.mode = params.mode;
                sol.pose_of = placements.pose_of;
                sol.config_of = transitions.config_of;
                sol.grasp_of = transitions.grasp_of;
                sol.induced = placements.induced;
                sol.composite = *comp;
                sol.makespan = comp->makespan;
                sol.params = params;
                report.makespan = sol.makespan;
                report.solution = std::move(sol);
                return finish(Outcome::Solved, "");
            }

            // Steps 3/4 kept failing under this grasp assignment.
            if (params.policy == Policy::Stop)
                return finish(Outcome::Infeasible, "coordination failed");
            for (const auto& [pick, gi] : transitions.grasp_index_of) gtabu[pick].insert(gi);
            ++report.backtracks;
        }
        if (!back_to_placements) {
            // Grasp assignments exhausted; throw the placements away too.
            if (params.policy == Policy::Stop)
                return finish(Outcome::Infeasible, "grasp assignments exhausted");
            for (const auto& [w, combo] : placements.chosen) ptabu[w].insert(combo);
            ++report.backtracks;
        }
    }
    if (Clock::now() > deadline) return finish(Outcome::Timeout, "overall time limit");
    return finish(Outcome::Infeasible, "backtracking attempts exhausted");
}

std::string write_solution(const Solution& sol) {
    json j;
    j["seed"] = sol.seed;
    j["mode"] = to_string(sol.mode);
    j["makespan"] = sol.makespan;
    json params;
    params["n_place"] = sol.params.n_place;
    params["n_grasp"] = sol.params.n_grasp;
    params["n_prm"] = sol.params.n_prm;
    params["k_prm"] = sol.params.k_prm;
    params["check_step"] = sol.params.check_step;
    params["step_time_limit_s"] = sol.params.step_time_limit_s;
    params["time_limit_s"] = sol.params.time_limit_s;
    params["drrt_time_limit_s"] = sol.params.drrt_time_limit_s;
    params["drrt_iters"] = sol.params.drrt_iters;
    params["goal_bias"] = sol.params.goal_bias;
    params["policy"] = policy_name(sol.params.policy);
    params["mode"] = to_string(sol.params.mode);
    params["seed"] = sol.params.seed;
    j["params"] = params;
    json placements = json::object(), configs = json::object(), grasps = json::object();
    for (const auto& [id, p] : sol.pose_of) placements[id] = pose_json(p);
    for (const auto& [id, q] : sol.config_of) configs[id] = pose_json(q);
    for (const auto& [id, g] : sol.grasp_of)
        grasps[id] = {{"r", g.r}, {"m", g.m}, {"gamma", pose_json(g.gamma)}};
    j["assignment"] = {{"placements", placements}, {"configs", configs}, {"grasps", grasps}};
    json induced = json::array();
    for (const auto& [b, a] : sol.induced) induced.push_back(json::array({b, a}));
    j["induced"] = induced;
    json wps = json::array();
    for (const Waypoint& wp : sol.composite.waypoints) {
        json cw = json::array();
        for (const geom::Pose2& q : wp.configs) cw.push_back(pose_json(q));
        wps.push_back({{"configs", cw}, {"fired", wp.fired}, {"duration", wp.duration}});
    }
    j["waypoints"] = wps;
    return j.dump(2) + "\n";
}

Solution read_solution_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("solution: ") + e.what());
    }
    try {
        Solution sol;
        sol.seed = j.at("seed").get<uint64_t>();
        sol.mode = parse_mode(j.at("mode").get<std::string>()).value_or(Mode::Full);
        sol.makespan = j.at("makespan").get<double>();
        const json& params = j.at("params");
        sol.params.n_place = params.at("n_place").get<int>();
        sol.params.n_grasp = params.at("n_grasp").get<int>();
        sol.params.n_prm = params.at("n_prm").get<int>();
        sol.params.k_prm = params.at("k_prm").get<int>();
        sol.params.check_step = params.at("check_step").get<double>();
        sol.params.step_time_limit_s = params.at("step_time_limit_s").get<double>();
        sol.params.time_limit_s = params.at("time_limit_s").get<double>();
        sol.params.drrt_time_limit_s = params.at("drrt_time_limit_s").get<double>();
        sol.params.drrt_iters = params.at("drrt_iters").get<int>();
        sol.params.goal_bias = params.at("goal_bias").get<double>();
        sol.params.policy = policy_from(params.at("policy").get<std::string>());
        sol.params.mode = parse_mode(params.at("mode").get<std::string>()).value_or(Mode::Full);
        sol.params.seed = params.at("seed").get<uint64_t>();
        const json& asg = j.at("assignment");
        for (const auto& [id, p] : asg.at("placements").items())
            sol.pose_of[id] = pose_from(p);
        for (const auto& [id, q] : asg.at("configs").items()) sol.config_of[id] = pose_from(q);
        for (const auto& [id, g] : asg.at("grasps").items())
            sol.grasp_of[id] = Grasp{g.at("r").get<int>(), g.at("m").get<int>(),
                                     pose_from(g.at("gamma"))};
        for (const json& e : j.at("induced"))
            sol.induced.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
        for (const json& w : j.at("waypoints")) {
            Waypoint wp;
            for (const json& q : w.at("configs")) wp.configs.push_back(pose_from(q));
            wp.fired = w.at("fired").get<std::vector<std::string>>();
            wp.duration = w.at("duration").get<double>();
            sol.composite.waypoints.push_back(std::move(wp));
        }
        for (const Waypoint& wp : sol.composite.waypoints)
            sol.composite.makespan += wp.duration;
        return sol;
    } catch (const json::exception& e) {
        throw ParseError(std::string("solution: ") + e.what());
    }
}

Solution read_solution(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_solution_string(ss.str());
}

Solution read_solution_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    return read_solution(f);
}

}  // namespace mrrefine
