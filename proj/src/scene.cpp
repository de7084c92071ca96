#include "mrrefine/scene.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mrrefine {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& ctx) {
    if (!j.is_object()) throw ParseError(ctx + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw ParseError(ctx + ": unknown key '" + it.key() + "'");
    }
    for (const char* k : allowed)
        if (!j.contains(k)) throw ParseError(ctx + ": missing key '" + k + "'");
}

double get_number(const json& j, const std::string& ctx) {
    if (!j.is_number()) throw ParseError(ctx + ": expected a number");
    return j.get<double>();
}

geom::Pose2 parse_pose(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 3) throw ParseError(ctx + ": pose must be [x, y, theta]");
    return geom::pose(get_number(j[0], ctx), get_number(j[1], ctx), get_number(j[2], ctx));
}

geom::ConvexPolygon parse_poly(const json& j, const std::string& ctx) {
    if (!j.is_array()) throw ParseError(ctx + ": poly must be a list of [x, y]");
    geom::ConvexPolygon poly;
    for (const auto& v : j) {
        if (!v.is_array() || v.size() != 2) throw ParseError(ctx + ": poly vertex must be [x, y]");
        poly.vertices.push_back({get_number(v[0], ctx), get_number(v[1], ctx)});
    }
    return poly;
}

geom::Shape parse_shape(const json& j, const std::string& ctx) {
    if (!j.is_object() || j.size() != 1)
        throw ParseError(ctx + ": shape must be {\"disc\": r} or {\"poly\": [...]}");
    geom::Shape s;
    if (j.contains("disc"))
        s = geom::Disc{get_number(j["disc"], ctx)};
    else if (j.contains("poly"))
        s = parse_poly(j["poly"], ctx);
    else
        throw ParseError(ctx + ": unknown shape variant");
    try {
        geom::check_shape(s);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(ctx + ": " + e.what());
    }
    return s;
}

json pose_json(const geom::Pose2& p) { return json::array({p.x, p.y, p.theta}); }

json shape_json(const geom::Shape& s) {
    if (const geom::Disc* d = std::get_if<geom::Disc>(&s)) return json{{"disc", d->radius}};
    json verts = json::array();
    for (const auto& v : std::get<geom::ConvexPolygon>(s).vertices)
        verts.push_back(json::array({v.x, v.y}));
    return json{{"poly", verts}};
}

void check_ids(const json& list, const std::string& what) {
    for (size_t i = 0; i < list.size(); ++i) {
        const int id = list[i].at("id").get<int>();
        if (id != static_cast<int>(i) + 1)
            throw ValidationError(what + " ids must be 1..N in order (found id " +
                                  std::to_string(id) + " at position " + std::to_string(i + 1) +
                                  ")");
    }
}

}  // namespace

geom::Aabb Scenario::bounds() const {
    geom::Aabb box{1.0, 1.0, -1.0, -1.0};
    for (const auto& f : fixed) box.expand(geom::aabb_of(f.shape, f.pose));
    for (const auto& w : regions) box.expand(geom::aabb_of(geom::Shape{w.polygon}, w.pose));
    return box;
}

Scenario load_scenario(std::istream& in) {
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    require_keys(root, {"robots", "movables", "fixed", "regions", "initial"}, "scenario");

    Scenario s;
    check_ids(root["robots"], "robot");
    for (const auto& jr : root["robots"]) {
        require_keys(jr, {"id", "body", "reach"}, "robot");
        RobotSpec r;
        r.id = jr["id"].get<int>();
        r.body = parse_shape(jr["body"], "robot " + std::to_string(r.id));
        if (!std::holds_alternative<geom::Disc>(r.body))
            throw ValidationError("robot " + std::to_string(r.id) + ": body must be a disc");
        r.reach = get_number(jr["reach"], "robot reach");
        if (!(r.reach > 0.0))
            throw ValidationError("robot " + std::to_string(r.id) + ": reach must be > 0");
        s.robots.push_back(std::move(r));
    }
    check_ids(root["movables"], "movable");
    for (const auto& jm : root["movables"]) {
        require_keys(jm, {"id", "body"}, "movable");
        MovableSpec m;
        m.id = jm["id"].get<int>();
        m.body = parse_shape(jm["body"], "movable " + std::to_string(m.id));
        s.movables.push_back(std::move(m));
    }
    for (const auto& jf : root["fixed"]) {
        require_keys(jf, {"shape", "pose"}, "fixed");
        s.fixed.push_back(
            {parse_shape(jf["shape"], "fixed"), parse_pose(jf["pose"], "fixed pose")});
    }
    check_ids(root["regions"], "region");
    for (const auto& jw : root["regions"]) {
        require_keys(jw, {"id", "poly", "pose"}, "region");
        RegionSpec w;
        w.id = jw["id"].get<int>();
        const geom::Shape poly = parse_shape(json{{"poly", jw["poly"]}},
                                             "region " + std::to_string(w.id));
        w.polygon = std::get<geom::ConvexPolygon>(poly);
        w.pose = parse_pose(jw["pose"], "region pose");
        s.regions.push_back(std::move(w));
    }

    const json& init = root["initial"];
    require_keys(init, {"robots", "movables"}, "initial");
    if (init["robots"].size() != s.robots.size())
        throw ValidationError("initial: expected one config per robot");
    for (const auto& jc : init["robots"])
        s.initial.robot_configs.push_back(parse_pose(jc, "initial robot config"));
    if (init["movables"].size() != s.movables.size())
        throw ValidationError("initial: expected one entry per movable");
    for (const auto& jm : init["movables"]) {
        require_keys(jm, {"pose", "region"}, "initial movable");
        s.initial.movable_poses.push_back(parse_pose(jm["pose"], "initial movable pose"));
        s.initial.movable_regions.push_back(jm["region"].get<int>());
    }

    // Geometric cross-checks of the initial state.
    for (size_t mi = 0; mi < s.movables.size(); ++mi) {
        const int declared = s.initial.movable_regions[mi];
        if (declared < 1 || declared > static_cast<int>(s.regions.size()))
            throw ValidationError("movable " + std::to_string(mi + 1) +
                                  ": unknown initial region " + std::to_string(declared));
        int containing = 0;
        for (const auto& w : s.regions) {
            const bool in = geom::contains(geom::Shape{w.polygon}, w.pose,
                                           s.movables[mi].body, s.initial.movable_poses[mi]);
            if (in) ++containing;
            if (w.id == declared && !in)
                throw ValidationError("movable " + std::to_string(mi + 1) +
                                      " is not contained in its declared region " +
                                      std::to_string(declared));
        }
        if (containing != 1)
            throw ValidationError("movable " + std::to_string(mi + 1) +
                                  " must be contained in exactly one region, found " +
                                  std::to_string(containing));
    }
    std::string why;
    if (!in_free_space(s, s.initial.robot_configs, s.initial.movable_poses, {}, &why))
        throw ValidationError("initial state is not in free space: " + why);
    return s;
}

Scenario load_scenario_string(const std::string& text) {
    std::istringstream in(text);
    return load_scenario(in);
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    return load_scenario(in);
}

std::string write_scenario(const Scenario& s) {
    json root;
    root["robots"] = json::array();
    for (const auto& r : s.robots)
        root["robots"].push_back({{"id", r.id}, {"body", shape_json(r.body)}, {"reach", r.reach}});
    root["movables"] = json::array();
    for (const auto& m : s.movables)
        root["movables"].push_back({{"id", m.id}, {"body", shape_json(m.body)}});
    root["fixed"] = json::array();
    for (const auto& f : s.fixed)
        root["fixed"].push_back({{"shape", shape_json(f.shape)}, {"pose", pose_json(f.pose)}});
    root["regions"] = json::array();
    for (const auto& w : s.regions)
        root["regions"].push_back({{"id", w.id},
                                   {"poly", shape_json(geom::Shape{w.polygon})["poly"]},
                                   {"pose", pose_json(w.pose)}});
    json jrobots = json::array();
    for (const auto& c : s.initial.robot_configs) jrobots.push_back(pose_json(c));
    json jmov = json::array();
    for (size_t i = 0; i < s.initial.movable_poses.size(); ++i)
        jmov.push_back({{"pose", pose_json(s.initial.movable_poses[i])},
                        {"region", s.initial.movable_regions[i]}});
    root["initial"] = {{"robots", jrobots}, {"movables", jmov}};
    return root.dump(2) + "\n";
}

bool in_free_space(const Scenario& scene, std::span<const geom::Pose2> robot_configs,
                   std::span<const geom::Pose2> movable_poses,
                   const std::map<int, HeldGrasp>& held, std::string* first_violation) {
    struct Body {
        geom::Shape shape;
        geom::Pose2 pose;
        std::string name;
        int robot_owner = 0;  // robot id for robots and their held objects
        bool is_fixed = false;
    };
    std::vector<Body> bodies;
    std::set<int> held_movables;
    for (const auto& [rid, g] : held) {
        if (!held_movables.insert(g.movable).second)
            throw std::invalid_argument("held map is not injective over movables");
    }
    for (size_t i = 0; i < scene.robots.size(); ++i)
        bodies.push_back({scene.robots[i].body, robot_configs[i],
                          "robot " + std::to_string(i + 1), static_cast<int>(i + 1), false});
    for (const auto& [rid, g] : held) {
        const geom::Pose2 p = geom::compose(robot_configs[size_t(rid - 1)], g.gamma);
        bodies.push_back({scene.movable(g.movable).body, p,
                          "held movable " + std::to_string(g.movable), rid, false});
    }
    for (size_t i = 0; i < scene.movables.size(); ++i) {
        if (held_movables.count(static_cast<int>(i + 1))) continue;
        bodies.push_back({scene.movables[i].body, movable_poses[i],
                          "movable " + std::to_string(i + 1), 0, false});
    }
    for (size_t i = 0; i < scene.fixed.size(); ++i)
        bodies.push_back({scene.fixed[i].shape, scene.fixed[i].pose,
                          "fixed " + std::to_string(i + 1), 0, true});

    for (size_t i = 0; i < bodies.size(); ++i) {
        for (size_t j = i + 1; j < bodies.size(); ++j) {
            if (bodies[i].is_fixed && bodies[j].is_fixed) continue;
            // robot vs its own held object is exempt
            if (bodies[i].robot_owner != 0 && bodies[i].robot_owner == bodies[j].robot_owner)
                continue;
            if (geom::collide(bodies[i].shape, bodies[i].pose, bodies[j].shape, bodies[j].pose)) {
                if (first_violation)
                    *first_violation = bodies[i].name + " collides with " + bodies[j].name;
                return false;
            }
        }
    }
    return true;
}

}  // namespace mrrefine
