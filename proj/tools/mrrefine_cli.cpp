// Command-line front end: solve, validate, bench, render.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mrrefine/pipeline.hpp"

namespace {

using namespace mrrefine;

int g_log = 0;  // 0 off, 1 info, 2 debug

void init_log() {
    const char* v = std::getenv("MRREFINE_LOG");
    if (!v) return;
    const std::string s(v);
    if (s == "info") g_log = 1;
    if (s == "debug") g_log = 2;
}

void log_info(const std::string& msg) {
    if (g_log >= 1) std::cerr << "[mrrefine] " << msg << "\n";
}

std::string outcome_name(Outcome oc) {
    switch (oc) {
        case Outcome::Solved: return "solved";
        case Outcome::Infeasible: return "infeasible";
        case Outcome::Timeout: return "timeout";
    }
    return "infeasible";
}

struct CommonArgs {
    std::string scenario;
    std::string plan;
    uint64_t seed = 0;
    int n_place = 10;
    int n_grasp = 12;
    int n_prm = 200;
    int k_prm = 10;
    double time_limit_s = 600.0;
    std::string mode = "full";
    std::string out;
};

void add_param_flags(CLI::App* app, CommonArgs& a) {
    app->add_option("--seed", a.seed, "random seed");
    app->add_option("--n-place", a.n_place, "placement samples per variable");
    app->add_option("--n-grasp", a.n_grasp, "grasp samples per pick");
    app->add_option("--n-prm", a.n_prm, "roadmap samples per action");
    app->add_option("--k-prm", a.k_prm, "roadmap neighbor count");
    app->add_option("--time-limit-s", a.time_limit_s, "overall time limit in seconds");
    app->add_option("--mode", a.mode, "full | merge12 | merge123 | synchronous");
    app->add_option("--out", a.out, "output path");
}

PipelineParams params_from(const CommonArgs& a) {
    PipelineParams p;
    p.seed = a.seed;
    p.n_place = a.n_place;
    p.n_grasp = a.n_grasp;
    p.n_prm = a.n_prm;
    p.k_prm = a.k_prm;
    p.time_limit_s = a.time_limit_s;
    p.step_time_limit_s = a.time_limit_s;
    const auto m = parse_mode(a.mode);
    if (!m) throw CLI::ValidationError("--mode", "unknown mode '" + a.mode + "'");
    p.mode = *m;
    return p;
}

int run_solve(const CommonArgs& a) {
    const Scenario scene = load_scenario_file(a.scenario);
    const TaskPlan plan = load_plan_file(a.plan, scene);
    const PipelineParams params = params_from(a);
    log_info("solving " + a.scenario + " mode=" + a.mode + " seed=" + std::to_string(a.seed));
    const RunReport rep = refine(scene, plan, params);
    std::cout << "outcome: " << outcome_name(rep.outcome) << "\n"
              << "planning_time_s: " << rep.planning_time_s << "\n"
              << "backtracks: " << rep.backtracks << "\n";
    if (rep.outcome != Outcome::Solved) {
        std::cout << "detail: " << rep.detail << "\n";
        return 2;
    }
    std::cout << "makespan: " << rep.makespan << "\n";
    const std::string out = a.out.empty() ? "solution.out" : a.out;
    std::ofstream f(out);
    f << write_solution(*rep.solution);
    std::cout << "solution: " << out << "\n";
    return 0;
}

int run_validate(const CommonArgs& a, const std::string& solution_path) {
    const Scenario scene = load_scenario_file(a.scenario);
    const TaskPlan plan = load_plan_file(a.plan, scene);
    const Solution sol = read_solution_file(solution_path);
    const ValidationReport rep = validate_solution(scene, plan, sol);
    for (const std::string& v : rep.violations) std::cout << "violation: " << v << "\n";
    std::cout << (rep.ok() ? "valid" : "invalid") << "\n";
    return rep.ok() ? 0 : 2;
}

int run_bench(const CommonArgs& a, int seeds) {
    const Scenario scene = load_scenario_file(a.scenario);
    const TaskPlan plan = load_plan_file(a.plan, scene);
    std::ostringstream csv;
    csv << "seed,mode,outcome,planning_time_s,makespan\n";
    for (int s = 0; s < seeds; ++s) {
        for (Mode m : {Mode::Full, Mode::Merge12, Mode::Merge123, Mode::Synchronous}) {
            CommonArgs run = a;
            run.seed = uint64_t(s);
            run.mode = to_string(m);
            PipelineParams params = params_from(run);
            log_info("bench seed=" + std::to_string(s) + " mode=" + run.mode);
            const RunReport rep = refine(scene, plan, params);
            csv << s << ',' << run.mode << ',' << outcome_name(rep.outcome) << ','
                << rep.planning_time_s << ','
                << (rep.outcome == Outcome::Solved ? rep.makespan : 0.0) << "\n";
        }
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(a.out);
        f << csv.str();
        std::cout << "csv: " << a.out << "\n";
    }
    return 0;
}

const char* kRobotColors[] = {"#c0392b", "#2980b9", "#27ae60", "#8e44ad",
                              "#d35400", "#16a085"};

void svg_shape(std::ostream& os, const geom::Shape& shape, const geom::Pose2& pose,
               const std::string& style) {
    if (const auto* d = std::get_if<geom::Disc>(&shape)) {
        os << "<circle cx=\"" << pose.x << "\" cy=\"" << pose.y << "\" r=\"" << d->radius
           << "\" " << style << "/>\n";
        return;
    }
    os << "<polygon points=\"";
    for (const geom::Vec2& v : std::get<geom::ConvexPolygon>(shape).vertices) {
        const geom::Vec2 w = geom::apply(pose, v);
        os << w.x << ',' << w.y << ' ';
    }
    os << "\" " << style << "/>\n";
}

int run_render(const CommonArgs& a, const std::string& solution_path) {
    const Scenario scene = load_scenario_file(a.scenario);
    const TaskPlan plan = load_plan_file(a.plan, scene);
    (void)plan;
    const Solution sol = read_solution_file(solution_path);
    const geom::Aabb b = scene.bounds();

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" << b.xmin
       << ' ' << -b.ymax << ' ' << b.xmax - b.xmin << ' ' << b.ymax - b.ymin << "\">\n"
       << "<g transform=\"scale(1,-1)\">\n";
    for (const RegionSpec& w : scene.regions)
        svg_shape(os, geom::Shape{w.polygon}, w.pose,
                  "fill=\"#ecf0f1\" stroke=\"#7f8c8d\" stroke-width=\"0.05\"");
    for (const FixedObject& f : scene.fixed)
        svg_shape(os, f.shape, f.pose, "fill=\"#2c3e50\"");
    for (size_t mi = 0; mi < scene.movables.size(); ++mi)
        svg_shape(os, scene.movables[mi].body, scene.initial.movable_poses[mi],
                  "fill=\"#f1c40f\" stroke=\"#b7950b\" stroke-width=\"0.04\"");
    for (const auto& [id, p] : sol.pose_of) {
        const AbstractAction& act = plan.action(id);
        svg_shape(os, scene.movable(act.m).body, p,
                  "fill=\"none\" stroke=\"#b7950b\" stroke-width=\"0.04\" "
                  "stroke-dasharray=\"0.15,0.1\"");
    }
    for (size_t ri = 0; ri < scene.robots.size(); ++ri) {
        const std::string color = kRobotColors[ri % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"0.08\" points=\"";
        for (const Waypoint& wp : sol.composite.waypoints)
            os << wp.configs[ri].x << ',' << wp.configs[ri].y << ' ';
        os << "\"/>\n";
        svg_shape(os, scene.robots[ri].body, scene.initial.robot_configs[ri],
                  "fill=\"" + color + "\" fill-opacity=\"0.5\"");
    }
    os << "</g>\n</svg>\n";

    const std::string out = a.out.empty() ? "plan.svg" : a.out;
    std::ofstream f(out);
    f << os.str();
    std::cout << "svg: " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    init_log();
    CLI::App app{"mrrefine: multi-robot pick-and-place refinement planner"};
    app.require_subcommand(1);

    CommonArgs solve_args, validate_args, bench_args, render_args;
    std::string validate_solution_path, render_solution_path;
    int bench_seeds = 25;

    CLI::App* solve = app.add_subcommand("solve", "refine a task plan");
    solve->add_option("scenario", solve_args.scenario)->required();
    solve->add_option("plan", solve_args.plan)->required();
    add_param_flags(solve, solve_args);

    CLI::App* validate = app.add_subcommand("validate", "replay and check a solution");
    validate->add_option("scenario", validate_args.scenario)->required();
    validate->add_option("plan", validate_args.plan)->required();
    validate->add_option("solution", validate_solution_path)->required();

    CLI::App* bench = app.add_subcommand("bench", "run all modes across seeds, emit CSV");
    bench->add_option("scenario", bench_args.scenario)->required();
    bench->add_option("plan", bench_args.plan)->required();
    bench->add_option("--seeds", bench_seeds, "number of seeds");
    add_param_flags(bench, bench_args);

    CLI::App* render = app.add_subcommand("render", "emit an SVG of a solution");
    render->add_option("scenario", render_args.scenario)->required();
    render->add_option("plan", render_args.plan)->required();
    render->add_option("solution", render_solution_path)->required();
    render->add_option("--out", render_args.out, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) return run_solve(solve_args);
        if (validate->parsed()) return run_validate(validate_args, validate_solution_path);
        if (bench->parsed()) return run_bench(bench_args, bench_seeds);
        if (render->parsed()) return run_render(render_args, render_solution_path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 3;
}
