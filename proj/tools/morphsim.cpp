#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "morphsim/controllers.hpp"
#include "morphsim/diagnostics.hpp"
#include "morphsim/episode.hpp"
#include "morphsim/errors.hpp"
#include "morphsim/render.hpp"
#include "morphsim/rng.hpp"

using namespace morphsim;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string config;
    std::vector<std::string> sets;
    bool json = false;
    std::optional<int> workers;
};

// --workers beats MORPHSIM_THREADS, which beats the single-thread default.
int resolve_workers(const Globals& g) {
    if (g.workers) {
        if (*g.workers < 1) throw ConfigError("--workers must be >= 1");
        return *g.workers;
    }
    if (const char* env = std::getenv("MORPHSIM_THREADS"); env && *env) {
        const int n = parse_int("MORPHSIM_THREADS", env);
        if (n < 1) throw ConfigError("MORPHSIM_THREADS must be >= 1");
        return n;
    }
    return 1;
}

ConfigMap parse_sets(const std::vector<std::string>& sets) {
    ConfigMap out;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t");
            const auto b = v.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        out[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    return out;
}

// --config picks the file; --task must agree with it when both are given.
EnvSpec resolve_spec(const Globals& g, const std::string& task) {
    const ConfigMap sets = parse_sets(g.sets);
    if (!g.config.empty()) {
        EnvSpec spec = load_spec(g.config, sets);
        if (!task.empty() && parse_task(task) != spec.task)
            throw ConfigError("--task " + task + " conflicts with task '" + to_string(spec.task) + "' in " + g.config);
        return spec;
    }
    return apply_overrides(default_spec(parse_task(task.empty() ? "shape_match" : task)), sets);
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_episode(const Globals& g, const EpisodeRecord& rec) {
    if (g.json) {
        std::cout << summary_json(rec).dump() << "\n";
        return;
    }
    std::cout << "task " << rec.header.task << " seed " << rec.header.seed << " controller " << rec.header.controller
              << "\nsteps " << rec.length() << " termination " << to_string(rec.termination) << "\nreturn "
              << fixed(rec.total_return) << "\n";
    if (!rec.failure.empty()) std::cout << "failure: " << rec.failure.substr(0, rec.failure.find('\n')) << "\n";
}

int cmd_run(const Globals& g, const std::string& task, const std::string& controller, int resolution, int steps,
            int episodes, const std::string& out) {
    const EnvSpec spec = resolve_spec(g, task);
    if (episodes < 1) throw ConfigError("--episodes must be >= 1");
    if (!out.empty() && episodes != 1) throw ConfigError("--out records a single episode");
    const int workers = resolve_workers(g);
    bool failed = false;
    for (int k = 0; k < episodes; ++k) {
        const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(k);
        Environment env(spec, seed);
        env.set_threads(workers);
        auto ctrl = make_controller(controller, derive_seed(seed, SeedStream::controller), resolution, spec.a_max);
        const EpisodeRecord rec = run_episode(env, *ctrl, steps);
        if (!out.empty()) write_record(out, rec);
        print_episode(g, rec);
        failed = failed || rec.termination == Termination::failure;
    }
    return failed ? 1 : 0;
}

int cmd_replay(const Globals& g, const std::string& path) {
    const EpisodeRecord rec = read_record(path);
    const EpisodeRecord again = g.config.empty() && g.sets.empty() ? replay(rec) : replay(rec, resolve_spec(g, rec.header.task));
    const double diff = max_reward_difference(rec, again);
    if (g.json) {
        json j = summary_json(again);
        j["max_reward_difference"] = diff;
        std::cout << j.dump() << "\n";
    } else {
        print_episode(g, again);
        std::cout << "max reward difference " << fixed(diff) << "\n";
    }
    return diff <= 1e-9 && again.termination == rec.termination ? 0 : 1;
}

int cmd_render(const Globals& g, const std::string& path, const std::string& gif, const std::string& png,
               const std::string& channels, const std::string& style_name, bool quivers, int delay) {
    if (gif.empty() && png.empty() && channels.empty()) throw ConfigError("render: give --gif, --png or --channels");
    const EpisodeRecord rec = read_record(path);
    FrameStyle style = FrameStyle::preset(style_name);
    style.quivers = style.quivers || quivers;
    const std::vector<Image> frames = render_episode(rec, style);
    if (!gif.empty()) write_gif(gif, frames, delay);
    if (!png.empty()) write_png(png, frames.back());
    if (!channels.empty()) {
        // Observation of the final state: replay and rasterize.
        const EnvSpec spec = unflatten(rec.header.config);
        Environment env(spec, rec.header.seed);
        env.reset();
        for (const auto& s : rec.steps) env.step(s.action);
        write_png(channels, render_observation(env.observation()));
    }
    if (g.json) {
        std::cout << json{{"frames", frames.size()}, {"width", frames.front().width}, {"height", frames.front().height}}.dump()
                  << "\n";
    } else {
        std::cout << "rendered " << frames.size() << " frames " << frames.front().width << "x" << frames.front().height
                  << "\n";
    }
    return 0;
}

int cmd_optimize(const Globals& g, const std::string& task, int resolution, int budget, int population, int horizon,
                 double init_std, const std::string& out, const std::string& csv) {
    const EnvSpec spec = resolve_spec(g, task.empty() ? "shape_match" : task);
    CemConfig cfg;
    cfg.action_resolution = resolution;
    cfg.population = population;
    cfg.elites = std::max(1, population / 8);
    if (budget < population) throw ConfigError("--budget must be at least the population size");
    cfg.iterations = budget / population;
    cfg.horizon = horizon > 0 ? horizon : std::min(spec.max_episode_steps, 30);
    cfg.init_std = init_std;
    cfg.workers = resolve_workers(g);
    cfg.validate();
    Environment env(spec, g.seed);
    const EnvCemResult r = cem_optimize(env, cfg, derive_seed(g.seed, SeedStream::controller));
    if (!csv.empty()) {
        std::ofstream f(csv);
        if (!f) throw Error("cannot write " + csv);
        f << cem_history_csv(r.history);
    }
    if (!out.empty()) {
        ScriptedController ctrl(r.actions);
        Environment fresh(spec, g.seed);
        EpisodeRecord rec = run_episode(fresh, ctrl, cfg.horizon);
        rec.header.controller = "cem";
        write_record(out, rec);
    }
    if (g.json) {
        std::cout << json{{"task", to_string(spec.task)},
                          {"resolution", resolution},
                          {"population", cfg.population},
                          {"iterations", cfg.iterations},
                          {"horizon", cfg.horizon},
                          {"evaluations", cfg.population * cfg.iterations},
                          {"best_return", r.best_return}}
                         .dump()
                  << "\n";
    } else {
        std::cout << "cem " << to_string(spec.task) << " resolution " << resolution << " population " << cfg.population
                  << " iterations " << cfg.iterations << " horizon " << cfg.horizon << "\nbest return "
                  << fixed(r.best_return) << "\n";
    }
    return 0;
}

int cmd_bench(const Globals& g, int particles, int substeps, bool single) {
    if (particles < 1 || substeps < 1) throw ConfigError("bench: --particles and --substeps must be >= 1");
    const BenchResult b = run_bench(static_cast<std::size_t>(particles), substeps, resolve_workers(g), single);
    if (g.json) {
        std::cout << json{{"particles", b.particles},
                          {"substeps", b.substeps},
                          {"workers", b.threads},
                          {"precision", b.single_precision ? "float32" : "float64"},
                          {"seconds", b.seconds},
                          {"substeps_per_second", b.substeps_per_second},
                          {"control_steps_per_second", b.control_steps_per_second}}
                         .dump()
                  << "\n";
    } else {
        std::printf("particles %zu substeps %d workers %d %s\n%.1f substeps/s\n%.2f control-steps/s\n", b.particles,
                    b.substeps, b.threads, b.single_precision ? "float32" : "float64", b.substeps_per_second,
                    b.control_steps_per_second);
    }
    return 0;
}

int cmd_validate(const Globals& g) {
    const std::vector<CheckResult> results = validate_physics();
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.passed;
        if (g.json) {
            std::cout << json{{"check", r.name}, {"passed", r.passed}, {"value", r.value}, {"threshold", r.threshold},
                              {"detail", r.detail}, {"seconds", r.seconds}}
                             .dump()
                      << "\n";
        } else {
            std::printf("%-4s %-18s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        }
    }
    return ok ? 0 : 1;
}

int cmd_list_tasks(const Globals& g) {
    json names = json::array();
    for (TaskKind t : kAllTasks) {
        if (g.json) names.push_back(to_string(t));
        else std::cout << to_string(t) << "\n";
    }
    if (g.json) std::cout << names.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soft-robot MPM environments, controllers and tools"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--config", g.config, "Task config file")->check(CLI::ExistingFile);
    app.add_option("--set", g.sets, "Override a config key (key=value), repeatable");
    app.add_flag("--json", g.json, "Machine-readable output");
    app.add_option("--workers", g.workers, "Worker threads (overrides MORPHSIM_THREADS)");

    std::string task, controller = "random", out, path, gif, png, channels, style = "default", csv;
    int resolution = 4, steps = 0, episodes = 1, budget = 2000, population = 64, horizon = 0, delay = 5;
    int particles = 6000, substeps = 10000;
    double init_std = 0.5;
    bool single = false, quivers = false;

    auto* run = app.add_subcommand("run", "Run episodes with a controller");
    run->add_option("--task", task, "Task name");
    run->add_option("--controller", controller, "random or zero");
    run->add_option("--resolution", resolution, "Action grid resolution");
    run->add_option("--steps", steps, "Control steps (0: task limit)");
    run->add_option("--episodes", episodes, "Episodes; episode k uses seed + k");
    run->add_option("--out", out, "Write the replay file");

    auto* rep = app.add_subcommand("replay", "Replay a recorded episode and compare rewards");
    rep->add_option("file", path, "Replay file")->required();

    auto* ren = app.add_subcommand("render", "Render a recorded episode");
    ren->add_option("file", path, "Replay file")->required();
    ren->add_option("--gif", gif, "Animated GIF of all frames");
    ren->add_option("--png", png, "PNG of the final frame");
    ren->add_option("--channels", channels, "PNG of the final observation channels");
    ren->add_option("--style", style, "default, dark or debug");
    ren->add_flag("--quivers", quivers, "Draw action arrows");
    ren->add_option("--delay", delay, "GIF frame delay in 1/100 s");

    auto* opt = app.add_subcommand("optimize", "Open-loop CEM trajectory optimization");
    opt->add_option("--task", task, "Task name");
    opt->add_option("--resolution", resolution, "Action grid resolution");
    opt->add_option("--budget", budget, "Rollouts; iterations = budget / population");
    opt->add_option("--population", population, "Samples per iteration");
    opt->add_option("--horizon", horizon, "Control steps (0: min(task limit, 30))");
    opt->add_option("--init-std", init_std, "Initial sampling std");
    opt->add_option("--out", out, "Write the best sequence as a replay file");
    opt->add_option("--csv", csv, "Write per-iteration history");

    auto* ben = app.add_subcommand("bench", "Substep throughput");
    ben->add_option("--particles", particles, "Particle count");
    ben->add_option("--substeps", substeps, "Timed substeps");
    ben->add_flag("--float", single, "32-bit solver");

    auto* val = app.add_subcommand("validate", "Physics invariant suite");
    auto* lst = app.add_subcommand("list-tasks", "Print task names");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(g, task, controller, resolution, steps, episodes, out);
        if (*rep) return cmd_replay(g, path);
        if (*ren) return cmd_render(g, path, gif, png, channels, style, quivers, delay);
        if (*opt) return cmd_optimize(g, task, resolution, budget, population, horizon, init_std, out, csv);
        if (*ben) return cmd_bench(g, particles, substeps, single);
        if (*val) return cmd_validate(g);
        if (*lst) return cmd_list_tasks(g);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
