// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: acceptance [--only 1,4,7] [--cem-horizon H]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "morphsim/controllers.hpp"
#include "morphsim/diagnostics.hpp"
#include "morphsim/episode.hpp"
#include "morphsim/rng.hpp"

using namespace morphsim;

namespace {

struct Outcome {
    bool passed = false;
    std::string summary;
    bool soft = false;  // machine-dependent gate: reported, never fails the run
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int env_workers() {
    const char* s = std::getenv("MORPHSIM_THREADS");
    const int n = s ? std::atoi(s) : 1;
    return n < 1 ? 1 : n;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome stress() {
    const CheckResult r = check_stress(1000, 101, 1e-9);
    const bool fast = r.seconds < 1.0;
    return {r.passed && fast, r.detail + fmt("; %.3f s (limit 1 s)", r.seconds)};
}

Outcome conservation() {
    const ConservationResult r = check_conservation(2000, 1000, 102, 1e-6);
    const bool fast = r.mass.seconds < 30.0;
    return {r.mass.passed && r.momentum.passed && fast,
            r.mass.detail + "; " + r.momentum.detail + fmt(" (limit 1e-6); %.1f s (limit 30 s)", r.mass.seconds)};
}

Outcome plasticity() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto checks = check_plasticity(PlasticityConfig{}, 0.9, 0.7);
    const double s = seconds_since(t0);
    return {checks[0].passed && checks[1].passed && s < 120.0,
            checks[0].detail + "; " + checks[1].detail + fmt("; %.1f s (limit 120 s)", s)};
}

bool same_state(const SimState& a, const SimState& b) {
    if (a.particles.size() != b.particles.size() || a.grid_offset != b.grid_offset) return false;
    for (std::size_t p = 0; p < a.particles.size(); ++p) {
        const Particle &x = a.particles[p], &y = b.particles[p];
        if (x.x != y.x || x.v != y.v || x.F != y.F || x.C != y.C) return false;
    }
    return true;
}

Outcome determinism() {
    const int steps = 10;
    bool bitwise = true, replayed = true, workers = true;
    double worst = 0.0;
    std::string bad;
    for (TaskKind task : kAllTasks) {
        const EnvSpec spec = default_spec(task);
        const std::uint64_t seed = 7;
        std::vector<ActionGrid> actions;
        RandomController gen(derive_seed(seed, SeedStream::controller), 8, spec.a_max);
        Environment probe(spec, seed);
        for (int t = 0; t < steps; ++t) actions.push_back(gen.act(probe));

        // Two runs with identical inputs, and a third with 4 workers.
        Environment a(spec, seed), b(spec, seed), c(spec, seed);
        c.set_threads(4);
        a.reset();
        b.reset();
        c.reset();
        for (const auto& act : actions) {
            const StepResult ra = a.step(act), rb = b.step(act), rc = c.step(act);
            if (!same_state(a.state(), b.state()) || ra.reward != rb.reward) bitwise = false, bad = to_string(task);
            if (!same_state(a.state(), c.state()) || ra.reward != rc.reward) workers = false, bad = to_string(task);
            if (a.done()) break;
        }

        // Record with 4 workers, replay from the file text with 1.
        ScriptedController ctrl(actions);
        Environment rec_env(spec, seed);
        rec_env.set_threads(4);
        const EpisodeRecord rec = run_episode(rec_env, ctrl, steps);
        const EpisodeRecord again = replay(record_from_jsonl(to_jsonl(rec)));
        const double d = max_reward_difference(rec, again);
        worst = std::max(worst, d);
        if (!(d <= 1e-9) || again.termination != rec.termination) replayed = false, bad = to_string(task);
    }
    std::string s = fmt("8 tasks x %d steps: repeat runs %s; 1 vs 4 workers %s; replay max |dr| = %.3g (limit 1e-9)",
                        steps, bitwise ? "bitwise equal" : "DIFFER", workers ? "bitwise equal" : "DIFFER", worst);
    if (!bad.empty()) s += "; first failure in " + bad;
    return {bitwise && replayed && workers, s};
}

Outcome resolution_trend(int horizon) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> coarse, fine;
    std::ostringstream per;
    for (int res : {4, 16}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            EnvSpec spec = default_spec(TaskKind::shape_match);
            Environment env(spec, seed);
            CemConfig cfg;
            cfg.population = 64;
            cfg.elites = 8;
            cfg.iterations = 30;
            cfg.horizon = horizon;
            cfg.action_resolution = res;
            cfg.workers = env_workers();
            const EnvCemResult r = cem_optimize(env, cfg, derive_seed(seed, SeedStream::controller));
            (res == 4 ? coarse : fine).push_back(r.best_return);
            per << fmt(" r%d/s%d=%.4f", res, static_cast<int>(seed), r.best_return);
        }
    }
    const double mc = median(coarse), mf = median(fine), gain = (mf - mc) / std::abs(mc);
    const double s = seconds_since(t0);
    return {mf > mc && gain >= 0.10 && s < 7200.0,
            fmt("median best return fine %.4f vs coarse %.4f, gain %+.1f%% (need >= +10%%); horizon %d, %.0f s "
                "(limit 7200 s);",
                mf, mc, 100.0 * gain, horizon, s) +
                per.str()};
}

Outcome exploration() {
    const auto t0 = std::chrono::steady_clock::now();
    double change[2] = {0.0, 0.0};
    int failures = 0;
    const int rollouts = 20;
    const int resolutions[2] = {4, 16};
    for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < rollouts; ++i) {
            const EnvSpec spec = default_spec(TaskKind::shape_match);
            const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
            Environment env(spec, seed);
            RandomController ctrl(derive_seed(seed, SeedStream::controller), resolutions[k], spec.a_max);
            const EpisodeRecord rec = run_episode(env, ctrl);
            failures += rec.termination == Termination::failure;
            change[k] += 1.0 - iou(env.robot_shape(), env.initial_shape());
        }
        change[k] /= rollouts;
    }
    const double s = seconds_since(t0);
    return {change[0] > change[1] && failures == 0 && s < 1200.0,
            fmt("mean 1 - IoU(final, initial) over %d random rollouts: res 4 %.4f vs res 16 %.4f; %d physics "
                "failures; %.0f s (limit 1200 s)",
                rollouts, change[0], change[1], failures, s)};
}

Outcome composition() {
    Rng rng(9);
    bool gate0 = true, gate1 = true;
    double affine_err = 0.0;
    for (int n : {4, 8, 16}) {
        // Coarse/fine pairs are (4, 8) and (8, 16).
        for (int trial = 0; n <= 8 && trial < 20; ++trial) {
            ActionGrid coarse(n), residual(2 * n);
            for (double& v : coarse.data) v = rng.uniform(-0.5, 0.5);
            for (double& v : residual.data) v = rng.uniform(-1.0, 1.0);
            // a_max well above any Catmull-Rom overshoot, so clamping is inactive.
            const double a_max = 10.0;
            const ActionGrid up = upsample(coarse, 2 * n);
            gate0 = gate0 && compose_coarse_fine(coarse, residual, GateMask(2 * n, 0.0), a_max) == up;
            gate1 = gate1 && compose_coarse_fine(coarse, residual, GateMask(2 * n, 1.0), a_max) == residual;
        }
        // Affine node data: interior fine nodes, whose stencils avoid the
        // clamped border, reproduce the plane.
        const double c[6] = {rng.uniform(-1, 1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                             rng.uniform(-1, 1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
        ActionGrid g(n);
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                g.at(ix, iy, 0) = c[0] + c[1] * ix + c[2] * iy;
                g.at(ix, iy, 1) = c[3] + c[4] * ix + c[5] * iy;
            }
        const int m = 64;
        const ActionGrid up = upsample(g, m);
        for (int ky = 0; ky < m; ++ky)
            for (int kx = 0; kx < m; ++kx) {
                const double sx = (kx + 0.5) * n / m - 0.5, sy = (ky + 0.5) * n / m - 0.5;
                if (sx < 1.0 || sy < 1.0 || sx > n - 2.0 || sy > n - 2.0) continue;
                affine_err = std::max({affine_err, std::abs(up.at(kx, ky, 0) - (c[0] + c[1] * sx + c[2] * sy)),
                                       std::abs(up.at(kx, ky, 1) - (c[3] + c[4] * sx + c[5] * sy))});
            }
    }
    return {gate0 && gate1 && affine_err < 1e-12,
            fmt("gate 0 == upsampled coarse %s; gate 1 == residual %s; affine max error %.3g (round-off limit 1e-12)",
                gate0 ? "exactly" : "NOT", gate1 ? "exactly" : "NOT", affine_err)};
}

Outcome throughput() {
    const BenchResult one = run_bench(6000, 2000, 1);
    const unsigned cores = std::thread::hardware_concurrency();
    std::string scaling;
    bool scale_ok = false;
    if (cores >= 8) {
        const BenchResult eight = run_bench(6000, 2000, 8);
        const double x = eight.substeps_per_second / one.substeps_per_second;
        scale_ok = x >= 4.0;
        scaling = fmt("8 workers %.2fx (need >= 4x)", x);
    } else {
        scaling = fmt("8-worker scaling not measurable on %u core(s)", cores);
    }
    const bool single_ok = one.substeps_per_second >= 2000.0;
    return {single_ok && scale_ok,
            fmt("6000 particles, 128^2 grid, 1 thread: %.0f substeps/s (need >= 2000); ", one.substeps_per_second) +
                scaling + "; machine-dependent soft gate",
            true};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    int cem_horizon = 10;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
        } else if (a == "--cem-horizon" && i + 1 < argc) {
            cem_horizon = std::stoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--only 1,2,...] [--cem-horizon H]\n");
            return 2;
        }
    }
    if (cem_horizon < 1 || cem_horizon > 30) {
        std::fprintf(stderr, "--cem-horizon must be in [1, 30]\n");
        return 2;
    }

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"stress correctness", stress},
        {"conservation", conservation},
        {"elastic/plastic regimes", plasticity},
        {"determinism and replay", determinism},
        {"resolution trend", [&] { return resolution_trend(cem_horizon); }},
        {"exploration", exploration},
        {"composition identity", composition},
        {"throughput", throughput},
    };

    int hard_failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const char* verdict = o.passed ? "PASS" : (o.soft ? "FAIL (soft)" : "FAIL");
        std::printf("criterion %d [%s]: %s: %s\n", id, criteria[k].first, verdict, o.summary.c_str());
        std::fflush(stdout);
        hard_failures += !o.passed && !o.soft;
    }
    return hard_failures ? 1 : 0;
}
