#include "morphsim/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "morphsim/environments.hpp"
#include "morphsim/observation.hpp"
#include "morphsim/rng.hpp"

namespace morphsim {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Mat2 random_matrix_det_positive(Rng& rng, double spread) {
    while (true) {
        Mat2 m;
        m << 1 + rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread),
            1 + rng.uniform(-spread, spread);
        if (m.determinant() > 1e-3) return m;
    }
}

// Disc of jittered particles; velocities and F perturbed so stresses are nonzero.
SimState random_blob(std::size_t particles, Rng& rng, Vec2 center, double radius, bool perturb) {
    SimState s;
    s.materials.push_back(MaterialParams::from_young(1e3, 0.2, 1.6));
    while (s.particles.size() < particles) {
        const Vec2 d(rng.uniform(-radius, radius), rng.uniform(-radius, radius));
        if (d.norm() > radius) continue;
        Particle p;
        p.x = center + d;
        if (perturb) {
            p.v = Vec2(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
            p.F = random_matrix_det_positive(rng, 0.05);
        }
        s.particles.push_back(p);
    }
    s.robot_count = s.particles.size();
    return s;
}

std::vector<Vec2> random_actions(std::size_t n, Rng& rng, double scale) {
    std::vector<Vec2> a(n);
    for (auto& v : a) v = Vec2(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
    return a;
}

bool same_particles(const SimState& a, const SimState& b) {
    if (a.particles.size() != b.particles.size() || a.grid_offset != b.grid_offset) return false;
    for (std::size_t p = 0; p < a.particles.size(); ++p) {
        const Particle &x = a.particles[p], &y = b.particles[p];
        if (x.x != y.x || x.v != y.v || x.F != y.F || x.C != y.C) return false;
    }
    return true;
}

double shape_iou(const SimState& a, const SimState& b) {
    const Bitmap x = robot_bitmap(a, ActionWindow{robot_center_of_mass(a), 0.5});
    const Bitmap y = robot_bitmap(b, ActionWindow{robot_center_of_mass(b), 0.5});
    return iou(x, y);
}

}  // namespace

CheckResult check_stress(int samples, std::uint64_t seed, double tolerance) {
    const auto t0 = Clock::now();
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const Mat2 F = random_matrix_det_positive(rng, 0.6);
        const Vec2 a(rng.uniform(-2000, 2000), rng.uniform(-2000, 2000));
        const MaterialParams m = MaterialParams::from_young(rng.uniform(1e2, 2e4), rng.uniform(0.0, 0.45), 1e9);
        // Oracle: R = F (F^T F)^(-1/2).
        const Eigen::SelfAdjointEigenSolver<Mat2> eig(F.transpose() * F);
        const Mat2 R = F * eig.operatorInverseSqrt();
        const double J = F.determinant();
        const Mat2 oracle = 2 * m.mu * (F - R) * F.transpose() + m.lambda * (J - 1) * J * Mat2::Identity() +
                            F * a.asDiagonal() * F.transpose();
        worst = std::max(worst, (cauchy_stress<double>(F, a, m) - oracle).cwiseAbs().maxCoeff());
    }
    const MaterialParams m = MaterialParams::from_young(1e4, 0.2, 1e9);
    const Mat2 rest = cauchy_stress<double>(Mat2::Identity(), Vec2::Zero(), m);
    const bool rest_zero = (rest.array() == 0.0).all();
    CheckResult r{"stress", worst < tolerance && rest_zero, worst, tolerance, "", since(t0)};
    r.detail = fmt("max |stress - oracle| = %.3g over ", worst) + std::to_string(samples) + " samples; rest case " +
               (rest_zero ? "exactly zero" : "NOT zero");
    return r;
}

CheckResult check_svd(int samples, std::uint64_t seed, double tolerance) {
    const auto t0 = Clock::now();
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        Mat2 m;
        do {
            m << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2);
        } while (!(m.determinant() > 0));
        const Svd2 s = svd_2x2<double>(m);
        worst = std::max(worst, (s.U * s.sigma.asDiagonal() * s.V.transpose() - m).norm());
    }
    CheckResult r{"svd", worst < tolerance, worst, tolerance, "", since(t0)};
    r.detail = fmt("max reconstruction error %.3g over ", worst) + std::to_string(samples) + " matrices";
    return r;
}

ConservationResult check_conservation(std::size_t particles, int substeps, std::uint64_t seed,
                                      double momentum_tolerance) {
    const auto t0 = Clock::now();
    Rng rng(seed);
    SimState s = random_blob(particles, rng, Vec2(0.5, 0.5), 0.12, true);
    const std::vector<Vec2> actions = random_actions(s.robot_count, rng, 50.0);
    WorldConfig cfg;
    cfg.apply_boundaries = false;
    Solver solver;
    const double particle_mass = total_particle_mass(s);
    double worst_mass = 0.0, worst_drift = 0.0;
    Vec2 prev = total_particle_momentum(s);
    for (int k = 0; k < substeps; ++k) {
        solver.substep(s, actions, cfg);
        worst_mass = std::max(worst_mass, std::abs(solver.last_grid_mass() - particle_mass));
        const Vec2 now = total_particle_momentum(s);
        worst_drift = std::max(worst_drift, (now - prev).norm());
        prev = now;
    }
    const double seconds = since(t0);
    // Grid mass is a sum of the same particle masses in another order; allow
    // only the round-off of that reordering.
    const double mass_tol = 1e-12 * particle_mass;
    ConservationResult out;
    out.mass = {"mass", worst_mass <= mass_tol, worst_mass, mass_tol,
                fmt("max |grid mass - particle mass| = %.3g (total %.6g)", worst_mass, particle_mass), seconds};
    out.momentum = {"momentum", worst_drift < momentum_tolerance, worst_drift, momentum_tolerance,
                    fmt("max momentum change per substep %.3g", worst_drift), seconds};
    return out;
}

CheckResult check_determinism(std::size_t particles, int substeps, int threads, std::uint64_t seed) {
    const auto t0 = Clock::now();
    Rng rng(seed);
    const SimState init = random_blob(particles, rng, Vec2(0.5, 0.3), 0.1, true);
    const std::vector<Vec2> actions = random_actions(init.robot_count, rng, 100.0);
    WorldConfig cfg;
    cfg.gravity = Vec2(0, -9.8);
    cfg.ground_y = 0.1;
    auto run = [&](int t) {
        WorldConfig c = cfg;
        c.threads = t;
        SimState s = init;
        Solver solver;
        for (int k = 0; k < substeps; ++k) solver.substep(s, actions, c);
        return s;
    };
    const SimState a = run(1), b = run(1), c = run(threads);
    const bool repeat = same_particles(a, b), workers = same_particles(a, c);
    CheckResult r{"determinism", repeat && workers, 0.0, 0.0, "", since(t0)};
    r.detail = std::string("repeat run ") + (repeat ? "bitwise equal" : "DIFFERS") + "; 1 vs " +
               std::to_string(threads) + " workers " + (workers ? "bitwise equal" : "DIFFER");
    return r;
}

CheckResult check_frame_consistency(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Rng rng(seed);
    WorldConfig cfg;
    cfg.moving_grid = true;
    cfg.window_cells = 64;
    bool ok = true;
    int shifts = 0;
    for (int k = 0; k < 200; ++k) {
        SimState s = random_blob(50, rng, Vec2(rng.uniform(-3, 3), rng.uniform(-3, 3)), 0.05, true);
        const SimState before = s;
        recenter_window(s, cfg);
        shifts += s.grid_offset != before.grid_offset;
        for (std::size_t p = 0; p < s.particles.size(); ++p) {
            const Particle &x = s.particles[p], &y = before.particles[p];
            ok = ok && x.x == y.x && x.v == y.v && x.F == y.F && x.C == y.C;
        }
    }
    CheckResult r{"frame_consistency", ok && shifts > 0, static_cast<double>(shifts), 0.0, "", since(t0)};
    r.detail = std::to_string(shifts) + " window shifts, world-frame data " + (ok ? "bitwise unchanged" : "CHANGED");
    return r;
}

PlasticityResult load_release_cycle(const PlasticityConfig& cfg) {
    PlasticityResult out;
    for (bool plastic : {false, true}) {
        // The shape-matching robot disc, free of gravity and boundaries.
        EnvSpec spec = default_spec(TaskKind::shape_match);
        spec.material.youngs = cfg.youngs;
        spec.material.poisson = cfg.poisson;
        spec.material.yield_stress = plastic ? cfg.low_yield : std::numeric_limits<double>::infinity();
        SimState s = build_scene(spec, 0);
        const WorldConfig world = world_config(spec);
        const SimState initial = s;
        const std::vector<Vec2> load(s.robot_count, Vec2(cfg.action, -cfg.action));
        Solver solver;
        for (int k = 0; k < cfg.load_substeps; ++k) solver.substep(s, load, world);
        for (int k = 0; k < cfg.release_substeps; ++k) solver.substep(s, {}, world);
        (plastic ? out.plastic_iou : out.elastic_iou) = shape_iou(initial, s);
    }
    return out;
}

std::vector<CheckResult> check_plasticity(const PlasticityConfig& cfg, double elastic_min, double plastic_max) {
    const auto t0 = Clock::now();
    const PlasticityResult r = load_release_cycle(cfg);
    const double seconds = since(t0);
    return {{"elastic_recovery", r.elastic_iou >= elastic_min, r.elastic_iou, elastic_min,
             fmt("yield = inf: IoU(final, initial) = %.4f (need >= %.2f)", r.elastic_iou, elastic_min), seconds},
            {"plastic_residual", r.plastic_iou <= plastic_max, r.plastic_iou, plastic_max,
             fmt("yield = %.3g: IoU(final, initial) = ", cfg.low_yield) + fmt("%.4f (need <= %.2f)", r.plastic_iou,
                                                                                plastic_max),
             seconds}};
}

std::vector<CheckResult> validate_physics() {
    std::vector<CheckResult> out;
    out.push_back(check_stress(1000, 1));
    out.push_back(check_svd(10000, 2));
    const ConservationResult c = check_conservation(2000, 200, 3);
    out.push_back(c.mass);
    out.push_back(c.momentum);
    out.push_back(check_determinism(1000, 50, 4, 4));
    out.push_back(check_frame_consistency(5));
    for (auto& r : check_plasticity(PlasticityConfig{})) out.push_back(r);
    return out;
}

SimState bench_state(std::size_t particles) {
    SimState s;
    s.materials.push_back(MaterialParams::from_young(1e3, 0.2, 1.6));
    const double h = 0.5 / 128;
    const auto cols = static_cast<std::size_t>(0.6 / h);
    for (std::size_t k = 0; k < particles; ++k) {
        Particle p;
        p.x = Vec2(0.2 + (static_cast<double>(k % cols) + 0.5) * h, 0.06 + (static_cast<double>(k / cols) + 0.5) * h);
        s.particles.push_back(p);
    }
    s.robot_count = s.particles.size();
    return s;
}

namespace {

template <class Real>
BasicSimState<Real> cast_state(const SimState& s) {
    BasicSimState<Real> out;
    out.robot_count = s.robot_count;
    out.materials = s.materials;
    out.grid_offset = s.grid_offset;
    for (const auto& p : s.particles) {
        BasicParticle<Real> q;
        q.x = p.x.cast<Real>();
        q.v = p.v.cast<Real>();
        q.F = p.F.cast<Real>();
        q.C = p.C.cast<Real>();
        q.role = p.role;
        q.material = p.material;
        out.particles.push_back(q);
    }
    return out;
}

template <class Real>
double time_substeps(const SimState& init, int substeps, const WorldConfig& cfg) {
    BasicSimState<Real> s = cast_state<Real>(init);
    // Alternating actions keep the block moving without drifting away.
    const std::vector<Vec2T<Real>> act(s.robot_count, Vec2T<Real>(Real(40), Real(-40)));
    BasicSolver<Real> solver;
    solver.substep(s, act, cfg);  // warm-up allocates scratch memory
    const auto t0 = Clock::now();
    for (int k = 0; k < substeps; ++k) solver.substep(s, act, cfg);
    return since(t0);
}

}  // namespace

BenchResult run_bench(std::size_t particles, int substeps, int threads, bool single_precision) {
    if (particles == 0 || substeps <= 0 || threads <= 0) throw ConfigError("bench: counts must be positive");
    const SimState init = bench_state(particles);
    WorldConfig cfg;
    cfg.gravity = Vec2(0, -9.8);
    cfg.ground_y = 0.05;
    cfg.threads = threads;
    BenchResult r;
    r.particles = particles;
    r.substeps = substeps;
    r.threads = threads;
    r.single_precision = single_precision;
    r.seconds = single_precision ? time_substeps<float>(init, substeps, cfg) : time_substeps<double>(init, substeps, cfg);
    r.substeps_per_second = substeps / r.seconds;
    r.control_steps_per_second = r.substeps_per_second / 100.0;
    return r;
}

}  // namespace morphsim
