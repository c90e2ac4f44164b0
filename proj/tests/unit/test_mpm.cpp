#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "morphsim/mpm.hpp"
#include "morphsim/rng.hpp"

using namespace morphsim;

namespace {

Mat2 mat(double a, double b, double c, double d) {
    Mat2 m;
    m << a, b, c, d;
    return m;
}

// Independent singular values: square roots of the eigenvalues of M^T M.
Vec2 singular_values_oracle(const Mat2& m) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(m.transpose() * m);
    Vec2 ev = eig.eigenvalues();  // ascending
    return Vec2(std::sqrt(std::max(0.0, ev(1))), std::sqrt(std::max(0.0, ev(0))));
}

// Quadratic B-spline N(r) evaluated straight from its piecewise definition.
double bspline_oracle(double r) {
    r = std::abs(r);
    if (r < 0.5) return 0.75 - r * r;
    if (r < 1.5) return 0.5 * (1.5 - r) * (1.5 - r);
    return 0.0;
}

SimState block_state(Vec2 lo, Vec2 hi, double spacing, const MaterialParams& m, Vec2 velocity) {
    SimState s;
    s.materials.push_back(m);
    for (double x = lo.x(); x < hi.x(); x += spacing) {
        for (double y = lo.y(); y < hi.y(); y += spacing) {
            Particle p;
            p.x = Vec2(x, y);
            p.v = velocity;
            s.particles.push_back(p);
        }
    }
    s.robot_count = s.particles.size();
    return s;
}

bool bitwise_equal(const SimState& a, const SimState& b) {
    if (a.particles.size() != b.particles.size()) return false;
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        const auto& p = a.particles[i];
        const auto& q = b.particles[i];
        if (p.x != q.x || p.v != q.v || p.F != q.F || p.C != q.C) return false;
    }
    return a.grid_offset == b.grid_offset && a.substep_count == b.substep_count;
}

const MaterialParams kJelly = MaterialParams::from_young(1e4, 0.2, std::numeric_limits<double>::infinity());

}  // namespace

TEST_CASE("svd_2x2 known factorizations") {
    SUBCASE("identity") {
        const Svd2 s = svd_2x2<double>(Mat2::Identity());
        CHECK(s.sigma == Vec2(1, 1));
        CHECK(s.U.isApprox(Mat2::Identity(), 1e-15));
        CHECK(s.V.isApprox(Mat2::Identity(), 1e-15));
    }
    SUBCASE("already diagonal") {
        const Svd2 s = svd_2x2<double>(mat(2, 0, 0, 0.5));
        CHECK(s.sigma.isApprox(Vec2(2, 0.5), 1e-15));
        CHECK(s.U.isApprox(Mat2::Identity(), 1e-15));
        CHECK(s.V.isApprox(Mat2::Identity(), 1e-15));
    }
    SUBCASE("shear against the eigen oracle") {
        const Mat2 m = mat(1, 1, 0, 1);
        const Svd2 s = svd_2x2<double>(m);
        const Vec2 oracle = singular_values_oracle(m);
        CHECK(std::abs(s.sigma(0) - oracle(0)) < 1e-12);
        CHECK(std::abs(s.sigma(1) - oracle(1)) < 1e-12);
        // golden ratio and its inverse
        CHECK(s.sigma(0) == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-14));
        CHECK((s.U * s.sigma.asDiagonal() * s.V.transpose() - m).norm() < 1e-9);
    }
    SUBCASE("negative determinant yields a reflection in V") {
        const Mat2 m = mat(0, 1, 1, 0);
        const Svd2 s = svd_2x2<double>(m);
        CHECK(s.sigma(1) >= 0);
        CHECK(std::abs(std::abs(s.V.determinant()) - 1) < 1e-12);
        CHECK((s.U * s.sigma.asDiagonal() * s.V.transpose() - m).norm() < 1e-12);
    }
    SUBCASE("NaN rejected") {
        CHECK_THROWS_AS(svd_2x2<double>(mat(NAN, 0, 0, 1)), InvalidDeformation);
    }
}

TEST_CASE("svd_2x2 reconstruction on random matrices") {
    Rng rng(7);
    int checked = 0;
    while (checked < 10000) {
        const Mat2 m = mat(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        if (!(m.determinant() > 0)) continue;
        ++checked;
        const Svd2 s = svd_2x2<double>(m);
        REQUIRE((s.U * s.sigma.asDiagonal() * s.V.transpose() - m).norm() < 1e-8);
        REQUIRE(s.sigma(0) >= s.sigma(1));
        REQUIRE(std::abs(s.U.determinant() - 1) < 1e-12);
        REQUIRE(std::abs(s.V.determinant() - 1) < 1e-12);
        const Vec2 oracle = singular_values_oracle(m);
        REQUIRE((s.sigma - oracle).norm() < 1e-9 * (1 + oracle(0)));
    }
}

TEST_CASE("polar_rotation") {
    const double a = std::numbers::pi / 6;
    CHECK(polar_rotation<double>(Mat2::Identity()).isApprox(Mat2::Identity(), 1e-15));
    CHECK((polar_rotation<double>(rotation(a)) - rotation(a)).norm() < 1e-12);
    const Mat2 F = rotation(a) * mat(2, 0, 0, 1);
    const Mat2 r = polar_rotation<double>(F);
    CHECK((r - rotation(a)).norm() < 1e-9);
    CHECK((r.transpose() * r - Mat2::Identity()).norm() < 1e-9);
    const Svd2 s = svd_2x2<double>(F);
    CHECK((r - s.U * s.V.transpose()).norm() < 1e-9);
    CHECK_THROWS_AS(polar_rotation<double>(mat(1, 0, 0, -1)), InvalidDeformation);
    CHECK_THROWS_AS(polar_rotation<double>(Mat2::Zero()), InvalidDeformation);
}

TEST_CASE("cauchy_stress") {
    MaterialParams m;
    m.mu = 1;
    m.lambda = 1;
    CHECK(cauchy_stress<double>(Mat2::Identity(), Vec2::Zero(), kJelly) == Mat2::Zero());
    CHECK(cauchy_stress<double>(Mat2::Identity(), Vec2(0.3, -0.7), kJelly) == mat(0.3, 0, 0, -0.7));
    // r = I, J = 2: 2 (diag(1,0)) diag(2,1) + 1 * 2 * I = diag(6, 2)
    CHECK(cauchy_stress<double>(mat(2, 0, 0, 1), Vec2::Zero(), m).isApprox(mat(6, 0, 0, 2), 1e-15));
    const Mat2 sym = mat(1.2, 0.1, 0.1, 0.9);
    const Mat2 s = cauchy_stress<double>(sym, Vec2(0.2, 0.5), m);
    CHECK(std::abs(s(0, 1) - s(1, 0)) < 1e-9);
    CHECK_THROWS_AS(cauchy_stress<double>(mat(-1, 0, 0, 1), Vec2::Zero(), m), InvalidDeformation);
}

TEST_CASE("von_mises_project") {
    const double rest = std::sqrt(2.0);
    CHECK(von_mises_project<double>(Mat2::Identity(), 1.5) == Mat2::Identity());
    CHECK(von_mises_project<double>(Mat2::Identity(), rest) == Mat2::Identity());
    const Mat2 rot = rotation(0.7);
    CHECK(von_mises_project<double>(rot, 1.5) == rot);
    const Mat2 F = mat(3, 0, 0, 1);
    CHECK(von_mises_project<double>(F, std::numeric_limits<double>::infinity()) == F);

    SUBCASE("projected singular values sit on the yield surface") {
        const Mat2 Fp = von_mises_project<double>(F, 2.0);
        const Vec2 sigma = singular_values_oracle(Fp);
        CHECK(std::abs(sigma.norm() - 2.0) < 1e-9);
        CHECK(Fp.determinant() > 0);
        // (sigma - 1) keeps its direction: (3,1) - 1 = (2, 0) so sigma'[1] stays 1.
        CHECK(std::abs(sigma(1) - 1.0) < 1e-9);
    }
    SUBCASE("random stretches keep U and V and land on the surface") {
        Rng rng(11);
        for (int k = 0; k < 500; ++k) {
            const Mat2 G = rotation(rng.uniform(0, 6)) * mat(rng.uniform(1.2, 3), 0, 0, rng.uniform(0.3, 2)) *
                           rotation(rng.uniform(0, 6));
            const double yield = 1.5;
            const Mat2 Gp = von_mises_project<double>(G, yield);
            const double n = singular_values_oracle(G).norm();
            if (n <= yield) {
                CHECK(Gp == G);
                continue;
            }
            CHECK(std::abs(singular_values_oracle(Gp).norm() - yield) < 1e-9);
            CHECK(Gp.determinant() > 0);
            // Same polar rotation before and after.
            CHECK((polar_rotation<double>(Gp) - polar_rotation<double>(G)).norm() < 1e-9);
        }
    }
}

TEST_CASE("bspline_weights") {
    const double dx = 1.0 / 128;
    SUBCASE("partition of unity") {
        Rng rng(3);
        for (int k = 0; k < 1000; ++k) {
            const Vec2 x(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
            const auto w = bspline_weights(x, dx, Vec2i::Zero(), 128);
            double sum = 0;
            for (const auto& row : w.w)
                for (double v : row) {
                    CHECK(v >= 0);
                    sum += v;
                }
            CHECK(std::abs(sum - 1) < 1e-12);
            // Against the kernel evaluated from node distances.
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double rx = x.x() / dx - (w.base.x() + i);
                    const double ry = x.y() / dx - (w.base.y() + j);
                    CHECK(std::abs(w.w[i][j] - bspline_oracle(rx) * bspline_oracle(ry)) < 1e-14);
                }
        }
    }
    SUBCASE("node center") {
        const auto s = quadratic_stencil(10.0);
        CHECK(s.base == 9);
        CHECK(s.w[0] == 0.125);
        CHECK(s.w[1] == 0.75);
        CHECK(s.w[2] == 0.125);
        CHECK(s.w[0] == bspline_oracle(1.0));
    }
    SUBCASE("cell midpoint") {
        const auto s = quadratic_stencil(10.5);
        CHECK(s.base == 10);
        CHECK(s.w[0] == 0.5);
        CHECK(s.w[1] == 0.5);
        CHECK(s.w[2] == 0.0);
    }
    SUBCASE("outside window") {
        CHECK_THROWS_AS(bspline_weights(Vec2(0.001, 0.5), dx, Vec2i::Zero(), 128), WindowViolation);
        CHECK_THROWS_AS(bspline_weights(Vec2(0.999, 0.5), dx, Vec2i::Zero(), 128), WindowViolation);
    }
}

TEST_CASE("substep single-particle cases") {
    WorldConfig cfg;
    SimState s;
    s.materials.push_back(kJelly);
    Particle p;
    p.x = Vec2(0.5, 0.5);
    s.particles.push_back(p);
    s.robot_count = 1;

    SUBCASE("rest is an equilibrium") {
        Solver solver;
        for (int k = 0; k < 10; ++k) solver.substep(s, {}, cfg);
        CHECK((s.particles[0].x - Vec2(0.5, 0.5)).norm() < 1e-12);
        CHECK(s.particles[0].v.norm() < 1e-12);
        CHECK(s.substep_count == 10);
    }
    SUBCASE("free fall gains g dt") {
        cfg.gravity = Vec2(0, -9.8);
        Solver solver;
        solver.substep(s, {}, cfg);
        CHECK(std::abs(s.particles[0].v.y() - (-9.8 * cfg.dt)) < 1e-9);
        CHECK(std::abs(s.particles[0].v.x()) < 1e-12);
        CHECK(std::abs(solver.last_grid_mass() - 2.0) < 1e-15);
    }
    SUBCASE("grid speed cap") {
        s.particles[0].v = Vec2(30, 40);
        SimState capped = s;
        cfg.max_grid_speed = 10;
        substep(capped, {}, cfg);
        CHECK(std::abs(capped.particles[0].v.x() - 6) < 1e-12);
        CHECK(std::abs(capped.particles[0].v.y() - 8) < 1e-12);
        cfg.max_grid_speed = 0;
        substep(s, {}, cfg);
        CHECK(std::abs(s.particles[0].v.x() - 30) < 1e-12);
        CHECK(std::abs(s.particles[0].v.y() - 40) < 1e-12);
    }
    SUBCASE("action count mismatch") {
        const std::vector<Vec2> actions(3, Vec2::Zero());
        CHECK_THROWS_AS(substep(s, actions, cfg), ConfigError);
    }
    SUBCASE("escaping particle") {
        s.particles[0].x = Vec2(1.0 - 1.6 / 128, 0.5);
        s.particles[0].v = Vec2(50, 0);
        CHECK_THROWS_AS(substep(s, {}, cfg), WindowViolation);
    }
    SUBCASE("non-finite state aborts with a dump") {
        s.particles[0].v = Vec2(NAN, 0);
        try {
            substep(s, {}, cfg);
            FAIL("expected PhysicsError");
        } catch (const PhysicsError& e) {
            CHECK(e.dump().find("# index x y vx vy F00 F01 F10 F11") == 0);
            CHECK(e.dump().find("\n0 0.5 0.5 nan") != std::string::npos);
        }
    }
}

TEST_CASE("substep conservation and determinism") {
    WorldConfig cfg;
    SimState s = block_state(Vec2(0.4, 0.4), Vec2(0.6, 0.55), 0.5 / 128, kJelly, Vec2::Zero());
    Rng rng(5);
    for (auto& p : s.particles) {
        // rigid spin plus noise, enough to load the material
        const Vec2 r = p.x - Vec2(0.5, 0.475);
        p.v = 2.0 * Vec2(-r.y(), r.x()) + Vec2(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
    }
    const double mass = total_particle_mass(s);

    SUBCASE("grid mass and momentum") {
        Solver solver;
        Vec2 momentum = total_particle_momentum(s);
        for (int k = 0; k < 50; ++k) {
            solver.substep(s, {}, cfg);
            CHECK(std::abs(solver.last_grid_mass() - mass) <= 1e-12 * mass);
            const Vec2 now = total_particle_momentum(s);
            CHECK((now - momentum).norm() < 1e-6);
            momentum = now;
        }
    }
    SUBCASE("bitwise determinism independent of thread count") {
        SimState a = s, b = s;
        WorldConfig cfg_b = cfg;
        cfg_b.threads = 3;
        Solver sa, sb;
        const std::vector<Vec2> act(s.robot_count, Vec2(-50, 30));
        for (int k = 0; k < 20; ++k) {
            sa.substep(a, act, cfg);
            sb.substep(b, act, cfg_b);
        }
        CHECK(bitwise_equal(a, b));
        SimState c = s;
        Solver sc;
        for (int k = 0; k < 20; ++k) sc.substep(c, act, cfg);
        CHECK(bitwise_equal(a, c));
    }
    SUBCASE("float instantiation runs") {
        BasicSimState<float> f;
        f.materials = s.materials;
        f.robot_count = s.robot_count;
        for (const auto& p : s.particles) {
            BasicParticle<float> q;
            q.x = p.x.cast<float>();
            q.v = p.v.cast<float>();
            f.particles.push_back(q);
        }
        BasicSolver<float> solver;
        for (int k = 0; k < 10; ++k) solver.substep(f, {}, cfg);
        CHECK(std::abs(solver.last_grid_mass() - mass) <= 1e-5 * mass);
    }
}

TEST_CASE("recenter_window") {
    WorldConfig cfg;
    cfg.moving_grid = true;
    SimState s = block_state(Vec2(0.45, 0.45), Vec2(0.55, 0.55), 0.5 / 128, kJelly, Vec2::Zero());

    SUBCASE("centered robot keeps the offset") {
        recenter_window(s, cfg);
        CHECK(s.grid_offset == Vec2i(0, 0));
    }
    SUBCASE("drift of +0.3 shifts by round(0.3 / dx)") {
        for (auto& p : s.particles) p.x.x() += 0.3;
        const SimState before = s;
        recenter_window(s, cfg);
        const Vec2 com = robot_center_of_mass(before);
        CHECK(s.grid_offset.x() == std::lround((com.x() - 0.5) * 128));
        CHECK(s.grid_offset.x() == std::lround(0.3 * 128));
        CHECK(s.grid_offset.y() == 0);
        // World-frame data untouched.
        for (std::size_t i = 0; i < s.particles.size(); ++i) {
            CHECK(s.particles[i].x == before.particles[i].x);
            CHECK(s.particles[i].v == before.particles[i].v);
            CHECK(s.particles[i].F == before.particles[i].F);
        }
    }
    SUBCASE("small drift inside the central half is ignored") {
        for (auto& p : s.particles) p.x.x() += 0.2;
        recenter_window(s, cfg);
        CHECK(s.grid_offset == Vec2i(0, 0));
    }
    SUBCASE("disabled moving grid") {
        cfg.moving_grid = false;
        for (auto& p : s.particles) p.x.x() += 0.3;
        recenter_window(s, cfg);
        CHECK(s.grid_offset == Vec2i(0, 0));
    }
}

TEST_CASE("moving window matches an oversized static grid") {
    // A block sliding right across more than one window length. The oracle
    // runs the same physics on a static grid four windows wide.
    WorldConfig moving;
    moving.n_grid = 64;
    moving.moving_grid = true;
    WorldConfig wide = moving;
    wide.moving_grid = false;
    wide.window_cells = 256;

    SimState a = block_state(Vec2(0.45, 0.45), Vec2(0.55, 0.55), 0.5 / 64, kJelly, Vec2(8, 0));
    for (auto& p : a.particles) p.v.y() += 2.0 * (p.x.x() - 0.5);  // some shear
    SimState b = a;
    Solver sa, sb;
    for (int k = 0; k < 2000; ++k) {
        sa.substep(a, {}, moving);
        recenter_window(a, moving);
        sb.substep(b, {}, wide);
    }
    CHECK(a.grid_offset.x() > 64);  // travelled beyond one window
    double err = 0;
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        err = std::max(err, (a.particles[i].x - b.particles[i].x).norm());
        err = std::max(err, (a.particles[i].F - b.particles[i].F).norm());
    }
    CHECK(err < 1e-9);
}

TEST_CASE("diagnostics dump") {
    SimState s = block_state(Vec2(0.45, 0.45), Vec2(0.46, 0.46), 0.5 / 128, kJelly, Vec2::Zero());
    const std::string dump = diagnostics_dump(s);
    CHECK(std::count(dump.begin(), dump.end(), '\n') == static_cast<long>(s.particles.size() + 1));
}

TEST_CASE("config validation") {
    MaterialParams m = kJelly;
    CHECK_NOTHROW(m.validate());
    m.mu = 0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    WorldConfig w;
    CHECK_NOTHROW(w.validate());
    w.n_grid = 4;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w = WorldConfig{};
    w.max_grid_speed = -1;
    CHECK_THROWS_AS(w.validate(), ConfigError);
}
