#include <doctest.h>

#include <cmath>

#include "morphsim/actuation.hpp"
#include "morphsim/rng.hpp"

using namespace morphsim;

namespace {

// Catmull-Rom in Hermite form with central-difference tangents; independent
// of the weight polynomials used by the library.
double hermite_cr(double p0, double p1, double p2, double p3, double t) {
    const double m1 = 0.5 * (p2 - p0), m2 = 0.5 * (p3 - p1);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * p1 + (t3 - 2 * t2 + t) * m1 + (-2 * t3 + 3 * t2) * p2 +
           (t3 - t2) * m2;
}

double oracle_sample(const ActionGrid& g, double u, double v, int c) {
    const int n = g.resolution;
    auto clampi = [n](int k) { return std::max(0, std::min(n - 1, k)); };
    double sx = std::max(0.0, std::min(double(n - 1), u * n - 0.5));
    double sy = std::max(0.0, std::min(double(n - 1), v * n - 0.5));
    int ix = std::min(int(sx), n - 2), iy = std::min(int(sy), n - 2);
    double rows[4];
    for (int b = 0; b < 4; ++b) {
        const int y = clampi(iy - 1 + b);
        rows[b] = hermite_cr(g.at(clampi(ix - 1), y, c), g.at(clampi(ix), y, c), g.at(clampi(ix + 1), y, c),
                             g.at(clampi(ix + 2), y, c), sx - ix);
    }
    return hermite_cr(rows[0], rows[1], rows[2], rows[3], sy - iy);
}

ActionGrid random_grid(int n, Rng& rng, double lo = -1, double hi = 1) {
    ActionGrid g(n);
    for (double& v : g.data) v = rng.uniform(lo, hi);
    return g;
}

ActionGrid affine_grid(int n, double a0, double ax, double ay, double b0, double bx, double by) {
    ActionGrid g(n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            g.at(ix, iy, 0) = a0 + ax * ix + ay * iy;
            g.at(ix, iy, 1) = b0 + bx * ix + by * iy;
        }
    return g;
}

SimState robots_at(const std::vector<Vec2>& xs) {
    SimState s;
    s.materials.push_back(MaterialParams::from_young(1e4, 0.2, 1e9));
    for (const Vec2& x : xs) {
        Particle p;
        p.x = x;
        s.particles.push_back(p);
    }
    s.robot_count = xs.size();
    return s;
}

}  // namespace

TEST_CASE("action grid construction and layout") {
    ActionGrid g(4, 0.1, -0.2);
    CHECK(g.size() == 32);
    CHECK(g.at(3, 2, 1) == -0.2);
    g.at(1, 2, 0) = 5.0;
    CHECK(g.data[(2 * 4 + 1) * 2] == 5.0);
    CHECK_THROWS_AS(ActionGrid(5), ConfigError);
    CHECK_THROWS_AS(ActionGrid(32), ConfigError);
    CHECK_THROWS_AS(ActionGrid(4, std::vector<double>(31)), ConfigError);
    CHECK_THROWS_AS(GateMask(8, 1.5), ConfigError);
    CHECK_THROWS_AS(GateMask(8, -0.1), ConfigError);
    CHECK_NOTHROW(GateMask(8, 0.0));
    CHECK_NOTHROW(GateMask(8, 1.0));
}

TEST_CASE("bicubic reproduces constants and nodes") {
    Rng rng(3);
    const ActionGrid c(8, 0.3, -0.7);
    for (int k = 0; k < 200; ++k) {
        const Vec2 uv(rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2));
        const Vec2 v = bicubic_sample(c, uv);
        CHECK(v.x() == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(v.y() == doctest::Approx(-0.7).epsilon(1e-14));
    }
    const ActionGrid g = random_grid(16, rng);
    for (int iy = 0; iy < 16; ++iy)
        for (int ix = 0; ix < 16; ++ix) {
            const Vec2 v = bicubic_sample(g, Vec2((ix + 0.5) / 16, (iy + 0.5) / 16));
            CHECK(v.x() == g.at(ix, iy, 0));
            CHECK(v.y() == g.at(ix, iy, 1));
        }
}

TEST_CASE("bicubic ramp midpoint") {
    // Ramp 0,1,2,3 along x; midpoint of the middle interval uses weights
    // (-1/16, 9/16, 9/16, -1/16) -> 1.5.
    ActionGrid g = affine_grid(4, 0, 1, 0, 0, 0, 0);
    const Vec2 v = bicubic_sample(g, Vec2(2.0 / 4, 0.5));
    CHECK(v.x() == doctest::Approx(-1.0 / 16 * 0 + 9.0 / 16 * 1 + 9.0 / 16 * 2 - 1.0 / 16 * 3).epsilon(1e-15));
    CHECK(v.x() == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("bicubic matches Hermite oracle on random grids") {
    Rng rng(11);
    for (int n : {4, 8, 16}) {
        const ActionGrid g = random_grid(n, rng);
        for (int k = 0; k < 500; ++k) {
            const double u = rng.uniform(-0.1, 1.1), v = rng.uniform(-0.1, 1.1);
            const Vec2 s = bicubic_sample(g, Vec2(u, v));
            CHECK(std::abs(s.x() - oracle_sample(g, u, v, 0)) < 1e-12);
            CHECK(std::abs(s.y() - oracle_sample(g, u, v, 1)) < 1e-12);
        }
    }
}

TEST_CASE("bicubic reproduces affine data away from the border") {
    Rng rng(5);
    for (int n : {4, 8, 16, 64}) {
        const ActionGrid g = affine_grid(n, 0.1, 0.02, -0.03, -0.2, 0.05, 0.01);
        for (int k = 0; k < 300; ++k) {
            // Node-unit coordinate in [1, n - 2]: the stencil never touches a clamped node.
            const double sx = rng.uniform(1.0, n - 2.0), sy = rng.uniform(1.0, n - 2.0);
            const Vec2 v = bicubic_sample(g, Vec2((sx + 0.5) / n, (sy + 0.5) / n));
            CHECK(std::abs(v.x() - (0.1 + 0.02 * sx - 0.03 * sy)) < 1e-12);
            CHECK(std::abs(v.y() - (-0.2 + 0.05 * sx + 0.01 * sy)) < 1e-12);
        }
    }
}

TEST_CASE("upsample") {
    SUBCASE("constant") {
        const ActionGrid up = upsample(ActionGrid(8, 0.25, -0.5), 64);
        CHECK(up.resolution == 64);
        for (std::size_t k = 0; k < up.size(); k += 2) {
            CHECK(up.data[k] == doctest::Approx(0.25).epsilon(1e-14));
            CHECK(up.data[k + 1] == doctest::Approx(-0.5).epsilon(1e-14));
        }
    }
    SUBCASE("same resolution is the identity") {
        Rng rng(2);
        const ActionGrid g = random_grid(16, rng);
        CHECK(upsample(g, 16) == g);
    }
    SUBCASE("4x4 ramp interior") {
        const ActionGrid g = affine_grid(4, 0, 1, 0, 0, 0, 1);
        const ActionGrid up = upsample(g, 8);
        // Fine node k sits at coarse node coordinate k/2 - 1/4; k = 3, 4 are interior.
        for (int ky : {3, 4})
            for (int kx : {3, 4}) {
                CHECK(up.at(kx, ky, 0) == doctest::Approx(kx / 2.0 - 0.25).epsilon(1e-14));
                CHECK(up.at(kx, ky, 1) == doctest::Approx(ky / 2.0 - 0.25).epsilon(1e-14));
            }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(upsample(ActionGrid(16), 8), ConfigError);
        CHECK_THROWS_AS(upsample(ActionGrid(16), 32), ConfigError);
    }
}

TEST_CASE("resolution consistency on the 64-node lattice") {
    Rng rng(17);
    for (int n : {4, 8, 16}) {
        const ActionGrid g = random_grid(n, rng);
        const ActionGrid up = upsample(g, 64);
        for (int iy = 0; iy < 64; ++iy)
            for (int ix = 0; ix < 64; ++ix) {
                const Vec2 uv((ix + 0.5) / 64, (iy + 0.5) / 64);
                CHECK((bicubic_sample(g, uv) - bicubic_sample(up, uv)).norm() < 1e-6);
            }
    }
}

TEST_CASE("clamp_action") {
    ActionGrid g(4, 0.5, -0.5);
    CHECK(clamp_action(g, 1.0) == g);
    g.at(0, 0, 0) = 2.0;
    g.at(1, 0, 1) = -3.0;
    const ActionGrid c = clamp_action(g, 1.0);
    CHECK(c.at(0, 0, 0) == 1.0);
    CHECK(c.at(1, 0, 1) == -1.0);
    CHECK(c.at(2, 0, 0) == 0.5);
}

TEST_CASE("compose_coarse_fine") {
    Rng rng(23);
    const ActionGrid coarse = random_grid(8, rng, -0.5, 0.5);
    const ActionGrid residual = random_grid(16, rng);
    const ActionGrid up = upsample(coarse, 16);

    CHECK(compose_coarse_fine(coarse, residual, GateMask(16, 0.0), 1.0) == up);
    CHECK(compose_coarse_fine(coarse, residual, GateMask(16, 1.0), 1.0) == residual);
    CHECK(compose_coarse_fine(coarse, up, GateMask(16, 0.5), 1.0) == up);

    const ActionGrid half = compose_coarse_fine(ActionGrid(8, 0.2, 0.2), ActionGrid(16, 0.6, 0.6),
                                                GateMask(16, 0.5), 1.0);
    for (double v : half.data) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));

    const ActionGrid big = compose_coarse_fine(ActionGrid(4), ActionGrid(8, 3.0, -3.0), GateMask(8, 1.0), 1.0);
    for (std::size_t k = 0; k < big.size(); k += 2) {
        CHECK(big.data[k] == 1.0);
        CHECK(big.data[k + 1] == -1.0);
    }

    CHECK_THROWS_AS(compose_coarse_fine(coarse, ActionGrid(64), GateMask(64), 1.0), ConfigError);
    CHECK_THROWS_AS(compose_coarse_fine(coarse, residual, GateMask(8), 1.0), ConfigError);
}

TEST_CASE("distribute_to_particles") {
    const ActionWindow win{Vec2(0.5, 0.5), 0.5};
    Rng rng(31);
    std::vector<Vec2> xs;
    for (int k = 0; k < 300; ++k) xs.emplace_back(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8));
    SimState s = robots_at(xs);

    SUBCASE("constant and zero fields") {
        for (const Vec2& a : distribute_to_particles(ActionGrid(64, 0.3, -0.4), s, win)) {
            CHECK(a.x() == doctest::Approx(0.3).epsilon(1e-14));
            CHECK(a.y() == doctest::Approx(-0.4).epsilon(1e-14));
        }
        for (const Vec2& a : distribute_to_particles(ActionGrid(64), s, win)) CHECK(a == Vec2::Zero());
    }
    SUBCASE("single node at a particle") {
        ActionGrid g(64);
        g.at(20, 33, 0) = 1.0;
        g.at(20, 33, 1) = -2.0;
        const Vec2 node_world = win.lower() + Vec2(20.5, 33.5) * (win.side / 64);
        const SimState one = robots_at({node_world});
        const Vec2 a = distribute_to_particles(g, one, win)[0];
        CHECK(a.x() == doctest::Approx(0.75 * 0.75).epsilon(1e-12));
        CHECK(a.y() == doctest::Approx(-2.0 * 0.75 * 0.75).epsilon(1e-12));
    }
    SUBCASE("linearity") {
        const ActionGrid A = random_grid(64, rng), B = random_grid(64, rng);
        const double alpha = 0.7, beta = -1.3;
        ActionGrid C(64);
        for (std::size_t k = 0; k < C.size(); ++k) C.data[k] = alpha * A.data[k] + beta * B.data[k];
        const auto dA = distribute_to_particles(A, s, win);
        const auto dB = distribute_to_particles(B, s, win);
        const auto dC = distribute_to_particles(C, s, win);
        for (std::size_t p = 0; p < dC.size(); ++p) CHECK((dC[p] - (alpha * dA[p] + beta * dB[p])).norm() < 1e-9);
    }
    SUBCASE("outside the window gets the edge value") {
        ActionGrid g(64);
        for (int iy = 0; iy < 64; ++iy)
            for (int ix = 0; ix < 64; ++ix) g.at(ix, iy, 0) = ix == 63 ? 0.9 : 0.0;
        const SimState far = robots_at({Vec2(2.0, 0.5)});
        CHECK(distribute_to_particles(g, far, win)[0].x() == doctest::Approx(0.9).epsilon(1e-14));
    }
    SUBCASE("only robot particles receive actions") {
        SimState mixed = robots_at({Vec2(0.5, 0.5), Vec2(0.6, 0.6)});
        mixed.particles[1].role = Role::passive_object;
        mixed.robot_count = 1;
        CHECK(distribute_to_particles(ActionGrid(64, 1.0, 1.0), mixed, win).size() == 1);
    }
    SUBCASE("bounded after clamp") {
        for (int trial = 0; trial < 5; ++trial) {
            const ActionGrid g = clamp_action(random_grid(64, rng, -3, 3), 0.8);
            for (const Vec2& a : distribute_to_particles(g, s, win)) {
                CHECK(std::abs(a.x()) <= 0.8 + 1e-15);
                CHECK(std::abs(a.y()) <= 0.8 + 1e-15);
            }
        }
    }
}

TEST_CASE("json round trip") {
    Rng rng(41);
    const ActionGrid g = random_grid(16, rng);
    const auto text = to_json(g).dump();
    CHECK(action_grid_from_json(nlohmann::json::parse(text)) == g);
    const GateMask m(8, 0.25);
    CHECK(gate_mask_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
    CHECK_THROWS_AS(action_grid_from_json(nlohmann::json::parse(R"({"resolution": 4, "components": 3, "data": []})")),
                    ConfigError);
    CHECK_THROWS_AS(action_grid_from_json(nlohmann::json::parse(R"({"resolution": 4})")), ConfigError);
}
