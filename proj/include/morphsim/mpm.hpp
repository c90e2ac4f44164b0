#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "morphsim/errors.hpp"
#include "morphsim/math.hpp"

namespace morphsim {

// ---------------------------------------------------------------------------
// Materials and particles
// ---------------------------------------------------------------------------

struct MaterialParams {
    double mu = 0.0;
    double lambda = 0.0;
    /// Threshold on the Euclidean norm of the singular-value vector of F.
    /// The rest state has norm sqrt(2); +inf disables plasticity.
    double yield_stress = std::numeric_limits<double>::infinity();
    double mass = 2.0;
    double volume = 1.0;

    /// Lame parameters from Young's modulus and Poisson ratio.
    static MaterialParams from_young(double youngs, double poisson, double yield_stress,
                                     double mass = 2.0, double volume = 1.0);

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;

    bool operator==(const MaterialParams&) const = default;
};

enum class Role : std::uint8_t { robot, passive_object, soil };

const char* to_string(Role role);

template <class Real>
struct BasicParticle {
    Vec2T<Real> x = Vec2T<Real>::Zero();
    Vec2T<Real> v = Vec2T<Real>::Zero();
    Mat2T<Real> F = Mat2T<Real>::Identity();
    Mat2T<Real> C = Mat2T<Real>::Zero();
    Role role = Role::robot;
    std::uint16_t material = 0;  // index into BasicSimState::materials
};

using Particle = BasicParticle<double>;

/// Axis-aligned solid region used as a static boundary condition.
struct Box {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Zero();

    bool contains(const Vec2& p) const {
        return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
    }
    bool operator==(const Box&) const = default;
};

struct WorldConfig {
    /// Resolution of the unit length; sets dx = 1 / n_grid.
    int n_grid = 128;
    /// Nodes per axis of the active window; 0 means n_grid (window = unit square).
    int window_cells = 0;
    double dt = 1e-4;
    Vec2 gravity = Vec2::Zero();
    int bound = 1;
    double friction_coeff = 0.5;
    bool moving_grid = false;
    /// Ground half-plane y < ground_y in world units; -inf means no ground.
    double ground_y = -std::numeric_limits<double>::infinity();
    std::vector<Box> obstacles;
    bool apply_boundaries = true;
    /// Cap on grid node speed in world units per second; 0 disables it.
    double max_grid_speed = 0.0;
    int threads = 1;

    int cells() const { return window_cells > 0 ? window_cells : n_grid; }
    double dx() const { return 1.0 / n_grid; }
    double inv_dx() const { return static_cast<double>(n_grid); }
    void validate() const;
};

template <class Real>
struct BasicSimState {
    /// Robot particles occupy indices [0, robot_count).
    std::vector<BasicParticle<Real>> particles;
    std::size_t robot_count = 0;
    std::vector<MaterialParams> materials;
    Vec2i grid_offset = Vec2i::Zero();
    double time = 0.0;
    std::int64_t substep_count = 0;
};

using SimState = BasicSimState<double>;

/// World-space origin of the active grid window.
template <class Real>
Vec2 window_origin(const BasicSimState<Real>& state, const WorldConfig& cfg) {
    return state.grid_offset.template cast<double>() * cfg.dx();
}

// ---------------------------------------------------------------------------
// Per-particle kernels
// ---------------------------------------------------------------------------

/// M = U * diag(sigma) * V^T with sigma[0] >= sigma[1] >= 0. U is a rotation;
/// V is a rotation when det(M) >= 0 and a reflection otherwise.
template <class Real>
struct BasicSvd2 {
    Mat2T<Real> U;
    Vec2T<Real> sigma;
    Mat2T<Real> V;
};
using Svd2 = BasicSvd2<double>;

template <class Real>
BasicSvd2<Real> svd_2x2(const Mat2T<Real>& m);

/// Rotation factor of the polar decomposition F = r * s.
template <class Real>
Mat2T<Real> polar_rotation(const Mat2T<Real>& F);

/// 2 mu (F - r) F^T + lambda (J - 1) J I + F diag(action) F^T.
template <class Real>
Mat2T<Real> cauchy_stress(const Mat2T<Real>& F, const Vec2T<Real>& action,
                          const MaterialParams& m);

/// Returns F unchanged inside the yield surface; otherwise moves the singular
/// values along the segment towards (1, 1) until their norm equals the yield
/// threshold, keeping U and V.
template <class Real>
Mat2T<Real> von_mises_project(const Mat2T<Real>& F, Real yield_stress);

/// Quadratic B-spline weights along one axis for a coordinate expressed in
/// node units (node k sits at coordinate k).
template <class Real>
struct AxisStencil {
    int base = 0;
    Real frac = 0;  // coordinate - base, in [0.5, 1.5)
    std::array<Real, 3> w{};
};

/// floor() for values well inside the int range, without a libm call.
template <class Real>
inline int floor_to_int(Real v) {
    const int t = static_cast<int>(v);
    return t - (static_cast<Real>(t) > v);
}

template <class Real>
AxisStencil<Real> quadratic_stencil(Real coord) {
    AxisStencil<Real> s;
    s.base = floor_to_int(coord - Real(0.5));
    s.frac = coord - static_cast<Real>(s.base);
    const Real f = s.frac;
    s.w[0] = Real(0.5) * (Real(1.5) - f) * (Real(1.5) - f);
    s.w[1] = Real(0.75) - (f - Real(1)) * (f - Real(1));
    s.w[2] = Real(0.5) * (f - Real(0.5)) * (f - Real(0.5));
    return s;
}

struct BsplineWeights {
    Vec2i base;
    Vec2 frac;
    std::array<std::array<double, 3>, 3> w;  // w[i][j] for node base + (i, j)
};

/// Throws WindowViolation when the 3x3 stencil would leave the window.
BsplineWeights bspline_weights(const Vec2& xp, double dx, const Vec2i& grid_offset = Vec2i::Zero(),
                               int n_grid = std::numeric_limits<int>::max());

// ---------------------------------------------------------------------------
// Substep engine
// ---------------------------------------------------------------------------

/// Owns grid scratch memory. One instance per simulation thread; the result
/// of substep() depends only on (state, actions, cfg), never on the history
/// of the solver or on cfg.threads.
template <class Real>
class BasicSolver {
public:
    using State = BasicSimState<Real>;
    using V2 = Vec2T<Real>;

    /// One P2G -> grid update -> G2P -> plasticity cycle. `actions` holds one
    /// entry per robot particle, or is empty for zero actuation.
    void substep(State& state, std::span<const V2> actions, const WorldConfig& cfg);

    /// Sum of grid node masses right after the last P2G.
    double last_grid_mass() const { return last_grid_mass_; }
    /// Sum of grid node momenta right after the last P2G.
    Vec2 last_grid_momentum() const { return last_grid_momentum_; }

private:
    void resize(int n);
    void clear_touched();

    int n_ = 0;
    struct Node {
        Real px = 0, py = 0;  // momentum, then velocity after the grid update
        Real m = 0;
        Real pad = 0;
    };
    std::vector<Node> grid_;
    std::vector<AxisStencil<Real>> stencil_;  // x then y per particle, from the current positions
    std::vector<std::uint32_t> order_;
    std::vector<std::uint32_t> tile_start_;
    std::vector<std::uint32_t> keys_;
    int lo_x_ = 0, hi_x_ = -1, lo_y_ = 0, hi_y_ = -1;  // touched node range
    double last_grid_mass_ = 0.0;
    Vec2 last_grid_momentum_ = Vec2::Zero();
};

using Solver = BasicSolver<double>;

/// Convenience wrapper around a temporary Solver.
void substep(SimState& state, std::span<const Vec2> actions, const WorldConfig& cfg);

/// Mass-weighted mean position of the robot particles.
template <class Real>
Vec2 robot_center_of_mass(const BasicSimState<Real>& state);

/// Shifts grid_offset by whole cells so the robot center of mass lies inside
/// the central half of the window. World-frame particle data is untouched.
template <class Real>
void recenter_window(BasicSimState<Real>& state, const WorldConfig& cfg);

/// One line per particle: index x y vx vy F00 F01 F10 F11.
template <class Real>
std::string diagnostics_dump(const BasicSimState<Real>& state);

double total_particle_mass(const SimState& state);
Vec2 total_particle_momentum(const SimState& state);

}  // namespace morphsim
