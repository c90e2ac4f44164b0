#include "morphsim/mpm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#ifdef MORPHSIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace morphsim {

namespace {

constexpr int kTile = 4;  // tile edge in cells; >= 3 keeps same-color stencils disjoint

template <class Real>
bool finite(const Vec2T<Real>& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y());
}

template <class Real>
bool finite(const Mat2T<Real>& m) {
    return std::isfinite(m(0, 0)) && std::isfinite(m(0, 1)) && std::isfinite(m(1, 0)) &&
           std::isfinite(m(1, 1));
}

// Rotation part of F from its closed-form SVD angles: r = R(atan2(H, E)).
// Requires det(F) > 0.
template <class Real>
Mat2T<Real> polar_rotation_unchecked(const Mat2T<Real>& F) {
    const Real e = Real(0.5) * (F(0, 0) + F(1, 1));
    const Real h = Real(0.5) * (F(1, 0) - F(0, 1));
    const Real q = std::hypot(e, h);
    Mat2T<Real> r;
    r << e / q, -h / q, h / q, e / q;
    return r;
}

template <class Real>
Mat2T<Real> stress_unchecked(const Mat2T<Real>& F, const Vec2T<Real>& action, Real mu,
                             Real lambda) {
    const Real J = F.determinant();
    const Mat2T<Real> r = polar_rotation_unchecked(F);
    Mat2T<Real> stress = Real(2) * mu * (F - r) * F.transpose();
    const Real pressure = lambda * (J - Real(1)) * J;
    stress(0, 0) += pressure;
    stress(1, 1) += pressure;
    if (action.x() != Real(0) || action.y() != Real(0)) {
        stress += F * action.asDiagonal() * F.transpose();
    }
    return stress;
}

template <class Real>
Mat2T<Real> project_unchecked(const Mat2T<Real>& F, Real yield) {
    // ||sigma||_2 equals the Frobenius norm of F, so the common inside-the-
    // surface case needs no decomposition.
    if (!(F.squaredNorm() > yield * yield)) return F;
    const BasicSvd2<Real> svd = svd_2x2(F);
    const Vec2T<Real> d = svd.sigma - Vec2T<Real>::Ones();
    Real t = 0;
    const Real yy = yield * yield;
    if (yy > Real(2)) {
        // |1 + t d|^2 = yield^2, root in (0, 1)
        const Real a = d.squaredNorm();
        const Real b = d.sum();
        const Real c = Real(2) - yy;
        const Real disc = std::max(Real(0), b * b - a * c);
        t = (-b + std::sqrt(disc)) / a;
        t = std::clamp(t, Real(0), Real(1));
    }
    const Vec2T<Real> sigma = Vec2T<Real>::Ones() + t * d;
    return svd.U * sigma.asDiagonal() * svd.V.transpose();
}

}  // namespace

// ---------------------------------------------------------------------------

MaterialParams MaterialParams::from_young(double youngs, double poisson, double yield_stress,
                                          double mass, double volume) {
    MaterialParams m;
    m.mu = youngs / (2.0 * (1.0 + poisson));
    m.lambda = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    m.yield_stress = yield_stress;
    m.mass = mass;
    m.volume = volume;
    return m;
}

void MaterialParams::validate() const {
    if (!(mu > 0)) throw ConfigError("material: mu must be > 0");
    if (!(lambda >= 0)) throw ConfigError("material: lambda must be >= 0");
    if (!(yield_stress > 0)) throw ConfigError("material: yield_stress must be > 0");
    if (!(mass > 0)) throw ConfigError("material: mass must be > 0");
    if (!(volume > 0)) throw ConfigError("material: volume must be > 0");
}

const char* to_string(Role role) {
    switch (role) {
        case Role::robot: return "robot";
        case Role::passive_object: return "passive_object";
        case Role::soil: return "soil";
    }
    return "unknown";
}

void WorldConfig::validate() const {
    if (n_grid < 8) throw ConfigError("world: n_grid must be >= 8");
    if (window_cells != 0 && window_cells < 8) throw ConfigError("world: window_cells must be >= 8");
    if (!(dt > 0)) throw ConfigError("world: dt must be > 0");
    if (bound < 1) throw ConfigError("world: bound must be >= 1");
    if (!(friction_coeff >= 0)) throw ConfigError("world: friction_coeff must be >= 0");
    if (threads < 1) throw ConfigError("world: threads must be >= 1");
    if (!(max_grid_speed >= 0)) throw ConfigError("world: max_grid_speed must be >= 0");
}

// ---------------------------------------------------------------------------

template <class Real>
BasicSvd2<Real> svd_2x2(const Mat2T<Real>& m) {
    if (!finite(m)) throw InvalidDeformation("svd_2x2: non-finite matrix");
    const Real e = Real(0.5) * (m(0, 0) + m(1, 1));
    const Real f = Real(0.5) * (m(0, 0) - m(1, 1));
    const Real g = Real(0.5) * (m(1, 0) + m(0, 1));
    const Real h = Real(0.5) * (m(1, 0) - m(0, 1));
    const Real q = std::hypot(e, h);
    const Real r = std::hypot(f, g);
    const Real a1 = std::atan2(g, f);
    const Real a2 = std::atan2(h, e);
    const Real theta = Real(0.5) * (a2 - a1);
    const Real phi = Real(0.5) * (a2 + a1);

    BasicSvd2<Real> out;
    const Real cp = std::cos(phi), sp = std::sin(phi);
    const Real ct = std::cos(theta), st = std::sin(theta);
    out.U << cp, -sp, sp, cp;
    // M = R(phi) diag(q + r, q - r) R(theta), so V = R(theta)^T.
    out.V << ct, st, -st, ct;
    out.sigma << q + r, q - r;
    if (out.sigma.y() < Real(0)) {
        out.sigma.y() = -out.sigma.y();
        out.V.col(1) = -out.V.col(1);
    }
    return out;
}

template <class Real>
Mat2T<Real> polar_rotation(const Mat2T<Real>& F) {
    if (!finite(F) || !(F.determinant() > Real(0))) {
        throw InvalidDeformation("polar_rotation: det(F) must be > 0");
    }
    return polar_rotation_unchecked(F);
}

template <class Real>
Mat2T<Real> cauchy_stress(const Mat2T<Real>& F, const Vec2T<Real>& action,
                          const MaterialParams& m) {
    if (!finite(F) || !(F.determinant() > Real(0))) {
        throw InvalidDeformation("cauchy_stress: det(F) must be > 0");
    }
    return stress_unchecked(F, action, static_cast<Real>(m.mu), static_cast<Real>(m.lambda));
}

template <class Real>
Mat2T<Real> von_mises_project(const Mat2T<Real>& F, Real yield_stress) {
    if (!finite(F) || !(F.determinant() > Real(0))) {
        throw InvalidDeformation("von_mises_project: det(F) must be > 0");
    }
    return project_unchecked(F, yield_stress);
}

BsplineWeights bspline_weights(const Vec2& xp, double dx, const Vec2i& grid_offset, int n_grid) {
    const Vec2 local = xp / dx - grid_offset.cast<double>();
    const auto sx = quadratic_stencil(local.x());
    const auto sy = quadratic_stencil(local.y());
    if (!std::isfinite(local.x()) || !std::isfinite(local.y()) || sx.base < 0 || sy.base < 0 ||
        sx.base > n_grid - 3 || sy.base > n_grid - 3) {
        throw WindowViolation("bspline_weights: position outside the active grid window");
    }
    BsplineWeights out;
    out.base = {sx.base, sy.base};
    out.frac = {sx.frac, sy.frac};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.w[i][j] = sx.w[i] * sy.w[j];
    return out;
}

// ---------------------------------------------------------------------------

template <class Real>
void BasicSolver<Real>::resize(int n) {
    if (n == n_) return;
    n_ = n;
    grid_.assign(static_cast<std::size_t>(n) * n, Node{});
    lo_x_ = lo_y_ = 0;
    hi_x_ = hi_y_ = -1;
}

template <class Real>
void BasicSolver<Real>::clear_touched() {
    for (int i = lo_x_; i <= hi_x_; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * n_;
        std::fill(grid_.begin() + row + lo_y_, grid_.begin() + row + hi_y_ + 1, Node{});
    }
    hi_x_ = hi_y_ = -1;
}

template <class Real>
void BasicSolver<Real>::substep(State& state, std::span<const V2> actions, const WorldConfig& cfg) {
    const int n = cfg.cells();
    resize(n);
    clear_touched();

    auto& ps = state.particles;
    const std::size_t np = ps.size();
    if (!actions.empty() && actions.size() != state.robot_count) {
        throw ConfigError("substep: action count must equal robot particle count");
    }

    const Real dx = static_cast<Real>(cfg.dx());
    const Real inv_dx = static_cast<Real>(cfg.inv_dx());
    const Real dt = static_cast<Real>(cfg.dt);
    const Real off_x = static_cast<Real>(state.grid_offset.x());
    const Real off_y = static_cast<Real>(state.grid_offset.y());
    const int threads = cfg.threads;

    // Bucket particles into tiles, colored 2x2 so that tiles of one color never
    // share grid nodes. Per-node accumulation order is then fixed (color, tile,
    // particle index) and independent of the thread count.
    const int tiles = (n + kTile - 1) / kTile;
    const std::size_t n_tiles = static_cast<std::size_t>(tiles) * tiles;
    keys_.resize(np);
    stencil_.resize(2 * np);
    int bx_min = n, bx_max = -1, by_min = n, by_max = -1;
    for (std::size_t p = 0; p < np; ++p) {
        const Real lx = ps[p].x.x() * inv_dx - off_x;
        const Real ly = ps[p].x.y() * inv_dx - off_y;
        if (!(std::abs(lx) < Real(1e9)) || !(std::abs(ly) < Real(1e9))) {
            throw WindowViolation("substep: particle " + std::to_string(p) + " has a non-finite position");
        }
        stencil_[2 * p] = quadratic_stencil(lx);
        stencil_[2 * p + 1] = quadratic_stencil(ly);
        const int bx = stencil_[2 * p].base;
        const int by = stencil_[2 * p + 1].base;
        if (bx < 0 || by < 0 || bx > n - 3 || by > n - 3) {
            throw WindowViolation("substep: particle " + std::to_string(p) +
                                  " outside the active grid window");
        }
        bx_min = std::min(bx_min, bx);
        bx_max = std::max(bx_max, bx);
        by_min = std::min(by_min, by);
        by_max = std::max(by_max, by);
        const int tx = bx / kTile, ty = by / kTile;
        const int color = (tx & 1) + 2 * (ty & 1);
        keys_[p] = static_cast<std::uint32_t>(color * n_tiles + static_cast<std::size_t>(ty) * tiles + tx);
    }
    tile_start_.assign(4 * n_tiles + 1, 0);
    for (std::size_t p = 0; p < np; ++p) ++tile_start_[keys_[p] + 1];
    for (std::size_t k = 1; k < tile_start_.size(); ++k) tile_start_[k] += tile_start_[k - 1];
    order_.resize(np);
    {
        std::vector<std::uint32_t> cursor(tile_start_.begin(), tile_start_.end() - 1);
        for (std::size_t p = 0; p < np; ++p) order_[cursor[keys_[p]]++] = static_cast<std::uint32_t>(p);
    }
    if (np > 0) {
        lo_x_ = bx_min;
        hi_x_ = bx_max + 2;
        lo_y_ = by_min;
        hi_y_ = by_max + 2;
    }

    struct Mat {
        Real mass, stress_scale, mu, lambda, yield;
    };
    std::vector<Mat> mats;
    mats.reserve(state.materials.size());
    for (const auto& m : state.materials) {
        mats.push_back({static_cast<Real>(m.mass),
                        -dt * static_cast<Real>(m.volume) * Real(4) * inv_dx * inv_dx,
                        static_cast<Real>(m.mu), static_cast<Real>(m.lambda),
                        static_cast<Real>(m.yield_stress)});
    }

    // ---- P2G ----
    Node* grid = grid_.data();
    const V2* act = actions.empty() ? nullptr : actions.data();
    const std::size_t robot_count = state.robot_count;
    bool bad_det = false;
    for (int color = 0; color < 4; ++color) {
        const std::size_t first = static_cast<std::size_t>(color) * n_tiles;
#ifdef MORPHSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads) if (threads > 1) reduction(|| : bad_det)
#endif
        for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n_tiles); ++t) {
            const std::uint32_t begin = tile_start_[first + t];
            const std::uint32_t end = tile_start_[first + t + 1];
            for (std::uint32_t k = begin; k < end; ++k) {
                const std::uint32_t p = order_[k];
                const auto& part = ps[p];
                const Mat& mat = mats[part.material];
                const auto& sx = stencil_[2 * p];
                const auto& sy = stencil_[2 * p + 1];

                // Stress, written out: 2 mu (F - r) F^T + lambda (J - 1) J I + F diag(a) F^T
                const Real f00 = part.F(0, 0), f01 = part.F(0, 1), f10 = part.F(1, 0), f11 = part.F(1, 1);
                const Real J = f00 * f11 - f01 * f10;
                if (!(J > Real(0))) {
                    bad_det = true;
                    continue;
                }
                const Real e = Real(0.5) * (f00 + f11), h = Real(0.5) * (f10 - f01);
                const Real inv_q = Real(1) / std::sqrt(e * e + h * h);
                const Real c = e * inv_q, s = h * inv_q;  // r = [[c, -s], [s, c]]
                const Real d00 = f00 - c, d01 = f01 + s, d10 = f10 - s, d11 = f11 - c;
                const Real two_mu = Real(2) * mat.mu;
                const Real pressure = mat.lambda * (J - Real(1)) * J;
                Real s00 = two_mu * (d00 * f00 + d01 * f01) + pressure;
                Real s01 = two_mu * (d00 * f10 + d01 * f11);
                Real s10 = two_mu * (d10 * f00 + d11 * f01);
                Real s11 = two_mu * (d10 * f10 + d11 * f11) + pressure;
                if (act != nullptr && p < robot_count) {
                    const Real ax = act[p].x(), ay = act[p].y();
                    s00 += ax * f00 * f00 + ay * f01 * f01;
                    s01 += ax * f00 * f10 + ay * f01 * f11;
                    s10 += ax * f10 * f00 + ay * f11 * f01;
                    s11 += ax * f10 * f10 + ay * f11 * f11;
                }
                const Real ss = mat.stress_scale, m = mat.mass;
                const Real a00 = ss * s00 + m * part.C(0, 0), a01 = ss * s01 + m * part.C(0, 1);
                const Real a10 = ss * s10 + m * part.C(1, 0), a11 = ss * s11 + m * part.C(1, 1);
                const Real mvx = m * part.v.x(), mvy = m * part.v.y();

                Real ux[3], uy[3], tx[3], ty[3];
                for (int i = 0; i < 3; ++i) {
                    const Real dpx = (Real(i) - sx.frac) * dx;
                    ux[i] = mvx + a00 * dpx;
                    uy[i] = mvy + a10 * dpx;
                    const Real dpy = (Real(i) - sy.frac) * dx;
                    tx[i] = a01 * dpy;
                    ty[i] = a11 * dpy;
                }
                for (int i = 0; i < 3; ++i) {
                    Node* row = grid + static_cast<std::size_t>(sx.base + i) * n + sy.base;
                    for (int j = 0; j < 3; ++j) {
                        const Real w = sx.w[i] * sy.w[j];
                        row[j].px += w * (ux[i] + tx[j]);
                        row[j].py += w * (uy[i] + ty[j]);
                        row[j].m += w * m;
                    }
                }
            }
        }
    }
    if (bad_det) {
        throw PhysicsError("substep " + std::to_string(state.substep_count) +
                               ": det(F) <= 0 before transfer",
                           diagnostics_dump(state));
    }

    {
        double m_sum = 0.0;
        Vec2 p_sum = Vec2::Zero();
        for (int i = lo_x_; i <= hi_x_; ++i) {
            for (int j = lo_y_; j <= hi_y_; ++j) {
                const Node& node = grid[static_cast<std::size_t>(i) * n + j];
                m_sum += static_cast<double>(node.m);
                p_sum += Vec2(node.px, node.py);
            }
        }
        last_grid_mass_ = m_sum;
        last_grid_momentum_ = p_sum;
    }

    // ---- Grid update ----
    const Real gdx = static_cast<Real>(cfg.gravity.x() * cfg.dt);
    const Real gdy = static_cast<Real>(cfg.gravity.y() * cfg.dt);
    const Real coeff = static_cast<Real>(cfg.friction_coeff);
    const int bound = cfg.bound;
    const double wdx = cfg.dx();
    const Vec2i offset = state.grid_offset;
    const Real vcap = static_cast<Real>(cfg.max_grid_speed);
    bool bad_grid = false;
#ifdef MORPHSIM_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1) reduction(|| : bad_grid)
#endif
    for (int i = lo_x_; i <= hi_x_; ++i) {
        for (int j = lo_y_; j <= hi_y_; ++j) {
            Node& node = grid[static_cast<std::size_t>(i) * n + j];
            if (!(node.m > Real(0))) continue;
            const Real inv_m = Real(1) / node.m;
            V2 v(node.px * inv_m + gdx, node.py * inv_m + gdy);
            if (vcap > Real(0)) {
                const Real speed = v.norm();
                if (speed > vcap) v *= vcap / speed;
            }
            if (cfg.apply_boundaries) {
                const Vec2 world((offset.x() + i) * wdx, (offset.y() + j) * wdx);
                V2 normal = V2::Zero();
                bool solid = false;
                if (world.y() < cfg.ground_y) {
                    normal = V2(0, 1);
                    solid = true;
                } else {
                    for (const Box& b : cfg.obstacles) {
                        if (!b.contains(world)) continue;
                        // Outward normal of the nearest face.
                        const double d[4] = {world.x() - b.lo.x(), b.hi.x() - world.x(),
                                             world.y() - b.lo.y(), b.hi.y() - world.y()};
                        const int face = static_cast<int>(std::min_element(d, d + 4) - d);
                        static const V2 normals[4] = {V2(-1, 0), V2(1, 0), V2(0, -1), V2(0, 1)};
                        normal = normals[face];
                        solid = true;
                        break;
                    }
                }
                if (solid) {
                    const Real vn = v.dot(normal);
                    if (vn < Real(0)) {
                        const V2 vt = v - vn * normal;
                        const Real vt_norm = vt.norm();
                        if (vt_norm <= -coeff * vn) {
                            v = V2::Zero();
                        } else {
                            v = vt * (Real(1) + coeff * vn / vt_norm);
                        }
                    }
                } else if (i < bound || j < bound || i >= n - bound || j >= n - bound) {
                    v = V2::Zero();
                }
            }
            if (!std::isfinite(v.x()) || !std::isfinite(v.y())) bad_grid = true;
            node.px = v.x();
            node.py = v.y();
        }
    }
    if (bad_grid) {
        throw PhysicsError("substep " + std::to_string(state.substep_count) +
                               ": non-finite grid velocity",
                           diagnostics_dump(state));
    }

    // ---- G2P ----
    const Real four_inv_dx = Real(4) * inv_dx;
    const Real hi_bound = static_cast<Real>(n) - Real(1.5);
    std::size_t first_bad = np;
    std::size_t first_escape = np;
#ifdef MORPHSIM_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1) \
    reduction(min : first_bad, first_escape)
#endif
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(np); ++pi) {
        auto& part = ps[pi];
        const Mat& mat = mats[part.material];
        const auto& sx = stencil_[2 * pi];
        const auto& sy = stencil_[2 * pi + 1];
        Real vx = 0, vy = 0, b00 = 0, b01 = 0, b10 = 0, b11 = 0;
        for (int i = 0; i < 3; ++i) {
            const Node* row = grid + static_cast<std::size_t>(sx.base + i) * n + sy.base;
            const Real dpx = Real(i) - sx.frac;
            for (int j = 0; j < 3; ++j) {
                const Real w = sx.w[i] * sy.w[j];
                const Real wvx = w * row[j].px, wvy = w * row[j].py;
                const Real dpy = Real(j) - sy.frac;
                vx += wvx;
                vy += wvy;
                b00 += wvx * dpx;
                b01 += wvx * dpy;
                b10 += wvy * dpx;
                b11 += wvy * dpy;
            }
        }
        part.v = V2(vx, vy);
        part.C << four_inv_dx * b00, four_inv_dx * b01, four_inv_dx * b10, four_inv_dx * b11;
        part.x += dt * part.v;
        const Mat2T<Real> F = (Mat2T<Real>::Identity() + dt * part.C) * part.F;
        const Real J = F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
        if (!std::isfinite(part.x.x()) || !std::isfinite(part.x.y()) || !finite(F) || !(J > Real(0))) {
            part.F = F;
            first_bad = std::min(first_bad, static_cast<std::size_t>(pi));
            continue;
        }
        part.F = project_unchecked(F, mat.yield);
        const Real nx = part.x.x() * inv_dx - off_x;
        const Real ny = part.x.y() * inv_dx - off_y;
        if (!(nx >= Real(0.5) && ny >= Real(0.5) && nx < hi_bound && ny < hi_bound)) {
            first_escape = std::min(first_escape, static_cast<std::size_t>(pi));
        }
    }
    state.time += cfg.dt;
    ++state.substep_count;
    if (first_bad < np) {
        throw PhysicsError("substep " + std::to_string(state.substep_count - 1) +
                               ": non-finite or inverted particle " + std::to_string(first_bad),
                           diagnostics_dump(state));
    }
    if (first_escape < np) {
        throw WindowViolation("substep " + std::to_string(state.substep_count - 1) +
                              ": particle " + std::to_string(first_escape) +
                              " escaped the active grid window");
    }
}

void substep(SimState& state, std::span<const Vec2> actions, const WorldConfig& cfg) {
    Solver solver;
    solver.substep(state, actions, cfg);
}

template <class Real>
Vec2 robot_center_of_mass(const BasicSimState<Real>& state) {
    if (state.robot_count == 0) throw InvalidState("center_of_mass: no robot particles");
    Vec2 sum = Vec2::Zero();
    double mass = 0.0;
    for (std::size_t p = 0; p < state.robot_count; ++p) {
        const auto& part = state.particles[p];
        const double m = state.materials[part.material].mass;
        sum += m * part.x.template cast<double>();
        mass += m;
    }
    return sum / mass;
}

template <class Real>
void recenter_window(BasicSimState<Real>& state, const WorldConfig& cfg) {
    if (!cfg.moving_grid || state.robot_count == 0) return;
    const Vec2 com = robot_center_of_mass(state);
    const double dx = cfg.dx();
    const double half = 0.5 * cfg.cells() * dx;
    for (int axis = 0; axis < 2; ++axis) {
        const double center = state.grid_offset[axis] * dx + half;
        const double drift = com[axis] - center;
        if (std::abs(drift) > 0.5 * half) {
            state.grid_offset[axis] += static_cast<int>(std::lround(drift / dx));
        }
    }
}

template <class Real>
std::string diagnostics_dump(const BasicSimState<Real>& state) {
    std::ostringstream out;
    out << "# index x y vx vy F00 F01 F10 F11\n";
    char line[256];
    for (std::size_t p = 0; p < state.particles.size(); ++p) {
        const auto& q = state.particles[p];
        std::snprintf(line, sizeof line, "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", p,
                      double(q.x.x()), double(q.x.y()), double(q.v.x()), double(q.v.y()),
                      double(q.F(0, 0)), double(q.F(0, 1)), double(q.F(1, 0)), double(q.F(1, 1)));
        out << line;
    }
    return out.str();
}

double total_particle_mass(const SimState& state) {
    double m = 0.0;
    for (const auto& p : state.particles) m += state.materials[p.material].mass;
    return m;
}

Vec2 total_particle_momentum(const SimState& state) {
    Vec2 sum = Vec2::Zero();
    for (const auto& p : state.particles) sum += state.materials[p.material].mass * p.v;
    return sum;
}

#define MORPHSIM_INSTANTIATE(Real)                                                          \
    template BasicSvd2<Real> svd_2x2<Real>(const Mat2T<Real>&);                             \
    template Mat2T<Real> polar_rotation<Real>(const Mat2T<Real>&);                          \
    template Mat2T<Real> cauchy_stress<Real>(const Mat2T<Real>&, const Vec2T<Real>&,        \
                                             const MaterialParams&);                        \
    template Mat2T<Real> von_mises_project<Real>(const Mat2T<Real>&, Real);                 \
    template class BasicSolver<Real>;                                                       \
    template Vec2 robot_center_of_mass<Real>(const BasicSimState<Real>&);                   \
    template void recenter_window<Real>(BasicSimState<Real>&, const WorldConfig&);          \
    template std::string diagnostics_dump<Real>(const BasicSimState<Real>&);

MORPHSIM_INSTANTIATE(double)
MORPHSIM_INSTANTIATE(float)

#undef MORPHSIM_INSTANTIATE

}  // namespace morphsim
