#include "morphsim/actuation.hpp"

#include <algorithm>
#include <cmath>

#include "morphsim/errors.hpp"

namespace morphsim {

namespace {

void check_resolution(int n, const char* what) {
    if (!is_action_resolution(n)) {
        throw ConfigError(std::string(what) + ": unsupported resolution " + std::to_string(n) +
                          " (expected 4, 8, 16 or 64)");
    }
}

// Catmull-Rom weights for the four nodes around parameter t in [0, 1).
void catmull_rom(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

struct CubicAxis {
    int idx[4];
    double w[4];
};

CubicAxis cubic_axis(double u, int n) {
    // Node k sits at u = (k + 0.5) / n.
    double s = std::clamp(u * n - 0.5, 0.0, static_cast<double>(n - 1));
    int i0 = static_cast<int>(std::floor(s));
    if (i0 == n - 1) i0 = n - 2;  // t = 1 on the last interval instead of t = 0 past it
    const double t = s - i0;
    CubicAxis a;
    catmull_rom(t, a.w);
    for (int k = 0; k < 4; ++k) a.idx[k] = std::clamp(i0 - 1 + k, 0, n - 1);
    return a;
}

}  // namespace

bool is_action_resolution(int n) {
    return std::find(std::begin(kActionResolutions), std::end(kActionResolutions), n) !=
           std::end(kActionResolutions);
}

ActionGrid::ActionGrid(int n, double ax, double ay) : resolution(n) {
    check_resolution(n, "ActionGrid");
    data.resize(static_cast<std::size_t>(n) * n * 2);
    for (std::size_t k = 0; k < data.size(); k += 2) {
        data[k] = ax;
        data[k + 1] = ay;
    }
}

ActionGrid::ActionGrid(int n, std::vector<double> values) : resolution(n), data(std::move(values)) {
    check_resolution(n, "ActionGrid");
    if (data.size() != static_cast<std::size_t>(n) * n * 2) {
        throw ConfigError("ActionGrid: expected " + std::to_string(n * n * 2) + " values, got " +
                          std::to_string(data.size()));
    }
}

GateMask::GateMask(int n, double value) : GateMask(n, std::vector<double>(static_cast<std::size_t>(n) * n, value)) {}

GateMask::GateMask(int n, std::vector<double> values) : resolution(n), data(std::move(values)) {
    check_resolution(n, "GateMask");
    if (data.size() != static_cast<std::size_t>(n) * n) {
        throw ConfigError("GateMask: expected " + std::to_string(n * n) + " values, got " +
                          std::to_string(data.size()));
    }
    for (double v : data) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("GateMask: values must lie in [0, 1]");
    }
}

Vec2 bicubic_sample(const ActionGrid& grid, const Vec2& uv) {
    const int n = grid.resolution;
    const CubicAxis ax = cubic_axis(uv.x(), n);
    const CubicAxis ay = cubic_axis(uv.y(), n);
    Vec2 out = Vec2::Zero();
    for (int b = 0; b < 4; ++b) {
        Vec2 row = Vec2::Zero();
        for (int a = 0; a < 4; ++a) row += ax.w[a] * grid.node(ax.idx[a], ay.idx[b]);
        out += ay.w[b] * row;
    }
    return out;
}

ActionGrid upsample(const ActionGrid& grid, int target) {
    check_resolution(target, "upsample");
    if (target < grid.resolution) {
        throw ConfigError("upsample: target " + std::to_string(target) + " below source resolution " +
                          std::to_string(grid.resolution));
    }
    if (target == grid.resolution) return grid;
    ActionGrid out(target);
    for (int iy = 0; iy < target; ++iy) {
        for (int ix = 0; ix < target; ++ix) {
            const Vec2 uv((ix + 0.5) / target, (iy + 0.5) / target);
            const Vec2 v = bicubic_sample(grid, uv);
            out.at(ix, iy, 0) = v.x();
            out.at(ix, iy, 1) = v.y();
        }
    }
    return out;
}

ActionGrid clamp_action(const ActionGrid& grid, double a_max) {
    ActionGrid out = grid;
    for (double& v : out.data) v = std::clamp(v, -a_max, a_max);
    return out;
}

ActionGrid compose_coarse_fine(const ActionGrid& coarse, const ActionGrid& residual,
                               const GateMask& mask, double a_max) {
    if (residual.resolution != 2 * coarse.resolution) {
        throw ConfigError("compose: residual resolution must be twice the coarse resolution");
    }
    if (mask.resolution != residual.resolution) {
        throw ConfigError("compose: mask resolution must equal the residual resolution");
    }
    const ActionGrid up = upsample(coarse, residual.resolution);
    ActionGrid out(residual.resolution);
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        const double m = mask.data[k / 2];
        // Written as two products so m = 0 and m = 1 reproduce their input exactly.
        out.data[k] = m * residual.data[k] + (1.0 - m) * up.data[k];
    }
    return clamp_action(out, a_max);
}

template <class Real>
void distribute_to_particles(const ActionGrid& field, const BasicSimState<Real>& state,
                             const ActionWindow& window, std::vector<Vec2T<Real>>& out) {
    const int n = field.resolution;
    out.resize(state.robot_count);
    const Vec2 lower = window.lower();
    const double scale = n / window.side;
    for (std::size_t p = 0; p < state.robot_count; ++p) {
        const Vec2 x = state.particles[p].x.template cast<double>();
        // Node units: node k at coordinate k.
        const auto sx = quadratic_stencil((x.x() - lower.x()) * scale - 0.5);
        const auto sy = quadratic_stencil((x.y() - lower.y()) * scale - 0.5);
        Vec2 a = Vec2::Zero();
        for (int j = 0; j < 3; ++j) {
            const int iy = std::clamp(sy.base + j, 0, n - 1);
            Vec2 row = Vec2::Zero();
            for (int i = 0; i < 3; ++i) {
                const int ix = std::clamp(sx.base + i, 0, n - 1);
                row += sx.w[i] * field.node(ix, iy);
            }
            a += sy.w[j] * row;
        }
        out[p] = a.template cast<Real>();
    }
}

template void distribute_to_particles<double>(const ActionGrid&, const BasicSimState<double>&,
                                              const ActionWindow&, std::vector<Vec2T<double>>&);
template void distribute_to_particles<float>(const ActionGrid&, const BasicSimState<float>&,
                                             const ActionWindow&, std::vector<Vec2T<float>>&);

std::vector<Vec2> distribute_to_particles(const ActionGrid& field, const SimState& state,
                                          const ActionWindow& window) {
    std::vector<Vec2> out;
    distribute_to_particles(field, state, window, out);
    return out;
}

nlohmann::json to_json(const ActionGrid& grid) {
    return {{"resolution", grid.resolution}, {"components", ActionGrid::components}, {"data", grid.data}};
}

ActionGrid action_grid_from_json(const nlohmann::json& j) {
    try {
        if (j.at("components").get<int>() != ActionGrid::components) {
            throw ConfigError("ActionGrid json: components must be 2");
        }
        return ActionGrid(j.at("resolution").get<int>(), j.at("data").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("ActionGrid json: ") + e.what());
    }
}

nlohmann::json to_json(const GateMask& mask) {
    return {{"resolution", mask.resolution}, {"components", 1}, {"data", mask.data}};
}

GateMask gate_mask_from_json(const nlohmann::json& j) {
    try {
        return GateMask(j.at("resolution").get<int>(), j.at("data").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("GateMask json: ") + e.what());
    }
}

}  // namespace morphsim
