#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphsim/math.hpp"
#include "morphsim/mpm.hpp"

namespace morphsim {

/// Resolutions an ActionGrid may take.
inline constexpr int kActionResolutions[] = {4, 8, 16, 64};
/// Resolution of the field that is distributed onto particles.
inline constexpr int kFieldResolution = 64;

bool is_action_resolution(int n);

/// n x n x 2 muscle field over the observation window. Node (ix, iy) sits at
/// window coordinate ((ix + 0.5) / n, (iy + 0.5) / n); iy = 0 is the bottom
/// row. Storage is row-major: data[(iy * n + ix) * 2 + c].
struct ActionGrid {
    int resolution = 0;
    std::vector<double> data;

    ActionGrid() = default;
    /// Throws ConfigError for an unsupported resolution.
    explicit ActionGrid(int n, double ax = 0.0, double ay = 0.0);
    ActionGrid(int n, std::vector<double> values);

    static constexpr int components = 2;

    double& at(int ix, int iy, int c) { return data[(static_cast<std::size_t>(iy) * resolution + ix) * 2 + c]; }
    double at(int ix, int iy, int c) const {
        return data[(static_cast<std::size_t>(iy) * resolution + ix) * 2 + c];
    }
    Vec2 node(int ix, int iy) const { return {at(ix, iy, 0), at(ix, iy, 1)}; }
    std::size_t size() const { return data.size(); }

    bool operator==(const ActionGrid&) const = default;
};

/// Gate values in [0, 1], one per node; same layout as ActionGrid without
/// the component axis. Saturated sigmoid outputs (exact 0 or 1) are accepted.
struct GateMask {
    int resolution = 0;
    std::vector<double> data;

    GateMask() = default;
    explicit GateMask(int n, double value = 0.5);
    GateMask(int n, std::vector<double> values);

    double& at(int ix, int iy) { return data[static_cast<std::size_t>(iy) * resolution + ix]; }
    double at(int ix, int iy) const { return data[static_cast<std::size_t>(iy) * resolution + ix]; }

    bool operator==(const GateMask&) const = default;
};

/// Catmull-Rom bicubic evaluation at window coordinate uv. Coordinates
/// outside the node lattice clamp to the border nodes.
Vec2 bicubic_sample(const ActionGrid& grid, const Vec2& uv);

/// Resample to `target` nodes per axis by evaluating bicubic_sample at the
/// target node coordinates. Same resolution returns a copy.
ActionGrid upsample(const ActionGrid& grid, int target);

ActionGrid clamp_action(const ActionGrid& grid, double a_max);

/// mask * residual + (1 - mask) * upsample(coarse), then clamped to a_max.
ActionGrid compose_coarse_fine(const ActionGrid& coarse, const ActionGrid& residual,
                               const GateMask& mask, double a_max);

/// Geometry of the action/observation window in world units.
struct ActionWindow {
    Vec2 center = Vec2::Zero();
    double side = 0.5;

    Vec2 lower() const { return center - Vec2::Constant(0.5 * side); }
    /// World position to window coordinates in [0, 1]^2 (unclamped).
    Vec2 to_uv(const Vec2& world) const { return (world - lower()) / side; }
    bool operator==(const ActionWindow& o) const { return center == o.center && side == o.side; }
};

/// B-spline-weighted field value for each robot particle, written to `out`
/// (resized to state.robot_count). Stencil indices clamp to the border, so a
/// particle outside the window receives the edge value.
template <class Real>
void distribute_to_particles(const ActionGrid& field, const BasicSimState<Real>& state,
                             const ActionWindow& window, std::vector<Vec2T<Real>>& out);

std::vector<Vec2> distribute_to_particles(const ActionGrid& field, const SimState& state,
                                          const ActionWindow& window);

// Wire format: {"resolution": n, "components": 2, "data": [row-major values]}.
nlohmann::json to_json(const ActionGrid& grid);
ActionGrid action_grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GateMask& mask);
GateMask gate_mask_from_json(const nlohmann::json& j);

}  // namespace morphsim
