#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morphsim/actuation.hpp"
#include "morphsim/config.hpp"
#include "morphsim/mpm.hpp"
#include "morphsim/observation.hpp"

namespace morphsim {

enum class TaskKind : std::uint8_t { shape_match, run, kick, dig, obstacle, grow, catch_cargo, slot };

inline constexpr std::array<TaskKind, 8> kAllTasks = {
    TaskKind::shape_match, TaskKind::run,  TaskKind::kick,        TaskKind::dig,
    TaskKind::obstacle,    TaskKind::grow, TaskKind::catch_cargo, TaskKind::slot};

/// snake_case name, e.g. "shape_match".
const char* to_string(TaskKind task);
/// Display name, e.g. "ShapeMatch".
const char* display_name(TaskKind task);
/// Accepts either spelling, case-insensitive; throws ConfigError otherwise.
TaskKind parse_task(const std::string& name);

struct Geometry {
    enum class Shape : std::uint8_t { circle, rect };
    Shape shape = Shape::circle;
    Vec2 center = Vec2::Zero();
    /// Circle: (radius, unused). Rect: full width and height.
    Vec2 size = Vec2::Zero();

    bool contains(const Vec2& p) const;
    Box bounds() const;
    bool operator==(const Geometry& o) const {
        return shape == o.shape && center == o.center && size == o.size;
    }
};

struct MaterialSpec {
    double youngs = 1e3;
    double poisson = 0.2;
    double yield_stress = std::numeric_limits<double>::infinity();
    double mass = 2.0;
    double volume = 1.0;

    MaterialParams params() const;
    bool operator==(const MaterialSpec&) const = default;
};

struct SceneObject {
    enum class Kind : std::uint8_t { static_obstacle, passive_soft_body, soil_region, target_marker };
    Kind kind = Kind::static_obstacle;
    Geometry geometry;
    /// Used by passive bodies and soil only.
    MaterialSpec material;

    bool operator==(const SceneObject&) const = default;
};

const char* to_string(SceneObject::Kind kind);

struct EnvSpec {
    TaskKind task = TaskKind::shape_match;

    Geometry robot;
    /// Particle lattice spacing in cells, and jitter as a fraction of it.
    double spacing = 0.5;
    double jitter = 0.5;
    MaterialSpec material;
    std::vector<SceneObject> scene;

    /// World settings; obstacles are derived from the scene.
    WorldConfig world;

    double a_max = 1.0;
    /// Stress per unit of normalized action.
    double actuation_strength = 100.0;
    int max_episode_steps = 50;
    int substeps_per_step = 100;

    ObservationConfig observation;

    std::map<std::string, double> reward_weights;
    /// Target bitmap name (ShapeMatch).
    std::string target_shape;
    /// Reach target (Grow, Dig) or cargo goal (Catch).
    Vec2 target_point = Vec2::Zero();
    /// Success tolerance (Catch) or lift margin (Slot).
    double success_margin = 0.0;

    bool operator==(const EnvSpec& o) const;
    void validate() const;
    double weight(const std::string& name) const;
};

/// Defaults for each task.
EnvSpec default_spec(TaskKind task);

/// Lossless key/value form of a spec; config_hash() of it binds replays.
ConfigMap flatten(const EnvSpec& spec);
/// Inverse of flatten(). Missing keys take the task defaults (the `task` key
/// is required); unknown keys raise ConfigError.
EnvSpec unflatten(const ConfigMap& cfg);
/// Replaces existing keys of `spec`; unknown keys raise ConfigError.
EnvSpec apply_overrides(const EnvSpec& spec, const ConfigMap& overrides);
std::uint64_t spec_hash(const EnvSpec& spec);

/// Loads a task config file, then applies overrides.
EnvSpec load_spec(const std::string& path, const ConfigMap& overrides = {});

/// Bundled monochrome target bitmaps (32 x 32, centered on their centroid).
std::vector<std::string> target_names();
/// 64 x 64 bitmap in observation layout with the target centered in the window.
Bitmap target_bitmap(const std::string& name);

/// Documented upper bound on |reward| of a single step.
double reward_bound(const EnvSpec& spec);

struct RewardResult {
    double reward = 0.0;
    /// Terms in a stable, task-specific order; they sum to `reward`.
    std::vector<std::pair<std::string, double>> breakdown;
    bool success = false;
    std::optional<double> iou;
};

/// Per-task reward for the transition prev -> cur.
RewardResult compute_reward(const EnvSpec& spec, const SimState& prev, const SimState& cur);

/// Builds the initial particle state for a spec; deterministic in the seed.
SimState build_scene(const EnvSpec& spec, std::uint64_t scene_seed);
/// WorldConfig with scene obstacles attached.
WorldConfig world_config(const EnvSpec& spec);

struct StepResult {
    ObservationImage observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    std::vector<std::pair<std::string, double>> breakdown;
    Vec2 com = Vec2::Zero();
    std::optional<double> iou;
};

/// One task instance. Copyable; copies evolve independently.
class Environment {
public:
    /// `seed` is the master seed; the scene uses its scene stream.
    Environment(EnvSpec spec, std::uint64_t seed);

    /// Rebuilds the scene and returns the first observation.
    const ObservationImage& reset();

    /// Holds `action` (any supported resolution) for one control step.
    StepResult step(const ActionGrid& action);
    /// Coarse-to-fine form: compose, then step.
    StepResult step(const ActionGrid& coarse, const ActionGrid& residual, const GateMask& mask);

    const EnvSpec& spec() const { return spec_; }
    const SimState& state() const { return state_; }
    const WorldConfig& world() const { return world_; }
    const ObservationImage& observation() const { return observation_; }
    std::uint64_t seed() const { return seed_; }
    int step_count() const { return steps_; }
    bool done() const { return done_; }

    /// Window the next action will be applied in (centered on the robot COM).
    ActionWindow action_window() const;
    /// Per-robot-particle actions used during the last step (before strength scaling).
    const std::vector<Vec2>& last_particle_actions() const { return particle_actions_; }
    /// Robot occupancy in its own COM-centered window.
    Bitmap robot_shape() const;
    const Bitmap& initial_shape() const { return initial_shape_; }

    void set_threads(int threads) { world_.threads = threads < 1 ? 1 : threads; }

private:
    EnvSpec spec_;
    std::uint64_t seed_;
    WorldConfig world_;
    SimState state_;
    Solver solver_;
    ObservationImage observation_;
    Bitmap initial_shape_;
    std::vector<Vec2> particle_actions_;
    std::vector<Vec2> scaled_actions_;
    int steps_ = 0;
    bool done_ = false;
};

}  // namespace morphsim
