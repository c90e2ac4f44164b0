#include "morphsim/environments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "morphsim/errors.hpp"
#include "morphsim/rng.hpp"

namespace morphsim {

namespace {

constexpr double kGround = 0.05;
constexpr double kDx = 1.0 / 128;
// Per-step clip on distance deltas and on velocities used in rewards.
constexpr double kDeltaClip = 0.1;
constexpr double kVelocityClip = 10.0;

struct TaskNames {
    TaskKind task;
    const char* snake;
    const char* display;
};

constexpr TaskNames kTaskNames[] = {
    {TaskKind::shape_match, "shape_match", "ShapeMatch"}, {TaskKind::run, "run", "Run"},
    {TaskKind::kick, "kick", "Kick"},                     {TaskKind::dig, "dig", "Dig"},
    {TaskKind::obstacle, "obstacle", "Obstacle"},         {TaskKind::grow, "grow", "Grow"},
    {TaskKind::catch_cargo, "catch", "Catch"},            {TaskKind::slot, "slot", "Slot"},
};

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double clip(double v, double bound) { return std::clamp(v, -bound, bound); }

Geometry circle(Vec2 center, double radius) { return {Geometry::Shape::circle, center, Vec2(radius, 0.0)}; }
Geometry rect(Vec2 center, Vec2 size) { return {Geometry::Shape::rect, center, size}; }
Geometry rect_lohi(Vec2 lo, Vec2 hi) { return rect(0.5 * (lo + hi), hi - lo); }

SceneObject obstacle(Vec2 lo, Vec2 hi) {
    return {SceneObject::Kind::static_obstacle, rect_lohi(lo, hi), MaterialSpec{}};
}

// Side walls and ceiling that keep particles inside a static unit-square grid.
void add_walls(EnvSpec& s) {
    s.scene.push_back(obstacle(Vec2(-1.0, -1.0), Vec2(0.03, 2.0)));
    s.scene.push_back(obstacle(Vec2(0.97, -1.0), Vec2(2.0, 2.0)));
    s.scene.push_back(obstacle(Vec2(-1.0, 0.97), Vec2(2.0, 2.0)));
}

MaterialSpec passive_material() {
    MaterialSpec m;
    m.youngs = 1e4;
    m.poisson = 0.2;
    return m;
}

const char* shape_name(Geometry::Shape s) { return s == Geometry::Shape::circle ? "circle" : "rect"; }

Geometry::Shape parse_shape(const std::string& key, const std::string& v) {
    if (v == "circle") return Geometry::Shape::circle;
    if (v == "rect" || v == "square") return Geometry::Shape::rect;
    throw ConfigError(key + ": expected circle or rect, got '" + v + "'");
}

SceneObject::Kind parse_kind(const std::string& key, const std::string& v) {
    for (auto k : {SceneObject::Kind::static_obstacle, SceneObject::Kind::passive_soft_body,
                   SceneObject::Kind::soil_region, SceneObject::Kind::target_marker}) {
        if (v == to_string(k)) return k;
    }
    throw ConfigError(key + ": unknown object kind '" + v + "'");
}

void put_material(ConfigMap& m, const std::string& prefix, const MaterialSpec& mat) {
    m[prefix + "youngs"] = format_double(mat.youngs);
    m[prefix + "poisson"] = format_double(mat.poisson);
    m[prefix + "yield"] = format_double(mat.yield_stress);
    m[prefix + "mass"] = format_double(mat.mass);
    m[prefix + "volume"] = format_double(mat.volume);
}

bool set_material(MaterialSpec& mat, const std::string& field, const std::string& key, const std::string& v) {
    if (field == "youngs") mat.youngs = parse_double(key, v);
    else if (field == "poisson") mat.poisson = parse_double(key, v);
    else if (field == "yield") mat.yield_stress = parse_double(key, v);
    else if (field == "mass") mat.mass = parse_double(key, v);
    else if (field == "volume") mat.volume = parse_double(key, v);
    else return false;
    return true;
}

void set_key(EnvSpec& s, const std::string& key, const std::string& v) {
    auto starts = [&](const char* p) { return key.rfind(p, 0) == 0; };
    if (key == "task") {
        if (parse_task(v) != s.task) throw ConfigError("task: cannot change the task of a spec");
    } else if (key == "robot.shape") s.robot.shape = parse_shape(key, v);
    else if (key == "robot.center") s.robot.center = parse_vec2(key, v);
    else if (key == "robot.size") s.robot.size = parse_vec2(key, v);
    else if (key == "robot.spacing") s.spacing = parse_double(key, v);
    else if (key == "robot.jitter") s.jitter = parse_double(key, v);
    else if (starts("material.")) {
        if (!set_material(s.material, key.substr(9), key, v)) throw ConfigError("unknown config key " + key);
    } else if (key == "world.n_grid") s.world.n_grid = parse_int(key, v);
    else if (key == "world.window_cells") s.world.window_cells = parse_int(key, v);
    else if (key == "world.dt") s.world.dt = parse_double(key, v);
    else if (key == "world.bound") s.world.bound = parse_int(key, v);
    else if (key == "world.friction") s.world.friction_coeff = parse_double(key, v);
    else if (key == "world.max_grid_speed") s.world.max_grid_speed = parse_double(key, v);
    else if (key == "world.moving_grid") s.world.moving_grid = parse_bool(key, v);
    else if (key == "world.ground_y") s.world.ground_y = parse_double(key, v);
    else if (key == "world.gravity") s.world.gravity = parse_vec2(key, v);
    else if (key == "action.a_max") s.a_max = parse_double(key, v);
    else if (key == "action.strength") s.actuation_strength = parse_double(key, v);
    else if (key == "episode.max_steps") s.max_episode_steps = parse_int(key, v);
    else if (key == "episode.substeps") s.substeps_per_step = parse_int(key, v);
    else if (key == "observation.window_side") s.observation.window_side = parse_double(key, v);
    else if (key == "observation.saturation") s.observation.saturation_count = parse_int(key, v);
    else if (key == "observation.velocity_scale") s.observation.velocity_scale = parse_double(key, v);
    else if (key == "observation.include_scene") s.observation.include_scene = parse_bool(key, v);
    else if (key == "target.shape") s.target_shape = v;
    else if (key == "target.point") s.target_point = parse_vec2(key, v);
    else if (key == "target.margin") s.success_margin = parse_double(key, v);
    else if (starts("reward.")) {
        const std::string name = key.substr(7);
        auto it = s.reward_weights.find(name);
        if (it == s.reward_weights.end()) throw ConfigError("unknown config key " + key);
        it->second = parse_double(key, v);
    } else {
        throw ConfigError("unknown config key " + key);
    }
}

// object.<index>.<field>
bool split_object_key(const std::string& key, std::size_t& index, std::string& field) {
    if (key.rfind("object.", 0) != 0) return false;
    const auto dot = key.find('.', 7);
    if (dot == std::string::npos) throw ConfigError("unknown config key " + key);
    index = static_cast<std::size_t>(parse_int(key, key.substr(7, dot - 7)));
    field = key.substr(dot + 1);
    return true;
}

void set_object_key(SceneObject& o, const std::string& field, const std::string& key, const std::string& v) {
    if (field == "kind") o.kind = parse_kind(key, v);
    else if (field == "shape") o.geometry.shape = parse_shape(key, v);
    else if (field == "center") o.geometry.center = parse_vec2(key, v);
    else if (field == "size") o.geometry.size = parse_vec2(key, v);
    else if (!set_material(o.material, field, key, v)) throw ConfigError("unknown config key " + key);
}

void fill(std::vector<Particle>& out, const Geometry& g, double spacing, double jitter, std::uint16_t material,
          Role role, Rng& rng) {
    const Box b = g.bounds();
    const int nx = static_cast<int>(std::floor((b.hi.x() - b.lo.x()) / spacing + 1e-9));
    const int ny = static_cast<int>(std::floor((b.hi.y() - b.lo.y()) / spacing + 1e-9));
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const Vec2 lattice = b.lo + Vec2((i + 0.5) * spacing, (j + 0.5) * spacing);
            if (!g.contains(lattice)) continue;
            Particle p;
            const double jx = rng.uniform(-0.5, 0.5), jy = rng.uniform(-0.5, 0.5);
            p.x = lattice + jitter * spacing * Vec2(jx, jy);
            p.material = material;
            p.role = role;
            out.push_back(p);
        }
    }
}

int material_index_of(const EnvSpec& spec, std::size_t object) {
    int idx = 1;
    for (std::size_t k = 0; k < spec.scene.size(); ++k) {
        const auto kind = spec.scene[k].kind;
        if (kind != SceneObject::Kind::passive_soft_body && kind != SceneObject::Kind::soil_region) continue;
        if (k == object) return idx;
        ++idx;
    }
    return -1;
}

std::size_t first_object(const EnvSpec& spec, SceneObject::Kind kind) {
    for (std::size_t k = 0; k < spec.scene.size(); ++k)
        if (spec.scene[k].kind == kind) return k;
    throw ConfigError(std::string(to_string(spec.task)) + ": scene needs a " + to_string(kind));
}

Vec2 material_com(const SimState& s, int material) {
    Vec2 sum = Vec2::Zero();
    std::size_t count = 0;
    for (const auto& p : s.particles) {
        if (p.material != material) continue;
        sum += p.x;
        ++count;
    }
    if (count == 0) throw InvalidState("no particles for material " + std::to_string(material));
    return sum / static_cast<double>(count);
}

double min_robot_distance(const SimState& s, const Vec2& target) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < s.robot_count; ++p) best = std::min(best, (s.particles[p].x - target).squaredNorm());
    return std::sqrt(best);
}

double mean_robot_vx(const SimState& s) {
    double sum = 0.0;
    for (std::size_t p = 0; p < s.robot_count; ++p) sum += s.particles[p].v.x();
    return sum / static_cast<double>(s.robot_count);
}

}  // namespace

const char* to_string(TaskKind task) {
    for (const auto& t : kTaskNames)
        if (t.task == task) return t.snake;
    return "unknown";
}

const char* display_name(TaskKind task) {
    for (const auto& t : kTaskNames)
        if (t.task == task) return t.display;
    return "Unknown";
}

TaskKind parse_task(const std::string& name) {
    const std::string key = lower(name);
    for (const auto& t : kTaskNames) {
        if (key == t.snake || key == lower(t.display)) return t.task;
    }
    if (key == "catch_cargo") return TaskKind::catch_cargo;
    throw ConfigError("unknown task '" + name + "'");
}

const char* to_string(SceneObject::Kind kind) {
    switch (kind) {
        case SceneObject::Kind::static_obstacle: return "static_obstacle";
        case SceneObject::Kind::passive_soft_body: return "passive_soft_body";
        case SceneObject::Kind::soil_region: return "soil_region";
        case SceneObject::Kind::target_marker: return "target_marker";
    }
    return "unknown";
}

bool Geometry::contains(const Vec2& p) const {
    if (shape == Shape::circle) return (p - center).squaredNorm() <= size.x() * size.x();
    return std::abs(p.x() - center.x()) <= 0.5 * size.x() && std::abs(p.y() - center.y()) <= 0.5 * size.y();
}

Box Geometry::bounds() const {
    const Vec2 half = shape == Shape::circle ? Vec2::Constant(size.x()) : Vec2(0.5 * size);
    return {center - half, center + half};
}

MaterialParams MaterialSpec::params() const {
    return MaterialParams::from_young(youngs, poisson, yield_stress, mass, volume);
}

bool EnvSpec::operator==(const EnvSpec& o) const { return flatten(*this) == flatten(o); }

double EnvSpec::weight(const std::string& name) const {
    const auto it = reward_weights.find(name);
    if (it == reward_weights.end()) throw ConfigError("missing reward weight " + name);
    return it->second;
}

void EnvSpec::validate() const {
    world.validate();
    material.params().validate();
    for (const auto& o : scene) {
        if (o.kind == SceneObject::Kind::passive_soft_body || o.kind == SceneObject::Kind::soil_region)
            o.material.params().validate();
        if (!(o.geometry.size.x() > 0) || (o.geometry.shape == Geometry::Shape::rect && !(o.geometry.size.y() > 0)))
            throw ConfigError("scene object with empty geometry");
    }
    if (!(robot.size.x() > 0) || (robot.shape == Geometry::Shape::rect && !(robot.size.y() > 0)))
        throw ConfigError("robot geometry is empty");
    if (!(spacing > 0) || !(jitter >= 0 && jitter < 1)) throw ConfigError("robot spacing/jitter out of range");
    if (!(a_max > 0) || !(actuation_strength >= 0)) throw ConfigError("a_max must be > 0, strength >= 0");
    if (max_episode_steps <= 0) throw ConfigError("episode.max_steps must be > 0");
    if (substeps_per_step <= 0) throw ConfigError("episode.substeps must be > 0");
    if (!(observation.window_side > 0) || observation.saturation_count <= 0)
        throw ConfigError("observation window and saturation must be positive");
    if (task == TaskKind::shape_match) target_bitmap(target_shape);
}

EnvSpec default_spec(TaskKind task) {
    EnvSpec s;
    s.task = task;
    s.world.n_grid = 128;
    s.world.gravity = Vec2(0.0, -9.8);
    s.world.ground_y = kGround;
    // Half a cell per substep. Only violent actuation reaches it; it keeps such bursts from inverting particles.
    s.world.max_grid_speed = 0.5 * s.world.dx() / s.world.dt;
    s.observation.velocity_scale = 0.5;
    const double lift = kDx;  // robots start one cell above the ground
    switch (task) {
        case TaskKind::shape_match:
            s.robot = circle(Vec2(0.5, 0.5), 0.06);
            s.material.yield_stress = 1.5;
            s.actuation_strength = 200.0;
            s.world.gravity = Vec2::Zero();
            s.world.ground_y = -std::numeric_limits<double>::infinity();
            add_walls(s);
            s.scene.push_back(obstacle(Vec2(-1.0, -1.0), Vec2(2.0, 0.03)));
            s.max_episode_steps = 20;
            s.target_shape = "T";
            s.reward_weights = {{"iou", 1.0}};
            break;
        case TaskKind::run:
            s.robot = circle(Vec2(0.25, kGround + 0.07 + lift), 0.07);
            s.material.yield_stress = 1.6;
            s.world.moving_grid = true;
            s.max_episode_steps = 50;
            s.reward_weights = {{"progress", 10.0}, {"speed", 0.1}};
            break;
        case TaskKind::kick:
            s.robot = circle(Vec2(0.2, kGround + 0.06 + lift), 0.06);
            s.material.yield_stress = 1.6;
            add_walls(s);
            s.scene.push_back({SceneObject::Kind::passive_soft_body,
                               rect(Vec2(0.36, kGround + 0.03 + lift), Vec2(0.06, 0.06)), passive_material()});
            s.max_episode_steps = 50;
            s.reward_weights = {{"cargo_progress", 10.0}, {"approach", 0.1}};
            break;
        case TaskKind::dig: {
            s.robot = circle(Vec2(0.5, 0.22 + 0.055 + lift), 0.055);
            s.material.yield_stress = 1.6;
            add_walls(s);
            s.scene.push_back(obstacle(Vec2(0.33, kGround), Vec2(0.35, 0.26)));
            s.scene.push_back(obstacle(Vec2(0.65, kGround), Vec2(0.67, 0.26)));
            MaterialSpec soil;
            soil.youngs = 5e3;
            soil.poisson = 0.3;
            soil.yield_stress = 1.45;
            s.scene.push_back({SceneObject::Kind::soil_region, rect_lohi(Vec2(0.35, kGround), Vec2(0.65, 0.22)), soil});
            s.target_point = Vec2(0.62, 0.08);
            s.scene.push_back({SceneObject::Kind::target_marker, circle(s.target_point, 0.01), MaterialSpec{}});
            s.max_episode_steps = 60;
            s.reward_weights = {{"approach", 10.0}};
            break;
        }
        case TaskKind::obstacle:
            s.robot = rect(Vec2(0.2, kGround + 0.06 + lift), Vec2(0.12, 0.12));
            s.material.yield_stress = 1.6;
            s.world.moving_grid = true;
            s.scene.push_back(obstacle(Vec2(0.4, -1.0), Vec2(0.48, kGround + 0.08)));
            s.max_episode_steps = 60;
            s.reward_weights = {{"bypass", 10.0}, {"forward", 1.0}};
            break;
        case TaskKind::grow:
            s.robot = rect(Vec2(0.25, kGround + 0.05 + lift), Vec2(0.1, 0.1));
            s.material.yield_stress = 1.6;
            s.world.gravity = Vec2::Zero();
            add_walls(s);
            s.scene.push_back(obstacle(Vec2(0.36, kGround), Vec2(0.42, 0.3)));
            s.scene.push_back(obstacle(Vec2(0.5, 0.45), Vec2(0.62, 0.5)));
            s.target_point = Vec2(0.56, 0.36);
            s.scene.push_back({SceneObject::Kind::target_marker, circle(s.target_point, 0.01), MaterialSpec{}});
            s.max_episode_steps = 50;
            s.reward_weights = {{"reach", 10.0}};
            break;
        case TaskKind::catch_cargo:
            s.robot = circle(Vec2(0.2, kGround + 0.055 + lift), 0.055);
            s.material.yield_stress = 1.6;
            add_walls(s);
            s.scene.push_back(obstacle(Vec2(0.40, 0.11), Vec2(0.42, 0.35)));
            s.scene.push_back(obstacle(Vec2(0.78, kGround), Vec2(0.80, 0.35)));
            s.scene.push_back(obstacle(Vec2(0.40, 0.35), Vec2(0.80, 0.37)));
            s.scene.push_back({SceneObject::Kind::passive_soft_body,
                               rect(Vec2(0.5, kGround + 0.02 + lift), Vec2(0.04, 0.04)), passive_material()});
            s.target_point = Vec2(0.7, kGround + 0.02);
            s.scene.push_back({SceneObject::Kind::target_marker, circle(s.target_point, 0.01), MaterialSpec{}});
            s.success_margin = 0.03;
            s.max_episode_steps = 80;
            s.reward_weights = {{"robot_cargo", 5.0}, {"cargo_goal", 10.0}};
            break;
        case TaskKind::slot:
            s.robot = circle(Vec2(0.2, kGround + 0.055 + lift), 0.055);
            s.material.yield_stress = 1.6;
            add_walls(s);
            s.scene.push_back(obstacle(Vec2(0.45, 0.09), Vec2(0.47, 0.3)));
            s.scene.push_back(obstacle(Vec2(0.73, kGround), Vec2(0.75, 0.3)));
            s.scene.push_back({SceneObject::Kind::passive_soft_body,
                               rect(Vec2(0.6, 0.3 + 0.015 + lift), Vec2(0.3, 0.03)), passive_material()});
            s.success_margin = 0.05;
            s.max_episode_steps = 80;
            s.reward_weights = {{"approach", 5.0}, {"cap_move", 10.0}, {"success", 10.0}};
            break;
    }
    return s;
}

ConfigMap flatten(const EnvSpec& s) {
    ConfigMap m;
    m["task"] = to_string(s.task);
    m["robot.shape"] = shape_name(s.robot.shape);
    m["robot.center"] = format_vec2(s.robot.center);
    m["robot.size"] = format_vec2(s.robot.size);
    m["robot.spacing"] = format_double(s.spacing);
    m["robot.jitter"] = format_double(s.jitter);
    put_material(m, "material.", s.material);
    m["world.n_grid"] = std::to_string(s.world.n_grid);
    m["world.window_cells"] = std::to_string(s.world.window_cells);
    m["world.dt"] = format_double(s.world.dt);
    m["world.bound"] = std::to_string(s.world.bound);
    m["world.friction"] = format_double(s.world.friction_coeff);
    m["world.max_grid_speed"] = format_double(s.world.max_grid_speed);
    m["world.moving_grid"] = s.world.moving_grid ? "true" : "false";
    m["world.ground_y"] = format_double(s.world.ground_y);
    m["world.gravity"] = format_vec2(s.world.gravity);
    m["action.a_max"] = format_double(s.a_max);
    m["action.strength"] = format_double(s.actuation_strength);
    m["episode.max_steps"] = std::to_string(s.max_episode_steps);
    m["episode.substeps"] = std::to_string(s.substeps_per_step);
    m["observation.window_side"] = format_double(s.observation.window_side);
    m["observation.saturation"] = std::to_string(s.observation.saturation_count);
    m["observation.velocity_scale"] = format_double(s.observation.velocity_scale);
    m["observation.include_scene"] = s.observation.include_scene ? "true" : "false";
    m["target.shape"] = s.target_shape;
    m["target.point"] = format_vec2(s.target_point);
    m["target.margin"] = format_double(s.success_margin);
    for (const auto& [name, w] : s.reward_weights) m["reward." + name] = format_double(w);
    for (std::size_t k = 0; k < s.scene.size(); ++k) {
        const std::string p = "object." + std::to_string(k) + ".";
        const SceneObject& o = s.scene[k];
        m[p + "kind"] = to_string(o.kind);
        m[p + "shape"] = shape_name(o.geometry.shape);
        m[p + "center"] = format_vec2(o.geometry.center);
        m[p + "size"] = format_vec2(o.geometry.size);
        if (o.kind == SceneObject::Kind::passive_soft_body || o.kind == SceneObject::Kind::soil_region)
            put_material(m, p, o.material);
    }
    return m;
}

EnvSpec unflatten(const ConfigMap& cfg) {
    const auto task_it = cfg.find("task");
    if (task_it == cfg.end()) throw ConfigError("config is missing the `task` key");
    EnvSpec s = default_spec(parse_task(task_it->second));

    // Objects are listed explicitly in a config; the defaults' scene is
    // replaced only when the config names any object.
    std::map<std::size_t, std::map<std::string, std::string>> objects;
    for (const auto& [key, value] : cfg) {
        std::size_t index = 0;
        std::string field;
        if (split_object_key(key, index, field)) {
            objects[index][field] = value;
        } else {
            set_key(s, key, value);
        }
    }
    if (!objects.empty()) {
        std::vector<SceneObject> scene;
        std::size_t expect = 0;
        for (const auto& [index, fields] : objects) {
            if (index != expect++) throw ConfigError("object indices must be contiguous from 0");
            SceneObject o = index < s.scene.size() ? s.scene[index] : SceneObject{};
            if (index >= s.scene.size() && !fields.contains("kind"))
                throw ConfigError("object." + std::to_string(index) + ".kind is required");
            for (const auto& [field, value] : fields)
                set_object_key(o, field, "object." + std::to_string(index) + "." + field, value);
            scene.push_back(o);
        }
        s.scene = std::move(scene);
    }
    s.validate();
    return s;
}

EnvSpec apply_overrides(const EnvSpec& spec, const ConfigMap& overrides) {
    if (overrides.empty()) return spec;
    ConfigMap flat = flatten(spec);
    for (const auto& [key, value] : overrides) {
        auto it = flat.find(key);
        if (it == flat.end()) throw ConfigError("unknown config key " + key);
        it->second = value;
    }
    return unflatten(flat);
}

std::uint64_t spec_hash(const EnvSpec& spec) { return config_hash(flatten(spec)); }

EnvSpec load_spec(const std::string& path, const ConfigMap& overrides) {
    return apply_overrides(unflatten(load_config_file(path)), overrides);
}

double reward_bound(const EnvSpec& s) {
    auto w = [&](const char* name) { return std::abs(s.weight(name)); };
    switch (s.task) {
        case TaskKind::shape_match: return w("iou");
        case TaskKind::run: return w("progress") * kDeltaClip + w("speed") * kVelocityClip;
        case TaskKind::kick: return w("cargo_progress") * kDeltaClip + w("approach") * 1.0;
        case TaskKind::dig: return w("approach") * kDeltaClip;
        case TaskKind::obstacle: return std::max(w("bypass"), w("forward")) * kDeltaClip;
        case TaskKind::grow: return w("reach") * kDeltaClip;
        case TaskKind::catch_cargo: return (w("robot_cargo") + w("cargo_goal")) * kDeltaClip;
        case TaskKind::slot: return (w("approach") + w("cap_move")) * kDeltaClip + w("success");
    }
    return 0.0;
}

RewardResult compute_reward(const EnvSpec& s, const SimState& prev, const SimState& cur) {
    RewardResult r;
    auto term = [&](const char* name, double value) { r.breakdown.emplace_back(name, value); };
    const Vec2 com_prev = robot_center_of_mass(prev);
    const Vec2 com_cur = robot_center_of_mass(cur);
    switch (s.task) {
        case TaskKind::shape_match: {
            const ActionWindow window{com_cur, s.observation.window_side};
            const double value = iou(robot_bitmap(cur, window), target_bitmap(s.target_shape));
            r.iou = value;
            term("iou", s.weight("iou") * value);
            break;
        }
        case TaskKind::run:
            term("progress", s.weight("progress") * clip(com_cur.x() - com_prev.x(), kDeltaClip));
            term("speed", s.weight("speed") * clip(mean_robot_vx(cur), kVelocityClip));
            break;
        case TaskKind::kick: {
            const int cargo = material_index_of(s, first_object(s, SceneObject::Kind::passive_soft_body));
            const Vec2 c_prev = material_com(prev, cargo), c_cur = material_com(cur, cargo);
            term("cargo_progress", s.weight("cargo_progress") * clip(c_cur.x() - c_prev.x(), kDeltaClip));
            term("approach", -s.weight("approach") * std::min(1.0, (com_cur - c_cur).norm()));
            break;
        }
        case TaskKind::dig:
            term("approach", s.weight("approach") *
                                 clip((com_prev - s.target_point).norm() - (com_cur - s.target_point).norm(),
                                      kDeltaClip));
            break;
        case TaskKind::obstacle: {
            const double far_edge = s.scene.at(first_object(s, SceneObject::Kind::static_obstacle)).geometry.bounds().hi.x();
            const double dx = clip(com_cur.x() - com_prev.x(), kDeltaClip);
            const bool past = com_cur.x() > far_edge;
            term("bypass", past ? s.weight("bypass") * std::max(0.0, dx) : 0.0);
            term("forward", past ? 0.0 : s.weight("forward") * dx);
            break;
        }
        case TaskKind::grow:
            term("reach", s.weight("reach") * clip(min_robot_distance(prev, s.target_point) -
                                                       min_robot_distance(cur, s.target_point),
                                                   kDeltaClip));
            break;
        case TaskKind::catch_cargo: {
            const int cargo = material_index_of(s, first_object(s, SceneObject::Kind::passive_soft_body));
            const Vec2 c_prev = material_com(prev, cargo), c_cur = material_com(cur, cargo);
            term("robot_cargo", s.weight("robot_cargo") *
                                    clip((com_prev - c_prev).norm() - (com_cur - c_cur).norm(), kDeltaClip));
            const double d2 = (c_cur - s.target_point).norm();
            term("cargo_goal", s.weight("cargo_goal") * clip((c_prev - s.target_point).norm() - d2, kDeltaClip));
            r.success = d2 < s.success_margin;
            break;
        }
        case TaskKind::slot: {
            const std::size_t cap_obj = first_object(s, SceneObject::Kind::passive_soft_body);
            const int cap = material_index_of(s, cap_obj);
            const Geometry& g = s.scene[cap_obj].geometry;
            const Vec2 c_prev = material_com(prev, cap), c_cur = material_com(cur, cap);
            term("approach", s.weight("approach") *
                                 clip((com_prev - c_prev).norm() - (com_cur - c_cur).norm(), kDeltaClip));
            term("cap_move", s.weight("cap_move") *
                                 clip((c_cur - g.center).norm() - (c_prev - g.center).norm(), kDeltaClip));
            // Removed: lifted clear of the rim, or slid off by half its width.
            r.success = c_cur.y() - g.center.y() > s.success_margin ||
                        std::abs(c_cur.x() - g.center.x()) > 0.5 * g.size.x();
            term("success", r.success ? s.weight("success") : 0.0);
            break;
        }
    }
    for (const auto& [name, value] : r.breakdown) r.reward += value;
    return r;
}

WorldConfig world_config(const EnvSpec& spec) {
    WorldConfig w = spec.world;
    w.obstacles.clear();
    for (const auto& o : spec.scene)
        if (o.kind == SceneObject::Kind::static_obstacle) w.obstacles.push_back(o.geometry.bounds());
    return w;
}

SimState build_scene(const EnvSpec& spec, std::uint64_t scene_seed) {
    spec.validate();
    Rng rng(scene_seed);
    SimState s;
    const double h = spec.spacing * spec.world.dx();
    s.materials.push_back(spec.material.params());
    fill(s.particles, spec.robot, h, spec.jitter, 0, Role::robot, rng);
    s.robot_count = s.particles.size();
    if (s.robot_count == 0) throw ConfigError("robot geometry produced no particles");
    for (const auto& o : spec.scene) {
        if (o.kind != SceneObject::Kind::passive_soft_body && o.kind != SceneObject::Kind::soil_region) continue;
        const auto material = static_cast<std::uint16_t>(s.materials.size());
        s.materials.push_back(o.material.params());
        fill(s.particles, o.geometry, h, spec.jitter, material,
             o.kind == SceneObject::Kind::soil_region ? Role::soil : Role::passive_object, rng);
    }
    const WorldConfig w = world_config(spec);
    if (w.moving_grid) {
        // Start with the window centered on the robot.
        const Vec2 com = robot_center_of_mass(s);
        const double half = 0.5 * w.cells();
        s.grid_offset = Vec2i(static_cast<int>(std::lround(com.x() / w.dx() - half)),
                              static_cast<int>(std::lround(com.y() / w.dx() - half)));
    }
    return s;
}

Environment::Environment(EnvSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    spec_.validate();
    world_ = world_config(spec_);
    reset();
}

ActionWindow Environment::action_window() const {
    return {robot_center_of_mass(state_), spec_.observation.window_side};
}

Bitmap Environment::robot_shape() const { return robot_bitmap(state_, action_window()); }

const ObservationImage& Environment::reset() {
    state_ = build_scene(spec_, derive_seed(seed_, SeedStream::scene));
    steps_ = 0;
    done_ = false;
    particle_actions_.assign(state_.robot_count, Vec2::Zero());
    observation_ = rasterize(state_, action_window(), spec_.observation, world_.obstacles);
    initial_shape_ = robot_shape();
    return observation_;
}

StepResult Environment::step(const ActionGrid& coarse, const ActionGrid& residual, const GateMask& mask) {
    return step(compose_coarse_fine(coarse, residual, mask, spec_.a_max));
}

StepResult Environment::step(const ActionGrid& action) {
    if (done_) throw InvalidState("step() after the episode ended; call reset()");
    if (!is_action_resolution(action.resolution) ||
        action.data.size() != static_cast<std::size_t>(action.resolution) * action.resolution * 2) {
        throw ConfigError("step: malformed action grid");
    }
    const ActionWindow window = action_window();
    const ActionGrid field = clamp_action(upsample(action, kFieldResolution), spec_.a_max);
    distribute_to_particles(field, state_, window, particle_actions_);
    scaled_actions_.resize(particle_actions_.size());
    for (std::size_t p = 0; p < particle_actions_.size(); ++p)
        scaled_actions_[p] = spec_.actuation_strength * particle_actions_[p];

    const SimState prev = state_;
    try {
        for (int k = 0; k < spec_.substeps_per_step; ++k) solver_.substep(state_, scaled_actions_, world_);
    } catch (...) {
        done_ = true;
        throw;
    }
    recenter_window(state_, world_);
    ++steps_;

    const RewardResult r = compute_reward(spec_, prev, state_);
    StepResult out;
    out.reward = r.reward;
    out.breakdown = r.breakdown;
    out.iou = r.iou;
    out.terminated = r.success;
    out.truncated = !out.terminated && steps_ >= spec_.max_episode_steps;
    out.com = robot_center_of_mass(state_);
    observation_ = rasterize(state_, action_window(), spec_.observation, world_.obstacles);
    out.observation = observation_;
    done_ = out.terminated || out.truncated;
    return out;
}

}  // namespace morphsim
