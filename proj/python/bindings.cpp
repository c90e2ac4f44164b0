#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "morphsim/controllers.hpp"
#include "morphsim/episode.hpp"
#include "morphsim/errors.hpp"

namespace py = pybind11;
using namespace morphsim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Actions cross the boundary as (n, n, 2) arrays indexed [row iy, col ix, component].
ActionGrid grid_from_array(const Array& a) {
    if (a.ndim() != 3 || a.shape(0) != a.shape(1) || a.shape(2) != 2)
        throw ConfigError("action must have shape (n, n, 2)");
    const auto n = static_cast<int>(a.shape(0));
    return ActionGrid(n, std::vector<double>(a.data(), a.data() + a.size()));
}

Array array_from_grid(const ActionGrid& g) {
    Array out({g.resolution, g.resolution, 2});
    std::copy(g.data.begin(), g.data.end(), out.mutable_data());
    return out;
}

py::array_t<float> observation_array(const ObservationImage& obs) {
    py::array_t<float> out({ObservationImage::size, ObservationImage::size, ObservationImage::channels});
    std::copy(obs.pixels.begin(), obs.pixels.end(), out.mutable_data());
    return out;
}

EnvSpec make_spec(const std::string& task, const ConfigMap& overrides) {
    return apply_overrides(default_spec(parse_task(task)), overrides);
}

class PyEnvironment {
public:
    PyEnvironment(const std::string& task, std::uint64_t seed, const ConfigMap& overrides)
        : env_(make_spec(task, overrides), seed) {}

    py::array_t<float> reset() { return observation_array(env_.reset()); }

    py::tuple step(const Array& action) {
        const StepResult r = env_.step(grid_from_array(action));
        py::dict info;
        py::dict terms;
        for (const auto& [k, v] : r.breakdown) terms[py::str(k)] = v;
        info["breakdown"] = terms;
        info["com"] = py::make_tuple(r.com.x(), r.com.y());
        if (r.iou) info["iou"] = *r.iou;
        info["step"] = env_.step_count();
        return py::make_tuple(observation_array(r.observation), r.reward, r.terminated, r.truncated, info);
    }

    std::string task() const { return to_string(env_.spec().task); }
    int max_steps() const { return env_.spec().max_episode_steps; }
    double a_max() const { return env_.spec().a_max; }
    std::string config_hash() const { return hash_hex(spec_hash(env_.spec())); }
    ConfigMap config() const { return flatten(env_.spec()); }

private:
    Environment env_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of morphsim";
    m.attr("__version__") = MORPHSIM_VERSION;
    m.attr("REPLAY_FORMAT_VERSION") = kReplayFormatVersion;

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "EngineError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<StaleReplay>(m, "StaleReplay", PyExc_RuntimeError);

    m.def("list_tasks", [] {
        std::vector<std::string> out;
        for (TaskKind t : kAllTasks) out.emplace_back(to_string(t));
        return out;
    });
    m.def("default_config", [](const std::string& task) { return flatten(default_spec(parse_task(task))); },
          py::arg("task"));
    m.def("engine_version", &engine_version);

    m.def("action_to_json", [](const Array& a) { return to_json(grid_from_array(a)).dump(); }, py::arg("action"),
          "Serialize an (n, n, 2) action to the engine's ActionGrid JSON.");
    m.def("action_from_json",
          [](const std::string& text) {
              nlohmann::json j;
              try {
                  j = nlohmann::json::parse(text);
              } catch (const nlohmann::json::exception& e) {
                  throw ConfigError(std::string("ActionGrid json: ") + e.what());
              }
              return array_from_grid(action_grid_from_json(j));
          },
          py::arg("text"));
    m.def("upsample", [](const Array& a, int target) { return array_from_grid(upsample(grid_from_array(a), target)); },
          py::arg("action"), py::arg("target"));

    m.def("record_episode",
          [](const std::string& task, std::uint64_t seed, const std::string& controller, int resolution, int steps,
             const ConfigMap& overrides) {
              Environment env(make_spec(task, overrides), seed);
              auto ctrl = make_controller(controller, derive_seed(seed, SeedStream::controller), resolution,
                                          env.spec().a_max);
              return to_jsonl(run_episode(env, *ctrl, steps));
          },
          py::arg("task"), py::arg("seed") = 0, py::arg("controller") = "random", py::arg("resolution") = 4,
          py::arg("steps") = 0, py::arg("overrides") = ConfigMap{},
          "Run an episode in the engine and return the replay text (JSON lines).");
    m.def("record_actions",
          [](const std::string& task, std::uint64_t seed, const std::vector<Array>& actions, const ConfigMap& overrides) {
              std::vector<ActionGrid> grids;
              for (const auto& a : actions) grids.push_back(grid_from_array(a));
              Environment env(make_spec(task, overrides), seed);
              ScriptedController ctrl(grids);
              return to_jsonl(run_episode(env, ctrl, static_cast<int>(grids.size())));
          },
          py::arg("task"), py::arg("seed"), py::arg("actions"), py::arg("overrides") = ConfigMap{});
    m.def("replay",
          [](const std::string& text) {
              const EpisodeRecord rec = record_from_jsonl(text);
              const EpisodeRecord again = replay(rec);
              std::vector<double> rewards;
              for (const auto& s : again.steps) rewards.push_back(s.reward);
              return rewards;
          },
          py::arg("text"), "Replay a recorded episode; returns the per-step rewards.");
    m.def("summary", [](const std::string& text) { return summary_json(record_from_jsonl(text)).dump(); },
          py::arg("text"), "One-line JSON summary of a recorded episode.");

    py::class_<PyEnvironment>(m, "Environment")
        .def(py::init<const std::string&, std::uint64_t, const ConfigMap&>(), py::arg("task"), py::arg("seed") = 0,
             py::arg("overrides") = ConfigMap{})
        .def("reset", &PyEnvironment::reset)
        .def("step", &PyEnvironment::step, py::arg("action"),
             "Returns (observation, reward, terminated, truncated, info).")
        .def_property_readonly("task", &PyEnvironment::task)
        .def_property_readonly("max_steps", &PyEnvironment::max_steps)
        .def_property_readonly("a_max", &PyEnvironment::a_max)
        .def_property_readonly("config_hash", &PyEnvironment::config_hash)
        .def_property_readonly("config", &PyEnvironment::config);
}
