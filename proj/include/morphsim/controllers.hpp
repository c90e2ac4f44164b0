#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "morphsim/actuation.hpp"
#include "morphsim/environments.hpp"
#include "morphsim/rng.hpp"

namespace morphsim {

class Controller {
public:
    virtual ~Controller() = default;
    virtual ActionGrid act(const Environment& env) = 0;
    /// Called at the start of each episode.
    virtual void reset() {}
    virtual std::string name() const = 0;
};

/// I.i.d. uniform actions in [-a_max, a_max].
class RandomController : public Controller {
public:
    RandomController(std::uint64_t seed, int resolution, double a_max = 1.0);
    ActionGrid act(const Environment& env) override;
    void reset() override;
    std::string name() const override { return "random"; }

private:
    std::uint64_t seed_;
    int resolution_;
    double a_max_;
    Rng rng_;
};

class ZeroController : public Controller {
public:
    explicit ZeroController(int resolution = 4) : resolution_(resolution) {}
    ActionGrid act(const Environment&) override { return ActionGrid(resolution_); }
    std::string name() const override { return "zero"; }

private:
    int resolution_;
};

/// Plays a fixed action sequence, then zeros at the last grid's resolution.
class ScriptedController : public Controller {
public:
    explicit ScriptedController(std::vector<ActionGrid> actions);
    ActionGrid act(const Environment& env) override;
    void reset() override { next_ = 0; }
    std::string name() const override { return "scripted"; }

private:
    std::vector<ActionGrid> actions_;
    std::size_t next_ = 0;
};

/// Builds a controller by name: random, zero. `seed` is the controller stream seed.
std::unique_ptr<Controller> make_controller(const std::string& name, std::uint64_t seed, int resolution,
                                            double a_max);

struct CemConfig {
    int horizon = 10;
    int population = 64;
    int elites = 8;
    int iterations = 30;
    double init_std = 0.5;
    /// Floor on the per-coordinate standard deviation.
    double min_std = 0.02;
    int action_resolution = 4;
    int workers = 1;

    void validate() const;
};

struct CemIteration {
    int iteration = 0;
    double best = 0.0;       // best return seen so far
    double mean = 0.0;       // population mean this iteration
    double elite_mean = 0.0;
};

struct CemResult {
    std::vector<double> best_params;
    double best_return = 0.0;
    std::vector<CemIteration> history;
};

/// Maximizes `objective` over a box with a diagonal Gaussian. The best point
/// so far is re-inserted into every population, so `best` never decreases.
/// Candidates are drawn serially, then evaluated (possibly in parallel);
/// results do not depend on `workers`.
CemResult cem_maximize(const std::function<double(std::span<const double>)>& objective, int dim,
                       const CemConfig& cfg, std::uint64_t seed, double lower, double upper,
                       std::span<const double> init_mean = {});

struct EnvCemResult {
    std::vector<ActionGrid> actions;
    double best_return = 0.0;
    std::vector<CemIteration> history;
};

/// Sum of rewards of an open-loop action sequence from the env's current
/// state. Physics failures score -1e6.
double rollout_return(Environment env, std::span<const ActionGrid> actions);

/// Open-loop trajectory optimization over horizon x n x n x 2 actions.
/// Each candidate is evaluated on a copy of `env`.
EnvCemResult cem_optimize(const Environment& env, const CemConfig& cfg, std::uint64_t seed);

std::string cem_history_csv(const std::vector<CemIteration>& history);

}  // namespace morphsim
