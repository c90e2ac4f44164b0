#include "morphsim/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "morphsim/errors.hpp"

namespace morphsim {

namespace {

constexpr double kFailureReturn = -1e6;

}  // namespace

RandomController::RandomController(std::uint64_t seed, int resolution, double a_max)
    : seed_(seed), resolution_(resolution), a_max_(a_max), rng_(seed) {
    ActionGrid probe(resolution);  // validates the resolution
}

ActionGrid RandomController::act(const Environment&) {
    ActionGrid a(resolution_);
    for (double& v : a.data) v = rng_.uniform(-a_max_, a_max_);
    return a;
}

void RandomController::reset() { rng_ = Rng(seed_); }

ScriptedController::ScriptedController(std::vector<ActionGrid> actions) : actions_(std::move(actions)) {
    if (actions_.empty()) throw ConfigError("scripted controller needs at least one action");
}

ActionGrid ScriptedController::act(const Environment&) {
    if (next_ < actions_.size()) return actions_[next_++];
    return ActionGrid(actions_.back().resolution);
}

std::unique_ptr<Controller> make_controller(const std::string& name, std::uint64_t seed, int resolution,
                                            double a_max) {
    if (name == "random") return std::make_unique<RandomController>(seed, resolution, a_max);
    if (name == "zero") return std::make_unique<ZeroController>(resolution);
    throw ConfigError("unknown controller '" + name + "' (expected random or zero)");
}

void CemConfig::validate() const {
    if (horizon <= 0) throw ConfigError("cem: horizon must be > 0");
    if (population < 2) throw ConfigError("cem: population must be >= 2");
    if (elites <= 0 || elites >= population) throw ConfigError("cem: need 0 < elites < population");
    if (iterations <= 0) throw ConfigError("cem: iterations must be > 0");
    if (!(init_std > 0) || !(min_std >= 0)) throw ConfigError("cem: bad standard deviation");
    if (workers <= 0) throw ConfigError("cem: workers must be > 0");
}

CemResult cem_maximize(const std::function<double(std::span<const double>)>& objective, int dim,
                       const CemConfig& cfg, std::uint64_t seed, double lower, double upper,
                       std::span<const double> init_mean) {
    cfg.validate();
    if (dim <= 0) throw ConfigError("cem: dimension must be > 0");
    Rng rng(seed);
    std::vector<double> mean(dim, 0.5 * (lower + upper)), stddev(dim, cfg.init_std);
    if (!init_mean.empty()) {
        if (static_cast<int>(init_mean.size()) != dim) throw ConfigError("cem: init mean has wrong size");
        mean.assign(init_mean.begin(), init_mean.end());
    }
    const int pop = cfg.population;
    std::vector<std::vector<double>> samples(pop, std::vector<double>(dim));
    std::vector<double> scores(pop);
    std::vector<int> order(pop);

    CemResult result;
    bool have_best = false;
    for (int it = 0; it < cfg.iterations; ++it) {
        for (int k = 0; k < pop; ++k) {
            if (k == 0 && have_best) {
                samples[0] = result.best_params;
                continue;
            }
            for (int d = 0; d < dim; ++d)
                samples[k][d] = std::clamp(mean[d] + stddev[d] * rng.normal(), lower, upper);
        }
#ifdef MORPHSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.workers) if (cfg.workers > 1)
#endif
        for (int k = 0; k < pop; ++k) {
            if (k == 0 && have_best) {
                scores[0] = result.best_return;
                continue;
            }
            scores[k] = objective(samples[k]);
        }

        std::iota(order.begin(), order.end(), 0);
        // Stable: ties resolve by sample index, keeping the run deterministic.
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
        if (!have_best || scores[order[0]] > result.best_return) {
            result.best_return = scores[order[0]];
            result.best_params = samples[order[0]];
            have_best = true;
        }

        CemIteration row;
        row.iteration = it;
        row.best = result.best_return;
        row.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / pop;
        for (int e = 0; e < cfg.elites; ++e) row.elite_mean += scores[order[e]];
        row.elite_mean /= cfg.elites;
        result.history.push_back(row);

        for (int d = 0; d < dim; ++d) {
            double m = 0.0;
            for (int e = 0; e < cfg.elites; ++e) m += samples[order[e]][d];
            m /= cfg.elites;
            double var = 0.0;
            for (int e = 0; e < cfg.elites; ++e) {
                const double diff = samples[order[e]][d] - m;
                var += diff * diff;
            }
            mean[d] = m;
            stddev[d] = std::max(cfg.min_std, std::sqrt(var / cfg.elites));
        }
    }
    return result;
}

double rollout_return(Environment env, std::span<const ActionGrid> actions) {
    double total = 0.0;
    try {
        for (const ActionGrid& a : actions) {
            if (env.done()) break;
            total += env.step(a).reward;
        }
    } catch (const Error&) {
        return kFailureReturn;
    }
    return total;
}

EnvCemResult cem_optimize(const Environment& env, const CemConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int n = cfg.action_resolution;
    const int per_step = n * n * 2;
    const double a_max = env.spec().a_max;
    auto unpack = [&](std::span<const double> x) {
        std::vector<ActionGrid> seq;
        seq.reserve(cfg.horizon);
        for (int t = 0; t < cfg.horizon; ++t)
            seq.emplace_back(n, std::vector<double>(x.begin() + t * per_step, x.begin() + (t + 1) * per_step));
        return seq;
    };
    Environment base = env;
    base.set_threads(1);
    const auto objective = [&](std::span<const double> x) {
        const auto seq = unpack(x);
        return rollout_return(base, seq);
    };
    CemConfig scaled = cfg;
    scaled.init_std = cfg.init_std * a_max;
    scaled.min_std = cfg.min_std * a_max;
    const CemResult r = cem_maximize(objective, cfg.horizon * per_step, scaled, seed, -a_max, a_max);
    return {unpack(r.best_params), r.best_return, r.history};
}

std::string cem_history_csv(const std::vector<CemIteration>& history) {
    std::string out = "iteration,best,mean,elite_mean\n";
    char line[160];
    for (const auto& h : history) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", h.iteration, h.best, h.mean, h.elite_mean);
        out += line;
    }
    return out;
}

}  // namespace morphsim
