#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphsim/mpm.hpp"

namespace morphsim {

/// Outcome of one physics check; `value` is compared against `threshold`.
struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0;
};

/// Max |stress - oracle| over random (F, action, mu, lambda); the oracle
/// takes the rotation from F (F^T F)^(-1/2) via an eigen-decomposition.
/// Also requires the rest case to be exactly zero.
CheckResult check_stress(int samples, std::uint64_t seed, double tolerance = 1e-9);

/// Max ||U diag(sigma) V^T - M|| over random matrices with det > 0.
CheckResult check_svd(int samples, std::uint64_t seed, double tolerance = 1e-8);

/// Grid mass against particle mass every substep, and the per-substep change
/// of total momentum with gravity and boundaries disabled.
struct ConservationResult {
    CheckResult mass;
    CheckResult momentum;
};
ConservationResult check_conservation(std::size_t particles, int substeps, std::uint64_t seed,
                                      double momentum_tolerance = 1e-6);

/// Two identical runs, and runs with 1 and `threads` workers, are bitwise equal.
CheckResult check_determinism(std::size_t particles, int substeps, int threads, std::uint64_t seed);

/// recenter_window leaves positions, velocities and F bitwise unchanged.
CheckResult check_frame_consistency(std::uint64_t seed);

/// Load-release cycle on a disc: hold a uniform stretch action, then release
/// and let it settle. Reports IoU of the final occupancy with the initial one.
struct PlasticityConfig {
    double youngs = 1e3;
    double poisson = 0.2;
    double action = 100.0;
    int load_substeps = 2500;
    int release_substeps = 3000;
    double low_yield = 1.5;
};
struct PlasticityResult {
    double elastic_iou = 0.0;  // yield = +inf
    double plastic_iou = 0.0;  // yield = low_yield
};
PlasticityResult load_release_cycle(const PlasticityConfig& cfg);
std::vector<CheckResult> check_plasticity(const PlasticityConfig& cfg, double elastic_min = 0.9,
                                          double plastic_max = 0.7);

/// The invariant suite run by `morphsim validate`.
std::vector<CheckResult> validate_physics();

/// Deterministic rectangular block of about `particles` robot particles
/// resting on the ground of a 128^2 grid.
SimState bench_state(std::size_t particles);

struct BenchResult {
    std::size_t particles = 0;
    int substeps = 0;
    int threads = 1;
    bool single_precision = false;
    double seconds = 0.0;
    double substeps_per_second = 0.0;
    /// substeps_per_second / 100 (one control step holds 100 substeps).
    double control_steps_per_second = 0.0;
};
BenchResult run_bench(std::size_t particles, int substeps, int threads, bool single_precision = false);

}  // namespace morphsim
