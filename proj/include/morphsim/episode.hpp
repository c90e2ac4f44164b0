#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphsim/actuation.hpp"
#include "morphsim/controllers.hpp"
#include "morphsim/environments.hpp"

namespace morphsim {

/// Version of the replay file layout; bumped on incompatible changes.
inline constexpr int kReplayFormatVersion = 1;

std::string engine_version();

struct EpisodeHeader {
    std::string task;
    std::uint64_t seed = 0;
    /// hash_hex(spec_hash(spec)) of the spec the episode ran with.
    std::string config_hash;
    std::string engine_version;
    int format_version = kReplayFormatVersion;
    std::string controller;
    /// Full flattened spec, so a record replays without the original file.
    ConfigMap config;

    bool operator==(const EpisodeHeader&) const = default;
};

struct EpisodeStep {
    ActionGrid action;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;

    bool operator==(const EpisodeStep&) const = default;
};

enum class Termination : std::uint8_t { running, terminated, truncated, failure };

const char* to_string(Termination t);
Termination parse_termination(const std::string& s);

struct EpisodeRecord {
    EpisodeHeader header;
    std::vector<EpisodeStep> steps;
    double total_return = 0.0;
    Termination termination = Termination::running;
    /// Physics diagnostics when termination == failure.
    std::string failure;
    /// The action whose step aborted, kept so replays reproduce the failure.
    std::optional<ActionGrid> failed_action;

    int length() const { return static_cast<int>(steps.size()); }
    bool operator==(const EpisodeRecord&) const = default;
};

/// Resets `env` and `controller`, then steps until the episode ends or
/// `max_steps` control steps (0 means the spec's limit) have run. A physics
/// abort ends the record with Termination::failure instead of throwing.
EpisodeRecord run_episode(Environment& env, Controller& controller, int max_steps = 0);

/// Rebuilds the environment from the record's embedded config and replays
/// its actions. Throws StaleReplay when the config no longer hashes to the
/// recorded value or the format version differs.
EpisodeRecord replay(const EpisodeRecord& record);
/// Replays against `spec`; throws StaleReplay unless its hash matches.
EpisodeRecord replay(const EpisodeRecord& record, const EnvSpec& spec);

/// Largest |reward difference| between two records of equal length;
/// infinity when the lengths differ.
double max_reward_difference(const EpisodeRecord& a, const EpisodeRecord& b);

/// JSON-lines replay text: a header line, one line per step, a summary line.
std::string to_jsonl(const EpisodeRecord& record);
EpisodeRecord record_from_jsonl(const std::string& text);
void write_record(const std::string& path, const EpisodeRecord& record);
EpisodeRecord read_record(const std::string& path);

/// Single-line JSON object summarizing an episode, for the stdout stream.
nlohmann::json summary_json(const EpisodeRecord& record);

}  // namespace morphsim
