#include "morphsim/episode.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "morphsim/errors.hpp"
#include "morphsim/rng.hpp"

namespace morphsim {

namespace {

using nlohmann::json;

EpisodeHeader make_header(const Environment& env, const std::string& controller) {
    EpisodeHeader h;
    h.task = to_string(env.spec().task);
    h.seed = env.seed();
    h.config = flatten(env.spec());
    h.config_hash = hash_hex(config_hash(h.config));
    h.engine_version = engine_version();
    h.controller = controller;
    return h;
}

void finish(EpisodeRecord& r) {
    r.total_return = 0.0;
    for (const auto& s : r.steps) r.total_return += s.reward;
}

// Steps `env` with `next(t)` until it ends, the actions run out or the cap
// is reached; physics errors become a failure record.
template <class Next>
void drive(Environment& env, EpisodeRecord& rec, int max_steps, Next next) {
    std::optional<ActionGrid> action;
    auto fail = [&](const std::exception& e) {
        rec.termination = Termination::failure;
        rec.failure = e.what();
        rec.failed_action = std::move(action);
    };
    try {
        for (int t = 0; t < max_steps && !env.done(); ++t) {
            action = next(t);
            if (!action) break;
            const StepResult r = env.step(*action);
            rec.steps.push_back({std::move(*action), r.reward, r.terminated, r.truncated});
            action.reset();
            if (r.terminated) rec.termination = Termination::terminated;
            else if (r.truncated) rec.termination = Termination::truncated;
        }
    } catch (const PhysicsError& e) {
        fail(e);
        rec.failure += "\n" + e.dump();
    } catch (const WindowViolation& e) {
        fail(e);
    }
    finish(rec);
}

json header_json(const EpisodeHeader& h) {
    return {{"type", "header"},       {"format_version", h.format_version}, {"task", h.task},
            {"seed", h.seed},         {"config_hash", h.config_hash},       {"engine_version", h.engine_version},
            {"controller", h.controller}, {"config", h.config}};
}

}  // namespace

std::string engine_version() { return std::string("morphsim ") + MORPHSIM_VERSION; }

const char* to_string(Termination t) {
    switch (t) {
        case Termination::running: return "running";
        case Termination::terminated: return "terminated";
        case Termination::truncated: return "truncated";
        case Termination::failure: return "failure";
    }
    return "unknown";
}

Termination parse_termination(const std::string& s) {
    for (auto t : {Termination::running, Termination::terminated, Termination::truncated, Termination::failure})
        if (s == to_string(t)) return t;
    throw ConfigError("unknown termination '" + s + "'");
}

EpisodeRecord run_episode(Environment& env, Controller& controller, int max_steps) {
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    env.reset();
    controller.reset();
    EpisodeRecord rec;
    rec.header = make_header(env, controller.name());
    const int cap = max_steps == 0 ? env.spec().max_episode_steps : max_steps;
    drive(env, rec, cap, [&](int) -> std::optional<ActionGrid> { return controller.act(env); });
    return rec;
}

EpisodeRecord replay(const EpisodeRecord& record) {
    if (record.header.format_version != kReplayFormatVersion)
        throw StaleReplay("replay format version " + std::to_string(record.header.format_version) +
                          " is not supported (expected " + std::to_string(kReplayFormatVersion) + ")");
    if (hash_hex(config_hash(record.header.config)) != record.header.config_hash)
        throw StaleReplay("embedded config does not match the recorded config hash");
    return replay(record, unflatten(record.header.config));
}

EpisodeRecord replay(const EpisodeRecord& record, const EnvSpec& spec) {
    const std::string hash = hash_hex(spec_hash(spec));
    if (hash != record.header.config_hash)
        throw StaleReplay("config hash " + hash + " does not match the recorded " + record.header.config_hash);
    if (to_string(spec.task) != record.header.task)
        throw StaleReplay("task " + std::string(to_string(spec.task)) + " does not match " + record.header.task);
    Environment env(spec, record.header.seed);
    EpisodeRecord out;
    out.header = make_header(env, record.header.controller);
    const std::size_t n = record.steps.size();
    drive(env, out, static_cast<int>(n) + (record.failed_action ? 1 : 0), [&](int t) -> std::optional<ActionGrid> {
        const auto i = static_cast<std::size_t>(t);
        return i < n ? record.steps[i].action : record.failed_action;
    });
    return out;
}

double max_reward_difference(const EpisodeRecord& a, const EpisodeRecord& b) {
    if (a.steps.size() != b.steps.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t t = 0; t < a.steps.size(); ++t) d = std::max(d, std::abs(a.steps[t].reward - b.steps[t].reward));
    return d;
}

std::string to_jsonl(const EpisodeRecord& r) {
    std::string out = header_json(r.header).dump() + "\n";
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
        const EpisodeStep& s = r.steps[t];
        const json line = {{"type", "step"},          {"t", t},
                           {"action", to_json(s.action)}, {"reward", s.reward},
                           {"terminated", s.terminated}, {"truncated", s.truncated}};
        out += line.dump() + "\n";
    }
    json summary = summary_json(r);
    summary["type"] = "summary";
    out += summary.dump() + "\n";
    return out;
}

EpisodeRecord record_from_jsonl(const std::string& text) {
    EpisodeRecord r;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_header = false, have_summary = false;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (have_summary) throw ConfigError("content after the summary line");
            const json j = json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (!have_header) {
                if (type != "header") throw ConfigError("first line must be the header");
                EpisodeHeader& h = r.header;
                h.format_version = j.at("format_version").get<int>();
                h.task = j.at("task").get<std::string>();
                h.seed = j.at("seed").get<std::uint64_t>();
                h.config_hash = j.at("config_hash").get<std::string>();
                h.engine_version = j.at("engine_version").get<std::string>();
                h.controller = j.value("controller", std::string());
                h.config = j.at("config").get<ConfigMap>();
                have_header = true;
            } else if (type == "step") {
                if (j.at("t").get<std::size_t>() != r.steps.size()) throw ConfigError("steps out of order");
                r.steps.push_back({action_grid_from_json(j.at("action")), j.at("reward").get<double>(),
                                   j.at("terminated").get<bool>(), j.at("truncated").get<bool>()});
            } else if (type == "summary") {
                r.total_return = j.at("return").get<double>();
                r.termination = parse_termination(j.at("termination").get<std::string>());
                r.failure = j.value("failure", std::string());
                if (j.contains("failed_action")) r.failed_action = action_grid_from_json(j.at("failed_action"));
                if (j.at("length").get<int>() != r.length()) throw ConfigError("summary length mismatch");
                have_summary = true;
            } else {
                throw ConfigError("unknown line type '" + type + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("replay line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError("replay line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) throw ConfigError("replay: missing header line");
    if (!have_summary) throw ConfigError("replay: missing summary line (truncated file?)");
    return r;
}

void write_record(const std::string& path, const EpisodeRecord& record) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << to_jsonl(record);
    if (!out) throw ConfigError("error writing " + path);
}

EpisodeRecord read_record(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open replay file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return record_from_jsonl(ss.str());
}

json summary_json(const EpisodeRecord& r) {
    json j = {{"task", r.header.task},
              {"seed", r.header.seed},
              {"controller", r.header.controller},
              {"config_hash", r.header.config_hash},
              {"return", r.total_return},
              {"length", r.length()},
              {"termination", to_string(r.termination)}};
    if (!r.failure.empty()) j["failure"] = r.failure;
    if (r.failed_action) j["failed_action"] = to_json(*r.failed_action);
    return j;
}

}  // namespace morphsim
