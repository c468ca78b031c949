#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "navigscene/errors.hpp"
#include "navigscene/rng.hpp"
#include "navigscene/routesim.hpp"

#include <json.hpp>

namespace navigscene::candidates {

// Fixed summarization prompt; downstream code concatenates it with the answer.
inline constexpr std::string_view kSummarizePrompt =
    "Summarize this answer to a driving-relevant question to make it simple without losing "
    "important information.";

// Instruction handed to the text generator together with the sampled frames.
// Real clients receive it verbatim; the deterministic stub ignores it.
inline constexpr std::string_view kCandidatePrompt =
    "You are given a sequence of map frames sampled evenly along a driving route. First, "
    "analyze the intersections or interchanges shown in the frames to determine the driving "
    "directions, such as turning left or right, continuing straight, or making a u-turn. Then "
    "estimate the distance to each maneuver from the frame intervals. Finally, write one "
    "concise turn-by-turn navigation instruction for the whole route, mentioning distances in "
    "meters and any traffic signals.";

// Text concatenation operator used throughout: first operand, one newline,
// second operand.
inline std::string concat_prompt(std::string_view head, std::string_view tail) {
    std::string out;
    out.reserve(head.size() + 1 + tail.size());
    out.append(head);
    out.push_back('\n');
    out.append(tail);
    return out;
}

inline std::string summarization_prompt(const std::string& answer) {
    if (answer.empty()) throw EmptyAnswerError("cannot summarize an empty answer");
    return concat_prompt(kSummarizePrompt, answer);
}

struct CandidateSet {
    std::string scene_id;
    std::vector<std::string> texts;
    std::uint64_t seed = 0;
};

// Produces N candidate navigation texts for a sequence of route frames.
// Implementations must return exactly n non-empty texts and be deterministic
// for fixed (frames, prompt, n, seed). Implementations must either be safe
// for concurrent generate() calls or document themselves as serial.
class GeneratorClient {
public:
    virtual ~GeneratorClient() = default;
    virtual std::vector<std::string> generate(const std::vector<routesim::RouteFrame>& frames,
                                              std::string_view prompt, int n,
                                              std::uint64_t seed) const = 0;
};

namespace detail {

struct Sighting {
    routesim::Maneuver maneuver;
    double reported_distance_m = 0.0;  // distance to the maneuver when first seen
};

inline bool same_maneuver(const routesim::Maneuver& a, const routesim::Maneuver& b) {
    return a.kind == b.kind && a.distance_from_prev_m == b.distance_from_prev_m &&
           a.has_signal == b.has_signal;
}

// The stub only sees frames, like the model it stands in for. A maneuver is
// "sighted" at the first frame that reports it; frames keep pointing at the
// same maneuver while the remaining distance shrinks.
inline std::vector<Sighting> maneuver_sightings(const std::vector<routesim::RouteFrame>& frames) {
    std::vector<Sighting> sightings;
    bool tracking = false;
    routesim::Maneuver tracked;
    double tracked_dist = 0.0;
    for (const auto& frame : frames) {
        if (!frame.next_maneuver) {
            tracking = false;
            continue;
        }
        const auto& m = *frame.next_maneuver;
        const bool is_same = tracking && same_maneuver(m, tracked) &&
                             frame.dist_to_next_maneuver_m < tracked_dist + 1e-9;
        if (!is_same) sightings.push_back({m, frame.dist_to_next_maneuver_m});
        tracked = m;
        tracked_dist = frame.dist_to_next_maneuver_m;
        tracking = true;
    }
    return sightings;
}

inline std::string format_meters(double meters) {
    return std::to_string(static_cast<long long>(std::llround(meters)));
}

inline std::string render_sighting(const Sighting& s, double jitter_factor, std::string_view unit,
                                   Rng& rng) {
    using routesim::ManeuverKind;
    const std::string d = format_meters(s.reported_distance_m * jitter_factor);
    const std::string sig =
        s.maneuver.has_signal
            ? std::string(rng.next_index(2) == 0 ? " at the traffic signal" : " at the signal")
            : std::string();
    const std::string du = d + " " + std::string(unit);
    switch (s.maneuver.kind) {
        case ManeuverKind::left:
        case ManeuverKind::right: {
            const std::string turn = routesim::to_string(s.maneuver.kind);
            switch (rng.next_index(3)) {
                case 0: return "Turn " + turn + " in " + du + sig + ".";
                case 1: return "In " + du + ", turn " + turn + sig + ".";
                default: return "Make a " + turn + " turn after " + du + sig + ".";
            }
        }
        case ManeuverKind::straight:
            switch (rng.next_index(3)) {
                case 0: return "Continue straight at the intersection in " + du + sig + ".";
                case 1: return "In " + du + ", continue straight" + sig + ".";
                default: return "Keep straight past the junction in " + du + sig + ".";
            }
        case ManeuverKind::u_turn:
            return rng.next_index(2) == 0 ? "Make a u-turn in " + du + sig + "."
                                          : "In " + du + ", make a u-turn" + sig + ".";
        case ManeuverKind::merge:
            return rng.next_index(2) == 0 ? "Merge in " + du + sig + "."
                                          : "In " + du + ", merge" + sig + ".";
        case ManeuverKind::exit:
            return rng.next_index(2) == 0 ? "Take the exit in " + du + sig + "."
                                          : "In " + du + ", take the exit" + sig + ".";
        case ManeuverKind::roundabout:
            return rng.next_index(2) == 0 ? "Enter the roundabout in " + du + sig + "."
                                          : "In " + du + ", enter the roundabout" + sig + ".";
    }
    return "Continue for " + du + ".";
}

}  // namespace detail

// Deterministic stand-in for the hosted model: template text rendered from
// the frames' maneuver annotations. Candidates differ by seeded paraphrase
// choice and seeded per-distance jitter up to +-20%; candidate 0 always
// carries unjittered distances.
inline std::vector<std::string> stub_generate(const std::vector<routesim::RouteFrame>& frames,
                                              int n, std::uint64_t seed) {
    if (frames.empty()) throw EmptyFramesError("stub_generate requires at least one frame");
    if (n < 1) throw ValidationError("candidate count must be >= 1");

    const std::vector<detail::Sighting> sightings = detail::maneuver_sightings(frames);
    std::vector<std::string> texts;
    texts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        std::string text;
        switch (rng.next_index(3)) {
            case 0: text = "Follow the route."; break;
            case 1: text = "Proceed along the planned route."; break;
            default: text = "Drive along the route."; break;
        }
        const std::string_view unit = rng.next_index(2) == 0 ? "meters" : "m";
        for (const auto& s : sightings) {
            const double jitter = i == 0 ? 1.0 : rng.next_range(0.8, 1.2);
            text += " " + detail::render_sighting(s, jitter, unit, rng);
        }
        switch (rng.next_index(3)) {
            case 0: text += " Then you will arrive at the destination."; break;
            case 1: text += " You will then reach the destination."; break;
            default: text += " The destination is then a short distance away."; break;
        }
        texts.push_back(std::move(text));
    }
    return texts;
}

class StubGenerator final : public GeneratorClient {
public:
    std::vector<std::string> generate(const std::vector<routesim::RouteFrame>& frames,
                                      std::string_view /*prompt*/, int n,
                                      std::uint64_t seed) const override {
        return stub_generate(frames, n, seed);
    }
};

inline nlohmann::ordered_json candidate_set_to_json(const CandidateSet& set) {
    return nlohmann::ordered_json{
        {"scene_id", set.scene_id}, {"seed", set.seed}, {"texts", set.texts}};
}

inline CandidateSet candidate_set_from_json(const nlohmann::ordered_json& j) {
    CandidateSet set;
    try {
        set.scene_id = j.at("scene_id").get<std::string>();
        set.seed = j.at("seed").get<std::uint64_t>();
        set.texts = j.at("texts").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad candidate set: ") + e.what());
    }
    return set;
}

}  // namespace navigscene::candidates
