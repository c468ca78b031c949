#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "navigscene/candidates.hpp"
#include "navigscene/errors.hpp"
#include "navigscene/geo.hpp"
#include "navigscene/jsonl.hpp"
#include "navigscene/npo.hpp"
#include "navigscene/rng.hpp"
#include "navigscene/routesim.hpp"
#include "navigscene/selector.hpp"

#include <json.hpp>

namespace navigscene::pipeline {

struct SceneRecord {
    std::string scene_id;
    geo::GeoCoordinate origin;
    geo::TranslationVector source_t;
    geo::TranslationVector dest_t;
};

struct QaRecord {
    std::string scene_id;
    std::string question;
    std::string answer;
};

struct RouteMeta {
    double length_m = 0.0;
    double duration_s = 0.0;
    int maneuvers = 0;
};

struct GuidanceRecord {
    std::string scene_id;
    std::string guidance;
    candidates::CandidateSet candidates;
    selector::SelectionReport report;
    RouteMeta route;
};

struct NsftPair {
    std::string scene_id;
    std::string prompt;
    std::string answer;
};

inline SceneRecord scene_from_json(const nlohmann::ordered_json& j) {
    std::string scene_id;
    double lat = 0.0, lon = 0.0;
    std::array<double, 3> src{}, dst{};
    try {
        scene_id = j.at("scene_id").get<std::string>();
        const auto& origin = j.at("origin");
        lat = origin.at("lat").get<double>();
        lon = origin.at("lon").get<double>();
        const auto read_vec = [](const nlohmann::ordered_json& arr, std::array<double, 3>& out) {
            if (!arr.is_array() || arr.size() != 3)
                throw ParseError("translation must be an array of 3 numbers");
            for (std::size_t i = 0; i < 3; ++i) out[i] = arr[i].get<double>();
        };
        read_vec(j.at("source_t"), src);
        read_vec(j.at("dest_t"), dst);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad scene record: ") + e.what());
    }
    if (scene_id.empty()) throw ValidationError("scene_id must be non-empty");
    return SceneRecord{std::move(scene_id), geo::GeoCoordinate(lat, lon),
                       geo::TranslationVector(src[0], src[1], src[2]),
                       geo::TranslationVector(dst[0], dst[1], dst[2])};
}

inline nlohmann::ordered_json scene_to_json(const SceneRecord& s) {
    return nlohmann::ordered_json{
        {"scene_id", s.scene_id},
        {"origin", {{"lat", s.origin.lat}, {"lon", s.origin.lon}}},
        {"source_t", {s.source_t.dx, s.source_t.dy, s.source_t.dz}},
        {"dest_t", {s.dest_t.dx, s.dest_t.dy, s.dest_t.dz}}};
}

// Loads and validates a scenes file, reporting the first offending line.
inline std::vector<SceneRecord> load_scenes(const std::string& path) {
    std::vector<SceneRecord> scenes;
    std::unordered_map<std::string, long> seen;
    for (const auto& [doc, line] : read_jsonl_lines(path)) {
        const std::string where = path + " line " + std::to_string(line);
        try {
            scenes.push_back(scene_from_json(doc));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what(), line);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError(where + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        const auto [it, inserted] = seen.emplace(scenes.back().scene_id, line);
        if (!inserted)
            throw ValidationError(path + ": duplicate scene_id \"" + scenes.back().scene_id +
                                  "\" on lines " + std::to_string(it->second) + " and " +
                                  std::to_string(line));
    }
    return scenes;
}

inline QaRecord qa_from_json(const nlohmann::ordered_json& j) {
    QaRecord qa;
    try {
        qa.scene_id = j.at("scene_id").get<std::string>();
        qa.question = j.at("question").get<std::string>();
        qa.answer = j.at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad qa record: ") + e.what());
    }
    if (qa.scene_id.empty()) throw ValidationError("scene_id must be non-empty");
    return qa;
}

inline nlohmann::ordered_json qa_to_json(const QaRecord& qa) {
    return nlohmann::ordered_json{
        {"scene_id", qa.scene_id}, {"question", qa.question}, {"answer", qa.answer}};
}

inline std::vector<QaRecord> load_qa(const std::string& path) {
    std::vector<QaRecord> records;
    for (const auto& [doc, line] : read_jsonl_lines(path)) {
        try {
            records.push_back(qa_from_json(doc));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what(), line);
        } catch (const ValidationError& e) {
            throw ValidationError(path + " line " + std::to_string(line) + ": " + e.what());
        }
    }
    return records;
}

inline nlohmann::ordered_json guidance_to_json(const GuidanceRecord& r) {
    return nlohmann::ordered_json{{"scene_id", r.scene_id},
                                  {"guidance", r.guidance},
                                  {"candidates", r.candidates.texts},
                                  {"scores", selector::scores_to_json(r.report)},
                                  {"route",
                                   {{"length_m", r.route.length_m},
                                    {"duration_s", r.route.duration_s},
                                    {"maneuvers", r.route.maneuvers}}}};
}

inline GuidanceRecord guidance_from_json(const nlohmann::ordered_json& j) {
    GuidanceRecord r;
    try {
        r.scene_id = j.at("scene_id").get<std::string>();
        r.guidance = j.at("guidance").get<std::string>();
        r.candidates.scene_id = r.scene_id;
        r.candidates.texts = j.at("candidates").get<std::vector<std::string>>();
        const auto& scores = j.at("scores");
        r.report.pairwise = scores.at("pairwise").get<std::vector<std::vector<double>>>();
        r.report.cumulative = scores.at("cumulative").get<std::vector<double>>();
        r.report.winner_index = scores.at("winner").get<int>();
        const auto& route = j.at("route");
        r.route.length_m = route.at("length_m").get<double>();
        r.route.duration_s = route.at("duration_s").get<double>();
        r.route.maneuvers = route.at("maneuvers").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad guidance record: ") + e.what());
    }
    const std::size_t n = r.candidates.texts.size();
    if (r.report.pairwise.size() != n || r.report.cumulative.size() != n)
        throw ValidationError("guidance scores do not match the candidate count");
    for (const auto& row : r.report.pairwise)
        if (row.size() != n) throw ValidationError("guidance pairwise matrix must be square");
    if (r.report.winner_index < 0 || static_cast<std::size_t>(r.report.winner_index) >= n)
        throw ValidationError("guidance winner index out of range");
    r.report.winner_text = r.candidates.texts[static_cast<std::size_t>(r.report.winner_index)];
    if (r.guidance != r.report.winner_text)
        throw ValidationError("guidance text does not match the winning candidate");
    return r;
}

inline std::vector<GuidanceRecord> load_guidance(const std::string& path) {
    std::vector<GuidanceRecord> records;
    for (const auto& [doc, line] : read_jsonl_lines(path)) {
        try {
            records.push_back(guidance_from_json(doc));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what(), line);
        } catch (const ValidationError& e) {
            throw ValidationError(path + " line " + std::to_string(line) + ": " + e.what());
        }
    }
    return records;
}

namespace detail {

[[noreturn]] inline void rethrow_with_scene(const std::string& scene_id) {
    const std::string prefix = "scene " + scene_id + ": ";
    try {
        throw;
    } catch (const PoleProximityError& e) {
        throw PoleProximityError(prefix + e.what());
    } catch (const NonFiniteError& e) {
        throw NonFiniteError(prefix + e.what());
    } catch (const NoPathError& e) {
        throw NoPathError(prefix + e.what());
    } catch (const DegenerateRouteError& e) {
        throw DegenerateRouteError(prefix + e.what());
    } catch (const BadFrameCountError& e) {
        throw BadFrameCountError(prefix + e.what());
    } catch (const EmptyFramesError& e) {
        throw EmptyFramesError(prefix + e.what());
    } catch (const EmptyCandidateSetError& e) {
        throw EmptyCandidateSetError(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    } catch (const std::exception& e) {
        throw Error(prefix + e.what());
    }
}

}  // namespace detail

// Runs one scene end to end: offset source and destination from the origin,
// plan a route on the shared graph, sample frames, generate candidates, and
// pick the consensus text. Errors are rethrown with the scene_id attached.
inline GuidanceRecord build_guidance(
    const SceneRecord& scene, const routesim::RoadGraph& graph,
    const candidates::GeneratorClient& client, const selector::SimilarityWeights& weights,
    int frame_count, int num_candidates, std::uint64_t seed,
    double speed_mps = routesim::kDefaultSpeedMps,
    const selector::ExtractionConfig& extraction = selector::default_extraction_config()) {
    try {
        const geo::GeoCoordinate src = geo::offset_coordinate(scene.origin, scene.source_t);
        const geo::GeoCoordinate dst = geo::offset_coordinate(scene.origin, scene.dest_t);
        const routesim::Route route = routesim::plan_route(graph, src, dst, speed_mps);
        const std::vector<routesim::RouteFrame> frames = routesim::sample_frames(route, frame_count);

        GuidanceRecord record;
        record.scene_id = scene.scene_id;
        record.candidates.scene_id = scene.scene_id;
        record.candidates.seed = seed;
        record.candidates.texts =
            client.generate(frames, candidates::kCandidatePrompt, num_candidates, seed);
        if (record.candidates.texts.size() != static_cast<std::size_t>(num_candidates))
            throw ValidationError("generator returned a wrong number of candidates");
        for (const auto& t : record.candidates.texts)
            if (t.empty()) throw ValidationError("generator returned an empty candidate");

        record.report = selector::select_best(record.candidates, weights, extraction);
        record.guidance = record.report.winner_text;
        record.route.length_m = route.total_length_m;
        record.route.duration_s = route.duration_s;
        record.route.maneuvers = static_cast<int>(route.maneuvers.size());
        return record;
    } catch (...) {
        detail::rethrow_with_scene(scene.scene_id);
    }
}

struct BatchOptions {
    int frame_count = 20;
    int num_candidates = 5;
    std::uint64_t seed = 0;
    double speed_mps = routesim::kDefaultSpeedMps;
    selector::SimilarityWeights weights;
    selector::ExtractionConfig extraction;
    int jobs = 1;
    bool strict = false;
};

struct SkippedScene {
    std::string scene_id;
    std::string reason;
};

struct BatchResult {
    std::vector<GuidanceRecord> records;  // input order, failed scenes omitted
    std::vector<SkippedScene> skipped;    // input order
};

// Per-scene seed: stable mix of the run seed and the scene_id, so results do
// not depend on file order or on which worker picks the scene up.
inline std::uint64_t scene_seed(std::uint64_t run_seed, const std::string& scene_id) {
    return mix_seed(run_seed, fnv1a(scene_id));
}

// Fans scenes out over a worker pool and reassembles results in input order.
// In strict mode the first failure (by input order) is rethrown after all
// workers finish; otherwise failed scenes are reported in `skipped`.
inline BatchResult build_guidance_batch(const std::vector<SceneRecord>& scenes,
                                        const routesim::RoadGraph& graph,
                                        const candidates::GeneratorClient& client,
                                        const BatchOptions& options) {
    if (options.jobs < 1) throw ValidationError("job count must be at least 1");
    options.weights.check();

    const std::size_t n = scenes.size();
    std::vector<std::optional<GuidanceRecord>> slots(n);
    std::vector<std::exception_ptr> failures(n);

    const auto run_one = [&](std::size_t i) {
        try {
            slots[i] = build_guidance(scenes[i], graph, client, options.weights,
                                      options.frame_count, options.num_candidates,
                                      scene_seed(options.seed, scenes[i].scene_id),
                                      options.speed_mps, options.extraction);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(options.jobs), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_one(i);
            });
        for (auto& t : pool) t.join();
    }

    BatchResult result;
    result.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (failures[i]) {
            if (options.strict) std::rethrow_exception(failures[i]);
            std::string reason = "unknown error";
            try {
                std::rethrow_exception(failures[i]);
            } catch (const std::exception& e) {
                reason = e.what();
            }
            result.skipped.push_back({scenes[i].scene_id, std::move(reason)});
        } else {
            result.records.push_back(std::move(*slots[i]));
        }
    }
    return result;
}

// Joins guidance with question/answer records: prompt = guidance + "\n" +
// question. Output follows the qa order.
inline std::vector<NsftPair> assemble_nsft_pairs(const std::vector<GuidanceRecord>& guidance,
                                                 const std::vector<QaRecord>& qa) {
    std::unordered_map<std::string, const GuidanceRecord*> by_scene;
    for (const auto& g : guidance) by_scene.emplace(g.scene_id, &g);
    std::vector<NsftPair> pairs;
    pairs.reserve(qa.size());
    for (const auto& record : qa) {
        const auto it = by_scene.find(record.scene_id);
        if (it == by_scene.end())
            throw MissingGuidanceError("no guidance for scene \"" + record.scene_id + "\"");
        pairs.push_back({record.scene_id,
                         candidates::concat_prompt(it->second->guidance, record.question),
                         record.answer});
    }
    return pairs;
}

inline nlohmann::ordered_json nsft_to_json(const NsftPair& p) {
    return nlohmann::ordered_json{
        {"scene_id", p.scene_id}, {"prompt", p.prompt}, {"answer", p.answer}};
}

inline NsftPair nsft_from_json(const nlohmann::ordered_json& j) {
    NsftPair p;
    try {
        p.scene_id = j.at("scene_id").get<std::string>();
        p.prompt = j.at("prompt").get<std::string>();
        p.answer = j.at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad pair record: ") + e.what());
    }
    return p;
}

// Word-level vocabulary: ids 0 and 1 are reserved for begin-of-sequence and
// unknown; the remaining slots go to corpus tokens by descending frequency,
// ties broken alphabetically.
struct VocabMap {
    static constexpr int kBos = 0;
    static constexpr int kUnknown = 1;

    int vocab_size = 2;
    std::vector<std::string> tokens;  // tokens[i] has id i + 2
    std::unordered_map<std::string, int> index;

    static VocabMap build(const std::vector<std::string>& corpus, int vocab_size) {
        if (vocab_size < 2) throw ValidationError("vocab size must be at least 2");
        std::unordered_map<std::string, std::size_t> counts;
        for (const auto& text : corpus)
            for (auto& token : selector::tokenize(text)) ++counts[token];

        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        VocabMap vocab;
        vocab.vocab_size = vocab_size;
        const std::size_t keep =
            std::min(ranked.size(), static_cast<std::size_t>(vocab_size - 2));
        vocab.tokens.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            vocab.tokens.push_back(ranked[i].first);
            vocab.index.emplace(ranked[i].first, static_cast<int>(i) + 2);
        }
        return vocab;
    }

    npo::TokenSeq encode(const std::string& text) const {
        npo::TokenSeq ids;
        for (const auto& token : selector::tokenize(text)) {
            const auto it = index.find(token);
            ids.push_back(it == index.end() ? kUnknown : it->second);
        }
        return ids;
    }
};

namespace detail {

inline npo::TokenSeq keep_first(npo::TokenSeq seq, std::size_t max_len) {
    if (seq.size() > max_len) seq.resize(max_len);
    return seq;
}

inline npo::TokenSeq keep_last(npo::TokenSeq seq, std::size_t max_len) {
    if (seq.size() > max_len) seq.erase(seq.begin(), seq.end() - static_cast<long>(max_len));
    return seq;
}

}  // namespace detail

// Builds preference tuples from supervision pairs: the context encodes the
// pair prompt (kept from the tail so the most recent tokens survive), both
// summaries are greedy-decoded from the summarization prompt joined with the
// answer, and the guidance text is looked up by scene. Sequences that must
// be scored are never left empty; an all-unknown singleton stands in when a
// text normalizes to nothing.
inline std::vector<npo::PreferenceTuple> assemble_preference_tuples(
    const std::vector<NsftPair>& pairs, const std::vector<GuidanceRecord>& guidance,
    const npo::ToyLM& reward, const npo::ToyLM& ref, const VocabMap& vocab, int max_len = 8) {
    if (max_len < 1) throw ValidationError("max sequence length must be at least 1");
    if (reward.vocab_size != ref.vocab_size)
        throw DimMismatchError("reward and reference models must share a vocab size");
    if (vocab.vocab_size != reward.vocab_size)
        throw DimMismatchError("vocabulary size must match the model vocab size");

    std::unordered_map<std::string, const GuidanceRecord*> by_scene;
    for (const auto& g : guidance) by_scene.emplace(g.scene_id, &g);

    const auto nonempty = [](npo::TokenSeq seq) {
        if (seq.empty()) seq.push_back(VocabMap::kUnknown);
        return seq;
    };

    const std::size_t cap = static_cast<std::size_t>(max_len);
    std::vector<npo::PreferenceTuple> tuples;
    tuples.reserve(pairs.size());
    for (const auto& pair : pairs) {
        const auto it = by_scene.find(pair.scene_id);
        if (it == by_scene.end())
            throw MissingGuidanceError("no guidance for scene \"" + pair.scene_id + "\"");

        npo::PreferenceTuple t;
        t.context = detail::keep_last(vocab.encode(pair.prompt), cap);
        t.answer = nonempty(detail::keep_first(vocab.encode(pair.answer), cap));
        t.guidance = nonempty(detail::keep_first(vocab.encode(it->second->guidance), cap));

        const npo::TokenSeq decode_ctx = detail::keep_last(
            vocab.encode(candidates::summarization_prompt(pair.answer)), cap);
        t.summary_reward = npo::greedy_decode(reward, decode_ctx, max_len);
        t.summary_ref = npo::greedy_decode(ref, decode_ctx, max_len);
        tuples.push_back(std::move(t));
    }
    return tuples;
}

inline void write_guidance(const std::vector<GuidanceRecord>& records, const std::string& path) {
    write_jsonl(records, path, guidance_to_json);
}

inline void write_nsft(const std::vector<NsftPair>& pairs, const std::string& path) {
    write_jsonl(pairs, path, nsft_to_json);
}

inline void write_tuples(const std::vector<npo::PreferenceTuple>& tuples, const std::string& path) {
    write_jsonl(tuples, path, npo::tuple_to_json);
}

inline std::vector<NsftPair> load_nsft(const std::string& path) {
    std::vector<NsftPair> pairs;
    for (const auto& [doc, line] : read_jsonl_lines(path)) {
        try {
            pairs.push_back(nsft_from_json(doc));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what(), line);
        }
    }
    return pairs;
}

inline std::vector<npo::PreferenceTuple> load_tuples(const std::string& path) {
    std::vector<npo::PreferenceTuple> tuples;
    for (const auto& [doc, line] : read_jsonl_lines(path)) {
        try {
            tuples.push_back(npo::tuple_from_json(doc));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what(), line);
        }
    }
    return tuples;
}

}  // namespace navigscene::pipeline
