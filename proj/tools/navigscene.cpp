// Command-line surface for the navigation-guidance toolkit: one binary,
// one subcommand per pipeline stage. Exit codes: 0 success, 1 runtime or
// IO failure, 2 usage or validation error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "navigscene/navigscene.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace ns = navigscene;
using nlohmann::ordered_json;

namespace {

// The config file seeds flag defaults, so it has to be read before the real
// parse. Scan argv by hand for --config; the registered option then only
// validates placement and shows up in --help.
std::string find_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

class Defaults {
public:
    explicit Defaults(ordered_json doc) : doc_(std::move(doc)) {
        if (!doc_.is_object()) throw ns::ValidationError("config file must hold a JSON object");
    }
    Defaults() : doc_(ordered_json::object()) {}

    template <typename T>
    T get(const std::string& key, T fallback) const {
        if (!doc_.contains(key)) return fallback;
        try {
            return doc_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ns::ValidationError("config key \"" + key + "\": " + e.what());
        }
    }

    std::string weights(const std::string& fallback) const {
        if (!doc_.contains("weights")) return fallback;
        const auto& w = doc_.at("weights");
        if (w.is_array()) {
            std::string joined;
            for (const auto& v : w) {
                if (!joined.empty()) joined += ",";
                joined += v.dump();
            }
            return joined;
        }
        return get<std::string>("weights", fallback);
    }

private:
    ordered_json doc_;
};

ns::selector::SimilarityWeights parse_weights(const std::string& arg) {
    std::vector<double> vals;
    std::string tail = arg;
    while (!tail.empty()) {
        const std::size_t comma = tail.find(',');
        const std::string piece = tail.substr(0, comma);
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(piece, &used));
            if (used != piece.size()) throw std::invalid_argument(piece);
        } catch (const std::exception&) {
            throw ns::ValidationError("weights must be three comma-separated numbers, got \"" +
                                      arg + "\"");
        }
        if (comma == std::string::npos) break;
        tail = tail.substr(comma + 1);
    }
    if (vals.size() != 3)
        throw ns::ValidationError("weights must be three comma-separated numbers, got \"" + arg +
                                  "\"");
    return ns::selector::SimilarityWeights(vals[0], vals[1], vals[2]);
}

struct GeoOffsetArgs {
    double lat = 0.0, lon = 0.0;
    double dx = 0.0, dy = 0.0, dz = 0.0;
    double radius_m = ns::geo::EarthModel{}.radius_m;
};

int cmd_geo_offset(const GeoOffsetArgs& a) {
    const ns::geo::GeoCoordinate out =
        ns::geo::offset_coordinate(ns::geo::GeoCoordinate(a.lat, a.lon),
                                   ns::geo::TranslationVector(a.dx, a.dy, a.dz),
                                   ns::geo::EarthModel{a.radius_m});
    std::printf("%.6f, %.6f\n", out.lat, out.lon);
    return 0;
}

struct BuildArgs {
    std::string scenes_path;
    std::string out_path;
    std::string graph_path;
    std::string graph_out_path;
    std::uint64_t seed = 0;
    int frames = 20;
    int num_candidates = 5;
    std::string weights = "0.5,0.3,0.2";
    double speed_mps = ns::routesim::kDefaultSpeedMps;
    int jobs = 1;
    bool strict = false;
    int grid_width = 6;
    int grid_height = 6;
    double spacing_m = 100.0;
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    bool origin_given = false;
};

int cmd_build(const BuildArgs& a) {
    const std::vector<ns::pipeline::SceneRecord> scenes = ns::pipeline::load_scenes(a.scenes_path);

    ns::routesim::RoadGraph graph;
    if (!a.graph_path.empty()) {
        graph = ns::routesim::graph_from_json(ns::read_json_file(a.graph_path));
    } else {
        ns::geo::GeoCoordinate origin(0.0, 0.0);
        if (a.origin_given)
            origin = ns::geo::GeoCoordinate(a.origin_lat, a.origin_lon);
        else if (!scenes.empty())
            origin = scenes.front().origin;
        graph = ns::routesim::synthesize_graph(ns::mix_seed(a.seed, ns::fnv1a("graph")),
                                               a.grid_width, a.grid_height, origin, a.spacing_m);
    }
    if (!a.graph_out_path.empty())
        ns::write_json_file(ns::routesim::graph_to_json(graph), a.graph_out_path);

    ns::pipeline::BatchOptions options;
    options.frame_count = a.frames;
    options.num_candidates = a.num_candidates;
    options.seed = a.seed;
    options.speed_mps = a.speed_mps;
    options.weights = parse_weights(a.weights);
    options.jobs = a.jobs;
    options.strict = a.strict;

    const ns::candidates::StubGenerator client;
    const ns::pipeline::BatchResult result =
        ns::pipeline::build_guidance_batch(scenes, graph, client, options);
    ns::pipeline::write_guidance(result.records, a.out_path);

    for (const auto& skipped : result.skipped)
        std::fprintf(stderr, "skipped scene %s: %s\n", skipped.scene_id.c_str(),
                     skipped.reason.c_str());
    std::printf("guidance: %zu ok, %zu skipped\n", result.records.size(), result.skipped.size());
    return 0;
}

struct SelectArgs {
    std::string candidates_path;
    std::string weights = "0.5,0.3,0.2";
};

int cmd_select(const SelectArgs& a) {
    const ns::selector::SimilarityWeights weights = parse_weights(a.weights);
    for (const auto& doc : ns::read_jsonl(a.candidates_path)) {
        const ns::candidates::CandidateSet set = ns::candidates::candidate_set_from_json(doc);
        const ns::selector::SelectionReport report = ns::selector::select_best(set, weights);
        ordered_json out{{"scene_id", set.scene_id},
                         {"guidance", report.winner_text},
                         {"scores", ns::selector::scores_to_json(report)}};
        std::cout << out.dump() << '\n';
    }
    return 0;
}

struct NsftArgs {
    std::string guidance_path;
    std::string qa_path;
    std::string out_path;
    std::string tuples_out_path;
    int vocab_size = 32;
    int max_len = 8;
    std::uint64_t seed = 0;
};

int cmd_nsft_pairs(const NsftArgs& a) {
    const std::vector<ns::pipeline::GuidanceRecord> guidance =
        ns::pipeline::load_guidance(a.guidance_path);
    const std::vector<ns::pipeline::QaRecord> qa = ns::pipeline::load_qa(a.qa_path);
    const std::vector<ns::pipeline::NsftPair> pairs = ns::pipeline::assemble_nsft_pairs(guidance, qa);
    ns::pipeline::write_nsft(pairs, a.out_path);
    std::printf("pairs: %zu written\n", pairs.size());

    if (!a.tuples_out_path.empty()) {
        std::vector<std::string> corpus;
        corpus.emplace_back(ns::candidates::kSummarizePrompt);
        for (const auto& p : pairs) {
            corpus.push_back(p.prompt);
            corpus.push_back(p.answer);
        }
        for (const auto& g : guidance) corpus.push_back(g.guidance);
        const ns::pipeline::VocabMap vocab = ns::pipeline::VocabMap::build(corpus, a.vocab_size);
        const ns::npo::ToyLM reward =
            ns::npo::ToyLM::seeded(a.vocab_size, ns::mix_seed(a.seed, 1));
        const ns::npo::ToyLM ref = ns::npo::ToyLM::seeded(a.vocab_size, ns::mix_seed(a.seed, 2));
        const std::vector<ns::npo::PreferenceTuple> tuples =
            ns::pipeline::assemble_preference_tuples(pairs, guidance, reward, ref, vocab,
                                                     a.max_len);
        ns::pipeline::write_tuples(tuples, a.tuples_out_path);
        std::printf("tuples: %zu written\n", tuples.size());
    }
    return 0;
}

struct NpoTrainArgs {
    std::string dataset_path;
    std::string checkpoint_out_path;
    std::string trace_out_path;
    double alpha = 0.6;
    double lr = 1e-4;
    int epochs = 10;
    std::uint64_t seed = 0;
    int vocab_size = 0;  // 0 = infer from the dataset
};

int cmd_npo_train(const NpoTrainArgs& a) {
    const std::vector<ns::npo::PreferenceTuple> dataset = ns::pipeline::load_tuples(a.dataset_path);

    int needed = 2;
    for (const auto& t : dataset)
        for (const ns::npo::TokenSeq* seq :
             {&t.context, &t.answer, &t.summary_reward, &t.summary_ref, &t.guidance})
            for (int tok : *seq) needed = std::max(needed, tok + 1);
    int vocab = a.vocab_size;
    if (vocab == 0)
        vocab = needed;
    else if (vocab < needed)
        throw ns::ValidationError("--vocab-size " + std::to_string(vocab) +
                                  " is smaller than the dataset needs (" + std::to_string(needed) +
                                  ")");

    // The trainable model and the frozen reference both start from seeded
    // initializations derived from --seed; the same convention nsft-pairs
    // uses when it emits tuples.
    const ns::npo::ToyLM reward = ns::npo::ToyLM::seeded(vocab, ns::mix_seed(a.seed, 1));
    const ns::npo::ToyLM ref = ns::npo::ToyLM::seeded(vocab, ns::mix_seed(a.seed, 2));

    ns::npo::NpoConfig cfg;
    cfg.alpha = a.alpha;
    cfg.lr = a.lr;
    cfg.epochs = a.epochs;
    const ns::npo::TrainResult result = ns::npo::train(reward, ref, dataset, cfg);

    for (std::size_t i = 0; i < result.trace.size(); ++i)
        std::printf("epoch %zu loss %.12f\n", i, result.trace[i]);
    if (result.trace.empty())
        std::printf("no epochs run; checkpoint equals the initialization\n");
    else
        std::printf("final loss %.12f (initial %.12f)\n", result.trace.back(),
                    result.trace.front());

    ordered_json checkpoint = ns::npo::model_to_json(result.model);
    checkpoint["trace"] = result.trace;
    ns::write_json_file(checkpoint, a.checkpoint_out_path);
    if (!a.trace_out_path.empty())
        ns::write_json_file(ordered_json{{"trace", result.trace}}, a.trace_out_path);
    return 0;
}

struct FuseCheckArgs {
    int vocab_dim = 64;
    int bev_dim = 8;
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
};

int cmd_fuse_check(const FuseCheckArgs& a) {
    if (a.vocab_dim < 1 || a.bev_dim < 1)
        throw ns::InvalidDimsError("--vocab-dim and --bev-dim must be positive");

    const ns::fusion::MlpWeights phi_red =
        ns::fusion::MlpWeights::seeded(a.vocab_dim, a.bev_dim, a.bev_dim, ns::mix_seed(a.seed, 1));
    const ns::fusion::MlpWeights phi_fus = ns::fusion::MlpWeights::seeded(
        2 * a.bev_dim, 2 * a.bev_dim, a.bev_dim, ns::mix_seed(a.seed, 2));
    const ns::fusion::TaskHead head{
        ns::fusion::TaskId::planning,
        ns::fusion::MlpWeights::seeded(a.bev_dim, a.bev_dim, a.bev_dim, ns::mix_seed(a.seed, 3))};
    const ns::fusion::FeatureVec bev = ns::fusion::FeatureVec::seeded(a.bev_dim, ns::mix_seed(a.seed, 4));
    const ns::fusion::FeatureVec vlm =
        ns::fusion::FeatureVec::seeded(a.vocab_dim, ns::mix_seed(a.seed, 5));

    const double err = ns::fusion::grad_check(bev, vlm, phi_red, phi_fus, head);
    const bool pass = err < a.tolerance;
    std::printf("max relative gradient error %.6e\n%s\n", err, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    GeoOffsetArgs geo_args;
    BuildArgs build_args;
    SelectArgs select_args;
    NsftArgs nsft_args;
    NpoTrainArgs train_args;
    FuseCheckArgs fuse_args;
    std::string config_path_opt;

    CLI::App app{"navigation guidance generation, preference training, and fusion checks"};
    app.require_subcommand(1);

    try {
        const std::string config_path = find_config_path(argc, argv);
        const Defaults cfg =
            config_path.empty() ? Defaults() : Defaults(ns::read_json_file(config_path));

        const auto add_config_flag = [&](CLI::App* sub) {
            sub->add_option("--config", config_path_opt, "JSON file supplying flag defaults");
        };

        CLI::App* geo = app.add_subcommand("geo-offset",
                                           "Offset a lat/lon origin by a metric translation");
        add_config_flag(geo);
        geo->add_option("--lat", geo_args.lat, "origin latitude, degrees")->required();
        geo->add_option("--lon", geo_args.lon, "origin longitude, degrees")->required();
        geo->add_option("--dx", geo_args.dx = cfg.get("dx", 0.0), "meters east");
        geo->add_option("--dy", geo_args.dy = cfg.get("dy", 0.0), "meters north");
        geo->add_option("--dz", geo_args.dz = cfg.get("dz", 0.0), "meters up (ignored)");
        geo->add_option("--radius", geo_args.radius_m = cfg.get("radius", geo_args.radius_m),
                        "earth radius, meters");

        CLI::App* build =
            app.add_subcommand("build", "Generate guidance records for a scenes file");
        add_config_flag(build);
        build->add_option("--scenes", build_args.scenes_path, "scenes JSONL")->required();
        build->add_option("--out", build_args.out_path, "guidance JSONL output")->required();
        build->add_option("--seed", build_args.seed = cfg.get<std::uint64_t>("seed", 0),
                          "run seed");
        build->add_option("--frames", build_args.frames = cfg.get("frames", 20),
                          "frames sampled per route");
        build->add_option("--num-candidates",
                          build_args.num_candidates = cfg.get("num-candidates", 5),
                          "candidate texts per scene");
        build->add_option("--weights", build_args.weights = cfg.weights(build_args.weights),
                          "similarity weights, comma separated");
        build->add_option("--speed", build_args.speed_mps = cfg.get("speed", build_args.speed_mps),
                          "assumed travel speed, m/s");
        build->add_option("--jobs", build_args.jobs = cfg.get("jobs", 1), "worker threads");
        build->add_flag("--strict", build_args.strict, "abort on the first scene error");
        build->add_option("--graph", build_args.graph_path, "road graph JSON to route on");
        build->add_option("--graph-out", build_args.graph_out_path,
                          "write the synthesized road graph here");
        build->add_option("--grid-width", build_args.grid_width = cfg.get("grid-width", 6),
                          "synthesized grid width");
        build->add_option("--grid-height", build_args.grid_height = cfg.get("grid-height", 6),
                          "synthesized grid height");
        build->add_option("--spacing", build_args.spacing_m = cfg.get("spacing", 100.0),
                          "synthesized grid spacing, meters");
        auto* olat = build->add_option("--origin-lat", build_args.origin_lat,
                                       "synthesized grid origin latitude");
        build->add_option("--origin-lon", build_args.origin_lon,
                          "synthesized grid origin longitude")
            ->needs(olat);

        CLI::App* select = app.add_subcommand("select", "Pick consensus texts from candidate sets");
        add_config_flag(select);
        select->add_option("--candidates", select_args.candidates_path, "candidate set JSONL")
            ->required();
        select->add_option("--weights", select_args.weights = cfg.weights(select_args.weights),
                           "similarity weights, comma separated");

        CLI::App* nsft =
            app.add_subcommand("nsft-pairs", "Join guidance with QA into supervision pairs");
        add_config_flag(nsft);
        nsft->add_option("--guidance", nsft_args.guidance_path, "guidance JSONL")->required();
        nsft->add_option("--qa", nsft_args.qa_path, "question/answer JSONL")->required();
        nsft->add_option("--out", nsft_args.out_path, "pairs JSONL output")->required();
        nsft->add_option("--tuples-out", nsft_args.tuples_out_path,
                         "also emit preference tuples here");
        nsft->add_option("--vocab-size", nsft_args.vocab_size = cfg.get("vocab-size", 32),
                         "token vocabulary size for tuples");
        nsft->add_option("--max-len", nsft_args.max_len = cfg.get("max-len", 8),
                         "token sequence cap for tuples");
        nsft->add_option("--seed", nsft_args.seed = cfg.get<std::uint64_t>("seed", 0),
                         "model initialization seed for tuples");

        CLI::App* train = app.add_subcommand("npo-train", "Optimize the toy reward model");
        add_config_flag(train);
        train->add_option("--dataset", train_args.dataset_path, "preference tuple JSONL")
            ->required();
        train->add_option("--checkpoint-out", train_args.checkpoint_out_path,
                          "trained model JSON output")
            ->required();
        train->add_option("--trace-out", train_args.trace_out_path, "loss trace JSON output");
        train->add_option("--alpha", train_args.alpha = cfg.get("alpha", 0.6),
                          "information score weight");
        train->add_option("--lr", train_args.lr = cfg.get("lr", 1e-4), "learning rate");
        train->add_option("--epochs", train_args.epochs = cfg.get("epochs", 10), "epoch count");
        train->add_option("--seed", train_args.seed = cfg.get<std::uint64_t>("seed", 0),
                          "model initialization seed");
        train->add_option("--vocab-size", train_args.vocab_size = cfg.get("vocab-size", 0),
                          "vocab size (0 = infer from the dataset)");

        CLI::App* fuse = app.add_subcommand("fuse-check", "Verify fusion-path gradients");
        add_config_flag(fuse);
        fuse->add_option("--vocab-dim", fuse_args.vocab_dim = cfg.get("vocab-dim", 64),
                         "language feature dimension");
        fuse->add_option("--bev-dim", fuse_args.bev_dim = cfg.get("bev-dim", 8),
                         "driving feature dimension");
        fuse->add_option("--seed", fuse_args.seed = cfg.get<std::uint64_t>("seed", 0),
                         "weight and feature seed");
        fuse->add_option("--tolerance", fuse_args.tolerance = cfg.get("tolerance", 1e-4),
                         "pass threshold on the relative error");

        app.parse(argc, argv);
        build_args.origin_given = olat->count() > 0;

        if (app.got_subcommand(geo)) return cmd_geo_offset(geo_args);
        if (app.got_subcommand(build)) return cmd_build(build_args);
        if (app.got_subcommand(select)) return cmd_select(select_args);
        if (app.got_subcommand(nsft)) return cmd_nsft_pairs(nsft_args);
        if (app.got_subcommand(train)) return cmd_npo_train(train_args);
        if (app.got_subcommand(fuse)) return cmd_fuse_check(fuse_args);
        std::fprintf(stderr, "no subcommand selected\n");
        return 2;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ns::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
