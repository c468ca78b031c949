// Standalone acceptance harness: every release property on one line each,
// nonzero exit if anything fails or overruns its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "navigscene/navigscene.hpp"
#include "support/oracles.hpp"

namespace geo = navigscene::geo;
namespace cand = navigscene::candidates;
namespace sel = navigscene::selector;
namespace npo = navigscene::npo;
namespace fus = navigscene::fusion;
namespace pl = navigscene::pipeline;
using navigscene::Rng;
using navigscene::mix_seed;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        ok = false;
        if (detail.empty()) detail = why;
    }
    void expect(bool condition, const std::string& why) {
        if (!condition) fail(why);
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// ---- 1: geodesic offsets -------------------------------------------------

void check_geodesy(Outcome& out) {
    const double arc_one_degree = geo::kPi * geo::EarthModel{}.radius_m / 180.0;
    const geo::GeoCoordinate north = geo::offset_coordinate(
        geo::GeoCoordinate(0.0, 0.0), geo::TranslationVector(0.0, arc_one_degree));
    out.expect(std::fabs(north.lat - 1.0) < 1e-9,
               "one-degree arc landed at " + fmt(north.lat));

    Rng rng(424242);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const geo::GeoCoordinate origin(rng.next_range(-80.0, 80.0),
                                        rng.next_range(-180.0, 180.0));
        const geo::TranslationVector t(rng.next_range(-100.0, 100.0),
                                       rng.next_range(-100.0, 100.0),
                                       rng.next_range(-50.0, 50.0));
        const geo::GeoCoordinate there = geo::offset_coordinate(origin, t);
        const geo::GeoCoordinate back = geo::offset_coordinate(there, t.negated());
        worst = std::max(worst, std::fabs(back.lat - origin.lat));
        worst = std::max(worst, std::fabs(geo::normalize_longitude(back.lon - origin.lon)));
    }
    out.expect(worst < 1e-6, "round-trip error " + fmt(worst));
}

// ---- 2: selector vs. independent evaluator --------------------------------

void check_selector_oracle(Outcome& out) {
    Rng rng(777);
    for (int round = 0; round < 500 && out.ok; ++round) {
        const int n = 2 + static_cast<int>(rng.next_index(5));  // up to 6
        const std::vector<std::string> texts = oracle::random_candidate_texts(rng, n);
        const sel::SelectionReport got = sel::select_best(texts);
        const oracle::Selection want = oracle::select(texts, 0.5, 0.3, 0.2);

        out.expect(got.winner_index == want.winner,
                   "winner mismatch in round " + std::to_string(round));
        for (int i = 0; i < n; ++i) {
            if (std::fabs(got.cumulative[i] - want.cumulative[i]) >= 1e-12)
                out.fail("cumulative mismatch in round " + std::to_string(round));
            for (int j = 0; j < n; ++j) {
                const double v = got.pairwise[i][j];
                if (std::fabs(v - want.pairwise[i][j]) >= 1e-12)
                    out.fail("pairwise mismatch in round " + std::to_string(round));
                if (std::fabs(v - got.pairwise[j][i]) >= 1e-12)
                    out.fail("asymmetric score in round " + std::to_string(round));
                if (v < 0.0 || v > 1.0 + 1e-12)
                    out.fail("score out of range in round " + std::to_string(round));
            }
        }
    }
}

// ---- 3: identical candidates under the default weights --------------------

void check_selector_defaults(Outcome& out) {
    const std::vector<std::string> texts(5, "Turn left in 120 meters at the signal.");
    const sel::SelectionReport report =
        sel::select_best(texts, sel::SimilarityWeights(0.5, 0.3, 0.2));
    for (const auto& row : report.pairwise)
        for (double v : row)
            out.expect(v == 1.0, "identical candidates scored " + fmt(v));
    out.expect(report.winner_index == 0,
               "tie broke to index " + std::to_string(report.winner_index));
}

// ---- 4: symmetric preference point -----------------------------------------

void check_symmetric_loss(Outcome& out) {
    const npo::ToyLM model = npo::ToyLM::seeded(6, 2024);
    npo::PreferenceTuple t;
    t.context = {3, 1};
    t.answer = {2, 4};
    t.summary_reward = {5, 1};
    t.summary_ref = {5, 1};
    t.guidance = {0, 2};
    const double loss = npo::npo_loss(model, model, {t}, npo::NpoConfig{});
    out.expect(std::fabs(loss - 0.6931471805599453) < 1e-12,
               "symmetric loss " + fmt(loss));
}

// ---- 5: analytic vs. numeric preference gradient ---------------------------

npo::TokenSeq random_seq(Rng& rng, int vocab, int min_len, int max_len) {
    const int len = min_len + static_cast<int>(rng.next_index(
                                  static_cast<std::size_t>(max_len - min_len + 1)));
    npo::TokenSeq seq(static_cast<std::size_t>(len));
    for (int& t : seq) t = static_cast<int>(rng.next_index(static_cast<std::size_t>(vocab)));
    return seq;
}

npo::PreferenceTuple random_tuple(Rng& rng, int vocab, int max_len) {
    npo::PreferenceTuple t;
    t.context = random_seq(rng, vocab, 0, max_len);
    t.answer = random_seq(rng, vocab, 1, max_len);
    t.summary_reward = random_seq(rng, vocab, 1, max_len);
    t.summary_ref = random_seq(rng, vocab, 1, max_len);
    t.guidance = random_seq(rng, vocab, 1, max_len);
    return t;
}

void check_npo_gradient(Outcome& out) {
    Rng rng(31337);
    for (int instance = 0; instance < 20; ++instance) {
        const int vocab = 2 + static_cast<int>(rng.next_index(15));  // 2..16
        const npo::ToyLM reward = npo::ToyLM::seeded(vocab, mix_seed(1, instance));
        const npo::ToyLM ref = npo::ToyLM::seeded(vocab, mix_seed(2, instance));
        std::vector<npo::PreferenceTuple> batch;
        const int batch_size = 1 + static_cast<int>(rng.next_index(3));
        for (int b = 0; b < batch_size; ++b) batch.push_back(random_tuple(rng, vocab, 6));

        const npo::NpoConfig cfg;  // alpha 0.6
        const std::vector<double> analytic = npo::npo_grad(reward, ref, batch, cfg);
        const std::vector<double> numeric = oracle::fd_npo_grad(reward, ref, batch, cfg, 1e-5);
        const double err = oracle::max_rel_error(analytic, numeric);
        if (err >= 1e-4) {
            out.fail("instance " + std::to_string(instance) + " error " + fmt(err));
            return;
        }
    }
}

// ---- 6: training descent and determinism -----------------------------------

void check_training(Outcome& out) {
    const int vocab = 8;
    Rng rng(20240819);
    std::vector<npo::PreferenceTuple> data;
    for (int i = 0; i < 16; ++i) data.push_back(random_tuple(rng, vocab, 6));
    const npo::ToyLM reward = npo::ToyLM::seeded(vocab, 501);
    const npo::ToyLM ref = npo::ToyLM::seeded(vocab, 502);

    npo::NpoConfig cfg;
    cfg.alpha = 0.6;
    cfg.lr = 1e-4;
    cfg.epochs = 10;
    const npo::TrainResult first = npo::train(reward, ref, data, cfg);
    out.expect(first.trace.size() == 10, "trace has " + std::to_string(first.trace.size()));
    out.expect(first.trace.back() < first.trace.front(),
               "loss went " + fmt(first.trace.front()) + " -> " + fmt(first.trace.back()));

    const npo::TrainResult second = npo::train(reward, ref, data, cfg);
    out.expect(second.trace == first.trace, "two runs diverged");
}

// ---- 7: fusion collapse and gradients ---------------------------------------

void check_fusion(Outcome& out) {
    const int bev_dim = 8;
    const int vlm_dim = 64;
    const fus::MlpWeights identity = fus::identity_first_block_fusion(bev_dim);
    const fus::MlpWeights phi_red = fus::MlpWeights::seeded(vlm_dim, bev_dim, bev_dim, 61);
    const fus::TaskHead head{fus::TaskId::planning,
                             fus::MlpWeights::seeded(bev_dim, bev_dim, bev_dim, 62)};
    for (std::uint64_t i = 0; i < 50; ++i) {
        const fus::FeatureVec bev = fus::FeatureVec::seeded(bev_dim, mix_seed(3, i));
        const fus::FeatureVec vlm = fus::FeatureVec::seeded(vlm_dim, mix_seed(4, i));
        const fus::FeatureVec nav = fus::forward_navigated(bev, vlm, phi_red, identity, head);
        const fus::FeatureVec con = fus::forward_conventional(bev, head);
        if (nav.values != con.values) {
            out.fail("navigated output diverged on sample " + std::to_string(i));
            return;
        }
    }

    const fus::MlpWeights phi_fus =
        fus::MlpWeights::seeded(2 * bev_dim, 2 * bev_dim, bev_dim, 63);
    const fus::FeatureVec bev = fus::FeatureVec::seeded(bev_dim, 64);
    const fus::FeatureVec vlm = fus::FeatureVec::seeded(vlm_dim, 65);
    const double err = fus::grad_check(bev, vlm, phi_red, phi_fus, head);
    out.expect(err < 1e-4, "gradient error " + fmt(err));
}

// ---- 8: pipeline determinism -------------------------------------------------

void check_pipeline(Outcome& out) {
    const std::vector<pl::SceneRecord> scenes = oracle::synthetic_scenes(50);
    const navigscene::routesim::RoadGraph graph = oracle::scene_grid();
    const cand::StubGenerator client;

    pl::BatchOptions options;
    options.frame_count = 20;
    options.num_candidates = 5;
    options.seed = 99;
    options.jobs = 4;

    oracle::TempDir dir;
    const pl::BatchResult a = pl::build_guidance_batch(scenes, graph, client, options);
    pl::write_guidance(a.records, dir.file("a.jsonl"));
    const pl::BatchResult b = pl::build_guidance_batch(scenes, graph, client, options);
    pl::write_guidance(b.records, dir.file("b.jsonl"));

    out.expect(a.skipped.empty(), "scenes were skipped");
    out.expect(a.records.size() == 50, "built " + std::to_string(a.records.size()));
    out.expect(oracle::slurp(dir.file("a.jsonl")) == oracle::slurp(dir.file("b.jsonl")),
               "reruns differ on disk");
    for (const auto& record : a.records) {
        const std::size_t w = static_cast<std::size_t>(record.report.winner_index);
        if (record.guidance != record.candidates.texts[w]) {
            out.fail("guidance is not the winning candidate for " + record.scene_id);
            return;
        }
    }
}

// ---- 9: information score hand value ----------------------------------------

void check_information_value(Outcome& out) {
    const double mi = npo::mutual_info_score(npo::ToyLM::zeros(4), {1, 2}, {3, 0});
    out.expect(std::fabs(mi - 2.945876) < 1e-6, "information score " + fmt(mi));
}

struct Criterion {
    const char* name;
    void (*check)(Outcome&);
    double budget_ms;
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"geodesic offsets: unit case and round trip", check_geodesy, 1000.0},
        {"selection matches the independent evaluator", check_selector_oracle, 5000.0},
        {"identical candidates score one, first wins", check_selector_defaults, 1000.0},
        {"symmetric preference tuple sits at log two", check_symmetric_loss, 1000.0},
        {"preference gradient matches finite differences", check_npo_gradient, 30000.0},
        {"training descends and is repeatable", check_training, 30000.0},
        {"fusion collapses to conventional; gradients check", check_fusion, 10000.0},
        {"pipeline reruns are byte-identical", check_pipeline, 10000.0},
        {"information score hand value", check_information_value, 1000.0},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.check(outcome);
        } catch (const std::exception& e) {
            outcome.fail(std::string("threw: ") + e.what());
        }
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        if (ms > c.budget_ms)
            outcome.fail("took " + fmt(ms) + " ms, budget " + fmt(c.budget_ms));
        if (outcome.ok) {
            std::printf("PASS  %-48s %8.1f ms\n", c.name, ms);
        } else {
            std::printf("FAIL  %-48s %8.1f ms  %s\n", c.name, ms, outcome.detail.c_str());
            ++failures;
        }
    }
    if (failures > 0) std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
