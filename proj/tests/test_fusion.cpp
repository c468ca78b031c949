#include <cmath>
#include <limits>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "navigscene/fusion.hpp"
#include "navigscene/rng.hpp"

namespace fus = navigscene::fusion;
using navigscene::mix_seed;
using Catch::Matchers::WithinAbs;

namespace {

// One relu cut in the hidden layer, small enough to verify on paper.
fus::MlpWeights hand_mlp() {
    fus::MlpWeights w = fus::MlpWeights::zeros(2, 2, 1);
    w.w1 = {1.0, 0.0, 0.0, -1.0};
    w.b1 = {0.5, 0.0};
    w.w2 = {1.0, 1.0};
    w.b2 = {0.25};
    return w;
}

}  // namespace

TEST_CASE("a hand-worked mlp forward pass") {
    const fus::FeatureVec x(std::vector<double>{1.0, 2.0});
    const fus::FeatureVec y = hand_mlp().apply(x);
    // pre = [1.5, -2], relu kills the second unit, out = 1.5 + 0.25
    REQUIRE(y.dim() == 1);
    REQUIRE_THAT(y.values[0], WithinAbs(1.75, 1e-15));
}

TEST_CASE("feature vectors reject non-finite values and bad dimensions") {
    REQUIRE_THROWS_AS(fus::FeatureVec(std::vector<double>{1.0, std::nan("")}),
                      navigscene::NonFiniteError);
    REQUIRE_THROWS_AS(
        fus::FeatureVec(std::vector<double>{std::numeric_limits<double>::infinity()}),
        navigscene::NonFiniteError);
    REQUIRE_THROWS_AS(fus::FeatureVec::seeded(0, 1), navigscene::ValidationError);
    REQUIRE(fus::FeatureVec::seeded(5, 1).dim() == 5);
}

TEST_CASE("mlps validate their shapes and inputs") {
    REQUIRE_THROWS_AS(fus::MlpWeights::zeros(0, 1, 1), navigscene::InvalidDimsError);
    fus::MlpWeights w = fus::MlpWeights::zeros(2, 3, 1);
    w.b1.pop_back();
    REQUIRE_THROWS_AS(w.check_shapes(), navigscene::InvalidDimsError);
    REQUIRE_THROWS_AS(hand_mlp().apply(fus::FeatureVec(std::vector<double>{1.0})),
                      navigscene::DimMismatchError);
}

TEST_CASE("fusing checks the concatenated dimension") {
    const fus::FeatureVec bev = fus::FeatureVec::seeded(4, 1);
    const fus::FeatureVec reduced = fus::FeatureVec::seeded(4, 2);
    const fus::MlpWeights wrong = fus::MlpWeights::seeded(7, 4, 4, 3);
    REQUIRE_THROWS_AS(fus::fuse(bev, reduced, wrong), navigscene::DimMismatchError);
    const fus::MlpWeights right = fus::MlpWeights::seeded(8, 4, 4, 3);
    REQUIRE(fus::fuse(bev, reduced, right).dim() == 4);
}

TEST_CASE("identity fusion makes the navigated path match the conventional one bit for bit") {
    const int bev_dim = 8;
    const int vlm_dim = 24;
    const fus::MlpWeights phi_fus = fus::identity_first_block_fusion(bev_dim);
    const fus::MlpWeights phi_red = fus::MlpWeights::seeded(vlm_dim, bev_dim, bev_dim, 51);
    const fus::TaskHead head{fus::TaskId::planning,
                             fus::MlpWeights::seeded(bev_dim, 12, 6, 52)};
    for (std::uint64_t i = 0; i < 100; ++i) {
        const fus::FeatureVec bev = fus::FeatureVec::seeded(bev_dim, mix_seed(900, i));
        const fus::FeatureVec vlm = fus::FeatureVec::seeded(vlm_dim, mix_seed(901, i));
        const fus::FeatureVec nav = fus::forward_navigated(bev, vlm, phi_red, phi_fus, head);
        const fus::FeatureVec con = fus::forward_conventional(bev, head);
        REQUIRE(nav.values == con.values);
    }
    REQUIRE_THROWS_AS(fus::identity_first_block_fusion(0), navigscene::InvalidDimsError);
}

TEST_CASE("the identity fusion block reconstructs its first input exactly") {
    const int dim = 5;
    const fus::MlpWeights w = fus::identity_first_block_fusion(dim);
    const fus::FeatureVec bev = fus::FeatureVec::seeded(dim, 61);
    const fus::FeatureVec reduced = fus::FeatureVec::seeded(dim, 62);
    REQUIRE(fus::fuse(bev, reduced, w).values == bev.values);
}

TEST_CASE("the backward pass reports the same loss the forward pass computes") {
    const fus::FeatureVec bev = fus::FeatureVec::seeded(3, 71);
    const fus::FeatureVec vlm = fus::FeatureVec::seeded(6, 72);
    const fus::MlpWeights phi_red = fus::MlpWeights::seeded(6, 4, 3, 73);
    const fus::MlpWeights phi_fus = fus::MlpWeights::seeded(6, 5, 3, 74);
    const fus::TaskHead head{fus::TaskId::prediction, fus::MlpWeights::seeded(3, 4, 2, 75)};

    const fus::FusionGradients grads = fus::navigated_backward(bev, vlm, phi_red, phi_fus, head);
    const fus::FeatureVec out = fus::forward_navigated(bev, vlm, phi_red, phi_fus, head);
    double expected = 0.0;
    for (double v : out.values) expected += 0.5 * v * v;
    REQUIRE_THAT(grads.loss, WithinAbs(expected, 1e-12));
}

TEST_CASE("analytic gradients match finite differences on small shapes") {
    const fus::FeatureVec bev = fus::FeatureVec::seeded(3, 81);
    const fus::FeatureVec vlm = fus::FeatureVec::seeded(7, 82);
    const fus::MlpWeights phi_red = fus::MlpWeights::seeded(7, 5, 3, 83);
    const fus::MlpWeights phi_fus = fus::MlpWeights::seeded(6, 8, 3, 84);
    const fus::TaskHead head{fus::TaskId::perception, fus::MlpWeights::seeded(3, 4, 2, 85)};
    REQUIRE(fus::grad_check(bev, vlm, phi_red, phi_fus, head) < 1e-4);
}

TEST_CASE("analytic gradients match finite differences at working size") {
    const int vlm_dim = 64;
    const int bev_dim = 8;
    const fus::FeatureVec bev = fus::FeatureVec::seeded(bev_dim, 91);
    const fus::FeatureVec vlm = fus::FeatureVec::seeded(vlm_dim, 92);
    const fus::MlpWeights phi_red = fus::MlpWeights::seeded(vlm_dim, bev_dim, bev_dim, 93);
    const fus::MlpWeights phi_fus =
        fus::MlpWeights::seeded(2 * bev_dim, 2 * bev_dim, bev_dim, 94);
    const fus::TaskHead head{fus::TaskId::planning,
                             fus::MlpWeights::seeded(bev_dim, bev_dim, bev_dim, 95)};
    REQUIRE(fus::grad_check(bev, vlm, phi_red, phi_fus, head) < 1e-4);
}

TEST_CASE("dead relu units collect exactly zero gradient") {
    const fus::FeatureVec bev = fus::FeatureVec::seeded(2, 11);
    const fus::FeatureVec vlm = fus::FeatureVec::seeded(3, 12);
    const fus::MlpWeights phi_red = fus::MlpWeights::seeded(3, 2, 2, 13);
    const fus::MlpWeights phi_fus = fus::identity_first_block_fusion(2);
    fus::TaskHead head{fus::TaskId::planning, fus::MlpWeights::seeded(2, 3, 2, 14)};
    head.weights.b1[1] = -100.0;  // unit 1 can never fire on bounded inputs

    const fus::FusionGradients grads = fus::navigated_backward(bev, vlm, phi_red, phi_fus, head);
    REQUIRE(grads.head.b1[1] == 0.0);
    REQUIRE(grads.head.w1[2] == 0.0);
    REQUIRE(grads.head.w1[3] == 0.0);
}

TEST_CASE("task ids have stable names") {
    REQUIRE(fus::to_string(fus::TaskId::perception) == "perception");
    REQUIRE(fus::to_string(fus::TaskId::prediction) == "prediction");
    REQUIRE(fus::to_string(fus::TaskId::planning) == "planning");
}

TEST_CASE("mlp weights survive a json round trip") {
    const fus::MlpWeights w = fus::MlpWeights::seeded(3, 4, 2, 123);
    const fus::MlpWeights back = fus::mlp_from_json(fus::mlp_to_json(w));
    REQUIRE(back.in_dim == w.in_dim);
    REQUIRE(back.hidden_dim == w.hidden_dim);
    REQUIRE(back.out_dim == w.out_dim);
    REQUIRE(back.w1 == w.w1);
    REQUIRE(back.b1 == w.b1);
    REQUIRE(back.w2 == w.w2);
    REQUIRE(back.b2 == w.b2);

    nlohmann::ordered_json bad = fus::mlp_to_json(w);
    bad["b1"] = std::vector<double>{1.0};
    REQUIRE_THROWS_AS(fus::mlp_from_json(bad), navigscene::InvalidDimsError);
    REQUIRE_THROWS_AS(fus::mlp_from_json(nlohmann::ordered_json{{"in_dim", 2}}),
                      navigscene::ParseError);
}
