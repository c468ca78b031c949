#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "navigscene/errors.hpp"
#include "navigscene/rng.hpp"

#include <json.hpp>

namespace navigscene::fusion {

struct FeatureVec {
    std::vector<double> values;

    FeatureVec() = default;
    explicit FeatureVec(std::vector<double> v) : values(std::move(v)) {
        for (double x : values)
            if (!std::isfinite(x)) throw NonFiniteError("feature values must be finite");
    }

    int dim() const { return static_cast<int>(values.size()); }

    static FeatureVec seeded(int dim, std::uint64_t seed, double scale = 1.0) {
        if (dim < 1) throw ValidationError("feature dimension must be positive");
        Rng rng(seed);
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (double& x : v) x = rng.next_range(-scale, scale);
        return FeatureVec(std::move(v));
    }
};

// One hidden layer, relu in between: y = W2 * relu(W1 x + b1) + b2.
// W1 is hidden_dim x in_dim, W2 is out_dim x hidden_dim, both row-major.
struct MlpWeights {
    int in_dim = 0;
    int hidden_dim = 0;
    int out_dim = 0;
    std::vector<double> w1, b1, w2, b2;

    static MlpWeights zeros(int in_dim, int hidden_dim, int out_dim) {
        if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
            throw InvalidDimsError("mlp dimensions must be positive");
        MlpWeights w;
        w.in_dim = in_dim;
        w.hidden_dim = hidden_dim;
        w.out_dim = out_dim;
        w.w1.assign(static_cast<std::size_t>(hidden_dim) * in_dim, 0.0);
        w.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
        w.w2.assign(static_cast<std::size_t>(out_dim) * hidden_dim, 0.0);
        w.b2.assign(static_cast<std::size_t>(out_dim), 0.0);
        return w;
    }

    static MlpWeights seeded(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed,
                             double scale = 0.5) {
        MlpWeights w = zeros(in_dim, hidden_dim, out_dim);
        Rng rng(seed);
        for (double& x : w.w1) x = rng.next_range(-scale, scale);
        for (double& x : w.b1) x = rng.next_range(-scale, scale);
        for (double& x : w.w2) x = rng.next_range(-scale, scale);
        for (double& x : w.b2) x = rng.next_range(-scale, scale);
        return w;
    }

    void check_shapes() const {
        if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
            throw InvalidDimsError("mlp dimensions must be positive");
        if (w1.size() != static_cast<std::size_t>(hidden_dim) * in_dim ||
            b1.size() != static_cast<std::size_t>(hidden_dim) ||
            w2.size() != static_cast<std::size_t>(out_dim) * hidden_dim ||
            b2.size() != static_cast<std::size_t>(out_dim))
            throw InvalidDimsError("mlp weight shapes do not match declared dimensions");
    }

    FeatureVec apply(const FeatureVec& x) const;
};

namespace detail {

struct MlpCache {
    std::vector<double> input;
    std::vector<double> pre;     // W1 x + b1
    std::vector<double> hidden;  // relu(pre)
};

inline std::vector<double> mlp_forward(const MlpWeights& w, const std::vector<double>& x,
                                       MlpCache* cache) {
    w.check_shapes();
    if (static_cast<int>(x.size()) != w.in_dim)
        throw DimMismatchError("mlp input has dimension " + std::to_string(x.size()) +
                               ", expected " + std::to_string(w.in_dim));
    std::vector<double> pre(static_cast<std::size_t>(w.hidden_dim));
    for (int r = 0; r < w.hidden_dim; ++r) {
        double acc = w.b1[static_cast<std::size_t>(r)];
        const double* row = w.w1.data() + static_cast<std::size_t>(r) * w.in_dim;
        for (int c = 0; c < w.in_dim; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        pre[static_cast<std::size_t>(r)] = acc;
    }
    std::vector<double> hidden(pre);
    for (double& h : hidden) h = h > 0.0 ? h : 0.0;
    std::vector<double> out(static_cast<std::size_t>(w.out_dim));
    for (int r = 0; r < w.out_dim; ++r) {
        double acc = w.b2[static_cast<std::size_t>(r)];
        const double* row = w.w2.data() + static_cast<std::size_t>(r) * w.hidden_dim;
        for (int c = 0; c < w.hidden_dim; ++c) acc += row[c] * hidden[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = acc;
    }
    if (cache) *cache = {x, std::move(pre), std::move(hidden)};
    return out;
}

}  // namespace detail

inline FeatureVec MlpWeights::apply(const FeatureVec& x) const {
    FeatureVec out;
    out.values = detail::mlp_forward(*this, x.values, nullptr);
    return out;
}

enum class TaskId { perception, prediction, planning };

inline std::string to_string(TaskId id) {
    switch (id) {
        case TaskId::perception: return "perception";
        case TaskId::prediction: return "prediction";
        case TaskId::planning: return "planning";
    }
    throw ValidationError("unknown task id");
}

struct TaskHead {
    TaskId task_id = TaskId::planning;
    MlpWeights weights;
};

// Projects the language feature into the driving feature's dimension.
inline FeatureVec reduce(const FeatureVec& vlm, const MlpWeights& phi_red) {
    return phi_red.apply(vlm);
}

// Fuses the driving feature with the reduced language feature; the fusion
// net consumes their concatenation.
inline FeatureVec fuse(const FeatureVec& bev, const FeatureVec& reduced,
                       const MlpWeights& phi_fus) {
    if (phi_fus.in_dim != bev.dim() + reduced.dim())
        throw DimMismatchError("fusion input dimension must equal bev dim plus reduced dim");
    FeatureVec cat;
    cat.values.reserve(static_cast<std::size_t>(phi_fus.in_dim));
    cat.values.insert(cat.values.end(), bev.values.begin(), bev.values.end());
    cat.values.insert(cat.values.end(), reduced.values.begin(), reduced.values.end());
    return phi_fus.apply(cat);
}

inline FeatureVec forward_conventional(const FeatureVec& bev, const TaskHead& head) {
    return head.weights.apply(bev);
}

inline FeatureVec forward_navigated(const FeatureVec& bev, const FeatureVec& vlm,
                                    const MlpWeights& phi_red, const MlpWeights& phi_fus,
                                    const TaskHead& head) {
    return head.weights.apply(fuse(bev, reduce(vlm, phi_red), phi_fus));
}

// Fusion weights that pass the first input block through untouched: with
// hidden width 2*dim, relu(x) - relu(-x) reconstructs x exactly, so the
// fused feature equals the bev feature and the navigated path collapses to
// the conventional one.
inline MlpWeights identity_first_block_fusion(int bev_dim) {
    if (bev_dim < 1) throw InvalidDimsError("bev dimension must be positive");
    MlpWeights w = MlpWeights::zeros(2 * bev_dim, 2 * bev_dim, bev_dim);
    for (int r = 0; r < bev_dim; ++r) {
        w.w1[static_cast<std::size_t>(r) * w.in_dim + r] = 1.0;
        w.w1[static_cast<std::size_t>(bev_dim + r) * w.in_dim + r] = -1.0;
        w.w2[static_cast<std::size_t>(r) * w.hidden_dim + r] = 1.0;
        w.w2[static_cast<std::size_t>(r) * w.hidden_dim + bev_dim + r] = -1.0;
    }
    return w;
}

struct MlpGrads {
    std::vector<double> w1, b1, w2, b2;

    static MlpGrads zeros_like(const MlpWeights& w) {
        MlpGrads g;
        g.w1.assign(w.w1.size(), 0.0);
        g.b1.assign(w.b1.size(), 0.0);
        g.w2.assign(w.w2.size(), 0.0);
        g.b2.assign(w.b2.size(), 0.0);
        return g;
    }
};

struct FusionGradients {
    double loss = 0.0;
    MlpGrads phi_red, phi_fus, head;
};

namespace detail {

// Backprop through one MLP. dy is d(loss)/d(output); returns d(loss)/d(input)
// and accumulates parameter gradients.
inline std::vector<double> mlp_backward(const MlpWeights& w, const MlpCache& cache,
                                        const std::vector<double>& dy, MlpGrads& grads) {
    std::vector<double> dhidden(static_cast<std::size_t>(w.hidden_dim), 0.0);
    for (int r = 0; r < w.out_dim; ++r) {
        const double g = dy[static_cast<std::size_t>(r)];
        grads.b2[static_cast<std::size_t>(r)] += g;
        const double* row = w.w2.data() + static_cast<std::size_t>(r) * w.hidden_dim;
        double* grow = grads.w2.data() + static_cast<std::size_t>(r) * w.hidden_dim;
        for (int c = 0; c < w.hidden_dim; ++c) {
            grow[c] += g * cache.hidden[static_cast<std::size_t>(c)];
            dhidden[static_cast<std::size_t>(c)] += g * row[c];
        }
    }
    std::vector<double> dx(static_cast<std::size_t>(w.in_dim), 0.0);
    for (int r = 0; r < w.hidden_dim; ++r) {
        const double dpre =
            cache.pre[static_cast<std::size_t>(r)] > 0.0 ? dhidden[static_cast<std::size_t>(r)] : 0.0;
        if (dpre == 0.0) continue;
        grads.b1[static_cast<std::size_t>(r)] += dpre;
        const double* row = w.w1.data() + static_cast<std::size_t>(r) * w.in_dim;
        double* grow = grads.w1.data() + static_cast<std::size_t>(r) * w.in_dim;
        for (int c = 0; c < w.in_dim; ++c) {
            grow[c] += dpre * cache.input[static_cast<std::size_t>(c)];
            dx[static_cast<std::size_t>(c)] += dpre * row[c];
        }
    }
    return dx;
}

}  // namespace detail

// Scalar probe loss for gradient verification: half the squared norm of the
// navigated output. Returns the loss and analytic gradients for all three
// parameter blocks.
inline FusionGradients navigated_backward(const FeatureVec& bev, const FeatureVec& vlm,
                                          const MlpWeights& phi_red, const MlpWeights& phi_fus,
                                          const TaskHead& head) {
    detail::MlpCache red_cache, fus_cache, head_cache;
    const std::vector<double> reduced = detail::mlp_forward(phi_red, vlm.values, &red_cache);

    if (phi_fus.in_dim != bev.dim() + static_cast<int>(reduced.size()))
        throw DimMismatchError("fusion input dimension must equal bev dim plus reduced dim");
    std::vector<double> cat(bev.values);
    cat.insert(cat.end(), reduced.begin(), reduced.end());
    const std::vector<double> fused = detail::mlp_forward(phi_fus, cat, &fus_cache);
    const std::vector<double> out = detail::mlp_forward(head.weights, fused, &head_cache);

    FusionGradients result;
    result.phi_red = MlpGrads::zeros_like(phi_red);
    result.phi_fus = MlpGrads::zeros_like(phi_fus);
    result.head = MlpGrads::zeros_like(head.weights);

    std::vector<double> dout(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        result.loss += 0.5 * out[i] * out[i];
        dout[i] = out[i];
    }
    const std::vector<double> dfused =
        detail::mlp_backward(head.weights, head_cache, dout, result.head);
    const std::vector<double> dcat = detail::mlp_backward(phi_fus, fus_cache, dfused, result.phi_fus);
    const std::vector<double> dreduced(dcat.begin() + bev.dim(), dcat.end());
    detail::mlp_backward(phi_red, red_cache, dreduced, result.phi_red);
    return result;
}

namespace detail {

inline double probe_loss(const FeatureVec& bev, const FeatureVec& vlm, const MlpWeights& phi_red,
                         const MlpWeights& phi_fus, const TaskHead& head) {
    const FeatureVec out = forward_navigated(bev, vlm, phi_red, phi_fus, head);
    double loss = 0.0;
    for (double v : out.values) loss += 0.5 * v * v;
    return loss;
}

inline double rel_error(double analytic, double numeric) {
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    if (mag < 1e-8) return 0.0;
    return std::abs(analytic - numeric) / mag;
}

inline double check_block(const FeatureVec& bev, const FeatureVec& vlm, MlpWeights& phi_red,
                          MlpWeights& phi_fus, TaskHead& head, std::vector<double>& params,
                          const std::vector<double>& analytic, double h) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double up = probe_loss(bev, vlm, phi_red, phi_fus, head);
        params[i] = saved - h;
        const double down = probe_loss(bev, vlm, phi_red, phi_fus, head);
        params[i] = saved;
        worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * h)));
    }
    return worst;
}

}  // namespace detail

// Compares the analytic gradients against central finite differences across
// every parameter of all three blocks; returns the worst relative error.
inline double grad_check(const FeatureVec& bev, const FeatureVec& vlm, MlpWeights phi_red,
                         MlpWeights phi_fus, TaskHead head, double h = 1e-5) {
    const FusionGradients analytic = navigated_backward(bev, vlm, phi_red, phi_fus, head);
    double worst = 0.0;
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_red.w1,
                                                analytic.phi_red.w1, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_red.b1,
                                                analytic.phi_red.b1, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_red.w2,
                                                analytic.phi_red.w2, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_red.b2,
                                                analytic.phi_red.b2, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_fus.w1,
                                                analytic.phi_fus.w1, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_fus.b1,
                                                analytic.phi_fus.b1, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_fus.w2,
                                                analytic.phi_fus.w2, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, phi_fus.b2,
                                                analytic.phi_fus.b2, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, head.weights.w1,
                                                analytic.head.w1, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, head.weights.b1,
                                                analytic.head.b1, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, head.weights.w2,
                                                analytic.head.w2, h));
    worst = std::max(worst, detail::check_block(bev, vlm, phi_red, phi_fus, head, head.weights.b2,
                                                analytic.head.b2, h));
    return worst;
}

inline nlohmann::ordered_json mlp_to_json(const MlpWeights& w) {
    return nlohmann::ordered_json{{"in_dim", w.in_dim}, {"hidden_dim", w.hidden_dim},
                                  {"out_dim", w.out_dim}, {"W1", w.w1},
                                  {"b1", w.b1},           {"W2", w.w2},
                                  {"b2", w.b2}};
}

inline MlpWeights mlp_from_json(const nlohmann::ordered_json& j) {
    MlpWeights w;
    try {
        w.in_dim = j.at("in_dim").get<int>();
        w.hidden_dim = j.at("hidden_dim").get<int>();
        w.out_dim = j.at("out_dim").get<int>();
        w.w1 = j.at("W1").get<std::vector<double>>();
        w.b1 = j.at("b1").get<std::vector<double>>();
        w.w2 = j.at("W2").get<std::vector<double>>();
        w.b2 = j.at("b2").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad mlp checkpoint: ") + e.what());
    }
    w.check_shapes();
    return w;
}

}  // namespace navigscene::fusion
