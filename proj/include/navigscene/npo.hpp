#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "navigscene/adamw.hpp"
#include "navigscene/errors.hpp"
#include "navigscene/rng.hpp"

#include <json.hpp>

namespace navigscene::npo {

using TokenSeq = std::vector<int>;

// Bigram language model over integer tokens: logits[prev * V + next] scores
// the transition prev -> next. Token 0 is the fixed begin-of-sequence symbol
// used when no context is available.
struct ToyLM {
    static constexpr int kBos = 0;

    int vocab_size = 0;
    std::vector<double> logits;  // row-major V x V

    static ToyLM zeros(int vocab_size) {
        check_vocab(vocab_size);
        ToyLM model;
        model.vocab_size = vocab_size;
        model.logits.assign(static_cast<std::size_t>(vocab_size) * vocab_size, 0.0);
        return model;
    }

    static ToyLM seeded(int vocab_size, std::uint64_t seed, double scale = 0.5) {
        ToyLM model = zeros(vocab_size);
        Rng rng(seed);
        for (double& l : model.logits) l = rng.next_range(-scale, scale);
        return model;
    }

    double logit(int prev, int next) const {
        return logits[static_cast<std::size_t>(prev) * vocab_size + next];
    }
    double& logit(int prev, int next) {
        return logits[static_cast<std::size_t>(prev) * vocab_size + next];
    }

    static void check_vocab(int vocab_size) {
        if (vocab_size < 2)
            throw ValidationError("vocab size must be at least 2 (token 0 is reserved)");
    }
};

// One training example: the question context, its reference answer, the two
// summaries (one from the trainable reward model, one frozen), and the
// guidance text used as the grounding sequence for the information score.
struct PreferenceTuple {
    TokenSeq context;
    TokenSeq answer;
    TokenSeq summary_reward;
    TokenSeq summary_ref;
    TokenSeq guidance;
};

struct NpoConfig {
    double alpha = 0.6;
    double lr = 1e-4;
    int epochs = 10;
    double underflow_floor = -700.0;  // below this, p(s) is treated as exactly 0
};

inline void check_tokens(const ToyLM& model, const TokenSeq& seq, const char* what) {
    for (int t : seq)
        if (t < 0 || t >= model.vocab_size)
            throw TokenOutOfRangeError(std::string(what) + ": token id out of range");
}

namespace detail {

inline std::vector<double> row_log_softmax(const ToyLM& model, int prev) {
    const int v = model.vocab_size;
    std::vector<double> out(static_cast<std::size_t>(v));
    double mx = model.logit(prev, 0);
    for (int k = 1; k < v; ++k) mx = std::max(mx, model.logit(prev, k));
    double sum = 0.0;
    for (int k = 0; k < v; ++k) sum += std::exp(model.logit(prev, k) - mx);
    const double lse = mx + std::log(sum);
    for (int k = 0; k < v; ++k) out[static_cast<std::size_t>(k)] = model.logit(prev, k) - lse;
    return out;
}

inline int context_tail(const TokenSeq& context) {
    return context.empty() ? ToyLM::kBos : context.back();
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace detail

// Log-probability of seq generated left to right after context. Only the
// last context token matters under a bigram model; an empty context starts
// from the begin-of-sequence token.
inline double seq_logprob(const ToyLM& model, const TokenSeq& context, const TokenSeq& seq) {
    ToyLM::check_vocab(model.vocab_size);
    check_tokens(model, context, "context");
    check_tokens(model, seq, "sequence");
    if (seq.empty()) throw EmptySequenceError("cannot score an empty sequence");
    int prev = detail::context_tail(context);
    double total = 0.0;
    for (int tok : seq) {
        const std::vector<double> logp = detail::row_log_softmax(model, prev);
        total += logp[static_cast<std::size_t>(tok)];
        prev = tok;
    }
    return total;
}

// Deterministic argmax rollout of exactly max_len tokens; ties resolve to the
// lowest token id.
inline TokenSeq greedy_decode(const ToyLM& model, const TokenSeq& context, int max_len) {
    ToyLM::check_vocab(model.vocab_size);
    check_tokens(model, context, "context");
    if (max_len < 1) throw ValidationError("decode length must be at least 1");
    TokenSeq out;
    out.reserve(static_cast<std::size_t>(max_len));
    int prev = detail::context_tail(context);
    for (int step = 0; step < max_len; ++step) {
        int best = 0;
        for (int k = 1; k < model.vocab_size; ++k)
            if (model.logit(prev, k) > model.logit(prev, best)) best = k;
        out.push_back(best);
        prev = best;
    }
    return out;
}

// Information score of summary s against grounding sequence g:
//   -log p(s) - p(s) * log p(g | s)
// When log p(s) underflows past the floor, p(s) is treated as exactly zero
// and the second term vanishes.
inline double mutual_info_score(const ToyLM& model, const TokenSeq& summary, const TokenSeq& grounding,
                                double underflow_floor = -700.0) {
    if (summary.empty()) throw EmptySequenceError("information score needs a non-empty summary");
    if (grounding.empty())
        throw EmptySequenceError("information score needs a non-empty grounding sequence");
    const double log_ps = seq_logprob(model, {}, summary);
    if (log_ps < underflow_floor) return -log_ps;
    const double log_pgs = seq_logprob(model, summary, grounding);
    return -log_ps - std::exp(log_ps) * log_pgs;
}

// Summary-side reward margin between the trainable model and the frozen
// reference, each scoring its own summary.
inline double reward_summary(const ToyLM& reward, const ToyLM& ref, const PreferenceTuple& t,
                             double alpha, double underflow_floor = -700.0) {
    const double lp_reward = seq_logprob(reward, t.context, t.summary_reward);
    const double lp_ref = seq_logprob(ref, t.context, t.summary_ref);
    const double mi_reward = mutual_info_score(reward, t.summary_reward, t.guidance, underflow_floor);
    const double mi_ref = mutual_info_score(ref, t.summary_ref, t.guidance, underflow_floor);
    return lp_reward - lp_ref + alpha * (mi_reward - mi_ref);
}

// Answer-side margin: both models score the same reference answer.
inline double reward_answer(const ToyLM& reward, const ToyLM& ref, const PreferenceTuple& t) {
    return seq_logprob(reward, t.context, t.answer) - seq_logprob(ref, t.context, t.answer);
}

inline double reward_gap(const ToyLM& reward, const ToyLM& ref, const PreferenceTuple& t,
                         const NpoConfig& cfg) {
    return reward_summary(reward, ref, t, cfg.alpha, cfg.underflow_floor) -
           reward_answer(reward, ref, t);
}

// Mean of -log sigmoid(reward_summary - reward_answer) over the batch.
inline double npo_loss(const ToyLM& reward, const ToyLM& ref,
                       const std::vector<PreferenceTuple>& batch, const NpoConfig& cfg) {
    if (batch.empty()) throw EmptyBatchError("loss needs a non-empty batch");
    double total = 0.0;
    for (const auto& t : batch) total += detail::softplus(-reward_gap(reward, ref, t, cfg));
    return total / static_cast<double>(batch.size());
}

namespace detail {

// Adds weight * d(log p(seq | context)) / d(logits) in place. Each scored
// transition contributes (one-hot - softmax) on its row.
inline void accumulate_seq_grad(const ToyLM& model, const TokenSeq& context, const TokenSeq& seq,
                                double weight, std::vector<double>& grad) {
    const int v = model.vocab_size;
    int prev = context_tail(context);
    for (int tok : seq) {
        const std::vector<double> logp = row_log_softmax(model, prev);
        double* row = grad.data() + static_cast<std::size_t>(prev) * v;
        for (int k = 0; k < v; ++k) row[k] -= weight * std::exp(logp[static_cast<std::size_t>(k)]);
        row[tok] += weight;
        prev = tok;
    }
}

}  // namespace detail

// Analytic gradient of npo_loss with respect to the trainable model's
// logits. The decoded summaries are fixed token sequences, so no gradient
// flows through the decoding step; the frozen reference contributes only
// constants.
inline std::vector<double> npo_grad(const ToyLM& reward, const ToyLM& ref,
                                    const std::vector<PreferenceTuple>& batch,
                                    const NpoConfig& cfg) {
    if (batch.empty()) throw EmptyBatchError("gradient needs a non-empty batch");
    const int v = reward.vocab_size;
    std::vector<double> grad(static_cast<std::size_t>(v) * v, 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (const auto& t : batch) {
        const double x = reward_gap(reward, ref, t, cfg);
        // d(softplus(-x))/dx = -sigmoid(-x)
        const double dx = inv_n * (-1.0 / (1.0 + std::exp(x)));

        // x depends on the trainable logits through three of its terms:
        // log p(s | ctx), the information score of s, and -log p(a | ctx).
        detail::accumulate_seq_grad(reward, t.context, t.summary_reward, dx, grad);
        detail::accumulate_seq_grad(reward, t.context, t.answer, -dx, grad);

        const double log_ps = seq_logprob(reward, {}, t.summary_reward);
        if (log_ps < cfg.underflow_floor) {
            // mi = -log p(s); only the unconditional term survives.
            detail::accumulate_seq_grad(reward, {}, t.summary_reward, -cfg.alpha * dx, grad);
        } else {
            const double ps = std::exp(log_ps);
            const double log_pgs = seq_logprob(reward, t.summary_reward, t.guidance);
            // d(mi) = -(1 + p(s) log p(g|s)) dlog p(s) - p(s) dlog p(g|s)
            detail::accumulate_seq_grad(reward, {}, t.summary_reward,
                                        -cfg.alpha * dx * (1.0 + ps * log_pgs), grad);
            detail::accumulate_seq_grad(reward, t.summary_reward, t.guidance, -cfg.alpha * dx * ps,
                                        grad);
        }
    }
    return grad;
}

struct TrainResult {
    ToyLM model;
    std::vector<double> trace;  // loss before each optimizer step, one entry per epoch
};

// Full-batch optimization of the reward model. The trainable summary is
// re-decoded from the current model at the start of every epoch, matching
// the frozen summary's length; the reference model and its summaries never
// move.
inline TrainResult train(const ToyLM& reward_init, const ToyLM& ref,
                         std::vector<PreferenceTuple> dataset, const NpoConfig& cfg) {
    if (dataset.empty()) throw EmptyBatchError("training needs a non-empty dataset");
    if (cfg.epochs < 0) throw ValidationError("epoch count must be non-negative");
    if (reward_init.vocab_size != ref.vocab_size)
        throw DimMismatchError("reward and reference models must share a vocab size");
    for (const auto& t : dataset) {
        if (t.summary_ref.empty())
            throw EmptySequenceError("each tuple needs a non-empty reference summary");
        if (t.answer.empty()) throw EmptySequenceError("each tuple needs a non-empty answer");
        if (t.guidance.empty()) throw EmptySequenceError("each tuple needs non-empty guidance");
        check_tokens(ref, t.context, "context");
        check_tokens(ref, t.answer, "answer");
        check_tokens(ref, t.summary_ref, "reference summary");
        check_tokens(ref, t.guidance, "guidance");
    }

    TrainResult result{reward_init, {}};
    result.trace.reserve(static_cast<std::size_t>(cfg.epochs));
    AdamW opt(cfg.lr);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (auto& t : dataset)
            t.summary_reward = greedy_decode(result.model, t.answer,
                                             static_cast<int>(t.summary_ref.size()));
        result.trace.push_back(npo_loss(result.model, ref, dataset, cfg));
        const std::vector<double> grad = npo_grad(result.model, ref, dataset, cfg);
        opt.step(result.model.logits, grad);
    }
    return result;
}

inline nlohmann::ordered_json model_to_json(const ToyLM& model) {
    return nlohmann::ordered_json{{"vocab_size", model.vocab_size}, {"logits", model.logits}};
}

inline ToyLM model_from_json(const nlohmann::ordered_json& j) {
    ToyLM model;
    try {
        model.vocab_size = j.at("vocab_size").get<int>();
        model.logits = j.at("logits").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model checkpoint: ") + e.what());
    }
    ToyLM::check_vocab(model.vocab_size);
    if (model.logits.size() !=
        static_cast<std::size_t>(model.vocab_size) * static_cast<std::size_t>(model.vocab_size))
        throw ParseError("model checkpoint logits must hold vocab_size^2 values");
    for (double l : model.logits)
        if (!std::isfinite(l)) throw ParseError("model checkpoint logits must be finite");
    return model;
}

inline nlohmann::ordered_json tuple_to_json(const PreferenceTuple& t) {
    return nlohmann::ordered_json{{"context", t.context},
                                  {"answer", t.answer},
                                  {"summary_reward", t.summary_reward},
                                  {"summary_ref", t.summary_ref},
                                  {"guidance", t.guidance}};
}

inline PreferenceTuple tuple_from_json(const nlohmann::ordered_json& j) {
    PreferenceTuple t;
    try {
        t.context = j.at("context").get<TokenSeq>();
        t.answer = j.at("answer").get<TokenSeq>();
        t.summary_reward = j.at("summary_reward").get<TokenSeq>();
        t.summary_ref = j.at("summary_ref").get<TokenSeq>();
        t.guidance = j.at("guidance").get<TokenSeq>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad preference tuple: ") + e.what());
    }
    for (const TokenSeq* seq : {&t.context, &t.answer, &t.summary_reward, &t.summary_ref, &t.guidance})
        for (int tok : *seq)
            if (tok < 0) throw ParseError("preference tuple token ids must be non-negative");
    return t;
}

}  // namespace navigscene::npo
