#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "navigscene/candidates.hpp"
#include "navigscene/errors.hpp"

#include <json.hpp>

namespace navigscene::selector {

// Whitespace-split tokens, lowercased, with non-alphanumeric characters
// stripped from both ends. Interior punctuation survives, so "u-turn."
// normalizes to "u-turn" and "1.5km" keeps its dot.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;
        std::string_view raw = text.substr(start, i - start);
        while (!raw.empty() && !std::isalnum(static_cast<unsigned char>(raw.front())))
            raw.remove_prefix(1);
        while (!raw.empty() && !std::isalnum(static_cast<unsigned char>(raw.back())))
            raw.remove_suffix(1);
        if (raw.empty()) continue;
        std::string token(raw);
        for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        tokens.push_back(std::move(token));
    }
    return tokens;
}

struct ExtractionConfig {
    // Tokens treated as maneuver keywords, matched exactly after normalization.
    std::vector<std::string> keyword_vocabulary = {"left",  "right", "straight", "u-turn",
                                                   "merge", "exit",  "roundabout"};
};

inline const ExtractionConfig& default_extraction_config() {
    static const ExtractionConfig config;
    return config;
}

// Keywords in order of appearance, every occurrence kept.
inline std::vector<std::string> extract_keywords(
    std::string_view text, const ExtractionConfig& config = default_extraction_config()) {
    std::vector<std::string> keywords;
    for (const auto& token : tokenize(text)) {
        if (std::find(config.keyword_vocabulary.begin(), config.keyword_vocabulary.end(), token) !=
            config.keyword_vocabulary.end())
            keywords.push_back(token);
    }
    return keywords;
}

namespace detail {

// Meters per unit token; unknown tokens get a negative factor.
inline double unit_factor(std::string_view unit) {
    if (unit == "m" || unit == "meter" || unit == "meters") return 1.0;
    if (unit == "km" || unit == "kilometer" || unit == "kilometers") return 1000.0;
    if (unit == "mi" || unit == "mile" || unit == "miles") return 1609.34;
    if (unit == "ft" || unit == "feet") return 0.3048;
    return -1.0;
}

inline bool parse_number(std::string_view token, double& value) {
    if (token.empty()) return false;
    bool seen_digit = false;
    int dots = 0;
    for (char c : token) {
        if (c >= '0' && c <= '9')
            seen_digit = true;
        else if (c == '.')
            ++dots;
        else
            return false;
    }
    if (!seen_digit || dots > 1) return false;
    value = std::strtod(std::string(token).c_str(), nullptr);
    return true;
}

// Splits "200m" style tokens into number and unit suffix.
inline bool split_glued(std::string_view token, double& value, double& factor) {
    std::size_t cut = 0;
    while (cut < token.size() && ((token[cut] >= '0' && token[cut] <= '9') || token[cut] == '.'))
        ++cut;
    if (cut == 0 || cut == token.size()) return false;
    const double f = unit_factor(token.substr(cut));
    if (f < 0.0) return false;
    if (!parse_number(token.substr(0, cut), value)) return false;
    factor = f;
    return true;
}

}  // namespace detail

// Numbers adjacent to a distance unit, converted to meters, in order of
// appearance. Handles both "200 meters" and glued "200m"; bare numbers
// without a unit are ignored.
inline std::vector<double> extract_distances(std::string_view text) {
    const std::vector<std::string> tokens = tokenize(text);
    std::vector<double> distances;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        double value = 0.0;
        if (detail::parse_number(tokens[i], value)) {
            if (i + 1 < tokens.size()) {
                const double factor = detail::unit_factor(tokens[i + 1]);
                if (factor >= 0.0) {
                    distances.push_back(value * factor);
                    ++i;
                }
            }
            continue;
        }
        double factor = 0.0;
        if (detail::split_glued(tokens[i], value, factor)) distances.push_back(value * factor);
    }
    return distances;
}

inline std::set<std::string> word_set(std::string_view text) {
    const std::vector<std::string> tokens = tokenize(text);
    return {tokens.begin(), tokens.end()};
}

struct ExtractedFeatures {
    std::vector<std::string> keywords;
    std::vector<double> distances_m;
    std::set<std::string> words;
};

inline ExtractedFeatures extract_features(
    std::string_view text, const ExtractionConfig& config = default_extraction_config()) {
    return {extract_keywords(text, config), extract_distances(text), word_set(text)};
}

struct SimilarityWeights {
    double inter = 0.5;
    double dist = 0.3;
    double word = 0.2;

    SimilarityWeights() = default;
    SimilarityWeights(double inter_, double dist_, double word_)
        : inter(inter_), dist(dist_), word(word_) {
        check();
    }

    void check() const {
        if (!(std::isfinite(inter) && std::isfinite(dist) && std::isfinite(word)))
            throw NonFiniteError("similarity weights must be finite");
        if (!(inter > dist && dist > word && word > 0.0))
            throw ValidationError(
                "similarity weights must be positive and strictly decreasing across "
                "intersection, distance, word");
    }
};

// 1 when both keyword lists have the same length and agree elementwise.
inline double score_intersection(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
    return a == b ? 1.0 : 0.0;
}

// Mean elementwise distance agreement for equal-length lists, else 0.
// A 0/0 pair counts as perfect agreement, as do two empty lists.
inline double score_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return 0.0;
    if (a.empty()) return 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0 && b[i] == 0.0) {
            sum += 1.0;
            continue;
        }
        sum += 1.0 - std::abs(a[i] - b[i]) / std::max(a[i], b[i]);
    }
    return sum / static_cast<double>(a.size());
}

// Jaccard similarity of the normalized word sets; two empty sets match fully.
inline double score_word(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& w : a)
        if (b.count(w)) ++inter;
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double score_overall(const ExtractedFeatures& a, const ExtractedFeatures& b,
                            const SimilarityWeights& w = SimilarityWeights()) {
    return w.inter * score_intersection(a.keywords, b.keywords) +
           w.dist * score_distance(a.distances_m, b.distances_m) +
           w.word * score_word(a.words, b.words);
}

struct SelectionReport {
    std::vector<std::vector<double>> pairwise;  // N x N, diagonal included
    std::vector<double> cumulative;             // row sums excluding the diagonal
    int winner_index = 0;
    std::string winner_text;
};

inline SelectionReport select_best(const std::vector<std::string>& texts,
                                   const SimilarityWeights& w = SimilarityWeights(),
                                   const ExtractionConfig& config = default_extraction_config()) {
    if (texts.empty()) throw EmptyCandidateSetError("cannot select from zero candidates");
    w.check();
    const std::size_t n = texts.size();

    std::vector<ExtractedFeatures> features;
    features.reserve(n);
    for (const auto& t : texts) features.push_back(extract_features(t, config));

    SelectionReport report;
    report.pairwise.assign(n, std::vector<double>(n, 0.0));
    report.cumulative.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            report.pairwise[i][j] = score_overall(features[i], features[j], w);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) report.cumulative[i] += report.pairwise[i][j];

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (report.cumulative[i] > report.cumulative[best]) best = i;
    report.winner_index = static_cast<int>(best);
    report.winner_text = texts[best];
    return report;
}

inline SelectionReport select_best(const candidates::CandidateSet& set,
                                   const SimilarityWeights& w = SimilarityWeights(),
                                   const ExtractionConfig& config = default_extraction_config()) {
    return select_best(set.texts, w, config);
}

inline nlohmann::ordered_json scores_to_json(const SelectionReport& report) {
    return nlohmann::ordered_json{{"pairwise", report.pairwise},
                                  {"cumulative", report.cumulative},
                                  {"winner", report.winner_index}};
}

}  // namespace navigscene::selector
