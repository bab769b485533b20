// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/domain/preprocess.hpp"
#include "rigl/domain/qmatrix_io.hpp"
#include "rigl/util/text.hpp"

namespace rigl::synth {

struct SynthConfig {
    std::size_t groups = 50;
    std::size_t students_per_group = 10;
    std::size_t exercises = 60;
    std::size_t concepts = 8;
    std::size_t frames = 8;
    double ability_drift = 0.15;   // sd of the per-frame gaussian step
    double growth = 0.15;          // mean per-frame ability gain
    double group_coupling = 0.5;   // pull toward the group mean, 0..1
    double absence_prob = 0.1;
    double difficulty_min = -1.5;
    double difficulty_max = 1.5;
    double ability_spread = 0.8;   // sd of group bases and individual offsets
    double second_concept_prob = 0.3;
    std::size_t shared_per_frame = 3;      // exercises handed to the whole group
    double shared_answer_prob = 0.9;
    std::size_t individual_per_frame = 2;  // extra exercises per present student
    std::int64_t span = 86400;
    double coverage = 0.6;
    std::uint64_t seed = 0;

    void validate() const {
        if (frames == 0) throw std::invalid_argument("synth: frames must be at least 1");
        if (groups == 0 || students_per_group == 0 || exercises == 0 || concepts == 0) {
            throw std::invalid_argument("synth: counts must be at least 1");
        }
        for (double p : {group_coupling, absence_prob, second_concept_prob, shared_answer_prob})
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("synth: probabilities must lie in [0, 1]");
        if (!(ability_drift >= 0.0)) throw std::invalid_argument("synth: ability_drift must be non-negative");
        if (difficulty_min > difficulty_max) throw std::invalid_argument("synth: empty difficulty range");
        if (shared_per_frame + individual_per_frame == 0 || shared_per_frame + individual_per_frame > exercises) {
            throw std::invalid_argument("synth: exercises per frame must be between 1 and the exercise count");
        }
    }
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One Bernoulli(sigmoid(ability - difficulty)) draw.
inline int sample_response(std::mt19937_64& rng, double ability_minus_difficulty) {
    return std::bernoulli_distribution(logistic(ability_minus_difficulty))(rng) ? 1 : 0;
}

/// Ground truth: theta[student][frame][concept] in generation order.
struct Truth {
    std::vector<std::vector<std::vector<double>>> theta;
    std::vector<double> difficulty;
};

struct SynthOutput {
    Dataset dataset;
    std::vector<RawRecord> records;
    LabeledQMatrix qmatrix;
    Truth truth;
};

inline std::string padded(char prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, i);
    return buf;
}

inline SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SynthOutput out;

    out.qmatrix.matrix = QMatrix(cfg.exercises, cfg.concepts);
    for (std::size_t c = 0; c < cfg.concepts; ++c) out.qmatrix.concepts.push_back(padded('c', c));
    std::uniform_int_distribution<std::size_t> pick_concept(0, cfg.concepts - 1);
    std::uniform_real_distribution<double> diff(cfg.difficulty_min, cfg.difficulty_max);
    for (std::size_t e = 0; e < cfg.exercises; ++e) {
        out.qmatrix.exercises.push_back(padded('e', e));
        out.qmatrix.matrix.set(e, e % cfg.concepts);  // every concept gets exercises
        if (cfg.concepts > 1 && unit(rng) < cfg.second_concept_prob) out.qmatrix.matrix.set(e, pick_concept(rng));
        out.truth.difficulty.push_back(diff(rng));
    }

    const std::size_t n = cfg.students_per_group;
    std::vector<std::size_t> all(cfg.exercises);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t g = 0; g < cfg.groups; ++g) {
        std::vector<std::vector<double>> theta(n, std::vector<double>(cfg.concepts));
        std::vector<double> base(cfg.concepts);
        for (double& b : base) b = cfg.ability_spread * normal(rng);
        for (auto& s : theta)
            for (std::size_t c = 0; c < cfg.concepts; ++c)
                s[c] = base[c] + (1.0 - cfg.group_coupling) * cfg.ability_spread * normal(rng);

        std::vector<std::vector<std::vector<double>>> trace(n);
        bool anchored = false;
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            if (t > 0) {
                for (auto& s : theta)
                    for (double& v : s) v += cfg.growth + cfg.ability_drift * normal(rng);
                for (std::size_t c = 0; c < cfg.concepts; ++c) {
                    double mean = 0.0;
                    for (const auto& s : theta) mean += s[c];
                    mean /= static_cast<double>(n);
                    for (auto& s : theta) s[c] += cfg.group_coupling * (mean - s[c]);
                }
            }
            for (std::size_t i = 0; i < n; ++i) trace[i].push_back(theta[i]);

            std::shuffle(all.begin(), all.end(), rng);
            const std::vector<std::size_t> shared(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.shared_per_frame));
            std::vector<char> present(n);
            bool any = false;
            for (std::size_t i = 0; i < n; ++i) {
                present[i] = unit(rng) >= cfg.absence_prob;
                any = any || present[i];
            }
            if (!any) present[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1;

            const std::int64_t frame_start = static_cast<std::int64_t>(t) * cfg.span;
            std::uniform_int_distribution<std::int64_t> offset(0, std::max<std::int64_t>(0, cfg.span / 2 - 1));
            for (std::size_t i = 0; i < n; ++i) {
                if (!present[i]) continue;
                std::vector<std::size_t> picks;
                for (std::size_t e : shared)
                    if (unit(rng) < cfg.shared_answer_prob) picks.push_back(e);
                std::vector<std::size_t> rest(all.begin() + static_cast<std::ptrdiff_t>(cfg.shared_per_frame), all.end());
                std::shuffle(rest.begin(), rest.end(), rng);
                for (std::size_t k = 0; k < cfg.individual_per_frame && k < rest.size(); ++k) picks.push_back(rest[k]);
                if (picks.empty()) picks.push_back(shared.front());
                for (std::size_t e : picks) {
                    const auto cs = out.qmatrix.matrix.concepts_of(e);
                    double ability = 0.0;
                    for (ConceptId c : cs) ability += theta[i][c];
                    ability /= static_cast<double>(cs.size());
                    RawRecord r;
                    r.student = padded('s', g * n + i);
                    r.group = padded('g', g);
                    r.exercise = out.qmatrix.exercises[e];
                    for (ConceptId c : cs) r.concepts.push_back(out.qmatrix.concepts[c]);
                    // the group's first record sits on the frame boundary so binning lines up
                    r.timestamp = anchored ? frame_start + offset(rng) : frame_start;
                    anchored = true;
                    r.correct = sample_response(rng, ability - out.truth.difficulty[e]);
                    out.records.push_back(std::move(r));
                }
            }
        }
        for (auto& s : trace) out.truth.theta.push_back(std::move(s));
    }

    BuildOptions options;
    options.span = cfg.span;
    options.coverage = cfg.coverage;
    out.dataset = build_dataset(out.records, &out.qmatrix, options, false);
    return out;
}

/// Copy with every student response permuted across the whole dataset and the
/// group rates rederived. Any signal a model finds here is leakage.
inline Dataset shuffle_labels(const Dataset& d, std::uint64_t seed) {
    Dataset out = d;
    std::vector<int*> slots;
    for (auto& g : out.sequences.groups)
        for (auto& frame : g.students)
            for (auto& list : frame)
                for (auto& it : list) slots.push_back(&it.response);
    std::vector<int> values;
    for (int* p : slots) values.push_back(*p);
    std::mt19937_64 rng(seed);
    std::shuffle(values.begin(), values.end(), rng);
    for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] = values[k];
    compute_group_rates(out.sequences, out.catalog, out.qmatrix, out.options.coverage);
    return out;
}

/// Truth sidecar: one row per (student, frame, concept), frames 1-based.
inline void write_truth(std::ostream& os, const SynthOutput& s) {
    os << "student_id,frame,concept_id,theta\n";
    for (std::size_t i = 0; i < s.truth.theta.size(); ++i)
        for (std::size_t t = 0; t < s.truth.theta[i].size(); ++t)
            for (std::size_t c = 0; c < s.truth.theta[i][t].size(); ++c)
                os << padded('s', i) << ',' << t + 1 << ',' << s.qmatrix.concepts[c] << ','
                   << text::format_double(s.truth.theta[i][t][c]) << '\n';
}

}  // namespace rigl::synth
