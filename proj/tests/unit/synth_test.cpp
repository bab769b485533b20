// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>
#include <sstream>
#include <tuple>

#include "rigl/synth/generator.hpp"

namespace rigl::synth {
namespace {

SynthConfig small() {
    SynthConfig c;
    c.groups = 4;
    c.students_per_group = 5;
    c.exercises = 20;
    c.concepts = 4;
    c.frames = 5;
    c.seed = 7;
    return c;
}

TEST(Synth, NoAbsenceMeansEveryoneIsPresentEveryFrame) {
    SynthConfig c = small();
    c.absence_prob = 0.0;
    const auto s = generate(c);
    ASSERT_EQ(s.dataset.sequences.groups.size(), c.groups);
    for (const auto& g : s.dataset.sequences.groups) {
        ASSERT_EQ(g.frames(), c.frames);
        for (const auto& frame : g.students) {
            ASSERT_EQ(frame.size(), c.students_per_group);
            for (const auto& list : frame) EXPECT_FALSE(list.empty());
        }
    }
}

TEST(Synth, FullCouplingWithoutDriftKeepsMembersIdentical) {
    SynthConfig c = small();
    c.group_coupling = 1.0;
    c.ability_drift = 0.0;
    const auto s = generate(c);
    for (std::size_t g = 0; g < c.groups; ++g)
        for (std::size_t i = 1; i < c.students_per_group; ++i) {
            const auto& a = s.truth.theta[g * c.students_per_group];
            const auto& b = s.truth.theta[g * c.students_per_group + i];
            for (std::size_t t = 0; t < c.frames; ++t)
                for (std::size_t k = 0; k < c.concepts; ++k) EXPECT_DOUBLE_EQ(a[t][k], b[t][k]);
        }
}

TEST(Synth, ZeroLogitGivesHalfCorrect) {
    std::mt19937_64 rng(3);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += sample_response(rng, 0.0);
    EXPECT_NEAR(static_cast<double>(hits) / n, 0.5, 0.01);
}

TEST(Synth, SameSeedSameOutput) {
    const auto a = generate(small());
    const auto b = generate(small());
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(a.dataset.sequences, b.dataset.sequences);
    SynthConfig other = small();
    other.seed = 8;
    EXPECT_NE(generate(other).records, a.records);
}

TEST(Synth, FramesFollowGenerationOrder) {
    SynthConfig c = small();
    c.absence_prob = 0.0;
    const auto s = generate(c);
    for (const auto& g : s.dataset.sequences.groups)
        for (std::size_t f = 0; f < g.frames(); ++f)
            for (const auto& list : g.students[f])
                for (const auto& it : list) EXPECT_EQ(it.timestamp / c.span, static_cast<std::int64_t>(f));
}

TEST(Synth, GroupRatesMatchMemberMeans) {
    SynthConfig c = small();
    c.absence_prob = 0.2;
    const auto s = generate(c);
    // Tally straight from the raw records: (group, frame, exercise) -> responses.
    std::map<std::tuple<std::string, std::int64_t, std::string>, std::vector<int>> tally;
    for (const auto& r : s.records) tally[{r.group, r.timestamp / c.span, r.exercise}].push_back(r.correct);
    std::size_t checked = 0;
    for (const auto& g : s.dataset.sequences.groups)
        for (std::size_t f = 0; f < g.frames(); ++f)
            for (const auto& gi : g.group_interactions[f]) {
                const auto frame = g.bounds[f].start / c.span;
                const auto& v = tally.at({s.dataset.catalog.groups[g.group], frame, s.dataset.catalog.exercises[gi.exercise]});
                double mean = 0.0;
                for (int x : v) mean += x;
                mean /= static_cast<double>(v.size());
                EXPECT_DOUBLE_EQ(gi.correct_rate, mean);
                EXPECT_GE(static_cast<double>(v.size()), c.coverage * static_cast<double>(c.students_per_group));
                ++checked;
            }
    EXPECT_GT(checked, 0u);
}

TEST(Synth, EveryConceptHasExercises) {
    const auto s = generate(small());
    for (std::size_t k = 0; k < s.qmatrix.concepts.size(); ++k) {
        bool found = false;
        for (std::size_t e = 0; e < s.qmatrix.exercises.size(); ++e) found = found || s.qmatrix.matrix(e, k);
        EXPECT_TRUE(found);
    }
}

TEST(Synth, TruthSidecarHasOneRowPerStudentFrameConcept) {
    SynthConfig c = small();
    const auto s = generate(c);
    std::ostringstream os;
    write_truth(os, s);
    std::size_t lines = 0;
    for (char ch : os.str()) lines += ch == '\n';
    EXPECT_EQ(lines, 1 + c.groups * c.students_per_group * c.frames * c.concepts);
}

TEST(Synth, RejectsBadConfig) {
    SynthConfig c = small();
    c.absence_prob = 1.5;
    EXPECT_THROW(generate(c), std::invalid_argument);
    c = small();
    c.shared_per_frame = 30;
    EXPECT_THROW(generate(c), std::invalid_argument);
}

}  // namespace
}  // namespace rigl::synth
