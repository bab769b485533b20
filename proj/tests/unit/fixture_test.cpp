// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>
#include <sstream>
#include <tuple>

#include "rigl/domain/log_parser.hpp"
#include "rigl/domain/preprocess.hpp"
#include "rigl/domain/qmatrix_io.hpp"
#include "rigl/domain/summary.hpp"
#include "support/fixture_expectations.hpp"

namespace rigl {
namespace {

Dataset ingest_fixture() {
    const auto records = parse_logs(fixture::logs());
    const LabeledQMatrix q = load_qmatrix(fixture::qmatrix());
    return build_dataset(records, &q);
}

TEST(Fixture, HasTwoHundredRows) { EXPECT_EQ(parse_logs(fixture::logs()).size(), fixture::rows); }

TEST(Fixture, SummaryMatchesFrozenValues) {
    const DatasetSummary s = summarize(ingest_fixture());
    EXPECT_EQ(s.students, fixture::students);
    EXPECT_EQ(s.groups, fixture::groups);
    EXPECT_EQ(s.exercises, fixture::exercises);
    EXPECT_EQ(s.concepts, fixture::concepts);
    EXPECT_EQ(s.student_responses, fixture::student_responses);
    EXPECT_EQ(s.group_responses, fixture::group_responses);
    EXPECT_EQ(s.group_frames, fixture::group_frames);
    EXPECT_DOUBLE_EQ(s.avg_group_size, fixture::avg_group_size);
    EXPECT_DOUBLE_EQ(s.avg_responses_per_student, fixture::avg_responses_per_student);
    EXPECT_DOUBLE_EQ(s.avg_responses_per_group, fixture::avg_responses_per_group);
    EXPECT_DOUBLE_EQ(s.avg_responses_per_frame, fixture::avg_responses_per_frame);
}

TEST(Fixture, PrintedSummary) {
    std::ostringstream out;
    print_summary(out, summarize(ingest_fixture()));
    EXPECT_NE(out.str().find("#Students                      14\n"), std::string::npos);
    EXPECT_NE(out.str().find("Avg. group size                4.67\n"), std::string::npos);
    EXPECT_NE(out.str().find("Avg. responses per time frame  22.25\n"), std::string::npos);
}

TEST(Fixture, GroupRatesMatchFrozenValues) {
    const Dataset d = ingest_fixture();
    std::map<std::tuple<std::string, std::size_t, std::string>, double> got;
    for (const GroupFrames& gf : d.sequences.groups)
        for (std::size_t f = 0; f < gf.frames(); ++f)
            for (const auto& gi : gf.group_interactions[f])
                got[{d.catalog.groups[gf.group], f + 1, d.catalog.exercises[gi.exercise]}] = gi.correct_rate;
    ASSERT_EQ(got.size(), fixture::group_rates().size());
    for (const auto& r : fixture::group_rates()) {
        const auto it = got.find({r.group, r.frame, r.exercise});
        ASSERT_NE(it, got.end()) << r.group << " frame " << r.frame << " " << r.exercise;
        EXPECT_DOUBLE_EQ(it->second, static_cast<double>(r.numerator) / r.denominator)
            << r.group << " frame " << r.frame << " " << r.exercise;
    }
}

TEST(Fixture, CoverageBoundary) {
    const Dataset d = ingest_fixture();
    const GroupId ga = *EntityCatalog::find(d.catalog.groups, "gA");
    const ExerciseId e01 = *EntityCatalog::find(d.catalog.exercises, "e01");
    const ExerciseId e02 = *EntityCatalog::find(d.catalog.exercises, "e02");
    const GroupFrames& gf = d.sequences.groups[ga];
    for (std::size_t f = 0; f < gf.frames(); ++f) {
        bool has01 = false, has02 = false;
        for (const auto& gi : gf.group_interactions[f]) {
            has01 = has01 || gi.exercise == e01;
            has02 = has02 || gi.exercise == e02;
        }
        EXPECT_TRUE(has01) << "3 of 5 members sits on the threshold, frame " << f + 1;
        EXPECT_FALSE(has02) << "2 of 5 members is below it, frame " << f + 1;
    }
}

TEST(Fixture, FiltersCascade) {
    const Dataset d = ingest_fixture();
    for (const char* g : {"gC", "gD"}) EXPECT_FALSE(EntityCatalog::find(d.catalog.groups, g)) << g;
    for (const char* s : {"b4", "c1", "c2", "c3", "d1", "d2"}) EXPECT_FALSE(EntityCatalog::find(d.catalog.students, s)) << s;
    const GroupId gb = *EntityCatalog::find(d.catalog.groups, "gB");
    EXPECT_EQ(d.catalog.membership[gb].size(), 3u);
}

TEST(Fixture, EmptyDayIsSqueezedAndSpanBoundaryStartsNextFrame) {
    const Dataset d = ingest_fixture();
    const GroupFrames& gf = d.sequences.groups[*EntityCatalog::find(d.catalog.groups, "gA")];
    ASSERT_EQ(gf.frames(), 3u);
    EXPECT_EQ(gf.bounds[1].start - gf.bounds[0].start, 86400);
    EXPECT_EQ(gf.bounds[2].start - gf.bounds[0].start, 3 * 86400);
    const StudentId a2 = *EntityCatalog::find(d.catalog.students, "a2");
    const ExerciseId e10 = *EntityCatalog::find(d.catalog.exercises, "e10");
    bool found = false;
    for (const auto& it : gf.students[1][d.catalog.member_index(a2)])
        if (it.exercise == e10) found = it.timestamp == gf.bounds[1].start;
    EXPECT_TRUE(found);
}

}  // namespace
}  // namespace rigl
