// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <ostream>
#include <set>
#include <string>

#include "rigl/domain/types.hpp"

namespace rigl {

/// The eight dataset statistics reported after ingestion.
struct DatasetSummary {
    std::size_t students = 0;
    std::size_t groups = 0;
    std::size_t exercises = 0;  // distinct exercises answered by retained students
    std::size_t concepts = 0;   // distinct concepts of those exercises
    double avg_group_size = 0.0;
    double avg_responses_per_student = 0.0;
    double avg_responses_per_group = 0.0;  // group-exercise interactions per group
    double avg_responses_per_frame = 0.0;  // student responses per (group, frame)

    std::size_t student_responses = 0;
    std::size_t group_responses = 0;
    std::size_t group_frames = 0;
};

inline DatasetSummary summarize(const Dataset& d) {
    DatasetSummary s;
    s.students = d.catalog.students.size();
    s.groups = d.catalog.groups.size();
    std::set<ExerciseId> exercises;
    std::set<ConceptId> concepts;
    for (const GroupFrames& gf : d.sequences.groups) {
        s.group_frames += gf.frames();
        for (std::size_t f = 0; f < gf.frames(); ++f) {
            for (const auto& list : gf.students[f])
                for (const auto& it : list) {
                    ++s.student_responses;
                    exercises.insert(it.exercise);
                    concepts.insert(it.concepts.begin(), it.concepts.end());
                }
            s.group_responses += gf.group_interactions[f].size();
        }
    }
    s.exercises = exercises.size();
    s.concepts = concepts.size();
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    s.avg_group_size = ratio(s.students, s.groups);
    s.avg_responses_per_student = ratio(s.student_responses, s.students);
    s.avg_responses_per_group = ratio(s.group_responses, s.groups);
    s.avg_responses_per_frame = ratio(s.student_responses, s.group_frames);
    return s;
}

inline void print_summary(std::ostream& out, const DatasetSummary& s) {
    auto fixed = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    out << "#Students                      " << s.students << '\n'
        << "#Groups                        " << s.groups << '\n'
        << "#Exercises                     " << s.exercises << '\n'
        << "#Knowledge concepts            " << s.concepts << '\n'
        << "Avg. group size                " << fixed(s.avg_group_size) << '\n'
        << "Avg. responses per student     " << fixed(s.avg_responses_per_student) << '\n'
        << "Avg. responses per group       " << fixed(s.avg_responses_per_group) << '\n'
        << "Avg. responses per time frame  " << fixed(s.avg_responses_per_frame) << '\n';
}

}  // namespace rigl
