// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "rigl/domain/log_parser.hpp"
#include "rigl/domain/qmatrix_io.hpp"
#include "rigl/domain/types.hpp"
#include "rigl/util/log.hpp"

namespace rigl {

/// A single student response with dense ids, before framing.
struct Event {
    StudentId student = 0;
    ExerciseId exercise = 0;
    int response = 0;
    std::int64_t timestamp = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Flat, unframed view of a dataset.
struct EventLog {
    EntityCatalog catalog;
    QMatrix qmatrix;
    std::vector<Event> events;
};

/// Assigns dense ids. Students and groups are numbered in sorted label order;
/// exercises and concepts keep the q-matrix order, with ids seen only in the
/// logs appended in sorted order. Concepts always come from the q-matrix row
/// when the exercise is listed there.
inline EventLog register_records(const std::vector<RawRecord>& records, const LabeledQMatrix* qmatrix = nullptr) {
    EventLog log;
    EntityCatalog& cat = log.catalog;

    std::map<std::string, std::string> group_of;
    for (const auto& r : records) {
        auto [it, inserted] = group_of.emplace(r.student, r.group);
        if (!inserted && it->second != r.group) {
            throw std::runtime_error("student '" + r.student + "' appears in groups '" + it->second + "' and '" +
                                     r.group + "'");
        }
    }
    std::set<std::string> group_labels;
    for (const auto& [s, g] : group_of) {
        cat.students.push_back(s);
        group_labels.insert(g);
    }
    cat.groups.assign(group_labels.begin(), group_labels.end());
    cat.membership.assign(cat.groups.size(), {});
    std::map<std::string, GroupId> group_index;
    for (GroupId g = 0; g < cat.groups.size(); ++g) group_index.emplace(cat.groups[g], g);
    for (StudentId s = 0; s < cat.students.size(); ++s) {
        const GroupId g = group_index.at(group_of.at(cat.students[s]));
        cat.student_group.push_back(g);
        cat.membership[g].push_back(s);
    }

    if (qmatrix != nullptr) {
        cat.exercises = qmatrix->exercises;
        cat.concepts = qmatrix->concepts;
        log.qmatrix = qmatrix->matrix;
    }
    std::map<std::string, ExerciseId> exercise_index;
    for (ExerciseId e = 0; e < cat.exercises.size(); ++e) exercise_index.emplace(cat.exercises[e], e);
    std::map<std::string, ConceptId> concept_index;
    for (ConceptId c = 0; c < cat.concepts.size(); ++c) concept_index.emplace(cat.concepts[c], c);

    // Exercises missing from the q-matrix take the union of the concepts the logs give them.
    std::map<std::string, std::set<std::string>> unknown;
    for (const auto& r : records) {
        if (exercise_index.count(r.exercise) != 0) continue;
        auto& cs = unknown[r.exercise];
        cs.insert(r.concepts.begin(), r.concepts.end());
    }
    std::set<std::string> new_concepts;
    for (const auto& [e, cs] : unknown) {
        if (cs.empty()) throw std::runtime_error("exercise '" + e + "' has no concepts in the logs or the q-matrix");
        for (const auto& c : cs)
            if (concept_index.count(c) == 0) new_concepts.insert(c);
    }
    for (const auto& c : new_concepts) {
        concept_index.emplace(c, cat.concepts.size());
        cat.concepts.push_back(c);
        log.qmatrix.add_concept();
    }
    for (const auto& [e, cs] : unknown) {
        const ExerciseId id = cat.exercises.size();
        exercise_index.emplace(e, id);
        cat.exercises.push_back(e);
        log.qmatrix.add_exercise();
        for (const auto& c : cs) log.qmatrix.set(id, concept_index.at(c));
    }

    std::map<std::string, StudentId> student_index;
    for (StudentId s = 0; s < cat.students.size(); ++s) student_index.emplace(cat.students[s], s);
    std::set<ExerciseId> warned;
    log.events.reserve(records.size());
    for (const auto& r : records) {
        const ExerciseId e = exercise_index.at(r.exercise);
        if (!r.concepts.empty() && unknown.count(r.exercise) == 0 && warned.count(e) == 0) {
            std::vector<ConceptId> given;
            for (const auto& c : r.concepts) {
                auto it = concept_index.find(c);
                given.push_back(it == concept_index.end() ? static_cast<ConceptId>(-1) : it->second);
            }
            std::sort(given.begin(), given.end());
            if (given != log.qmatrix.concepts_of(e)) {
                warned.insert(e);
                log::warn("concepts logged for exercise '" + r.exercise + "' differ from its q-matrix row; using the q-matrix");
            }
        }
        log.events.push_back(Event{student_index.at(r.student), e, r.correct, r.timestamp});
    }
    return log;
}

/// Drops students with too few responses, then groups with too few remaining
/// students, until nothing changes. Student and group ids are re-densified.
inline EventLog filter_events(const EventLog& in, const BuildOptions& options) {
    const EntityCatalog& cat = in.catalog;
    std::vector<char> keep_student(cat.students.size(), 1);
    std::vector<char> keep_group(cat.groups.size(), 1);
    std::vector<std::size_t> responses(cat.students.size(), 0);
    for (const auto& ev : in.events) ++responses.at(ev.student);

    bool changed = true;
    while (changed) {
        changed = false;
        for (StudentId s = 0; s < cat.students.size(); ++s) {
            if (keep_student[s] && (responses[s] < options.min_student_responses || !keep_group[cat.student_group[s]])) {
                keep_student[s] = 0;
                changed = true;
            }
        }
        for (GroupId g = 0; g < cat.groups.size(); ++g) {
            if (!keep_group[g]) continue;
            std::size_t alive = 0;
            for (StudentId s : cat.membership[g]) alive += keep_student[s] ? 1 : 0;
            if (alive < options.min_group_size) {
                keep_group[g] = 0;
                changed = true;
            }
        }
    }

    EventLog out;
    out.qmatrix = in.qmatrix;
    out.catalog.exercises = cat.exercises;
    out.catalog.concepts = cat.concepts;
    std::vector<GroupId> new_group(cat.groups.size(), 0);
    for (GroupId g = 0; g < cat.groups.size(); ++g) {
        if (!keep_group[g]) continue;
        new_group[g] = out.catalog.groups.size();
        out.catalog.groups.push_back(cat.groups[g]);
    }
    out.catalog.membership.assign(out.catalog.groups.size(), {});
    std::vector<StudentId> new_student(cat.students.size(), 0);
    for (StudentId s = 0; s < cat.students.size(); ++s) {
        if (!keep_student[s]) continue;
        new_student[s] = out.catalog.students.size();
        out.catalog.students.push_back(cat.students[s]);
        out.catalog.student_group.push_back(new_group[cat.student_group[s]]);
        out.catalog.membership[new_group[cat.student_group[s]]].push_back(new_student[s]);
    }
    for (const auto& ev : in.events) {
        if (keep_student[ev.student]) out.events.push_back(Event{new_student[ev.student], ev.exercise, ev.response, ev.timestamp});
    }
    if (out.events.empty()) throw std::runtime_error("dataset exhausted by filters");
    return out;
}

/// Buckets each group's responses into frames of `span` seconds measured from
/// the group's earliest timestamp. Frames without any member response are
/// squeezed out so indices stay contiguous. Group interactions are left empty.
inline FramedSequences bin_time_frames(const EventLog& log, std::int64_t span) {
    if (span <= 0) throw std::invalid_argument("frame span must be positive, got " + std::to_string(span));
    if (log.events.empty()) throw std::invalid_argument("cannot bin an empty event list");
    const EntityCatalog& cat = log.catalog;

    const bool single_instant = std::all_of(log.events.begin(), log.events.end(),
                                            [&](const Event& e) { return e.timestamp == log.events.front().timestamp; });
    if (single_instant) log::warn("all records share one timestamp; everything falls into a single frame");

    std::vector<std::vector<const Event*>> by_group(cat.groups.size());
    for (const auto& ev : log.events) by_group.at(cat.student_group.at(ev.student)).push_back(&ev);

    FramedSequences out;
    out.groups.resize(cat.groups.size());
    for (GroupId g = 0; g < cat.groups.size(); ++g) {
        GroupFrames& gf = out.groups[g];
        gf.group = g;
        const auto& events = by_group[g];
        if (events.empty()) continue;
        std::int64_t t_min = events.front()->timestamp;
        for (const Event* ev : events) t_min = std::min(t_min, ev->timestamp);
        auto raw_frame = [&](std::int64_t t) { return (t - t_min) / span; };  // t >= t_min, so this is floor
        std::set<std::int64_t> raw;
        for (const Event* ev : events) raw.insert(raw_frame(ev->timestamp));
        std::map<std::int64_t, std::size_t> frame_of;
        for (std::int64_t r : raw) {
            frame_of.emplace(r, gf.bounds.size());
            gf.bounds.push_back(FrameBounds{t_min + r * span, t_min + (r + 1) * span});
        }
        const std::size_t members = cat.membership[g].size();
        gf.students.assign(gf.bounds.size(), std::vector<std::vector<StudentInteraction>>(members));
        gf.group_interactions.assign(gf.bounds.size(), {});
        for (const Event* ev : events) {
            const std::size_t f = frame_of.at(raw_frame(ev->timestamp));
            gf.students[f][cat.member_index(ev->student)].push_back(
                StudentInteraction{ev->exercise, log.qmatrix.concepts_of(ev->exercise), ev->response, ev->timestamp});
        }
        for (auto& frame : gf.students)
            for (auto& list : frame)
                std::sort(list.begin(), list.end(), [](const StudentInteraction& a, const StudentInteraction& b) {
                    return std::tie(a.timestamp, a.exercise, a.response) < std::tie(b.timestamp, b.exercise, b.response);
                });
    }
    return out;
}

/// Emits a group interaction for every (group, frame, exercise) answered by at
/// least `coverage` of the group's members. The rate is the fraction of those
/// members whose first attempt in the frame was correct.
inline void compute_group_rates(FramedSequences& seq, const EntityCatalog& cat, const QMatrix& q, double coverage) {
    if (!(coverage > 0.0 && coverage <= 1.0)) {
        throw std::invalid_argument("coverage threshold must lie in (0, 1], got " + std::to_string(coverage));
    }
    for (GroupFrames& gf : seq.groups) {
        const double size = static_cast<double>(cat.membership.at(gf.group).size());
        for (std::size_t f = 0; f < gf.frames(); ++f) {
            struct Tally {
                std::size_t answered = 0;
                std::size_t correct = 0;
                std::int64_t first = 0;
            };
            std::map<ExerciseId, Tally> tally;
            for (const auto& list : gf.students[f]) {
                std::set<ExerciseId> seen;
                for (const auto& it : list) {  // sorted by time: the first hit is the first attempt
                    if (!seen.insert(it.exercise).second) continue;
                    Tally& t = tally[it.exercise];
                    t.first = t.answered == 0 ? it.timestamp : std::min(t.first, it.timestamp);
                    ++t.answered;
                    t.correct += static_cast<std::size_t>(it.response);
                }
            }
            auto& out = gf.group_interactions[f];
            out.clear();
            for (const auto& [e, t] : tally) {
                if (static_cast<double>(t.answered) / size + 1e-12 < coverage) continue;
                out.push_back(GroupInteraction{e, q.concepts_of(e),
                                               static_cast<double>(t.correct) / static_cast<double>(t.answered), t.first});
            }
        }
    }
}

inline Dataset assemble(const EventLog& log, const BuildOptions& options) {
    Dataset d;
    d.catalog = log.catalog;
    d.qmatrix = log.qmatrix;
    d.options = options;
    d.sequences = bin_time_frames(log, options.span);
    compute_group_rates(d.sequences, d.catalog, d.qmatrix, options.coverage);
    return d;
}

/// Full ingestion: register ids, filter, frame, derive group rates.
inline Dataset build_dataset(const std::vector<RawRecord>& records, const LabeledQMatrix* qmatrix,
                             const BuildOptions& options = {}, bool apply_filters = true) {
    EventLog log = register_records(records, qmatrix);
    if (log.qmatrix.first_empty_row()) {
        throw std::runtime_error("exercise '" + log.catalog.exercises[*log.qmatrix.first_empty_row()] + "' has no concept");
    }
    if (apply_filters) log = filter_events(log, options);
    return assemble(log, options);
}

/// Inverse of framing: every student response as a flat event.
inline EventLog flatten(const Dataset& d) {
    EventLog log;
    log.catalog = d.catalog;
    log.qmatrix = d.qmatrix;
    for (const GroupFrames& gf : d.sequences.groups) {
        const auto& members = d.catalog.membership.at(gf.group);
        for (std::size_t f = 0; f < gf.frames(); ++f)
            for (std::size_t m = 0; m < members.size(); ++m)
                for (const auto& it : gf.students[f][m])
                    log.events.push_back(Event{members[m], it.exercise, it.response, it.timestamp});
    }
    return log;
}

inline Dataset filter_dataset(const Dataset& d) { return assemble(filter_events(flatten(d), d.options), d.options); }

/// Raw-log view of a dataset, suitable for write_logs().
inline std::vector<RawRecord> to_records(const Dataset& d) {
    std::vector<RawRecord> out;
    for (const Event& ev : flatten(d).events) {
        RawRecord r;
        r.student = d.catalog.students[ev.student];
        r.group = d.catalog.groups[d.catalog.student_group[ev.student]];
        r.exercise = d.catalog.exercises[ev.exercise];
        for (ConceptId c : d.qmatrix.concepts_of(ev.exercise)) r.concepts.push_back(d.catalog.concepts[c]);
        r.timestamp = ev.timestamp;
        r.correct = ev.response;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace rigl
