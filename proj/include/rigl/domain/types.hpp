// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigl {

// Dense entity indices, 0..N-1 after ingestion.
using StudentId = std::size_t;
using GroupId = std::size_t;
using ExerciseId = std::size_t;
using ConceptId = std::size_t;

/// Entity labels by dense id, plus group membership.
struct EntityCatalog {
    std::vector<std::string> students;
    std::vector<std::string> groups;
    std::vector<std::string> exercises;
    std::vector<std::string> concepts;
    std::vector<std::vector<StudentId>> membership;  // group -> ascending student ids
    std::vector<GroupId> student_group;

    static std::optional<std::size_t> find(const std::vector<std::string>& labels, const std::string& label) {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) return std::nullopt;
        return static_cast<std::size_t>(it - labels.begin());
    }

    /// Position of `s` inside its group's member list.
    std::size_t member_index(StudentId s) const {
        const auto& members = membership.at(student_group.at(s));
        return static_cast<std::size_t>(std::lower_bound(members.begin(), members.end(), s) - members.begin());
    }

    friend bool operator==(const EntityCatalog&, const EntityCatalog&) = default;
};

/// Binary exercise x concept matrix.
class QMatrix {
   public:
    QMatrix() = default;
    QMatrix(std::size_t exercises, std::size_t concepts) : rows_(exercises), cols_(concepts), bits_(exercises * concepts, 0) {}

    std::size_t exercises() const { return rows_; }
    std::size_t concepts() const { return cols_; }

    bool operator()(ExerciseId e, ConceptId c) const { return bits_.at(e * cols_ + c) != 0; }
    void set(ExerciseId e, ConceptId c, bool on = true) { bits_.at(e * cols_ + c) = on ? 1 : 0; }

    std::vector<ConceptId> concepts_of(ExerciseId e) const {
        std::vector<ConceptId> out;
        for (ConceptId c = 0; c < cols_; ++c)
            if ((*this)(e, c)) out.push_back(c);
        return out;
    }

    void add_exercise() {
        bits_.resize(bits_.size() + cols_, 0);
        ++rows_;
    }

    void add_concept() {
        std::vector<std::uint8_t> next(rows_ * (cols_ + 1), 0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) next[r * (cols_ + 1) + c] = bits_[r * cols_ + c];
        bits_ = std::move(next);
        ++cols_;
    }

    /// Index of the first exercise with no concept, if any.
    std::optional<ExerciseId> first_empty_row() const {
        for (ExerciseId e = 0; e < rows_; ++e) {
            bool any = false;
            for (ConceptId c = 0; c < cols_ && !any; ++c) any = (*this)(e, c);
            if (!any) return e;
        }
        return std::nullopt;
    }

    friend bool operator==(const QMatrix&, const QMatrix&) = default;

   private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct StudentInteraction {
    ExerciseId exercise = 0;
    std::vector<ConceptId> concepts;
    int response = 0;  // 0 or 1
    std::int64_t timestamp = 0;

    friend bool operator==(const StudentInteraction&, const StudentInteraction&) = default;
};

struct GroupInteraction {
    ExerciseId exercise = 0;
    std::vector<ConceptId> concepts;
    double correct_rate = 0.0;  // in [0, 1]
    std::int64_t timestamp = 0;

    friend bool operator==(const GroupInteraction&, const GroupInteraction&) = default;
};

/// Half-open time interval [start, end) covered by one frame.
struct FrameBounds {
    std::int64_t start = 0;
    std::int64_t end = 0;

    friend bool operator==(const FrameBounds&, const FrameBounds&) = default;
};

/// All frames of one group. Frame indices are 0-based here; reports print them 1-based.
struct GroupFrames {
    GroupId group = 0;
    std::vector<FrameBounds> bounds;
    std::vector<std::vector<std::vector<StudentInteraction>>> students;  // [frame][member index]; may be empty
    std::vector<std::vector<GroupInteraction>> group_interactions;       // [frame]

    std::size_t frames() const { return bounds.size(); }

    friend bool operator==(const GroupFrames&, const GroupFrames&) = default;
};

struct FramedSequences {
    std::vector<GroupFrames> groups;  // indexed by GroupId

    std::size_t max_frames() const {
        std::size_t t = 0;
        for (const auto& g : groups) t = std::max(t, g.frames());
        return t;
    }

    friend bool operator==(const FramedSequences&, const FramedSequences&) = default;
};

/// Preprocessing knobs; defaults follow the reference preprocessing.
struct BuildOptions {
    std::int64_t span = 86400;  // seconds per frame
    double coverage = 0.6;      // member fraction needed for a group interaction
    std::size_t min_student_responses = 3;
    std::size_t min_group_size = 3;

    friend bool operator==(const BuildOptions&, const BuildOptions&) = default;
};

struct Dataset {
    EntityCatalog catalog;
    QMatrix qmatrix;
    FramedSequences sequences;
    BuildOptions options;

    std::size_t group_size(GroupId g) const { return catalog.membership.at(g).size(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace rigl
