// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/domain/types.hpp"
#include "rigl/numerics/tensor.hpp"

namespace rigl {

/// One group's frames flattened into index lists and constant pooling
/// matrices. Student rows are frame-major: row t * n + i is member i at frame t.
struct GroupInputs {
    std::size_t members = 0;
    std::size_t frames = 0;
    Tensor presence;  // frames x members, 1 where the member answered something

    std::vector<ExerciseId> s_exercise;
    std::vector<std::size_t> s_response;
    std::vector<std::size_t> s_frame;
    std::vector<std::size_t> s_member;
    Tensor s_pool;  // (frames * members) x interactions, mean pooling

    std::vector<ExerciseId> g_exercise;
    std::vector<std::size_t> g_frame;
    Tensor g_rate;  // interactions x 1
    Tensor g_pool;  // frames x interactions

    // Interactions at frames >= 2 (1-based), the ones the model predicts.
    std::vector<std::size_t> s_targets;
    std::vector<std::size_t> g_targets;

    std::size_t nodes() const { return members + 1; }
};

inline GroupInputs build_group_inputs(const GroupFrames& gf, std::size_t exercises) {
    GroupInputs in;
    in.frames = gf.frames();
    if (in.frames == 0) throw std::invalid_argument("group has no frames");
    in.members = gf.students.front().size();
    if (in.members == 0) throw std::invalid_argument("group has no members");
    in.presence = Tensor(in.frames, in.members);

    std::vector<std::size_t> s_row;
    for (std::size_t t = 0; t < in.frames; ++t) {
        if (gf.students[t].size() != in.members) throw std::invalid_argument("ragged member list in group frames");
        for (std::size_t i = 0; i < in.members; ++i) {
            const auto& list = gf.students[t][i];
            if (!list.empty()) in.presence(t, i) = 1.0;
            for (const auto& it : list) {
                if (it.exercise >= exercises) {
                    throw std::out_of_range("unknown exercise id " + std::to_string(it.exercise));
                }
                if (t >= 1) in.s_targets.push_back(in.s_exercise.size());
                in.s_exercise.push_back(it.exercise);
                in.s_response.push_back(static_cast<std::size_t>(it.response != 0));
                in.s_frame.push_back(t);
                in.s_member.push_back(i);
                s_row.push_back(t * in.members + i);
            }
        }
    }
    in.s_pool = Tensor(in.frames * in.members, in.s_exercise.size());
    for (std::size_t r = 0; r < in.frames * in.members; ++r) {
        std::size_t count = 0;
        for (std::size_t k = 0; k < s_row.size(); ++k) count += s_row[k] == r;
        for (std::size_t k = 0; k < s_row.size(); ++k)
            if (s_row[k] == r) in.s_pool(r, k) = 1.0 / static_cast<double>(count);
    }

    std::vector<double> rates;
    for (std::size_t t = 0; t < in.frames; ++t) {
        for (const auto& gi : gf.group_interactions[t]) {
            if (!(gi.correct_rate >= 0.0 && gi.correct_rate <= 1.0)) {
                throw std::out_of_range("group correct rate outside [0, 1]");
            }
            if (gi.exercise >= exercises) throw std::out_of_range("unknown exercise id " + std::to_string(gi.exercise));
            if (t >= 1) in.g_targets.push_back(in.g_exercise.size());
            in.g_exercise.push_back(gi.exercise);
            in.g_frame.push_back(t);
            rates.push_back(gi.correct_rate);
        }
    }
    in.g_rate = Tensor(rates.size(), 1, rates);
    in.g_pool = Tensor(in.frames, rates.size());
    for (std::size_t t = 0; t < in.frames; ++t) {
        std::size_t count = 0;
        for (std::size_t f : in.g_frame) count += f == t;
        for (std::size_t k = 0; k < in.g_frame.size(); ++k)
            if (in.g_frame[k] == t) in.g_pool(t, k) = 1.0 / static_cast<double>(count);
    }
    return in;
}

}  // namespace rigl
