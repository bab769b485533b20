// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Expected ingest results for tests/fixtures, computed by an independent
// script with exact rational arithmetic.
namespace rigl::fixture {

inline std::string dir() { return RIGL_FIXTURE_DIR; }
inline std::string logs() { return dir() + "/logs.csv"; }
inline std::string qmatrix() { return dir() + "/qmatrix.csv"; }

constexpr std::size_t rows = 200;
constexpr std::size_t students = 14;
constexpr std::size_t groups = 3;
constexpr std::size_t exercises = 13;
constexpr std::size_t concepts = 4;
constexpr std::size_t student_responses = 178;
constexpr std::size_t group_responses = 32;
constexpr std::size_t group_frames = 8;
constexpr double avg_group_size = 14.0 / 3.0;
constexpr double avg_responses_per_student = 89.0 / 7.0;
constexpr double avg_responses_per_group = 32.0 / 3.0;
constexpr double avg_responses_per_frame = 89.0 / 4.0;

struct GroupRate {
    const char* group;
    std::size_t frame;  // 1-based
    const char* exercise;
    int numerator;
    int denominator;
};

inline const std::vector<GroupRate>& group_rates() {
    static const std::vector<GroupRate> rates = {
        {"gB", 1, "e03", 1, 1},
        {"gB", 1, "e06", 0, 1},
        {"gB", 1, "e10", 2, 3},
        {"gB", 1, "e11", 1, 2},
        {"gB", 1, "e12", 1, 1},
        {"gB", 2, "e03", 1, 3},
        {"gB", 2, "e06", 0, 1},
        {"gB", 2, "e10", 1, 2},
        {"gB", 2, "e11", 1, 2},
        {"gB", 2, "e12", 2, 3},
        {"gB", 2, "e13", 1, 2},
        {"gE", 1, "e01", 1, 1},
        {"gE", 1, "e05", 2, 3},
        {"gE", 1, "e09", 1, 3},
        {"gE", 1, "e10", 3, 4},
        {"gE", 1, "e13", 1, 2},
        {"gE", 2, "e02", 1, 4},
        {"gE", 2, "e08", 1, 3},
        {"gE", 2, "e12", 1, 2},
        {"gE", 3, "e05", 1, 3},
        {"gE", 3, "e09", 1, 1},
        {"gA", 1, "e01", 2, 3},
        {"gA", 1, "e05", 3, 5},
        {"gA", 1, "e06", 2, 3},
        {"gA", 1, "e08", 3, 4},
        {"gA", 2, "e01", 2, 3},
        {"gA", 2, "e05", 2, 5},
        {"gA", 2, "e09", 2, 3},
        {"gA", 3, "e01", 2, 3},
        {"gA", 3, "e05", 2, 5},
        {"gA", 3, "e07", 0, 1},
        {"gA", 3, "e09", 3, 4},
    };
    return rates;
}

}  // namespace rigl::fixture
