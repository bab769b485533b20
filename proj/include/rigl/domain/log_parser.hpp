// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/util/text.hpp"

namespace rigl {

/// One row of a raw interaction log, ids still as text.
struct RawRecord {
    std::string student;
    std::string group;
    std::string exercise;
    std::vector<std::string> concepts;
    std::int64_t timestamp = 0;
    int correct = 0;

    friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct LogSchema {
    char delimiter = ',';
    char concept_delimiter = '|';
};

/// Parses a delimited log with a header naming the six required columns (any order).
/// Row numbers in errors are 1-based file lines, the header being row 1.
inline std::vector<RawRecord> parse_logs(std::istream& in, const LogSchema& schema = {}) {
    std::vector<RawRecord> out;
    std::string line;
    std::size_t row = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++row;
        if (!text::trim(line).empty()) header = text::split(line, schema.delimiter);
    }
    if (header.empty()) return out;

    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::runtime_error("log header is missing column '" + name + "'");
    };
    const std::size_t c_student = column("student_id");
    const std::size_t c_group = column("group_id");
    const std::size_t c_exercise = column("exercise_id");
    const std::size_t c_concepts = column("concept_ids");
    const std::size_t c_time = column("timestamp");
    const std::size_t c_correct = column("correct");

    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split(line, schema.delimiter);
        const std::string at = " at row " + std::to_string(row);
        if (cells.size() != header.size()) {
            throw std::runtime_error("expected " + std::to_string(header.size()) + " columns, found " +
                                     std::to_string(cells.size()) + at);
        }
        RawRecord r;
        r.student = cells[c_student];
        r.group = cells[c_group];
        r.exercise = cells[c_exercise];
        if (r.student.empty()) throw std::runtime_error("empty student_id" + at + ", column 'student_id'");
        if (r.group.empty()) throw std::runtime_error("empty group_id" + at + ", column 'group_id'");
        if (r.exercise.empty()) throw std::runtime_error("empty exercise_id" + at + ", column 'exercise_id'");
        if (!cells[c_concepts].empty()) {
            for (auto& c : text::split(cells[c_concepts], schema.concept_delimiter)) {
                if (c.empty()) throw std::runtime_error("empty concept id" + at + ", column 'concept_ids'");
                r.concepts.push_back(std::move(c));
            }
        }
        const auto ts = text::parse_int(cells[c_time]);
        if (!ts) throw std::runtime_error("invalid timestamp" + at + ", column 'timestamp'");
        r.timestamp = *ts;
        const auto correct = text::parse_int(cells[c_correct]);
        if (!correct || (*correct != 0 && *correct != 1)) {
            throw std::runtime_error("invalid response" + at + ", column 'correct'");
        }
        r.correct = static_cast<int>(*correct);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<RawRecord> parse_logs(const std::string& path, const LogSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log file '" + path + "'");
    return parse_logs(in, schema);
}

inline void write_logs(std::ostream& out, const std::vector<RawRecord>& records, const LogSchema& schema = {}) {
    const char d = schema.delimiter;
    out << "student_id" << d << "group_id" << d << "exercise_id" << d << "concept_ids" << d << "timestamp" << d
        << "correct\n";
    for (const auto& r : records) {
        std::string concepts;
        for (std::size_t i = 0; i < r.concepts.size(); ++i) {
            if (i != 0) concepts += schema.concept_delimiter;
            concepts += r.concepts[i];
        }
        out << r.student << d << r.group << d << r.exercise << d << concepts << d << r.timestamp << d << r.correct
            << '\n';
    }
}

}  // namespace rigl
