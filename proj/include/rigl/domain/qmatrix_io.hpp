// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/domain/types.hpp"
#include "rigl/util/text.hpp"

namespace rigl {

/// A Q-matrix together with the labels it was read with.
struct LabeledQMatrix {
    QMatrix matrix;
    std::vector<std::string> exercises;
    std::vector<std::string> concepts;
};

// File format: one row per exercise, `label,q_1,...,q_K`. An optional first
// row whose first cell is `exercise_id` names the concepts; without it they
// are called c0..c{K-1}.
inline LabeledQMatrix load_qmatrix(std::istream& in, char delimiter = ',') {
    LabeledQMatrix q;
    std::vector<std::vector<std::uint8_t>> rows;
    std::vector<std::size_t> line_of_row;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto cells = text::split(line, delimiter);
        if (cells.size() < 2) throw std::runtime_error("q-matrix row " + std::to_string(line_no) + " has no concept columns");
        if (first && cells[0] == "exercise_id") {
            q.concepts.assign(cells.begin() + 1, cells.end());
            width = q.concepts.size();
            first = false;
            continue;
        }
        first = false;
        if (width == 0) width = cells.size() - 1;
        if (cells.size() - 1 != width) {
            throw std::runtime_error("q-matrix row " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size() - 1) + " entries, expected " + std::to_string(width));
        }
        std::vector<std::uint8_t> bits;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c] == "0") {
                bits.push_back(0);
            } else if (cells[c] == "1") {
                bits.push_back(1);
            } else {
                throw std::runtime_error("q-matrix entry '" + cells[c] + "' is not 0/1 at row " + std::to_string(line_no) +
                                         ", column " + std::to_string(c + 1));
            }
        }
        if (EntityCatalog::find(q.exercises, cells[0])) {
            throw std::runtime_error("duplicate exercise '" + cells[0] + "' in q-matrix row " + std::to_string(line_no));
        }
        q.exercises.push_back(cells[0]);
        rows.push_back(std::move(bits));
        line_of_row.push_back(line_no);
    }
    if (q.concepts.empty())
        for (std::size_t c = 0; c < width; ++c) q.concepts.push_back("c" + std::to_string(c));
    q.matrix = QMatrix(rows.size(), width);
    for (std::size_t e = 0; e < rows.size(); ++e) {
        bool any = false;
        for (std::size_t c = 0; c < width; ++c) {
            q.matrix.set(e, c, rows[e][c] != 0);
            any = any || rows[e][c] != 0;
        }
        if (!any) {
            throw std::runtime_error("exercise '" + q.exercises[e] + "' has no concept in q-matrix row " +
                                     std::to_string(line_of_row[e]));
        }
    }
    return q;
}

inline LabeledQMatrix load_qmatrix(const std::string& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open q-matrix '" + path + "'");
    return load_qmatrix(in, delimiter);
}

inline void write_qmatrix(std::ostream& out, const LabeledQMatrix& q, char delimiter = ',') {
    out << "exercise_id";
    for (const auto& c : q.concepts) out << delimiter << c;
    out << '\n';
    for (ExerciseId e = 0; e < q.matrix.exercises(); ++e) {
        out << q.exercises[e];
        for (ConceptId c = 0; c < q.matrix.concepts(); ++c) out << delimiter << (q.matrix(e, c) ? '1' : '0');
        out << '\n';
    }
}

}  // namespace rigl
