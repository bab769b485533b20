// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/domain/types.hpp"
#include "rigl/util/text.hpp"

// Dataset archive, tab-separated text:
//
//   HKT-DATASET v1
//   options  <span>  <coverage>  <min_student_responses>  <min_group_size>
//   concepts <K>            then K lines:  <label>
//   exercises <M>           then M lines:  <label>  <concept ids, comma-separated>
//   groups <I>              then I lines:  <label>
//   students <N>            then N lines:  <label>  <group id>
//   per group, in id order:
//     group <id> <T> <#student interactions> <#group interactions>
//     T lines:              bound  <start>  <end>
//     student lines:        s  <frame>  <member index>  <exercise>  <response>  <timestamp>
//     group lines:          g  <frame>  <exercise>  <correct rate>  <timestamp>
//   end
//
// Ids are the dense ids; frames are 0-based. Labels must not contain tabs or newlines.

namespace rigl::archive {

inline constexpr const char* kMagic = "HKT-DATASET v1";

inline void write(std::ostream& out, const Dataset& d) {
    const auto& c = d.catalog;
    auto check_label = [](const std::string& s) {
        if (s.find_first_of("\t\n\r") != std::string::npos) throw std::invalid_argument("label '" + s + "' contains a tab or newline");
    };
    out << kMagic << '\n';
    out << "options\t" << d.options.span << '\t' << text::format_double(d.options.coverage) << '\t'
        << d.options.min_student_responses << '\t' << d.options.min_group_size << '\n';
    out << "concepts\t" << c.concepts.size() << '\n';
    for (const auto& l : c.concepts) {
        check_label(l);
        out << l << '\n';
    }
    out << "exercises\t" << c.exercises.size() << '\n';
    for (ExerciseId e = 0; e < c.exercises.size(); ++e) {
        check_label(c.exercises[e]);
        out << c.exercises[e] << '\t';
        const auto cs = d.qmatrix.concepts_of(e);
        for (std::size_t i = 0; i < cs.size(); ++i) out << (i ? "," : "") << cs[i];
        out << '\n';
    }
    out << "groups\t" << c.groups.size() << '\n';
    for (const auto& l : c.groups) {
        check_label(l);
        out << l << '\n';
    }
    out << "students\t" << c.students.size() << '\n';
    for (StudentId s = 0; s < c.students.size(); ++s) {
        check_label(c.students[s]);
        out << c.students[s] << '\t' << c.student_group[s] << '\n';
    }
    for (const GroupFrames& gf : d.sequences.groups) {
        std::size_t ns = 0, ng = 0;
        for (std::size_t f = 0; f < gf.frames(); ++f) {
            for (const auto& l : gf.students[f]) ns += l.size();
            ng += gf.group_interactions[f].size();
        }
        out << "group\t" << gf.group << '\t' << gf.frames() << '\t' << ns << '\t' << ng << '\n';
        for (const auto& b : gf.bounds) out << "bound\t" << b.start << '\t' << b.end << '\n';
        for (std::size_t f = 0; f < gf.frames(); ++f)
            for (std::size_t m = 0; m < gf.students[f].size(); ++m)
                for (const auto& it : gf.students[f][m])
                    out << "s\t" << f << '\t' << m << '\t' << it.exercise << '\t' << it.response << '\t' << it.timestamp << '\n';
        for (std::size_t f = 0; f < gf.frames(); ++f)
            for (const auto& it : gf.group_interactions[f])
                out << "g\t" << f << '\t' << it.exercise << '\t' << text::format_double(it.correct_rate) << '\t' << it.timestamp
                    << '\n';
    }
    out << "end\n";
}

namespace detail {

class Reader {
   public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::vector<std::string> fields(const std::string& what) {
        std::string line;
        if (!std::getline(in_, line)) throw error("unexpected end of archive, expected " + what);
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return text::split(line, '\t');
    }

    std::vector<std::string> tagged(const std::string& tag, std::size_t arity) {
        auto f = fields(tag);
        if (f.empty() || f[0] != tag || f.size() != arity + 1) throw error("expected '" + tag + "' record");
        return f;
    }

    std::int64_t integer(const std::string& s) {
        auto v = text::parse_int(s);
        if (!v) throw error("'" + s + "' is not an integer");
        return *v;
    }
    std::size_t index(const std::string& s, std::size_t bound) {
        const auto v = integer(s);
        if (v < 0 || static_cast<std::size_t>(v) >= bound) throw error("index " + s + " out of range");
        return static_cast<std::size_t>(v);
    }
    double real(const std::string& s) {
        auto v = text::parse_double(s);
        if (!v) throw error("'" + s + "' is not a number");
        return *v;
    }

    std::runtime_error error(const std::string& msg) const {
        return std::runtime_error("dataset archive line " + std::to_string(line_) + ": " + msg);
    }

   private:
    std::istream& in_;
    std::size_t line_ = 0;
};

}  // namespace detail

inline Dataset read(std::istream& in) {
    detail::Reader r(in);
    Dataset d;
    auto head = r.fields("header");
    if (head.size() != 1 || head[0] != kMagic) throw r.error("not an HKT-DATASET v1 archive");
    auto opt = r.tagged("options", 4);
    d.options.span = r.integer(opt[1]);
    d.options.coverage = r.real(opt[2]);
    d.options.min_student_responses = static_cast<std::size_t>(r.integer(opt[3]));
    d.options.min_group_size = static_cast<std::size_t>(r.integer(opt[4]));

    auto& c = d.catalog;
    const auto nk = static_cast<std::size_t>(r.integer(r.tagged("concepts", 1)[1]));
    for (std::size_t i = 0; i < nk; ++i) c.concepts.push_back(r.fields("concept")[0]);
    const auto nm = static_cast<std::size_t>(r.integer(r.tagged("exercises", 1)[1]));
    d.qmatrix = QMatrix(nm, nk);
    for (std::size_t e = 0; e < nm; ++e) {
        auto f = r.fields("exercise");
        if (f.size() != 2) throw r.error("malformed exercise record");
        c.exercises.push_back(f[0]);
        for (const auto& cid : text::split(f[1], ',')) d.qmatrix.set(e, r.index(cid, nk));
    }
    if (auto empty = d.qmatrix.first_empty_row()) throw r.error("exercise '" + c.exercises[*empty] + "' has no concept");
    const auto ng = static_cast<std::size_t>(r.integer(r.tagged("groups", 1)[1]));
    for (std::size_t g = 0; g < ng; ++g) c.groups.push_back(r.fields("group label")[0]);
    c.membership.assign(ng, {});
    const auto ns = static_cast<std::size_t>(r.integer(r.tagged("students", 1)[1]));
    for (StudentId s = 0; s < ns; ++s) {
        auto f = r.fields("student");
        if (f.size() != 2) throw r.error("malformed student record");
        c.students.push_back(f[0]);
        c.student_group.push_back(r.index(f[1], ng));
        c.membership[c.student_group.back()].push_back(s);
    }

    d.sequences.groups.resize(ng);
    for (GroupId g = 0; g < ng; ++g) {
        auto h = r.tagged("group", 4);
        if (r.index(h[1], ng) != g) throw r.error("groups out of order");
        GroupFrames& gf = d.sequences.groups[g];
        gf.group = g;
        const auto frames = static_cast<std::size_t>(r.integer(h[2]));
        const auto n_student = static_cast<std::size_t>(r.integer(h[3]));
        const auto n_group = static_cast<std::size_t>(r.integer(h[4]));
        const std::size_t members = c.membership[g].size();
        for (std::size_t f = 0; f < frames; ++f) {
            auto b = r.tagged("bound", 2);
            gf.bounds.push_back(FrameBounds{r.integer(b[1]), r.integer(b[2])});
        }
        gf.students.assign(frames, std::vector<std::vector<StudentInteraction>>(members));
        gf.group_interactions.assign(frames, {});
        for (std::size_t i = 0; i < n_student; ++i) {
            auto s = r.tagged("s", 5);
            const std::size_t f = r.index(s[1], frames);
            const std::size_t m = r.index(s[2], members);
            const ExerciseId e = r.index(s[3], nm);
            const auto resp = r.integer(s[4]);
            if (resp != 0 && resp != 1) throw r.error("response must be 0 or 1");
            const auto ts = r.integer(s[5]);
            if (ts < gf.bounds[f].start || ts >= gf.bounds[f].end) throw r.error("timestamp outside its frame");
            gf.students[f][m].push_back(StudentInteraction{e, d.qmatrix.concepts_of(e), static_cast<int>(resp), ts});
        }
        for (std::size_t i = 0; i < n_group; ++i) {
            auto s = r.tagged("g", 4);
            const std::size_t f = r.index(s[1], frames);
            const ExerciseId e = r.index(s[2], nm);
            const double rate = r.real(s[3]);
            if (!(rate >= 0.0 && rate <= 1.0)) throw r.error("correct rate outside [0, 1]");
            gf.group_interactions[f].push_back(GroupInteraction{e, d.qmatrix.concepts_of(e), rate, r.integer(s[4])});
        }
    }
    auto end = r.fields("end");
    if (end.size() != 1 || end[0] != "end") throw r.error("missing end marker");
    return d;
}

inline void save(const std::string& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset archive '" + path + "'");
    write(out, d);
}

inline Dataset load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset archive '" + path + "'");
    return read(in);
}

inline std::string to_string(const Dataset& d) {
    std::ostringstream out;
    write(out, d);
    return out.str();
}

/// 64-bit FNV-1a of the archive bytes, printed as 16 hex digits.
inline std::string fingerprint(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string fingerprint(const Dataset& d) { return fingerprint(to_string(d)); }

}  // namespace rigl::archive
