// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/domain/types.hpp"
#include "rigl/model/config.hpp"
#include "rigl/synth/generator.hpp"
#include "rigl/training/config.hpp"
#include "rigl/util/text.hpp"

namespace rigl::cli {

/// A mistake in how the tool was invoked (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every tunable of a run. Config files, manifests and checkpoint metadata all
/// use the same `key = value` lines.
struct Settings {
    std::uint64_t seed = 0;
    ModelConfig model;
    TrainConfig train;
    BuildOptions build;
    synth::SynthConfig synth;
};

namespace detail {

struct Entry {
    std::string key;
    std::function<std::string(const Settings&)> get;
    std::function<void(Settings&, const std::string&)> set;
};

inline std::size_t to_size(const std::string& key, const std::string& v) {
    const auto n = text::parse_int(v);
    if (!n || *n < 0) throw UsageError("'" + key + "' needs a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(*n);
}

inline double to_real(const std::string& key, const std::string& v) {
    const auto x = text::parse_double(v);
    if (!x) throw UsageError("'" + key + "' needs a number, got '" + v + "'");
    return *x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw UsageError("'" + key + "' needs true or false, got '" + v + "'");
}

template <class T, class Field>
Entry size_entry(std::string key, Field field) {
    return {key, [field](const Settings& s) { return std::to_string(field(s)); },
            [key, field](Settings& s, const std::string& v) { field(s) = static_cast<T>(to_size(key, v)); }};
}

template <class Field>
Entry real_entry(std::string key, Field field) {
    return {key, [field](const Settings& s) { return text::format_double(field(s)); },
            [key, field](Settings& s, const std::string& v) { field(s) = to_real(key, v); }};
}

template <class Field>
Entry bool_entry(std::string key, Field field) {
    return {key, [field](const Settings& s) { return std::string(field(s) ? "true" : "false"); },
            [key, field](Settings& s, const std::string& v) { field(s) = to_bool(key, v); }};
}

#define RIGL_FIELD(path) [](auto& s) -> auto& { return s.path; }

inline const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        size_entry<std::uint64_t>("seed", RIGL_FIELD(seed)),
        size_entry<std::size_t>("d", RIGL_FIELD(model.d)),
        size_entry<std::size_t>("gcn_layers", RIGL_FIELD(model.gcn_layers)),
        size_entry<std::size_t>("attn_layers", RIGL_FIELD(model.attn_layers)),
        size_entry<std::size_t>("top_k", RIGL_FIELD(model.top_k)),
        size_entry<std::size_t>("heads", RIGL_FIELD(model.heads)),
        bool_entry("strict_no_leak", RIGL_FIELD(model.strict_no_leak)),
        {"similarity", [](const Settings& s) { return s.model.similarity; },
         [](Settings& s, const std::string& v) { s.model.similarity = v; }},
        bool_entry("reciprocal", RIGL_FIELD(model.reciprocal)),
        bool_entry("attention_agg", RIGL_FIELD(model.attention_agg)),
        bool_entry("dynamic_graph", RIGL_FIELD(model.dynamic_graph)),
        real_entry("gamma", RIGL_FIELD(train.gamma)),
        real_entry("tau", RIGL_FIELD(train.tau)),
        real_entry("flip_prob", RIGL_FIELD(train.flip_prob)),
        size_entry<std::size_t>("epochs", RIGL_FIELD(train.epochs)),
        size_entry<std::size_t>("batch_groups", RIGL_FIELD(train.batch_groups)),
        real_entry("lr", RIGL_FIELD(train.lr)),
        size_entry<std::size_t>("folds", RIGL_FIELD(train.folds)),
        {"denominator", [](const Settings& s) { return to_string(s.train.denominator); },
         [](Settings& s, const std::string& v) {
             try {
                 s.train.denominator = parse_denominator_mode(v);
             } catch (const std::invalid_argument& e) {
                 throw UsageError(e.what());
             }
         }},
        real_entry("clip_norm", RIGL_FIELD(train.clip_norm)),
        bool_entry("contrastive", RIGL_FIELD(train.contrastive)),
        {"span", [](const Settings& s) { return std::to_string(s.build.span); },
         [](Settings& s, const std::string& v) { s.build.span = static_cast<std::int64_t>(to_size("span", v)); }},
        real_entry("coverage", RIGL_FIELD(build.coverage)),
        size_entry<std::size_t>("min_student_responses", RIGL_FIELD(build.min_student_responses)),
        size_entry<std::size_t>("min_group_size", RIGL_FIELD(build.min_group_size)),
        size_entry<std::size_t>("synth.groups", RIGL_FIELD(synth.groups)),
        size_entry<std::size_t>("synth.students_per_group", RIGL_FIELD(synth.students_per_group)),
        size_entry<std::size_t>("synth.exercises", RIGL_FIELD(synth.exercises)),
        size_entry<std::size_t>("synth.concepts", RIGL_FIELD(synth.concepts)),
        size_entry<std::size_t>("synth.frames", RIGL_FIELD(synth.frames)),
        real_entry("synth.ability_drift", RIGL_FIELD(synth.ability_drift)),
        real_entry("synth.growth", RIGL_FIELD(synth.growth)),
        real_entry("synth.group_coupling", RIGL_FIELD(synth.group_coupling)),
        real_entry("synth.absence_prob", RIGL_FIELD(synth.absence_prob)),
        real_entry("synth.difficulty_min", RIGL_FIELD(synth.difficulty_min)),
        real_entry("synth.difficulty_max", RIGL_FIELD(synth.difficulty_max)),
        real_entry("synth.ability_spread", RIGL_FIELD(synth.ability_spread)),
        real_entry("synth.second_concept_prob", RIGL_FIELD(synth.second_concept_prob)),
        size_entry<std::size_t>("synth.shared_per_frame", RIGL_FIELD(synth.shared_per_frame)),
        real_entry("synth.shared_answer_prob", RIGL_FIELD(synth.shared_answer_prob)),
        size_entry<std::size_t>("synth.individual_per_frame", RIGL_FIELD(synth.individual_per_frame)),
    };
    return table;
}

#undef RIGL_FIELD

}  // namespace detail

inline void set(Settings& s, const std::string& key, const std::string& value) {
    for (const auto& e : detail::entries())
        if (e.key == key) return e.set(s, value);
    throw UsageError("unknown setting '" + key + "'");
}

inline std::string get(const Settings& s, const std::string& key) {
    for (const auto& e : detail::entries())
        if (e.key == key) return e.get(s);
    throw UsageError("unknown setting '" + key + "'");
}

/// Ordered (key, value) pairs of every setting.
inline std::vector<std::pair<std::string, std::string>> snapshot(const Settings& s) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : detail::entries()) out.emplace_back(e.key, e.get(s));
    return out;
}

inline std::string to_text(const Settings& s) {
    std::string out;
    for (const auto& [k, v] : snapshot(s)) out += k + " = " + v + "\n";
    return out;
}

/// Applies `key = value` lines; blank lines and `#` comments are skipped.
inline void apply_text(Settings& s, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        const std::string body(text::trim(line.substr(0, hash)));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(no) + ": expected 'key = value'");
        try {
            set(s, std::string(text::trim(body.substr(0, eq))), std::string(text::trim(body.substr(eq + 1))));
        } catch (const UsageError& e) {
            throw UsageError(source + ":" + std::to_string(no) + ": " + e.what());
        }
    }
}

inline void apply_file(Settings& s, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    apply_text(s, in, path);
}

}  // namespace rigl::cli
