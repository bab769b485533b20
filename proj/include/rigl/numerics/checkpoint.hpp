// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rigl/numerics/tape.hpp"

// Checkpoint layout:
//
//   HKT-CKPT v1\n
//   meta <n>\n<n bytes of free-form text>\n
//   tensors <count>\n
//   then per tensor:  <name> <rows> <cols>\n<rows*cols little-endian IEEE-754 doubles>\n
//
// Tensor names never contain whitespace.

namespace rigl::checkpoint {

inline constexpr const char* kMagic = "HKT-CKPT v1";

struct Contents {
    std::string meta;
    ParameterSet tensors;
};

namespace detail {

inline void put_double(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    out.write(bytes, 8);
}

inline double get_double(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw std::runtime_error("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline std::string expect_line(std::istream& in, const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint truncated before " + what);
    return line;
}

}  // namespace detail

inline void write(std::ostream& out, const ParameterSet& params, const std::string& meta = {}) {
    out << kMagic << '\n';
    out << "meta " << meta.size() << '\n';
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    out << '\n' << "tensors " << params.size() << '\n';
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = params[i];
        out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
        for (double v : p.value.values()) detail::put_double(out, v);
        out << '\n';
    }
}

inline Contents read(std::istream& in) {
    Contents c;
    if (detail::expect_line(in, "header") != kMagic) throw std::runtime_error("not an HKT-CKPT v1 checkpoint");
    std::istringstream meta_line(detail::expect_line(in, "meta"));
    std::string tag;
    std::size_t n = 0;
    if (!(meta_line >> tag >> n) || tag != "meta") throw std::runtime_error("checkpoint: malformed meta line");
    c.meta.resize(n);
    in.read(c.meta.data(), static_cast<std::streamsize>(n));
    detail::expect_line(in, "meta terminator");
    std::istringstream count_line(detail::expect_line(in, "tensor count"));
    std::size_t count = 0;
    if (!(count_line >> tag >> count) || tag != "tensors") throw std::runtime_error("checkpoint: malformed tensor count");
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream head(detail::expect_line(in, "tensor header"));
        std::string name;
        std::size_t rows = 0, cols = 0;
        if (!(head >> name >> rows >> cols)) throw std::runtime_error("checkpoint: malformed tensor header");
        Tensor t(rows, cols);
        for (double& v : t.values()) v = detail::get_double(in);
        detail::expect_line(in, "tensor terminator");
        c.tensors.add(name, std::move(t));
    }
    return c;
}

inline void save(const std::string& path, const ParameterSet& params, const std::string& meta = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    write(out, params, meta);
}

inline Contents load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    return read(in);
}

/// Copies checkpoint tensors into `params`, which must hold the same names and shapes.
inline void restore(ParameterSet& params, const ParameterSet& stored) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        if (!stored.contains(p.name)) throw std::runtime_error("checkpoint is missing tensor '" + p.name + "'");
        const Tensor& v = stored.at(p.name).value;
        if (v.shape() != p.value.shape()) {
            throw std::runtime_error("dimension mismatch for tensor '" + p.name + "': checkpoint " +
                                     to_string(v.shape()) + ", model " + to_string(p.value.shape()));
        }
        p.value = v;
    }
    if (stored.size() != params.size()) throw std::runtime_error("checkpoint holds unexpected extra tensors");
}

}  // namespace rigl::checkpoint
