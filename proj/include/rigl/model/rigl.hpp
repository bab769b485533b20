// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rigl/domain/types.hpp"
#include "rigl/model/config.hpp"
#include "rigl/model/graph.hpp"
#include "rigl/model/inputs.hpp"
#include "rigl/numerics/ops.hpp"

namespace rigl {

/// Per-frame encodings of one group and its members, before and after fusion.
/// Student tensors have frames * members rows, group tensors one row per frame.
struct FrameEncoding {
    Var xs, zs, xo, zo;
    Var xs_tilde, zs_tilde, xo_tilde, zo_tilde;
    Var lambda;  // frames x members aggregation weights
};

struct GroupForward {
    FrameEncoding encoding;
    std::vector<GraphSnapshot> snapshots;
    Var node_out;  // ((n + 1) * frames) x 2d graph output, frame-major, node 0 = group
    Var states;    // ((n + 1) * frames) x d knowledge state used to predict each frame
    std::vector<Tensor> attention;  // last attention weights of every layer and head
    Var student_pred;               // one row per GroupInputs::s_targets entry
    Var group_pred;                 // one row per GroupInputs::g_targets entry
};

/// Sinusoidal position code for frame `t`, width d.
inline Tensor position_encoding(std::size_t t, std::size_t d) {
    Tensor pe(1, d);
    for (std::size_t i = 0; i < d; i += 2) {
        const double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
        pe(0, i) = std::sin(static_cast<double>(t) * rate);
        if (i + 1 < d) pe(0, i + 1) = std::cos(static_cast<double>(t) * rate);
    }
    return pe;
}

class Rigl {
   public:
    Rigl(ModelConfig cfg, const QMatrix& q, std::uint64_t seed) : config_(std::move(cfg)), qnorm_(q.exercises(), q.concepts()) {
        config_.validate();
        for (ExerciseId e = 0; e < q.exercises(); ++e) {
            const auto cs = q.concepts_of(e);
            for (ConceptId c : cs) qnorm_(e, c) = 1.0 / static_cast<double>(cs.size());
        }
        init_parameters(seed);
    }

    const ModelConfig& config() const { return config_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    std::size_t exercises() const { return qnorm_.rows(); }
    std::size_t concepts() const { return qnorm_.cols(); }

    /// e + mean of the exercise's concept embeddings, one row per exercise.
    Var exercise_table(Tape& tape) {
        return ops::add(tape.leaf(p("exercise_embedding")),
                        ops::matmul(tape.constant(qnorm_), tape.leaf(p("concept_embedding"))));
    }

    /// Mean-pooled interaction encodings and the reciprocal fusion between levels.
    /// `zero_responses` drops every response encoding (the query path of strict mode).
    FrameEncoding encode(Tape& tape, const GroupInputs& in, Var ec, bool zero_responses = false) {
        const std::size_t d = config_.d, n = in.members, T = in.frames;
        FrameEncoding enc;
        Var s_pool = tape.constant(in.s_pool);
        Var x_int = ops::add(ops::matmul(ops::embedding_lookup(ec, in.s_exercise), tape.leaf(p("W1"))), tape.leaf(p("b1")));
        enc.xs = ops::matmul(s_pool, x_int);
        enc.zs = zero_responses ? tape.constant(Tensor(T * n, d))
                                : ops::matmul(s_pool, ops::embedding_lookup(tape.leaf(p("response_embedding")), in.s_response));

        Var g_pool = tape.constant(in.g_pool);
        Var xg = ops::add(ops::matmul(ops::embedding_lookup(ec, in.g_exercise), tape.leaf(p("W2"))), tape.leaf(p("b2")));
        enc.xo = ops::matmul(g_pool, xg);
        if (zero_responses) {
            enc.zo = tape.constant(Tensor(T, d));
        } else {
            Var zg = ops::add(ops::matmul(tape.constant(in.g_rate), tape.leaf(p("h1"))), tape.leaf(p("b1_hat")));
            enc.zo = ops::matmul(g_pool, zg);
        }

        if (!config_.reciprocal) {
            enc.xs_tilde = enc.xs;
            enc.zs_tilde = enc.zs;
            enc.xo_tilde = enc.xo;
            enc.zo_tilde = enc.zo;
            enc.lambda = tape.constant(Tensor(T, n));
            return enc;
        }

        Tensor spread(T * n, T);  // copies a frame's group row to each member row
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < n; ++i) spread(t * n + i, t) = 1.0;
        Var spread_v = tape.constant(spread);
        enc.xs_tilde = ops::add(enc.xs, ops::matmul(spread_v, enc.xo));
        enc.zs_tilde = ops::add(enc.zs, ops::matmul(spread_v, enc.zo));

        if (config_.attention_agg) {
            Var keys = ops::matmul(ops::concat_cols({enc.xs, enc.zs}), tape.leaf(p("Wk")));
            Var query = ops::matmul(spread_v, ops::matmul(ops::concat_cols({enc.xo, enc.zo}), tape.leaf(p("Wq"))));
            Var score = ops::reshape(ops::matmul(ops::relu(ops::add(keys, query)), tape.leaf(p("h2"))), T, n);
            // Frames with nobody present keep their group encoding unchanged.
            Tensor mask = in.presence;
            Tensor keep(T, n, 1.0);
            bool any_empty = false;
            for (std::size_t t = 0; t < T; ++t) {
                bool present = false;
                for (std::size_t i = 0; i < n; ++i) present = present || mask(t, i) != 0.0;
                if (!present) {
                    any_empty = true;
                    for (std::size_t i = 0; i < n; ++i) {
                        mask(t, i) = 1.0;
                        keep(t, i) = 0.0;
                    }
                }
            }
            enc.lambda = ops::masked_softmax(score, mask);
            if (any_empty) enc.lambda = ops::mul(enc.lambda, tape.constant(keep));
        } else {
            enc.lambda = tape.constant(Tensor(T, n, 1.0 / static_cast<double>(n)));
        }
        Var weights = ops::reshape(enc.lambda, T * n, 1);
        Var gather = tape.constant(transposed(spread));
        enc.xo_tilde = ops::add(enc.xo, ops::matmul(gather, ops::scale_rows(enc.xs, weights)));
        enc.zo_tilde = ops::add(enc.zo, ops::matmul(gather, ops::scale_rows(enc.zs, weights)));
        return enc;
    }

    /// Node features of every frame stacked frame-major, one snapshot per frame,
    /// and the graph convolutions applied to the block-diagonal adjacency.
    Var graph_stack(Tape& tape, const GroupInputs& in, const FrameEncoding& enc, std::vector<GraphSnapshot>* out = nullptr) {
        const std::size_t n = in.members, T = in.frames, nodes = n + 1, N = nodes * T;
        Tensor place_group(N, T), place_students(N, T * n);
        for (std::size_t t = 0; t < T; ++t) {
            place_group(t * nodes, t) = 1.0;
            for (std::size_t i = 0; i < n; ++i) place_students(t * nodes + 1 + i, t * n + i) = 1.0;
        }
        Var v = ops::add(ops::matmul(tape.constant(place_group), ops::concat_cols({enc.xo_tilde, enc.zo_tilde})),
                         ops::matmul(tape.constant(place_students), ops::concat_cols({enc.xs_tilde, enc.zs_tilde})));

        const std::size_t k = config_.effective_top_k(n);
        Tensor a_hat(N, N);
        const Tensor& vv = v.value();
        for (std::size_t t = 0; t < T; ++t) {
            Tensor features(nodes, vv.cols());
            for (std::size_t r = 0; r < nodes; ++r)
                for (std::size_t c = 0; c < vv.cols(); ++c) features(r, c) = vv(t * nodes + r, c);
            std::vector<char> present(n);
            for (std::size_t i = 0; i < n; ++i) present[i] = in.presence(t, i) != 0.0;
            GraphSnapshot snap = build_snapshot(std::move(features), std::move(present), k, config_.dynamic_graph);
            for (std::size_t r = 0; r < nodes; ++r)
                for (std::size_t c = 0; c < nodes; ++c) a_hat(t * nodes + r, t * nodes + c) = snap.normalized(r, c);
            if (out != nullptr) out->push_back(std::move(snap));
        }
        Var a = tape.constant(std::move(a_hat));
        for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
            const std::string name = "gcn" + std::to_string(l);
            v = gcn_layer(a, v, tape.leaf(p(name + ".W")), tape.leaf(p(name + ".b")));
        }
        return v;
    }

    /// Causal attention over each node's own earlier frames. Keys come from the
    /// first half of `memory`, values start as its second half; queries come from
    /// `query`. Frame 1 gets the learned initial states.
    Var retrieve(Tape& tape, const GroupInputs& in, Var memory, Var query, std::vector<Tensor>* weights = nullptr) {
        const std::size_t d = config_.d, nodes = in.nodes(), T = in.frames, N = nodes * T;
        Tensor first(N, 2);
        for (std::size_t r = 0; r < nodes; ++r) first(r, r == 0 ? 0 : 1) = 1.0;
        Var init = ops::matmul(tape.constant(first),
                               ops::concat_rows({tape.leaf(p("init_group")), tape.leaf(p("init_student"))}));
        if (T == 1) return init;

        const std::size_t Nq = N - nodes;
        std::vector<std::size_t> q_rows(Nq);
        Tensor pe(N, d), place(N, Nq), mask(Nq, N);
        for (std::size_t r = 0; r < N; ++r) {
            const Tensor row = position_encoding(r / nodes, d);
            for (std::size_t c = 0; c < d; ++c) pe(r, c) = row(0, c);
        }
        for (std::size_t a = 0; a < Nq; ++a) {
            const std::size_t r = nodes + a;
            q_rows[a] = r;
            place(r, a) = 1.0;
            for (std::size_t t = 0; t < r / nodes; ++t) mask(a, t * nodes + r % nodes) = 1.0;
        }
        Var pe_v = tape.constant(pe);
        Var keys_in = ops::add(ops::slice_cols(memory, 0, d), pe_v);
        Var query_in = ops::add(ops::slice_cols(ops::embedding_lookup(query, q_rows), 0, d),
                                ops::embedding_lookup(pe_v, q_rows));
        Var stream = ops::slice_cols(memory, d, 2 * d);
        Var place_v = tape.constant(place);

        const std::size_t H = config_.heads, dh = d / H;
        const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
        Var out;
        for (std::size_t l = 0; l < config_.attn_layers; ++l) {
            const std::string name = "attn" + std::to_string(l);
            Var q = ops::matmul(query_in, tape.leaf(p(name + ".Wq")));
            Var k = ops::matmul(keys_in, tape.leaf(p(name + ".Wk")));
            Var v = ops::matmul(stream, tape.leaf(p(name + ".Wv")));
            std::vector<Var> heads;
            for (std::size_t h = 0; h < H; ++h) {
                Var qh = H == 1 ? q : ops::slice_cols(q, h * dh, (h + 1) * dh);
                Var kh = H == 1 ? k : ops::slice_cols(k, h * dh, (h + 1) * dh);
                Var vh = H == 1 ? v : ops::slice_cols(v, h * dh, (h + 1) * dh);
                Var att = ops::masked_softmax(ops::scale(ops::matmul(qh, ops::transpose(kh)), inv_scale), mask);
                if (weights != nullptr) weights->push_back(att.value());
                heads.push_back(ops::matmul(att, vh));
            }
            out = H == 1 ? heads.front() : ops::concat_cols(heads);
            if (l + 1 < config_.attn_layers) stream = ops::add(stream, ops::matmul(place_v, out));
        }
        return ops::add(ops::matmul(place_v, out), init);
    }

    /// sigmoid(MLP([h; e])) with the student ("readout_s") or group ("readout_o") head.
    Var readout(Tape& tape, const std::string& head, Var h, Var e) {
        Var x = ops::concat_cols({h, e});
        x = ops::relu(ops::add(ops::matmul(x, tape.leaf(p(head + ".W1"))), tape.leaf(p(head + ".b1"))));
        x = ops::relu(ops::add(ops::matmul(x, tape.leaf(p(head + ".W2"))), tape.leaf(p(head + ".b2"))));
        return ops::sigmoid(ops::add(ops::matmul(x, tape.leaf(p(head + ".W3"))), tape.leaf(p(head + ".b3"))));
    }

    struct Options {
        bool snapshots = false;
        bool attention = false;
        bool predictions = true;
    };

    GroupForward forward(Tape& tape, const GroupInputs& in, const Options& opt) {
        GroupForward f;
        const std::size_t nodes = in.nodes();
        Var ec = exercise_table(tape);
        f.encoding = encode(tape, in, ec);
        f.node_out = graph_stack(tape, in, f.encoding, opt.snapshots ? &f.snapshots : nullptr);
        Var query = f.node_out;
        if (config_.strict_no_leak) query = graph_stack(tape, in, encode(tape, in, ec, true));
        f.states = retrieve(tape, in, f.node_out, query, opt.attention ? &f.attention : nullptr);
        if (!opt.predictions) return f;

        std::vector<std::size_t> rows, ex;
        for (std::size_t k : in.s_targets) {
            rows.push_back(in.s_frame[k] * nodes + 1 + in.s_member[k]);
            ex.push_back(in.s_exercise[k]);
        }
        f.student_pred = readout(tape, "readout_s", ops::embedding_lookup(f.states, rows), ops::embedding_lookup(ec, ex));
        rows.clear();
        ex.clear();
        for (std::size_t k : in.g_targets) {
            rows.push_back(in.g_frame[k] * nodes);
            ex.push_back(in.g_exercise[k]);
        }
        f.group_pred = readout(tape, "readout_o", ops::embedding_lookup(f.states, rows), ops::embedding_lookup(ec, ex));
        return f;
    }

    GroupForward forward(Tape& tape, const GroupInputs& in) { return forward(tape, in, Options{}); }

    /// Probe embedding of a concept: mean of the table rows of its exercises.
    Var concept_probe(Tape& tape, ConceptId c) {
        std::vector<std::size_t> tagged;
        for (ExerciseId e = 0; e < exercises(); ++e)
            if (qnorm_(e, c) != 0.0) tagged.push_back(e);
        if (tagged.empty()) throw std::invalid_argument("concept " + std::to_string(c) + " has no exercises");
        return ops::mean_rows(ops::embedding_lookup(exercise_table(tape), tagged));
    }

    /// Mastery of concept `c` per row of `states` (one row per frame), read out
    /// by the given head against the concept probe.
    std::vector<double> trace_concept_proficiency(const Tensor& states, ConceptId c, const std::string& head) {
        if (c >= concepts()) throw std::out_of_range("unknown concept id " + std::to_string(c));
        Tape tape(false);
        Var probe = concept_probe(tape, c);
        Tensor spread(states.rows(), 1, 1.0);
        Var e = ops::matmul(tape.constant(spread), probe);
        Var y = readout(tape, head, tape.constant(states), e);
        return std::vector<double>(y.value().values().begin(), y.value().values().end());
    }

   private:
    Parameter& p(const std::string& name) { return params_.at(name); }

    void init_parameters(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const std::size_t d = config_.d, M = qnorm_.rows(), K = qnorm_.cols();
        auto xavier = [&](const std::string& name, std::size_t rows, std::size_t cols) {
            const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
            std::uniform_real_distribution<double> u(-a, a);
            Tensor t(rows, cols);
            for (double& v : t.values()) v = u(rng);
            params_.add(name, std::move(t));
        };
        auto zeros = [&](const std::string& name, std::size_t rows, std::size_t cols) { params_.add(name, Tensor(rows, cols)); };

        xavier("exercise_embedding", M, d);
        xavier("concept_embedding", K, d);
        xavier("response_embedding", 2, d);
        xavier("W1", d, d);
        zeros("b1", 1, d);
        xavier("W2", d, d);
        zeros("b2", 1, d);
        xavier("h1", 1, d);
        zeros("b1_hat", 1, d);
        xavier("Wk", 2 * d, d);
        xavier("Wq", 2 * d, d);
        xavier("h2", d, 1);
        for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
            xavier("gcn" + std::to_string(l) + ".W", 2 * d, 2 * d);
            zeros("gcn" + std::to_string(l) + ".b", 1, 2 * d);
        }
        for (std::size_t l = 0; l < config_.attn_layers; ++l) {
            xavier("attn" + std::to_string(l) + ".Wq", d, d);
            xavier("attn" + std::to_string(l) + ".Wk", d, d);
            xavier("attn" + std::to_string(l) + ".Wv", d, d);
        }
        xavier("init_group", 1, d);
        xavier("init_student", 1, d);
        for (const char* head : {"readout_s", "readout_o"}) {
            const std::string h = head;
            xavier(h + ".W1", 2 * d, d);
            zeros(h + ".b1", 1, d);
            xavier(h + ".W2", d, d);
            zeros(h + ".b2", 1, d);
            xavier(h + ".W3", d, 1);
            zeros(h + ".b3", 1, 1);
        }
    }

    ModelConfig config_;
    Tensor qnorm_;
    ParameterSet params_;
};

}  // namespace rigl
