// SPDX-License-Identifier: Apache-2.0
// Runs the eight acceptance checks and prints one PASS/FAIL line per check.
// Exit status is nonzero when any check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rigl/cli/commands.hpp"
#include "rigl/domain/log_parser.hpp"
#include "rigl/domain/qmatrix_io.hpp"
#include "rigl/domain/summary.hpp"
#include "rigl/metrics/metrics.hpp"
#include "rigl/model/rigl.hpp"
#include "rigl/synth/generator.hpp"
#include "rigl/training/gradcheck.hpp"
#include "rigl/training/trainer.hpp"
#include "support/fixture_expectations.hpp"
#include "support/oracles.hpp"

namespace {

using namespace rigl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

/// Collects failed expectations of one check; keeps the first few messages.
struct Check {
    std::size_t failures = 0;
    std::vector<std::string> notes;
    std::string detail;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (++failures <= 3) notes.push_back(what);
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> head(const Var& v, std::size_t n) {
    return {v.value().values().begin(), v.value().values().begin() + static_cast<std::ptrdiff_t>(n)};
}

std::size_t count_before(const std::vector<std::size_t>& targets, const std::vector<std::size_t>& frame, std::size_t t) {
    return static_cast<std::size_t>(std::count_if(targets.begin(), targets.end(), [&](std::size_t k) { return frame[k] < t; }));
}

std::vector<double> row(const Var& v, std::size_t r) {
    const auto view = v.value().row_view(r);
    return {view.begin(), view.end()};
}

// 1. Every parameter gradient of the full objective against central differences.
void gradient_fidelity(Check& c) {
    const auto t0 = Clock::now();
    ModelGradcheckOptions o;
    o.train.flip_prob = 0.3;
    const GradCheckResult r = model_gradcheck(o);
    const double secs = seconds_since(t0);
    c.expect(r.failures.empty(), std::to_string(r.failures.size()) + " gradient entries off");
    for (const auto& f : r.failures)
        c.expect(false, f.parameter + "[" + std::to_string(f.index) + "] analytic " + fmt(f.analytic, 8) + " numeric " +
                            fmt(f.numeric, 8));
    c.expect(r.max_rel_error < 1e-4, "max relative error " + fmt(r.max_rel_error));
    c.expect(r.skipped * 10 <= r.checked + r.skipped, "too many kink skips: " + std::to_string(r.skipped));
    c.expect(secs < 60.0, "took " + fmt(secs) + " s");
    c.detail = std::to_string(r.checked) + " entries, " + std::to_string(r.skipped) + " kink skips, max rel error " +
               fmt(r.max_rel_error, 3) + ", " + fmt(secs, 3) + " s";
}

// 2. Future frames never reach past states; strict mode hides current responses.
void causality(Check& c) {
    std::mt19937_64 rng(2);
    const QMatrix q = testing::modular_qmatrix(8, 4);
    std::uniform_int_distribution<std::size_t> pick(0, 1 << 20);
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig cfg;
        cfg.d = 4 + 2 * (pick(rng) % 3);
        cfg.gcn_layers = 1 + pick(rng) % 2;
        cfg.attn_layers = 1 + pick(rng) % 3;
        cfg.heads = cfg.d % 4 == 0 && pick(rng) % 2 == 0 ? 2 : 1;
        cfg.top_k = 1 + pick(rng) % 3;
        cfg.strict_no_leak = pick(rng) % 2 == 0;
        cfg.dynamic_graph = pick(rng) % 4 != 0;
        cfg.attention_agg = pick(rng) % 4 != 0;
        Rigl m(cfg, q, static_cast<std::uint64_t>(trial));
        const testing::RandomGroupSpec spec{2 + pick(rng) % 4, 3 + pick(rng) % 3, 8, 4, 0.25, 3};
        const GroupFrames g = testing::random_group(rng, spec);
        const std::size_t t = 1 + pick(rng) % (spec.frames - 1);  // frames t.. are perturbed
        const std::string tag = "trial " + std::to_string(trial);

        GroupFrames changed = g;
        const GroupFrames noise = testing::random_group(rng, spec);
        for (std::size_t f = t; f < g.frames(); ++f) {
            changed.students[f] = noise.students[f];
            changed.group_interactions[f] = noise.group_interactions[f];
        }
        const auto a_in = build_group_inputs(g, 8), b_in = build_group_inputs(changed, 8);
        Tape ta(false), tb(false);
        const auto a = m.forward(ta, a_in), b = m.forward(tb, b_in);
        c.expect(head(a.states, t * a_in.nodes() * cfg.d) == head(b.states, t * a_in.nodes() * cfg.d),
                 tag + ": states before the perturbed frame moved");
        const std::size_t ns = count_before(a_in.s_targets, a_in.s_frame, t);
        const std::size_t ng = count_before(a_in.g_targets, a_in.g_frame, t);
        c.expect(head(a.student_pred, ns) == head(b.student_pred, ns), tag + ": earlier student predictions moved");
        c.expect(head(a.group_pred, ng) == head(b.group_pred, ng), tag + ": earlier group predictions moved");

        if (cfg.strict_no_leak) {
            GroupFrames flipped = g;
            for (auto& list : flipped.students[t])
                for (auto& it : list) it.response = 1 - it.response;
            for (auto& it : flipped.group_interactions[t]) it.correct_rate = 1.0 - it.correct_rate;
            const auto f_in = build_group_inputs(flipped, 8);
            Tape tf(false);
            const auto f = m.forward(tf, f_in);
            const std::size_t ns1 = count_before(a_in.s_targets, a_in.s_frame, t + 1);
            const std::size_t ng1 = count_before(a_in.g_targets, a_in.g_frame, t + 1);
            c.expect(head(a.student_pred, ns1) == head(f.student_pred, ns1),
                     tag + ": strict mode leaked current student responses");
            c.expect(head(a.group_pred, ng1) == head(f.group_pred, ng1),
                     tag + ": strict mode leaked current group rates");
        }
    }
    c.detail = "100 random configurations, bit-identical comparisons";
}

double bce(double p, double y) {
    p = std::clamp(p, 1e-7, 1.0 - 1e-7);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nb), 1e-12));
}

// Contrastive sum over frames t >= 1, negatives drawn from every student of the
// batch at that frame; the literal denominator leaves out the positive pair.
double contrastive_reference(const std::vector<std::vector<std::vector<double>>>& h,
                             const std::vector<std::vector<std::vector<double>>>& hp, double tau, bool literal) {
    double total = 0.0;
    for (std::size_t t = 1; t < h.size(); ++t) {
        const auto& x = h[t];
        const auto& y = hp[t];
        for (std::size_t i = 0; i < x.size(); ++i) {
            double den = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j)
                if (!(literal && i == j)) den += std::exp(cosine(x[i], y[j]) / tau);
            total += -(cosine(x[i], y[i]) / tau - std::log(den));
        }
    }
    return total;
}

// 3. Dense GCN reference, pair-counting AUC, and the objective as a sum of parts.
void oracle_equivalence(Check& c) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1, 1);
    std::size_t graphs = 0;
    double gcn_err = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const std::size_t pairs = n * (n - 1) / 2;
        for (std::size_t mask = 0; mask < (std::size_t{1} << pairs); ++mask) {
            testing::Dense adj = testing::dense_zeros(n, n);
            Tensor a(n, n);
            std::size_t bit = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j, ++bit)
                    if (mask >> bit & 1) adj[i][j] = adj[j][i] = a(i, j) = a(j, i) = 1.0;
            for (int draw = 0; draw < 5; ++draw) {
                testing::Dense v = testing::dense_zeros(n, 4), w = testing::dense_zeros(4, 4);
                std::vector<double> b(4);
                Tensor tv(n, 4), tw(4, 4), tb(1, 4);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t k = 0; k < 4; ++k) tv(i, k) = v[i][k] = u(rng);
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t k = 0; k < 4; ++k) tw(i, k) = w[i][k] = u(rng);
                for (std::size_t k = 0; k < 4; ++k) tb(0, k) = b[k] = 0.1 * u(rng);
                const auto expected = testing::gcn_reference(adj, v, w, b);
                Tape tape(false);
                const Tensor got = gcn_layer(tape.constant(normalize_adjacency(a)), tape.constant(tv),
                                             tape.constant(tw), tape.constant(tb))
                                       .value();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t k = 0; k < 4; ++k) gcn_err = std::max(gcn_err, std::abs(got(i, k) - expected[i][k]));
            }
            ++graphs;
        }
    }
    c.expect(graphs == 75, "enumerated " + std::to_string(graphs) + " graphs");
    c.expect(gcn_err < 1e-10, "GCN max abs error " + fmt(gcn_err));

    std::uniform_int_distribution<std::size_t> size(2, 500);
    std::uniform_int_distribution<int> coarse(0, 20), coin(0, 1);
    std::uniform_real_distribution<double> unit(0, 1);
    std::size_t auc_mismatch = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size(rng);
        std::vector<double> s(n);
        std::vector<int> l(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 == 0 ? coarse(rng) / 20.0 : unit(rng);
            l[i] = coin(rng);
        }
        l[0] = 1;
        l[1] = 0;
        auc_mismatch += metrics::auc(s, l) != testing::auc_pairs(s, l);
    }
    c.expect(auc_mismatch == 0, std::to_string(auc_mismatch) + " AUC instances differ from pair counting");

    double comp_err = 0.0;
    for (auto mode : {DenominatorMode::PaperLiteral, DenominatorMode::StandardInfoNce}) {
        synth::SynthConfig sc;
        sc.groups = 3;
        sc.students_per_group = 4;
        sc.exercises = 12;
        sc.concepts = 3;
        sc.frames = 4;
        sc.seed = 4;
        const auto data = synth::generate(sc);
        ModelConfig mc;
        mc.d = 8;
        mc.gcn_layers = 1;
        mc.attn_layers = 1;
        Rigl model(mc, data.dataset.qmatrix, 5);
        const auto groups = prepare_groups(data.dataset, {0, 1, 2});
        std::vector<const PreparedGroup*> batch{&groups[0], &groups[1], &groups[2]};
        std::mt19937_64 flip(1);
        std::vector<GroupInputs> aug;
        for (const auto& g : groups) aug.push_back(build_group_inputs(augment_flip(*g.frames, 0.3, flip), model.exercises()));
        TrainConfig cfg;
        cfg.denominator = mode;
        Tape tape(false);
        const BatchObjective obj = batch_objective(model, tape, batch, aug, cfg);

        double grp = 0.0, stu = 0.0;
        std::vector<std::vector<std::vector<double>>> h(sc.frames), hp(sc.frames);
        for (std::size_t b = 0; b < groups.size(); ++b) {
            const PreparedGroup& g = groups[b];
            Tape t(false);
            const auto f = model.forward(t, g.inputs);
            const auto fa = model.forward(t, aug[b]);
            double s = 0.0;
            for (std::size_t k = 0; k < g.student_targets.size(); ++k)
                s += bce(f.student_pred.value()[k], g.student_targets[k]);
            stu += s / static_cast<double>(g.size());
            for (std::size_t k = 0; k < g.group_targets.size(); ++k) {
                const double e = f.group_pred.value()[k] - g.group_targets[k];
                grp += e * e;
            }
            for (std::size_t fr = 1; fr < g.inputs.frames; ++fr)
                for (std::size_t i = 0; i < g.inputs.members; ++i) {
                    h[fr].push_back(row(f.states, fr * g.inputs.nodes() + 1 + i));
                    hp[fr].push_back(row(fa.states, fr * g.inputs.nodes() + 1 + i));
                }
        }
        const double cl = contrastive_reference(h, hp, cfg.tau, mode == DenominatorMode::PaperLiteral);
        comp_err = std::max(comp_err, std::abs(obj.total.item() - (grp + stu + cfg.gamma * cl)));
    }
    c.expect(comp_err < 1e-10, "objective composition off by " + fmt(comp_err));
    c.detail = "75 graphs max err " + fmt(gcn_err, 2) + ", 1000 AUC instances exact, objective err " + fmt(comp_err, 2);
}

// 4. Masked softmax rows, member weights and removal of absent members.
void softmax_invariants(Check& c) {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution keep(0.6);
    std::uniform_real_distribution<double> u(-30, 30);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t rows = 1 + trial % 6, cols = 1 + trial % 9;
        Tensor x(rows, cols), mask(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t k = 0; k < cols; ++k) {
                x(r, k) = u(rng);
                mask(r, k) = keep(rng) ? 1.0 : 0.0;
            }
            mask(r, trial % cols) = 1.0;
        }
        Tape tape(false);
        const Tensor y = ops::masked_softmax(tape.constant(x), mask).value();
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < cols; ++k) {
                s += y(r, k);
                if (mask(r, k) == 0.0) c.expect(y(r, k) == 0.0, "masked entry got weight");
            }
            worst = std::max(worst, std::abs(s - 1.0));
        }
    }

    const QMatrix q = testing::modular_qmatrix(6, 3);
    ModelConfig cfg;
    cfg.d = 6;
    cfg.gcn_layers = 1;
    cfg.attn_layers = 2;
    Rigl m(cfg, q, 13);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 4;
        auto g = testing::random_group(rng, {n, 3, 6, 3, 0.2, 3});
        const std::size_t t = trial % 3, gone = trial % n;
        g.students[t][gone].clear();
        if (std::all_of(g.students[t].begin(), g.students[t].end(), [](const auto& l) { return l.empty(); }))
            g.students[t][(gone + 1) % n].push_back(StudentInteraction{1, {1}, 1, 0});
        const auto in = build_group_inputs(g, 6);
        Tape ta(false);
        const auto ea = m.encode(ta, in, m.exercise_table(ta));
        const Tensor& lam = ea.lambda.value();
        for (std::size_t f = 0; f < in.frames; ++f) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += lam(f, i);
                if (g.students[f][i].empty()) c.expect(lam(f, i) == 0.0, "absent member has nonzero weight");
            }
            worst = std::max(worst, std::abs(s - 1.0));
        }
        for (const Tensor& a : m.forward(ta, in, {.attention = true}).attention)
            for (std::size_t r = 0; r < a.rows(); ++r) {
                double s = 0.0;
                for (std::size_t k = 0; k < a.cols(); ++k) s += a(r, k);
                worst = std::max(worst, std::abs(s - 1.0));
            }

        GroupFrames without = g;
        for (auto& frame : without.students) frame.erase(frame.begin() + static_cast<std::ptrdiff_t>(gone));
        Tape tb(false);
        const auto eb = m.encode(tb, build_group_inputs(without, 6), m.exercise_table(tb));
        c.expect(row(ea.xo_tilde, t) == row(eb.xo_tilde, t) && row(ea.zo_tilde, t) == row(eb.zo_tilde, t),
                 "removing an absent member changed the group fusion, trial " + std::to_string(trial));
    }
    c.expect(worst <= 1e-12, "row sum off by " + fmt(worst));
    c.detail = "max |row sum - 1| " + fmt(worst, 2) + ", 200 removal-equivalence trials";
}

double constant_mean_rmse(const Dataset& d, std::size_t folds) {
    const HoldoutSplit split = holdout_split(d, folds);
    double mean = 0.0, se = 0.0;
    std::size_t n = 0, nt = 0;
    for (const auto& g : prepare_groups(d, split.train))
        for (double y : g.group_targets.values()) {
            mean += y;
            ++n;
        }
    mean /= static_cast<double>(n);
    for (const auto& g : prepare_groups(d, split.test))
        for (double y : g.group_targets.values()) {
            se += (y - mean) * (y - mean);
            ++nt;
        }
    return std::sqrt(se / static_cast<double>(nt));
}

// 5. Learning signal on synthetic data against a label-shuffled control.
void learning_signal(Check& c) {
    const auto t0 = Clock::now();
    synth::SynthConfig sc;
    sc.groups = 50;
    sc.students_per_group = 10;
    sc.frames = 8;
    sc.seed = 1;
    const Dataset real = synth::generate(sc).dataset;
    const Dataset control = synth::shuffle_labels(real, 9);
    ModelConfig mc;
    mc.d = 32;
    TrainConfig tc;
    tc.epochs = 30;
    tc.seed = 1;
    const HoldoutRun run = run_holdout(real, mc, tc);
    const HoldoutRun ctl = run_holdout(control, mc, tc);
    const double secs = seconds_since(t0);
    const double baseline = constant_mean_rmse(real, tc.folds);
    const double gap = run.metrics.auc - ctl.metrics.auc;
    c.expect(gap >= 0.15, "AUC gap " + fmt(gap));
    c.expect(run.metrics.rmse <= 0.9 * baseline,
             "group RMSE " + fmt(run.metrics.rmse) + " vs constant-mean " + fmt(baseline));
    c.expect(ctl.metrics.auc >= 0.45 && ctl.metrics.auc <= 0.55, "control AUC " + fmt(ctl.metrics.auc));
    c.expect(secs < 600.0, "took " + fmt(secs) + " s");
    c.detail = "AUC " + fmt(run.metrics.auc) + " vs control " + fmt(ctl.metrics.auc) + ", group RMSE " +
               fmt(run.metrics.rmse) + " vs constant-mean " + fmt(baseline) + ", " + fmt(secs, 3) + " s";
}

// 6. Ingest statistics of the bundled fixture.
void preprocessing(Check& c) {
    const auto records = parse_logs(fixture::logs());
    const LabeledQMatrix q = load_qmatrix(fixture::qmatrix());
    const Dataset d = build_dataset(records, &q);
    const DatasetSummary s = summarize(d);
    c.expect(records.size() == fixture::rows, "fixture has " + std::to_string(records.size()) + " rows");
    c.expect(s.students == fixture::students, "students " + std::to_string(s.students));
    c.expect(s.groups == fixture::groups, "groups " + std::to_string(s.groups));
    c.expect(s.exercises == fixture::exercises, "exercises " + std::to_string(s.exercises));
    c.expect(s.concepts == fixture::concepts, "concepts " + std::to_string(s.concepts));
    c.expect(s.avg_group_size == fixture::avg_group_size, "avg group size " + fmt(s.avg_group_size, 17));
    c.expect(s.avg_responses_per_student == fixture::avg_responses_per_student,
             "avg per student " + fmt(s.avg_responses_per_student, 17));
    c.expect(s.avg_responses_per_group == fixture::avg_responses_per_group,
             "avg per group " + fmt(s.avg_responses_per_group, 17));
    c.expect(s.avg_responses_per_frame == fixture::avg_responses_per_frame,
             "avg per frame " + fmt(s.avg_responses_per_frame, 17));

    std::size_t matched = 0, emitted = 0;
    for (const GroupFrames& gf : d.sequences.groups)
        for (std::size_t f = 0; f < gf.frames(); ++f) emitted += gf.group_interactions[f].size();
    for (const auto& r : fixture::group_rates()) {
        const auto g = EntityCatalog::find(d.catalog.groups, r.group);
        const auto e = EntityCatalog::find(d.catalog.exercises, r.exercise);
        if (!g || !e) continue;
        for (const auto& gi : d.sequences.groups[*g].group_interactions.at(r.frame - 1))
            if (gi.exercise == *e && gi.correct_rate == static_cast<double>(r.numerator) / r.denominator) ++matched;
    }
    c.expect(emitted == fixture::group_rates().size() && matched == emitted,
             "group rates: " + std::to_string(matched) + " of " + std::to_string(emitted) + " match");
    for (const char* gone : {"gC", "gD"})
        c.expect(!EntityCatalog::find(d.catalog.groups, gone), std::string("group ") + gone + " survived the filters");
    c.detail = std::to_string(s.students) + " students, " + std::to_string(s.groups) + " groups, " +
               std::to_string(emitted) + " group rates, avg per frame " + fmt(s.avg_responses_per_frame);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int hkt(const std::vector<std::string>& args, std::string* err = nullptr) {
    std::ostringstream out, e;
    const int code = cli::run(args, out, e);
    if (err) *err = e.str();
    return code;
}

fs::path scratch(const fs::path& root, const std::string& name) {
    const fs::path p = root / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const std::vector<std::string> kRunSettings = {"--set", "d=16", "--set", "epochs=3", "--set", "gcn_layers=1",
                                               "--set", "attn_layers=1"};

// 7. Identical manifest inputs give byte-identical artifacts.
void determinism(Check& c, const fs::path& root, const std::string& data) {
    std::vector<std::string> args = {"--seed", "11", "--out", "", "train", "--data", data};
    args.insert(args.end(), kRunSettings.begin(), kRunSettings.end());
    std::string err;
    args[3] = scratch(root, "run_a").string();
    c.expect(hkt(args, &err) == 0, "first run failed: " + err);
    args[3] = scratch(root, "run_b").string();
    c.expect(hkt(args, &err) == 0, "second run failed: " + err);
    const fs::path replay = scratch(root, "run_replay");
    c.expect(hkt({"--out", replay.string(), "train", "--manifest", (root / "run_a" / "manifest.json").string()}, &err) == 0,
             "manifest replay failed: " + err);
    for (const char* f : {"model.ckpt", "metrics.csv", "epochs.jsonl"}) {
        const std::string a = slurp(root / "run_a" / f);
        c.expect(!a.empty(), std::string(f) + " is empty");
        c.expect(a == slurp(root / "run_b" / f), std::string(f) + " differs between runs");
        c.expect(a == slurp(replay / f), std::string(f) + " differs on manifest replay");
    }
    c.detail = "model.ckpt, metrics.csv and epochs.jsonl identical across two runs and a manifest replay";
}

// 8. Every ablation flag trains and is recorded in the manifest.
void ablations(Check& c, const fs::path& root, const std::string& data) {
    std::string detail;
    for (const std::string flag : {"", "--no-reciprocal", "--no-dyngraph", "--no-attention-agg", "--no-contrastive"}) {
        const std::string name = flag.empty() ? "full" : flag.substr(2);
        std::vector<std::string> args = {"--seed", "11", "--out", scratch(root, "ablation_" + name).string(), "train",
                                         "--data", data};
        if (!flag.empty()) args.push_back(flag);
        args.insert(args.end(), kRunSettings.begin(), kRunSettings.end());
        std::string err;
        if (hkt(args, &err) != 0) {
            c.expect(false, name + " failed: " + err);
            continue;
        }
        const auto m = cli::json::parse(slurp(root / ("ablation_" + name) / "manifest.json"));
        c.expect(m.at("variant") == name, name + " logged variant " + m.at("variant").dump());
        detail += (detail.empty() ? "" : ", ") + name + " AUC " + fmt(m.at("metrics").at("auc").get<double>(), 3);
    }
    c.detail = detail;
}

}  // namespace

int main() {
    const fs::path root = fs::temp_directory_path() / "hkt_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    std::string data;
    {
        std::string err;
        if (hkt({"--seed", "7", "--out", (root / "synth").string(), "synth", "--set", "synth.groups=20"}, &err) != 0) {
            std::cerr << "synthetic fixture failed: " << err;
            return 1;
        }
        data = (root / "synth" / "dataset.hkt").string();
    }

    const std::vector<std::pair<std::string, std::function<void(Check&)>>> checks = {
        {"gradient fidelity", gradient_fidelity},
        {"causality", causality},
        {"oracle equivalence", oracle_equivalence},
        {"softmax invariants", softmax_invariants},
        {"learning signal", learning_signal},
        {"preprocessing fidelity", preprocessing},
        {"determinism", [&](Check& c) { determinism(c, root, data); }},
        {"ablation operability", [&](Check& c) { ablations(c, root, data); }},
    };
    std::size_t failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Check c;
        try {
            checks[i].second(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("threw: ") + e.what());
        }
        const bool ok = c.failures == 0;
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << ' ' << i + 1 << ' ' << checks[i].first << ": " << c.detail << '\n';
        for (const auto& n : c.notes) std::cout << "     " << n << '\n';
        std::cout.flush();
    }
    return failed == 0 ? 0 : 1;
}
