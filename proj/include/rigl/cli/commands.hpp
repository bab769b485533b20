// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rigl/cli/settings.hpp"
#include "rigl/domain/archive.hpp"
#include "rigl/domain/log_parser.hpp"
#include "rigl/domain/preprocess.hpp"
#include "rigl/domain/qmatrix_io.hpp"
#include "rigl/domain/summary.hpp"
#include "rigl/numerics/checkpoint.hpp"
#include "rigl/synth/generator.hpp"
#include "rigl/training/gradcheck.hpp"
#include "rigl/training/trainer.hpp"

namespace rigl::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Global {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
};

struct Ablations {
    bool no_reciprocal = false;
    bool no_dyngraph = false;
    bool no_attention_agg = false;
    bool no_contrastive = false;

    void apply(Settings& s) const {
        if (no_reciprocal) s.model.reciprocal = false;
        if (no_dyngraph) s.model.dynamic_graph = false;
        if (no_attention_agg) s.model.attention_agg = false;
        if (no_contrastive) s.train.contrastive = false;
    }
};

/// Names of the switched-off modules, derived from the settings themselves.
inline std::vector<std::string> ablation_names(const Settings& s) {
    std::vector<std::string> out;
    if (!s.model.reciprocal) out.push_back("no-reciprocal");
    if (!s.model.dynamic_graph) out.push_back("no-dyngraph");
    if (!s.model.attention_agg) out.push_back("no-attention-agg");
    if (!s.train.contrastive) out.push_back("no-contrastive");
    return out;
}

inline std::string variant_name(const Settings& s) {
    const auto names = ablation_names(s);
    return names.empty() ? "full" : text::join(names, "+");
}

/// Defaults, then the config file, then --seed, then `--set key=value` overrides.
inline Settings resolve_settings(const Global& g, const std::vector<std::string>& overrides = {}) {
    Settings s;
    if (!g.config.empty()) apply_file(s, g.config);
    if (g.seed) s.seed = *g.seed;
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        set(s, std::string(text::trim(kv.substr(0, eq))), std::string(text::trim(kv.substr(eq + 1))));
    }
    return s;
}

inline void validate(const Settings& s) {
    try {
        s.model.validate();
        s.train.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid configuration: ") + e.what());
    }
}

inline fs::path out_dir(const Global& g) {
    fs::path p(g.out);
    fs::create_directories(p);
    return p;
}

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << content;
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json settings_json(const Settings& s) {
    json j = json::object();
    for (const auto& [k, v] : snapshot(s)) j[k] = v;
    return j;
}

inline Settings settings_from_json(const json& j) {
    Settings s;
    for (const auto& [k, v] : j.items()) set(s, k, v.get<std::string>());
    return s;
}

inline json metrics_json(const metrics::MetricReport& m) {
    return json{{"auc", m.auc}, {"acc", m.acc}, {"rmse", m.rmse}, {"mae", m.mae},
                {"student_predictions", m.student_predictions}, {"group_predictions", m.group_predictions}};
}

inline json epoch_json(const EpochRecord& r, double gamma, std::optional<std::size_t> fold) {
    json j;
    if (fold) j["fold"] = *fold;
    j["epoch"] = r.epoch;
    j["group_loss"] = r.group_loss;
    j["student_loss"] = r.student_loss;
    j["contrastive_loss"] = r.contrastive_loss;
    j["contrastive_term"] = gamma * r.contrastive_loss;
    j["total"] = r.total;
    j["val_auc"] = std::isnan(r.val_auc) ? json(nullptr) : json(r.val_auc);
    j["val_rmse"] = std::isnan(r.val_rmse) ? json(nullptr) : json(r.val_rmse);
    return j;
}

inline std::string summary_text(const Dataset& d) {
    std::ostringstream os;
    print_summary(os, summarize(d));
    return os.str();
}

// ingest

struct IngestArgs {
    std::string logs;
    std::string qmatrix;
    std::vector<std::string> overrides;
};

inline int cmd_ingest(const Global& g, const IngestArgs& a, std::ostream& out) {
    const Settings s = resolve_settings(g, a.overrides);
    LabeledQMatrix q;
    std::vector<RawRecord> records;
    Dataset d;
    try {
        q = load_qmatrix(a.qmatrix);
    } catch (const std::exception& e) {
        throw std::runtime_error(a.qmatrix + ": " + e.what());
    }
    try {
        records = parse_logs(a.logs);
    } catch (const std::exception& e) {
        throw std::runtime_error(a.logs + ": " + e.what());
    }
    try {
        d = build_dataset(records, &q, s.build);
    } catch (const std::exception& e) {
        throw std::runtime_error(a.logs + ": " + e.what());
    }
    const fs::path dir = out_dir(g);
    archive::save((dir / "dataset.hkt").string(), d);
    const std::string summary = summary_text(d);
    write_file(dir / "summary.txt", summary);
    out << summary << "fingerprint " << archive::fingerprint(d) << '\n';
    return kExitOk;
}

// synth

struct SynthArgs {
    std::vector<std::string> overrides;
};

inline int cmd_synth(const Global& g, const SynthArgs& a, std::ostream& out) {
    Settings s = resolve_settings(g, a.overrides);
    synth::SynthConfig sc = s.synth;
    sc.seed = s.seed;
    sc.span = s.build.span;
    sc.coverage = s.build.coverage;
    synth::SynthOutput data;
    try {
        data = synth::generate(sc);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const fs::path dir = out_dir(g);
    archive::save((dir / "dataset.hkt").string(), data.dataset);
    {
        std::ofstream f(dir / "logs.csv");
        write_logs(f, data.records);
    }
    {
        std::ofstream f(dir / "qmatrix.csv");
        write_qmatrix(f, data.qmatrix);
    }
    {
        std::ofstream f(dir / "truth.csv");
        synth::write_truth(f, data);
    }
    const std::string summary = summary_text(data.dataset);
    write_file(dir / "summary.txt", summary);
    out << summary << "fingerprint " << archive::fingerprint(data.dataset) << '\n';
    return kExitOk;
}

// train

struct TrainArgs {
    std::string data;
    std::string manifest;
    std::optional<std::size_t> folds;  // given: cross-validate over this many folds
    Ablations ablations;
    std::vector<std::string> overrides;
};

inline std::string fold_table(const CrossValidation& cv) {
    std::string s = "fold," + std::string(metrics::kReportHeader) + "\n";
    for (const auto& f : cv.folds) s += std::to_string(f.fold + 1) + "," + metrics::report_row(f.metrics) + "\n";
    s += "mean," + metrics::report_row(cv.mean) + "\n";
    s += "std," + metrics::report_row(cv.stddev) + "\n";
    return s;
}

inline int cmd_train(const Global& g, const TrainArgs& a, std::ostream& out) {
    Settings s;
    std::string data_path = a.data;
    bool cv_mode = a.folds.has_value();
    std::string expected_fingerprint;
    if (!a.manifest.empty()) {
        if (!a.data.empty() || a.folds || !g.config.empty() || g.seed || !a.overrides.empty() ||
            a.ablations.no_reciprocal || a.ablations.no_dyngraph || a.ablations.no_attention_agg ||
            a.ablations.no_contrastive) {
            throw UsageError("--manifest replays a run as recorded; only --out may be combined with it");
        }
        std::ifstream f(a.manifest);
        if (!f) throw UsageError("cannot open manifest '" + a.manifest + "'");
        json m;
        try {
            m = json::parse(f);
            s = settings_from_json(m.at("settings"));
            data_path = m.at("dataset").get<std::string>();
            expected_fingerprint = m.at("dataset_fingerprint").get<std::string>();
            cv_mode = m.at("mode").get<std::string>() == "cv";
        } catch (const json::exception& e) {
            throw std::runtime_error(a.manifest + ": malformed manifest: " + e.what());
        }
    } else {
        if (a.data.empty()) throw UsageError("train needs --data or --manifest");
        s = resolve_settings(g, a.overrides);
        a.ablations.apply(s);
        if (a.folds) s.train.folds = *a.folds;
    }
    validate(s);
    s.train.seed = s.seed;

    const Dataset d = archive::load(data_path);
    const std::string fingerprint = archive::fingerprint(d);
    if (!expected_fingerprint.empty() && expected_fingerprint != fingerprint) {
        throw std::runtime_error("dataset '" + data_path + "' changed since the manifest was written (fingerprint " +
                                 fingerprint + ", expected " + expected_fingerprint + ")");
    }

    const fs::path dir = out_dir(g);
    json manifest;
    manifest["command"] = "train";
    manifest["mode"] = cv_mode ? "cv" : "holdout";
    manifest["seed"] = s.seed;
    manifest["variant"] = variant_name(s);
    manifest["ablations"] = ablation_names(s);
    manifest["dataset"] = fs::absolute(data_path).string();
    manifest["dataset_fingerprint"] = fingerprint;
    manifest["settings"] = settings_json(s);
    manifest["started_at"] = utc_now();

    const double gamma = s.train.effective_gamma();
    std::ofstream epochs(dir / "epochs.jsonl", std::ios::binary);
    if (cv_mode) {
        const CrossValidation cv = cross_validate(d, s.model, s.train);
        for (const auto& f : cv.folds)
            for (const auto& r : f.training.history) epochs << epoch_json(r, gamma, f.fold + 1).dump() << '\n';
        const std::string table = fold_table(cv);
        write_file(dir / "folds.csv", table);
        manifest["fold_report"] = (dir / "folds.csv").string();
        manifest["metrics"] = metrics_json(cv.mean);
        out << table;
    } else {
        HoldoutRun run = run_holdout(d, s.model, s.train, [&](const EpochRecord& r) {
            epochs << epoch_json(r, gamma, std::nullopt).dump() << '\n';
            epochs.flush();
        });
        checkpoint::save((dir / "model.ckpt").string(), run.model.params(), to_text(s));
        const std::string report = std::string(metrics::kReportHeader) + "\n" + metrics::report_row(run.metrics) + "\n";
        write_file(dir / "metrics.csv", report);
        manifest["checkpoint"] = (dir / "model.ckpt").string();
        manifest["metric_report"] = (dir / "metrics.csv").string();
        manifest["kept_epoch"] = run.training.kept_epoch;
        manifest["diverged"] = run.training.diverged;
        manifest["metrics"] = metrics_json(run.metrics);
        out << report;
    }
    manifest["epoch_log"] = (dir / "epochs.jsonl").string();
    manifest["finished_at"] = utc_now();
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
}

// Commands that read a trained checkpoint.

struct Loaded {
    Settings settings;
    Dataset dataset;
    Rigl model;
};

inline Loaded load_trained(const std::string& ckpt_path, const std::string& data_path) {
    checkpoint::Contents c = checkpoint::load(ckpt_path);
    Settings s;
    std::istringstream meta(c.meta);
    apply_text(s, meta, ckpt_path);
    Dataset d = archive::load(data_path);
    Rigl model(s.model, d.qmatrix, 0);
    checkpoint::restore(model.params(), c.tensors);
    return {std::move(s), std::move(d), std::move(model)};
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
};

inline int cmd_eval(const Global&, const EvalArgs& a, std::ostream& out) {
    Loaded l = load_trained(a.checkpoint, a.data);
    std::vector<GroupId> ids;
    if (a.split == "all") {
        for (GroupId gid = 0; gid < l.dataset.sequences.groups.size(); ++gid) ids.push_back(gid);
    } else {
        const HoldoutSplit split = holdout_split(l.dataset, l.settings.train.folds);
        if (a.split == "test") ids = split.test;
        else if (a.split == "validation") ids = split.validation;
        else if (a.split == "train") ids = split.train;
        else throw UsageError("unknown split '" + a.split + "' (test, validation, train, all)");
    }
    const auto report = metrics::report(evaluate(l.model, prepare_groups(l.dataset, ids)));
    out << metrics::kReportHeader << '\n' << metrics::report_row(report) << '\n';
    return kExitOk;
}

struct TraceArgs {
    std::string checkpoint;
    std::string data;
    std::string student;
    std::string concepts;  // comma-separated labels; empty means all
};

inline int cmd_trace(const Global&, const TraceArgs& a, std::ostream& out) {
    Loaded l = load_trained(a.checkpoint, a.data);
    const EntityCatalog& cat = l.dataset.catalog;
    const auto sid = EntityCatalog::find(cat.students, a.student);
    if (!sid) throw std::runtime_error("unknown student '" + a.student + "'");
    std::vector<ConceptId> concepts;
    if (a.concepts.empty()) {
        for (ConceptId c = 0; c < cat.concepts.size(); ++c) concepts.push_back(c);
    } else {
        for (const auto& label : text::split(a.concepts, ',')) {
            const auto c = EntityCatalog::find(cat.concepts, std::string(text::trim(label)));
            if (!c) throw std::runtime_error("unknown concept '" + label + "'");
            concepts.push_back(*c);
        }
    }
    const GroupId gid = cat.student_group.at(*sid);
    const std::size_t member = cat.member_index(*sid);
    const GroupInputs in = build_group_inputs(l.dataset.sequences.groups.at(gid), l.model.exercises());
    Tape tape(false);
    const Tensor states = l.model.forward(tape, in, Rigl::Options{.predictions = false}).states.value();
    Tensor own(in.frames, states.cols()), grp(in.frames, states.cols());
    for (std::size_t t = 0; t < in.frames; ++t)
        for (std::size_t c = 0; c < states.cols(); ++c) {
            own(t, c) = states(t * in.nodes() + 1 + member, c);
            grp(t, c) = states(t * in.nodes(), c);
        }
    out << "frame,concept,individual,group\n";
    for (ConceptId c : concepts) {
        const auto ind = l.model.trace_concept_proficiency(own, c, "readout_s");
        const auto col = l.model.trace_concept_proficiency(grp, c, "readout_o");
        for (std::size_t t = 0; t < in.frames; ++t)
            out << t + 1 << ',' << cat.concepts[c] << ',' << text::format_double(ind[t]) << ','
                << text::format_double(col[t]) << '\n';
    }
    return kExitOk;
}

struct GraphArgs {
    std::string checkpoint;
    std::string data;
    std::string group;
    std::string nodes;  // optional path for the node feature table
};

inline int cmd_graph(const Global&, const GraphArgs& a, std::ostream& out) {
    Loaded l = load_trained(a.checkpoint, a.data);
    const EntityCatalog& cat = l.dataset.catalog;
    const auto gid = EntityCatalog::find(cat.groups, a.group);
    if (!gid) throw std::runtime_error("unknown group '" + a.group + "'");
    const auto& members = cat.membership.at(*gid);
    const GroupInputs in = build_group_inputs(l.dataset.sequences.groups.at(*gid), l.model.exercises());
    Tape tape(false);
    const GroupForward f = l.model.forward(tape, in, Rigl::Options{.snapshots = true, .predictions = false});
    auto label = [&](std::size_t node) { return node == 0 ? cat.groups[*gid] : cat.students[members[node - 1]]; };

    out << "frame,src,dst,weight,selected\n";
    for (std::size_t t = 0; t < f.snapshots.size(); ++t) {
        const GraphSnapshot& s = f.snapshots[t];
        for (std::size_t i = 0; i < members.size(); ++i)
            if (s.present[i]) out << t + 1 << ',' << label(0) << ',' << label(i + 1) << ",1,1\n";
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j)
                out << t + 1 << ',' << label(i + 1) << ',' << label(j + 1) << ',' << text::format_double(s.relation(i, j))
                    << ',' << (s.adjacency(i + 1, j + 1) != 0.0 ? 1 : 0) << '\n';
    }
    if (!a.nodes.empty()) {
        std::ofstream nf(a.nodes);
        if (!nf) throw std::runtime_error("cannot write '" + a.nodes + "'");
        nf << "frame,node";
        for (std::size_t c = 0; c < f.snapshots.front().features.cols(); ++c) nf << ",f" << c;
        nf << '\n';
        for (std::size_t t = 0; t < f.snapshots.size(); ++t)
            for (std::size_t r = 0; r < f.snapshots[t].features.rows(); ++r) {
                nf << t + 1 << ',' << label(r);
                for (std::size_t c = 0; c < f.snapshots[t].features.cols(); ++c)
                    nf << ',' << text::format_double(f.snapshots[t].features(r, c));
                nf << '\n';
            }
    }
    return kExitOk;
}

struct GradcheckArgs {
    std::size_t d = 8;
    std::size_t members = 3;
    std::size_t frames = 3;
    std::size_t gcn_layers = 2;
    std::size_t attn_layers = 2;
    std::vector<std::string> overrides;
};

inline int cmd_gradcheck(const Global& g, const GradcheckArgs& a, std::ostream& out) {
    const Settings s = resolve_settings(g, a.overrides);
    validate(s);
    ModelGradcheckOptions o;
    o.seed = s.seed;
    o.d = a.d;
    o.members = a.members;
    o.frames = a.frames;
    o.gcn_layers = a.gcn_layers;
    o.attn_layers = a.attn_layers;
    o.train = s.train;
    const auto t0 = std::chrono::steady_clock::now();
    const GradCheckResult r = model_gradcheck(o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "checked " << r.checked << " skipped " << r.skipped << " max_rel_error " << r.max_rel_error << " seconds "
        << secs << '\n';
    for (const auto& f : r.failures)
        out << "mismatch " << f.parameter << '[' << f.index << "] analytic " << text::format_double(f.analytic)
            << " numeric " << text::format_double(f.numeric) << '\n';
    out << (r.failures.empty() ? "PASS" : "FAIL") << '\n';
    return r.failures.empty() ? kExitOk : kExitRuntime;
}

/// Parses `args` (without the program name), runs one subcommand and returns
/// the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app("Holistic knowledge tracing: ingest group learning logs, train and inspect the model.", "hkt");
    app.require_subcommand(1);
    Global g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config, "key = value settings file");
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    app.add_option("--out", g.out, "output directory")->capture_default_str();

    auto add_set = [](CLI::App* sub, std::vector<std::string>& target) {
        sub->add_option("--set", target, "override one setting, key=value (repeatable)");
    };

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "build a dataset archive from raw logs and a Q-matrix");
    c_ingest->add_option("--logs", ingest.logs, "interaction log CSV")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--qmatrix", ingest.qmatrix, "Q-matrix CSV")->required()->check(CLI::ExistingFile);
    add_set(c_ingest, ingest.overrides);

    SynthArgs synth_args;
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset with ground-truth abilities");
    add_set(c_synth, synth_args.overrides);

    TrainArgs train_args;
    std::size_t folds = 0;
    auto* c_train = app.add_subcommand("train", "train on a dataset archive (holdout, or k-fold with --folds)");
    c_train->add_option("--data", train_args.data, "dataset archive")->check(CLI::ExistingFile);
    c_train->add_option("--manifest", train_args.manifest, "replay the run recorded in this manifest")
        ->check(CLI::ExistingFile);
    auto* folds_opt = c_train->add_option("--folds", folds, "cross-validate over k folds")->check(CLI::Range(2, 1000));
    c_train->add_flag("--no-reciprocal", train_args.ablations.no_reciprocal, "disable reciprocal fusion");
    c_train->add_flag("--no-dyngraph", train_args.ablations.no_dyngraph, "drop similarity edges between students");
    c_train->add_flag("--no-attention-agg", train_args.ablations.no_attention_agg, "uniform member weights");
    c_train->add_flag("--no-contrastive", train_args.ablations.no_contrastive, "drop the contrastive term");
    add_set(c_train, train_args.overrides);

    EvalArgs eval_args;
    auto* c_eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
    c_eval->add_option("--checkpoint", eval_args.checkpoint)->required()->check(CLI::ExistingFile);
    c_eval->add_option("--data", eval_args.data)->required()->check(CLI::ExistingFile);
    c_eval->add_option("--split", eval_args.split, "test, validation, train or all")->capture_default_str();

    TraceArgs trace_args;
    auto* c_trace = app.add_subcommand("trace", "per-frame concept mastery of a student and their group");
    c_trace->add_option("--checkpoint", trace_args.checkpoint)->required()->check(CLI::ExistingFile);
    c_trace->add_option("--data", trace_args.data)->required()->check(CLI::ExistingFile);
    c_trace->add_option("--student", trace_args.student)->required();
    c_trace->add_option("--concepts", trace_args.concepts, "comma-separated concept labels (default all)");

    GraphArgs graph_args;
    auto* c_graph = app.add_subcommand("graph", "export a group's per-frame relation graph");
    c_graph->add_option("--checkpoint", graph_args.checkpoint)->required()->check(CLI::ExistingFile);
    c_graph->add_option("--data", graph_args.data)->required()->check(CLI::ExistingFile);
    c_graph->add_option("--group", graph_args.group)->required();
    c_graph->add_option("--nodes", graph_args.nodes, "also write node features to this file");

    GradcheckArgs gc_args;
    auto* c_gc = app.add_subcommand("gradcheck", "finite-difference check of every model gradient");
    c_gc->add_option("--d", gc_args.d)->capture_default_str();
    c_gc->add_option("--members", gc_args.members)->capture_default_str();
    c_gc->add_option("--frames", gc_args.frames)->capture_default_str();
    c_gc->add_option("--gcn-layers", gc_args.gcn_layers)->capture_default_str();
    c_gc->add_option("--attn-layers", gc_args.attn_layers)->capture_default_str();
    add_set(c_gc, gc_args.overrides);

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "hkt: " << e.what() << '\n';
        return kExitUsage;
    }
    if (*seed_opt) g.seed = seed;
    if (*folds_opt) train_args.folds = folds;

    try {
        if (*c_ingest) return cmd_ingest(g, ingest, out);
        if (*c_synth) return cmd_synth(g, synth_args, out);
        if (*c_train) return cmd_train(g, train_args, out);
        if (*c_eval) return cmd_eval(g, eval_args, out);
        if (*c_trace) return cmd_trace(g, trace_args, out);
        if (*c_graph) return cmd_graph(g, graph_args, out);
        if (*c_gc) return cmd_gradcheck(g, gc_args, out);
    } catch (const UsageError& e) {
        err << "hkt: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "hkt: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace rigl::cli
