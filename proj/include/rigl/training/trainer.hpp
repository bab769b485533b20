// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include "rigl/metrics/metrics.hpp"
#include "rigl/model/rigl.hpp"
#include "rigl/numerics/adam.hpp"
#include "rigl/training/losses.hpp"
#include "rigl/util/log.hpp"

namespace rigl {

/// A group with its inputs and prediction targets resolved once.
struct PreparedGroup {
    GroupId id = 0;
    const GroupFrames* frames = nullptr;
    GroupInputs inputs;
    Tensor student_targets;  // column of 0/1, one row per inputs.s_targets entry
    Tensor group_targets;    // column of rates, one row per inputs.g_targets entry

    std::size_t size() const { return inputs.members; }
};

inline PreparedGroup prepare_group(const Dataset& d, GroupId g) {
    PreparedGroup p;
    p.id = g;
    p.frames = &d.sequences.groups.at(g);
    p.inputs = build_group_inputs(*p.frames, d.qmatrix.exercises());
    p.student_targets = Tensor(p.inputs.s_targets.size(), 1);
    for (std::size_t k = 0; k < p.inputs.s_targets.size(); ++k)
        p.student_targets[k] = static_cast<double>(p.inputs.s_response[p.inputs.s_targets[k]]);
    p.group_targets = Tensor(p.inputs.g_targets.size(), 1);
    for (std::size_t k = 0; k < p.inputs.g_targets.size(); ++k)
        p.group_targets[k] = p.inputs.g_rate[p.inputs.g_targets[k]];
    return p;
}

inline std::vector<PreparedGroup> prepare_groups(const Dataset& d, const std::vector<GroupId>& ids) {
    std::vector<PreparedGroup> out;
    out.reserve(ids.size());
    for (GroupId g : ids) out.push_back(prepare_group(d, g));
    return out;
}

/// Loss parts of one batch. `total` carries the gradient.
struct BatchObjective {
    Var total;
    double group = 0.0;         // sum of L_grp over the batch
    double student = 0.0;       // sum of L_stu (not divided by |o|)
    double student_scaled = 0.0;  // sum of L_stu / |o|
    double contrastive = 0.0;   // batch L_cl
    bool contrastive_skipped = false;
};

/// Objective of a batch. `augmented` holds the flipped inputs of each group,
/// or is empty when the contrastive term is off.
inline BatchObjective batch_objective(Rigl& model, Tape& tape, const std::vector<const PreparedGroup*>& batch,
                                      const std::vector<GroupInputs>& augmented, const TrainConfig& cfg) {
    BatchObjective out;
    std::vector<Var> terms;
    std::vector<GroupForward> plain;
    for (const PreparedGroup* g : batch) {
        GroupForward f = model.forward(tape, g->inputs);
        Var lg = group_loss(f.group_pred, g->group_targets);
        Var ls = student_loss(f.student_pred, g->student_targets);
        out.group += lg.item();
        out.student += ls.item();
        out.student_scaled += ls.item() / static_cast<double>(g->size());
        terms.push_back(ops::add(lg, ops::scale(ls, 1.0 / static_cast<double>(g->size()))));
        plain.push_back(std::move(f));
    }

    const double gamma = cfg.effective_gamma();
    if (gamma > 0.0 && !augmented.empty()) {
        std::vector<Var> aug_states;
        for (std::size_t b = 0; b < batch.size(); ++b)
            aug_states.push_back(model.forward(tape, augmented[b], Rigl::Options{.predictions = false}).states);
        std::size_t max_frames = 0;
        for (const PreparedGroup* g : batch) max_frames = std::max(max_frames, g->inputs.frames);
        std::vector<Var> cl_terms;
        for (std::size_t t = 1; t < max_frames; ++t) {
            std::vector<Var> h, hp;
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const GroupInputs& in = batch[b]->inputs;
                if (t >= in.frames) continue;
                std::vector<std::size_t> rows(in.members);
                for (std::size_t i = 0; i < in.members; ++i) rows[i] = t * in.nodes() + 1 + i;
                h.push_back(ops::embedding_lookup(plain[b].states, rows));
                hp.push_back(ops::embedding_lookup(aug_states[b], rows));
            }
            Var hs = ops::concat_rows(h), hps = ops::concat_rows(hp);
            if (hs.rows() < 2) {
                out.contrastive_skipped = true;
                continue;
            }
            cl_terms.push_back(contrastive_loss(hs, hps, cfg.tau, cfg.denominator));
        }
        if (out.contrastive_skipped) log::warn("contrastive term skipped for frames with a single student in the batch");
        if (!cl_terms.empty()) {
            Var cl = ops::sum(ops::concat_rows(cl_terms));
            out.contrastive = cl.item();
            terms.push_back(ops::scale(cl, gamma));
        }
    }
    out.total = ops::sum(ops::concat_rows(terms));
    return out;
}

inline metrics::Predictions evaluate(Rigl& model, const std::vector<PreparedGroup>& groups) {
    metrics::Predictions p;
    for (const PreparedGroup& g : groups) {
        Tape tape(false);
        const GroupForward f = model.forward(tape, g.inputs);
        for (std::size_t k = 0; k < g.student_targets.size(); ++k) {
            p.student_scores.push_back(f.student_pred.value()[k]);
            p.student_labels.push_back(static_cast<int>(g.student_targets[k]));
        }
        for (std::size_t k = 0; k < g.group_targets.size(); ++k) {
            p.group_scores.push_back(f.group_pred.value()[k]);
            p.group_targets.push_back(g.group_targets[k]);
        }
    }
    return p;
}

struct EpochRecord {
    std::size_t epoch = 0;
    double group_loss = 0.0;
    double student_loss = 0.0;
    double contrastive_loss = 0.0;
    double total = 0.0;
    double val_auc = std::numeric_limits<double>::quiet_NaN();
    double val_rmse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t kept_epoch = 0;  // epoch whose parameters the model holds
    bool diverged = false;
};

inline std::unique_ptr<ParameterSet> clone(const ParameterSet& params) {
    auto out = std::make_unique<ParameterSet>();
    for (std::size_t i = 0; i < params.size(); ++i) out->add(params[i].name, params[i].value);
    return out;
}

/// Mixes a seed with a stream index (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Trains in place. With a validation set the model ends on the parameters of
/// the best validation epoch (AUC, else lowest RMSE); otherwise on the last epoch.
inline TrainResult train(Rigl& model, const std::vector<PreparedGroup>& train_set, const std::vector<PreparedGroup>& val_set,
                         const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    TrainResult result;
    Adam adam(AdamOptions{.lr = cfg.lr});
    std::mt19937_64 rng(derive_seed(cfg.seed, 1));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    std::unique_ptr<ParameterSet> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_groups) {
            std::vector<const PreparedGroup*> batch;
            std::vector<GroupInputs> augmented;
            for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_groups); ++k) {
                const PreparedGroup& g = train_set[order[k]];
                batch.push_back(&g);
                if (cfg.effective_gamma() > 0.0)
                    augmented.push_back(build_group_inputs(augment_flip(*g.frames, cfg.flip_prob, rng), model.exercises()));
            }
            Tape tape;
            const BatchObjective obj = batch_objective(model, tape, batch, augmented, cfg);
            if (!std::isfinite(obj.total.item())) {
                log::warn("non-finite loss at epoch " + std::to_string(epoch) + "; keeping the last good parameters");
                result.diverged = true;
                break;
            }
            model.params().zero_grad();
            tape.backward(obj.total);
            clip_grad_norm(model.params(), cfg.clip_norm);
            try {
                adam.step(model.params());
            } catch (const std::domain_error&) {
                log::warn("non-finite gradient at epoch " + std::to_string(epoch) + "; keeping the last good parameters");
                result.diverged = true;
                break;
            }
            rec.group_loss += obj.group;
            rec.student_loss += obj.student;
            rec.contrastive_loss += obj.contrastive;
            rec.total += obj.total.item();
        }
        if (result.diverged) break;

        if (!val_set.empty()) {
            const metrics::Predictions p = evaluate(model, val_set);
            double score = -std::numeric_limits<double>::infinity();
            try {
                rec.val_auc = metrics::auc(p.student_scores, p.student_labels);
                score = rec.val_auc;
            } catch (const std::exception&) {
            }
            if (!p.group_scores.empty()) {
                rec.val_rmse = metrics::rmse_mae(p.group_scores, p.group_targets).rmse;
                if (std::isnan(rec.val_auc)) score = -rec.val_rmse;
            }
            if (score > best_score || best == nullptr) {
                best_score = score;
                best = clone(model.params());
                result.kept_epoch = epoch;
            }
        } else {
            result.kept_epoch = epoch;
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    if (best != nullptr) model.params().assign_values(*best);
    return result;
}

/// Fold of each group: groups sorted by size (descending, then id) are dealt round-robin.
inline std::vector<std::size_t> assign_folds(const Dataset& d, std::size_t k) {
    const std::size_t n = d.catalog.groups.size();
    if (k < 2) throw std::invalid_argument("folds must be at least 2");
    if (n < k) throw std::invalid_argument("fewer groups (" + std::to_string(n) + ") than folds (" + std::to_string(k) + ")");
    std::vector<GroupId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](GroupId a, GroupId b) { return d.group_size(a) > d.group_size(b); });
    std::vector<std::size_t> fold(n);
    for (std::size_t r = 0; r < n; ++r) fold[order[r]] = r % k;
    return fold;
}

inline std::vector<GroupId> groups_where(const std::vector<std::size_t>& fold, const std::function<bool(std::size_t)>& keep) {
    std::vector<GroupId> out;
    for (GroupId g = 0; g < fold.size(); ++g)
        if (keep(fold[g])) out.push_back(g);
    return out;
}

/// Single-run split: fold 0 is the test set, fold 1 the validation set used for
/// epoch selection, the remaining folds train.
struct HoldoutSplit {
    std::vector<GroupId> train, validation, test;
};

inline HoldoutSplit holdout_split(const Dataset& d, std::size_t k) {
    if (k < 3) throw std::invalid_argument("a holdout run needs at least 3 folds");
    const auto fold = assign_folds(d, k);
    HoldoutSplit s;
    s.train = groups_where(fold, [](std::size_t f) { return f >= 2; });
    s.validation = groups_where(fold, [](std::size_t f) { return f == 1; });
    s.test = groups_where(fold, [](std::size_t f) { return f == 0; });
    return s;
}

struct HoldoutRun {
    Rigl model;
    TrainResult training;
    metrics::MetricReport metrics;
};

inline HoldoutRun run_holdout(const Dataset& d, const ModelConfig& mcfg, const TrainConfig& tcfg,
                              const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    tcfg.validate();
    const HoldoutSplit split = holdout_split(d, tcfg.folds);
    HoldoutRun run{Rigl(mcfg, d.qmatrix, derive_seed(tcfg.seed, 100)), {}, {}};
    TrainConfig fc = tcfg;
    fc.seed = derive_seed(tcfg.seed, 200);
    run.training = train(run.model, prepare_groups(d, split.train), prepare_groups(d, split.validation), fc, on_epoch);
    run.metrics = metrics::report(evaluate(run.model, prepare_groups(d, split.test)));
    return run;
}

struct FoldReport {
    std::size_t fold = 0;
    metrics::MetricReport metrics;
    TrainResult training;
};

struct CrossValidation {
    std::vector<FoldReport> folds;
    metrics::MetricReport mean;
    metrics::MetricReport stddev;  // sample standard deviation (n - 1)
};

inline std::size_t thread_budget() {
    if (const char* env = std::getenv("HKT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return static_cast<std::size_t>(n);
    }
    return 1;
}

inline void aggregate(CrossValidation& cv) {
    const double n = static_cast<double>(cv.folds.size());
    auto stat = [&](auto get, double& mean, double& sd) {
        double s = 0.0;
        for (const auto& f : cv.folds) s += get(f.metrics);
        mean = s / n;
        double v = 0.0;
        for (const auto& f : cv.folds) v += (get(f.metrics) - mean) * (get(f.metrics) - mean);
        sd = cv.folds.size() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0;
    };
    stat([](const metrics::MetricReport& m) { return m.auc; }, cv.mean.auc, cv.stddev.auc);
    stat([](const metrics::MetricReport& m) { return m.acc; }, cv.mean.acc, cv.stddev.acc);
    stat([](const metrics::MetricReport& m) { return m.rmse; }, cv.mean.rmse, cv.stddev.rmse);
    stat([](const metrics::MetricReport& m) { return m.mae; }, cv.mean.mae, cv.stddev.mae);
}

/// k-fold cross-validation over groups. Each fold owns its model, optimizer and
/// rng; folds run on up to `threads` threads and results do not depend on it.
inline CrossValidation cross_validate(const Dataset& d, const ModelConfig& mcfg, const TrainConfig& tcfg,
                                      std::size_t threads = thread_budget()) {
    tcfg.validate();
    const auto fold = assign_folds(d, tcfg.folds);
    CrossValidation cv;
    cv.folds.resize(tcfg.folds);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t f = next++; f < tcfg.folds; f = next++) {
            try {
                const auto train_set = prepare_groups(d, groups_where(fold, [f](std::size_t x) { return x != f; }));
                const auto test_set = prepare_groups(d, groups_where(fold, [f](std::size_t x) { return x == f; }));
                Rigl model(mcfg, d.qmatrix, derive_seed(tcfg.seed, 100 + f));
                TrainConfig fc = tcfg;
                fc.seed = derive_seed(tcfg.seed, 200 + f);
                FoldReport rep;
                rep.fold = f;
                rep.training = train(model, train_set, {}, fc);
                rep.metrics = metrics::report(evaluate(model, test_set));
                cv.folds[f] = std::move(rep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, tcfg.folds));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    aggregate(cv);
    return cv;
}

}  // namespace rigl
