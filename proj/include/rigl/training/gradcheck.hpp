// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rigl/numerics/gradcheck.hpp"
#include "rigl/synth/generator.hpp"
#include "rigl/training/trainer.hpp"

namespace rigl {

struct ModelGradcheckOptions {
    std::uint64_t seed = 0;
    std::size_t d = 8;
    std::size_t members = 3;
    std::size_t frames = 3;
    std::size_t gcn_layers = 2;
    std::size_t attn_layers = 2;
    std::size_t groups = 2;  // one batch; more than one group exercises cross-group negatives
    double h = 1e-5;
    double tol = 1e-4;
    double floor = 1e-5;  // summed losses near 30 leave central differences ~1e-10 of round-off
    TrainConfig train;  // gamma, tau, flip_prob and denominator are taken from here
};

/// Full objective (group, student and contrastive terms) of one batch of small
/// synthetic groups, with the flip augmentation drawn once and held fixed so
/// every forward evaluation sees the same function. Steps that cross a relu or
/// clamp kink are skipped and counted.
inline GradCheckResult model_gradcheck(const ModelGradcheckOptions& o) {
    synth::SynthConfig sc;
    sc.groups = o.groups;
    sc.students_per_group = o.members;
    sc.frames = o.frames;
    sc.exercises = 6;
    sc.concepts = 3;
    sc.shared_per_frame = 2;
    sc.individual_per_frame = 1;
    sc.seed = derive_seed(o.seed, 1);
    const synth::SynthOutput data = synth::generate(sc);

    ModelConfig mc;
    mc.d = o.d;
    mc.gcn_layers = o.gcn_layers;
    mc.attn_layers = o.attn_layers;
    Rigl model(mc, data.dataset.qmatrix, derive_seed(o.seed, 2));
    // Biases start at zero, which puts isolated absent nodes exactly on a ReLU
    // kink; jitter every parameter so the check runs at a generic point.
    std::mt19937_64 jitter(derive_seed(o.seed, 4));
    std::uniform_real_distribution<double> noise(-0.1, 0.1);
    for (std::size_t p = 0; p < model.params().size(); ++p)
        for (double& v : model.params()[p].value.values()) v += noise(jitter);

    std::vector<GroupId> ids(data.dataset.sequences.groups.size());
    for (GroupId g = 0; g < ids.size(); ++g) ids[g] = g;
    const std::vector<PreparedGroup> groups = prepare_groups(data.dataset, ids);
    std::vector<const PreparedGroup*> batch;
    for (const auto& g : groups) batch.push_back(&g);

    std::mt19937_64 rng(derive_seed(o.seed, 3));
    std::vector<GroupInputs> augmented;
    if (o.train.effective_gamma() > 0.0)
        for (const auto& g : groups)
            augmented.push_back(build_group_inputs(augment_flip(*g.frames, o.train.flip_prob, rng), model.exercises()));

    Tape tape;
    const BatchObjective obj = batch_objective(model, tape, batch, augmented, o.train);
    model.params().zero_grad();
    tape.backward(obj.total);
    std::vector<Tensor> analytic;
    for (std::size_t p = 0; p < model.params().size(); ++p) analytic.push_back(model.params()[p].grad);

    auto loss = [&] {
        Tape t(false);
        return batch_objective(model, t, batch, augmented, o.train).total.item();
    };
    return check_gradients(model.params(), analytic, loss, o.h, o.tol, o.floor, true);
}

}  // namespace rigl
