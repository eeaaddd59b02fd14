#include "vrg/model.hpp"

#include "vrg/errors.hpp"

namespace vrg {

Model Model::build(const EmbeddingBundle& bundle, const ModelConfig& cfg) {
    cfg.validate();
    bundle.validate();

    Model m;
    m.cfg_ = cfg;
    m.C_ = bundle.C;
    m.D_text_ = bundle.D_text;
    m.gauss_ = estimate_class_gaussians(bundle.text_desc);
    m.graph_ = build_adjacency(m.gauss_.mu, cfg.clamp_negative_edges);
    m.adapter_ = AdapterParams::init(bundle.D_text, cfg.adapter, cfg.seed);
    if (cfg.use_aux) m.bank_ = build_prototypes(bundle);
    return m;
}

Model Model::restore(const EmbeddingBundle& bundle, const Checkpoint& ckpt) {
    ckpt.validate();
    if (ckpt.C != bundle.C || ckpt.D_text != bundle.D_text) {
        throw DataError("restore: checkpoint trained for C=" + std::to_string(ckpt.C) +
                        ", D_text=" + std::to_string(ckpt.D_text) + " but bundle has C=" +
                        std::to_string(bundle.C) + ", D_text=" + std::to_string(bundle.D_text));
    }

    Model m = build(bundle, ckpt.config);
    for (std::size_t l = 0; l < m.adapter_.layer_count(); ++l) {
        m.adapter_.theta_mu[l].value = ckpt.theta_mu[l];
        m.adapter_.theta_var[l].value = ckpt.theta_var[l];
    }
    if (ckpt.config.use_aux) {
        if (ckpt.aux_names != m.bank_.names) {
            throw DataError("restore: checkpoint auxiliary branches do not match the bundle");
        }
        for (std::size_t k = 0; k < m.bank_.residuals.size(); ++k) {
            if (!m.bank_.residuals[k].value.same_shape(ckpt.w_delta[k])) {
                throw DataError("restore: residual shape mismatch for branch " +
                                m.bank_.names[k]);
            }
            m.bank_.residuals[k].value = ckpt.w_delta[k];
            m.bank_.residuals[k].zero_grad();
        }
    }
    return m;
}

Model::Batch Model::gather(const EmbeddingBundle& bundle, const std::string& split_name,
                           std::span<const std::size_t> indices) {
    const SplitData& split = bundle.split(split_name);
    Batch batch;
    batch.labels.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= split.size()) throw DataError("gather: index out of range");
        batch.labels.push_back(split.labels[idx]);
    }
    for (std::size_t k = 0; k < bundle.branches.size(); ++k) {
        const Tensor& src = split.features[k];
        const std::size_t dim = bundle.branches[k].dim;
        Tensor f({indices.size(), dim});
        for (std::size_t r = 0; r < indices.size(); ++r) {
            for (std::size_t d = 0; d < dim; ++d) f(r, d) = src(indices[r], d);
        }
        batch.features.push_back(std::move(f));
    }
    return batch;
}

Model::ForwardValues Model::loss_on_batch(Tape& t, const Batch& batch, const SampleKey& key) {
    const Tape::ValueId w_t = adapter_forward(t, gauss_, graph_, adapter_, key);
    const Tape::ValueId p_zs =
        zero_shot_logits(t, t.leaf(batch.features[0]), w_t, cfg_.branch);

    std::vector<Tape::ValueId> p_aux;
    if (cfg_.use_aux) {
        if (batch.features.size() != bank_.branch_count() + 1) {
            throw DimensionError("loss_on_batch: batch carries " +
                                 std::to_string(batch.features.size()) + " branches, model wants " +
                                 std::to_string(bank_.branch_count() + 1));
        }
        for (std::size_t k = 0; k < bank_.branch_count(); ++k) {
            p_aux.push_back(aux_logits(t, t.leaf(batch.features[k + 1]), bank_.prototypes[k],
                                       bank_.residuals[k]));
        }
    }

    const Tape::ValueId fused = fuse(t, p_zs, p_aux, cfg_.fusion);
    const Tape::ValueId loss = t.softmax_cross_entropy(fused, batch.labels);
    return {loss, fused};
}

Tensor Model::fused_logits(const Batch& batch, const SampleKey& key) {
    Tape t;
    const Tape::ValueId w_t = adapter_forward(t, gauss_, graph_, adapter_, key);
    const Tape::ValueId p_zs =
        zero_shot_logits(t, t.leaf(batch.features[0]), w_t, cfg_.branch);
    std::vector<Tape::ValueId> p_aux;
    if (cfg_.use_aux) {
        for (std::size_t k = 0; k < bank_.branch_count(); ++k) {
            p_aux.push_back(aux_logits(t, t.leaf(batch.features[k + 1]), bank_.prototypes[k],
                                       bank_.residuals[k]));
        }
    }
    return t.value(fuse(t, p_zs, p_aux, cfg_.fusion));
}

std::vector<Param*> Model::learnables() {
    std::vector<Param*> out = adapter_.learnables();
    for (Param* p : bank_.learnables()) out.push_back(p);
    return out;
}

Checkpoint Model::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.C = C_;
    ckpt.D_text = D_text_;
    ckpt.config = cfg_;
    for (const Param& p : adapter_.theta_mu) ckpt.theta_mu.push_back(p.value);
    for (const Param& p : adapter_.theta_var) ckpt.theta_var.push_back(p.value);
    for (const Param& p : bank_.residuals) ckpt.w_delta.push_back(p.value);
    ckpt.aux_names = bank_.names;
    return ckpt;
}

} // namespace vrg
