#include "vrg/branches.hpp"

#include "vrg/errors.hpp"

namespace vrg {

void BranchConfig::validate() const {
    if (logit_scale <= 0.0) throw ConfigError("branches: logit_scale must be > 0");
}

std::vector<Param*> BranchBank::learnables() {
    std::vector<Param*> out;
    for (Param& p : residuals) out.push_back(&p);
    return out;
}

Tensor class_mean_prototypes(const Tensor& features, const std::vector<std::int32_t>& labels,
                             std::size_t C) {
    if (features.rank() != 2 || features.dim(0) != labels.size()) {
        throw DimensionError("class_mean_prototypes: features " +
                             shape_to_string(features.shape()) + " vs " +
                             std::to_string(labels.size()) + " labels");
    }
    const std::size_t D = features.dim(1);
    Tensor proto({C, D});
    std::vector<std::size_t> counts(C, 0);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const std::int32_t y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= C) {
            throw DataError("class_mean_prototypes: label " + std::to_string(y) + " out of range");
        }
        ++counts[static_cast<std::size_t>(y)];
        for (std::size_t d = 0; d < D; ++d) proto(static_cast<std::size_t>(y), d) += features(r, d);
    }
    for (std::size_t i = 0; i < C; ++i) {
        if (counts[i] == 0) {
            throw DataError("class_mean_prototypes: class " + std::to_string(i) + " has no samples");
        }
        for (std::size_t d = 0; d < D; ++d) proto(i, d) /= static_cast<double>(counts[i]);
    }
    require_finite(proto, "class_mean_prototypes");
    return proto;
}

Tensor class_mean_prototypes(const Tensor& grouped) {
    if (grouped.rank() != 3) {
        throw DimensionError("class_mean_prototypes: expected [C x N x D], got " +
                             shape_to_string(grouped.shape()));
    }
    const std::size_t C = grouped.dim(0), N = grouped.dim(1), D = grouped.dim(2);
    if (N < 1) throw DataError("class_mean_prototypes: N must be >= 1");
    Tensor proto({C, D});
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t d = 0; d < D; ++d) {
            double acc = 0.0;
            for (std::size_t n = 0; n < N; ++n) acc += grouped(i, n, d);
            proto(i, d) = acc / static_cast<double>(N);
        }
    }
    require_finite(proto, "class_mean_prototypes");
    return proto;
}

BranchBank build_prototypes(const EmbeddingBundle& bundle) {
    const SplitData& train = bundle.split("train");
    BranchBank bank;
    for (std::size_t k = 1; k < bundle.branches.size(); ++k) {
        const std::string& name = bundle.branches[k].name;
        bank.prototypes.push_back(class_mean_prototypes(train.features[k], train.labels, bundle.C));
        bank.residuals.emplace_back(Tensor({bundle.C, bundle.branches[k].dim}), "w_delta_" + name);
        bank.names.push_back(name);
    }
    return bank;
}

Tape::ValueId zero_shot_logits(Tape& t, Tape::ValueId features, Tape::ValueId prototypes,
                               const BranchConfig& cfg) {
    cfg.validate();
    Tape::ValueId f = features, w = prototypes;
    if (cfg.normalize_zero_shot) {
        f = t.row_l2_normalize(f);
        w = t.row_l2_normalize(w);
    }
    Tape::ValueId p = t.matmul_nt(f, w);
    if (cfg.logit_scale != 1.0) p = t.scale(p, cfg.logit_scale);
    return p;
}

Tape::ValueId aux_logits(Tape& t, Tape::ValueId features, const Tensor& proto, Param& delta) {
    if (!proto.same_shape(delta.value)) {
        throw DimensionError("aux_logits: prototype and residual shapes disagree");
    }
    return t.matmul_nt(features, t.add(t.leaf(proto), t.param(delta)));
}

} // namespace vrg
