#include "vrg/fusion.hpp"

#include "vrg/errors.hpp"

namespace vrg {

void FusionConfig::validate() const {
    if (lambda <= 0.0) throw ConfigError("fusion: lambda must be > 0");
    if (beta < 0.0) throw ConfigError("fusion: beta must be >= 0");
    if (sigma_floor <= 0.0) throw ConfigError("fusion: sigma_floor must be > 0");
}

double kurtosis_weight(const Tensor& logits, double lambda, double sigma_floor) {
    if (logits.rank() != 1 || logits.size() < 2) {
        throw DimensionError("kurtosis_weight: expected a row of >= 2 logits, got " +
                             shape_to_string(logits.shape()));
    }
    Tape t;
    const Tape::ValueId row = t.leaf(Tensor({1, logits.size()}, {logits.span().begin(),
                                                                 logits.span().end()}));
    return t.value(t.kurtosis_rows(row, lambda, sigma_floor))[0];
}

Tape::ValueId fuse(Tape& t, Tape::ValueId p_zs, const std::vector<Tape::ValueId>& p_aux,
                   const FusionConfig& cfg) {
    cfg.validate();
    const Tensor& zs = t.value(p_zs);
    for (Tape::ValueId a : p_aux) {
        if (!t.value(a).same_shape(zs)) {
            throw DimensionError("fuse: branch logit shapes disagree: " +
                                 shape_to_string(t.value(a).shape()) + " vs " +
                                 shape_to_string(zs.shape()));
        }
    }

    if (cfg.mode == FusionConfig::Mode::average) {
        Tape::ValueId acc = p_zs;
        for (Tape::ValueId a : p_aux) acc = t.add(acc, a);
        return t.scale(acc, 1.0 / static_cast<double>(1 + p_aux.size()));
    }

    Tape::ValueId fused =
        t.row_scale(p_zs, t.kurtosis_rows(p_zs, cfg.lambda, cfg.sigma_floor, cfg.detach_kappa));
    if (!p_aux.empty()) {
        Tape::ValueId bias = -1;
        for (Tape::ValueId a : p_aux) {
            const Tape::ValueId weighted =
                t.row_scale(a, t.kurtosis_rows(a, cfg.lambda, cfg.sigma_floor, cfg.detach_kappa));
            bias = bias < 0 ? weighted : t.add(bias, weighted);
        }
        fused = t.add(fused, t.scale(bias, cfg.beta));
    }
    return fused;
}

LossValue softmax_ce(const Tensor& logits, const std::vector<std::int32_t>& labels) {
    Tape t;
    const Tape::ValueId ce = t.softmax_cross_entropy(t.leaf(logits), labels);
    return {t.value(ce)[0], t.aux(ce)};
}

} // namespace vrg
