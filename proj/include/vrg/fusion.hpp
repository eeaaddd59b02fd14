#pragma once

#include <cstdint>
#include <vector>

#include "vrg/autodiff.hpp"
#include "vrg/tensor.hpp"

namespace vrg {

struct FusionConfig {
    enum class Mode { dynamic, average };

    double lambda = 0.4;       // kurtosis exponent, > 0
    double beta = 0.5;         // auxiliary balance, >= 0
    double sigma_floor = 1e-12; // standardization floor; constant rows get kappa = 0
    bool detach_kappa = false; // treat confidence weights as constants in backward
    Mode mode = Mode::dynamic; // `average` replaces the weighting by a plain mean

    void validate() const; // ConfigError
};

// Normalized kurtosis confidence of a single logit vector:
// kappa = (mean(((p - mean(p)) / (std(p) + floor))^4))^lambda, with the
// population std convention. Constant rows give 0.
double kurtosis_weight(const Tensor& logits, double lambda, double sigma_floor = 1e-12);

// Confidence-weighted fusion over the batch: per row,
//   p_bias = sum_k kappa(p_aux_k) * p_aux_k
//   p_fused = kappa(p_zs) * p_zs + beta * p_bias
// Gradients flow through the kappa factors unless detach_kappa is set. In
// `average` mode the result is the plain mean of all branch logits. An empty
// aux list degrades to the zero-shot term alone.
Tape::ValueId fuse(Tape& t, Tape::ValueId p_zs, const std::vector<Tape::ValueId>& p_aux,
                   const FusionConfig& cfg);

struct LossValue {
    double loss = 0.0;
    Tensor probs; // [B x C]
};

// Stabilized softmax + mean cross-entropy over the batch (plain evaluation;
// Tape::softmax_cross_entropy is the differentiable path).
LossValue softmax_ce(const Tensor& logits, const std::vector<std::int32_t>& labels);

} // namespace vrg
