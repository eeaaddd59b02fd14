#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrg/autodiff.hpp"
#include "vrg/bundle.hpp"
#include "vrg/tensor.hpp"

namespace vrg {

struct BranchConfig {
    // L2-normalize features and prototypes in the zero-shot branch (cosine
    // logits); raw dot products when off. Auxiliary branches are always raw.
    bool normalize_zero_shot = true;
    double logit_scale = 1.0; // optional scalar on the zero-shot logits

    void validate() const; // ConfigError
};

// Frozen class-mean prototypes plus zero-initialized learnable residuals,
// one pair per auxiliary branch.
struct BranchBank {
    std::vector<Tensor> prototypes;  // [C x D_k], frozen
    std::vector<Param> residuals;    // [C x D_k], learnable
    std::vector<std::string> names;

    std::size_t branch_count() const { return prototypes.size(); }
    std::vector<Param*> learnables();
};

// Class means of [n x D] features under integer labels. Throws DataError if
// a class has no samples.
Tensor class_mean_prototypes(const Tensor& features, const std::vector<std::int32_t>& labels,
                             std::size_t C);
// Same, for features already grouped as [C x N x D].
Tensor class_mean_prototypes(const Tensor& grouped);

// Builds the bank from the bundle's train split (auxiliary branches only).
BranchBank build_prototypes(const EmbeddingBundle& bundle);

// p = f_hat . W_hat^T with both row-normalized (default), or raw products.
Tape::ValueId zero_shot_logits(Tape& t, Tape::ValueId features, Tape::ValueId prototypes,
                               const BranchConfig& cfg);

// p = f . (W_proto + W_delta)^T, raw dot products.
Tape::ValueId aux_logits(Tape& t, Tape::ValueId features, const Tensor& proto, Param& delta);

} // namespace vrg
