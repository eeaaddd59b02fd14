#pragma once

#include "vrg/tensor.hpp"

namespace vrg {

// Per-class Gaussian over the text embedding space: mean rows and diagonal
// variance rows, both [C x D].
struct ClassGaussian {
    Tensor mu;
    Tensor var;
};

// Class-similarity graph: cosine adjacency A with unit diagonal, degree
// vector, and the symmetric normalization D^{-1/2} A D^{-1/2}.
struct KnowledgeGraph {
    Tensor adjacency; // [C x C]
    Tensor degree;    // [C]
    Tensor normalized; // [C x C]
};

// Mean and biased (divide-by-M) variance of the M description embeddings of
// each class. Input is [C x M x D].
ClassGaussian estimate_class_gaussians(const Tensor& text_desc);

// Edges are max(0, cos(mu_i, mu_j)) when clamp_negative is set (the default;
// keeps every degree >= 1 since the diagonal is pinned to 1), raw cosines
// otherwise. Throws DataError on a zero-norm mean row, or on a non-positive
// degree in unclamped mode.
KnowledgeGraph build_adjacency(const Tensor& mu, bool clamp_negative = true);

} // namespace vrg
