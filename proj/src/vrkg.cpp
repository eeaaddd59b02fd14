#include "vrg/vrkg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vrg/errors.hpp"

namespace vrg {

ClassGaussian estimate_class_gaussians(const Tensor& text_desc) {
    if (text_desc.rank() != 3) {
        throw DimensionError("estimate_class_gaussians: expected [C x M x D], got " +
                             shape_to_string(text_desc.shape()));
    }
    require_finite(text_desc, "estimate_class_gaussians");
    const std::size_t C = text_desc.dim(0), M = text_desc.dim(1), D = text_desc.dim(2);
    if (M < 1) throw DimensionError("estimate_class_gaussians: M must be >= 1");

    ClassGaussian g{Tensor({C, D}), Tensor({C, D})};
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t d = 0; d < D; ++d) {
            double mean = 0.0;
            for (std::size_t m = 0; m < M; ++m) mean += text_desc(i, m, d);
            mean /= static_cast<double>(M);
            double var = 0.0;
            for (std::size_t m = 0; m < M; ++m) {
                const double dev = text_desc(i, m, d) - mean;
                var += dev * dev;
            }
            g.mu(i, d) = mean;
            g.var(i, d) = var / static_cast<double>(M);
        }
    }
    return g;
}

KnowledgeGraph build_adjacency(const Tensor& mu, bool clamp_negative) {
    if (mu.rank() != 2) {
        throw DimensionError("build_adjacency: expected [C x D], got " +
                             shape_to_string(mu.shape()));
    }
    const std::size_t C = mu.dim(0), D = mu.dim(1);

    std::vector<double> norms(C);
    for (std::size_t i = 0; i < C; ++i) {
        double sq = 0.0;
        for (std::size_t d = 0; d < D; ++d) sq += mu(i, d) * mu(i, d);
        norms[i] = std::sqrt(sq);
        if (norms[i] == 0.0) {
            throw DataError("build_adjacency: class mean " + std::to_string(i) + " has zero norm");
        }
    }

    KnowledgeGraph kg{Tensor({C, C}), Tensor({C}), Tensor({C, C})};
    for (std::size_t i = 0; i < C; ++i) {
        kg.adjacency(i, i) = 1.0;
        for (std::size_t j = 0; j < C; ++j) {
            if (i == j) continue;
            double dot = 0.0;
            for (std::size_t d = 0; d < D; ++d) dot += mu(i, d) * mu(j, d);
            double cos = dot / (norms[i] * norms[j]);
            if (clamp_negative) cos = std::max(0.0, cos);
            kg.adjacency(i, j) = cos;
        }
    }

    // Degrees are accumulated in sorted order so relabeling the classes
    // permutes the graph bit-exactly.
    std::vector<double> row(C);
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < C; ++j) row[j] = kg.adjacency(i, j);
        std::sort(row.begin(), row.end());
        double deg = 0.0;
        for (double v : row) deg += v;
        if (deg <= 0.0) {
            throw DataError("build_adjacency: degree of class " + std::to_string(i) +
                            " is non-positive (unclamped negative similarities)");
        }
        kg.degree[i] = deg;
    }

    std::vector<double> inv_sqrt(C);
    for (std::size_t i = 0; i < C; ++i) inv_sqrt[i] = 1.0 / std::sqrt(kg.degree[i]);
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            // inv_sqrt[i] * inv_sqrt[j] first: the product commutes exactly,
            // so the result is symmetric and permutation-equivariant in fp.
            kg.normalized(i, j) = kg.adjacency(i, j) * (inv_sqrt[i] * inv_sqrt[j]);
        }
    }
    require_finite(kg.normalized, "build_adjacency");
    return kg;
}

} // namespace vrg
