#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vrg/tensor.hpp"

namespace vrg {

struct BranchSpec {
    std::string name;
    std::size_t dim = 0;
};

// One data split: features per branch (parallel to EmbeddingBundle::branches)
// and integer labels.
struct SplitData {
    std::vector<Tensor> features; // each [n x dim_k]
    std::vector<std::int32_t> labels;
    std::size_t size() const { return labels.size(); }
};

// Cached embeddings standing in for live encoders: per-class description
// embeddings plus per-split visual features for every branch. branches[0] is
// the primary branch and must share the text embedding dimension; later
// branches are auxiliary.
struct EmbeddingBundle {
    std::size_t C = 0;
    std::size_t M = 0;
    std::size_t D_text = 0;
    std::vector<BranchSpec> branches;
    Tensor text_desc; // [C x M x D_text]
    std::map<std::string, SplitData> splits;
    std::vector<std::string> class_names; // optional: empty or size C

    bool has_split(const std::string& name) const { return splits.count(name) > 0; }
    const SplitData& split(const std::string& name) const; // DataError if absent
    std::size_t aux_count() const { return branches.empty() ? 0 : branches.size() - 1; }

    void validate() const; // DataError on any violated invariant
};

EmbeddingBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const EmbeddingBundle& b, const std::filesystem::path& dir);

// Synthetic bundle generator standing in for LLM descriptions and frozen
// encoders. Class centers are drawn on the unit sphere; descriptions are
// noisy copies of the center, re-normalized; branch features are a fixed
// per-branch linear map of the center plus noise (identity map for the
// primary branch, so zero-shot similarity stays meaningful).
struct SynthConfig {
    std::size_t classes = 10;
    std::size_t train_per_class = 16;
    std::size_t test_per_class = 20;
    std::size_t descriptions = 8; // M
    std::size_t text_dim = 32;
    std::vector<std::size_t> aux_dims = {48, 16};
    double desc_noise = 0.3;
    double visual_noise = 0.15;
    // Seeds the per-branch projection maps; independent of `seed` so the
    // same synthetic "encoders" persist across dataset seeds.
    std::uint64_t mixing_seed = 9001;
    std::uint64_t seed = 0;

    void validate() const; // ConfigError
};

EmbeddingBundle synth_generate(const SynthConfig& cfg);

} // namespace vrg
