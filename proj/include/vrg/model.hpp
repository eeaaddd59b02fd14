#pragma once

#include <span>
#include <string>
#include <vector>

#include "vrg/bundle.hpp"
#include "vrg/checkpoint.hpp"
#include "vrg/config.hpp"
#include "vrg/vrkg.hpp"

namespace vrg {

// Wires the pipeline over a bundle: class Gaussians from the descriptions,
// the similarity graph from the initial means (built once, never retrained),
// adapter weights, frozen prototypes with learnable residuals, and fusion.
class Model {
public:
    static Model build(const EmbeddingBundle& bundle, const ModelConfig& cfg);
    static Model restore(const EmbeddingBundle& bundle, const Checkpoint& ckpt);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    struct Batch {
        std::vector<Tensor> features; // per branch, [B x D_k]
        std::vector<std::int32_t> labels;
        std::size_t size() const { return labels.size(); }
    };
    static Batch gather(const EmbeddingBundle& bundle, const std::string& split,
                        std::span<const std::size_t> indices);

    struct ForwardValues {
        Tape::ValueId loss;
        Tape::ValueId fused;
    };
    // Builds the full differentiable pipeline for one batch on the tape.
    ForwardValues loss_on_batch(Tape& t, const Batch& batch, const SampleKey& key);
    // Forward-only fused logits (used by evaluation).
    Tensor fused_logits(const Batch& batch, const SampleKey& key);

    // Pointers stay valid while the model is not moved.
    std::vector<Param*> learnables();
    Checkpoint to_checkpoint() const;

    const ClassGaussian& gaussians() const { return gauss_; }
    const KnowledgeGraph& graph() const { return graph_; }
    const ModelConfig& config() const { return cfg_; }
    AdapterParams& adapter() { return adapter_; }
    BranchBank& bank() { return bank_; }
    std::size_t class_count() const { return C_; }

private:
    Model() = default;

    ModelConfig cfg_;
    ClassGaussian gauss_;
    KnowledgeGraph graph_;
    AdapterParams adapter_;
    BranchBank bank_;
    std::size_t C_ = 0;
    std::size_t D_text_ = 0;
};

} // namespace vrg
