#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vrg/autodiff.hpp"
#include "vrg/tensor.hpp"
#include "vrg/vrkg.hpp"

namespace vrg {

struct AdapterConfig {
    std::size_t layers = 2;
    std::size_t hidden = 16;
    double alpha = 0.7; // residual blend toward the initial means

    void validate() const; // ConfigError
    // [D_text, hidden ... hidden, D_text]; L=1 degenerates to [D_text, D_text].
    std::vector<std::size_t> dims(std::size_t text_dim) const;
};

// Learnable per-layer weights for the mean and variance paths.
struct AdapterParams {
    std::vector<Param> theta_mu;
    std::vector<Param> theta_var;
    std::vector<std::size_t> dims;
    double alpha = 0.7;

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init from the seeded stream.
    static AdapterParams init(std::size_t text_dim, const AdapterConfig& cfg, std::uint64_t seed);
    std::vector<Param*> learnables();
    std::size_t layer_count() const { return theta_mu.size(); }
};

// How the sampling noise is keyed: eval uses eps = 0, train draws a fresh
// [C x D] standard-normal eps deterministically from (seed, step).
struct SampleKey {
    bool train = false;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;

    static SampleKey eval() { return {}; }
    static SampleKey training(std::uint64_t seed, std::uint64_t step) { return {true, seed, step}; }
};

// One propagation layer: mean path ELU(A_hat . mu . theta_mu), variance path
// ReLU(A_hat . var . theta_var).
std::pair<Tape::ValueId, Tape::ValueId> propagate_layer(Tape& t, Tape::ValueId mu_in,
                                                        Tape::ValueId var_in, Tape::ValueId a_hat,
                                                        Param& theta_mu, Param& theta_var);

// z = mu + eps * sqrt(var), elementwise. Throws DataError on negative var.
Tensor sample_z(const Tensor& mu, const Tensor& var, const Tensor& eps);

// w_i = alpha * mu0_i + (1 - alpha) * z_i.
Tensor blend(const Tensor& mu0, const Tensor& z, double alpha);

// Full adapter on the tape: L propagation layers from the initial Gaussians,
// reparameterized sample (or the mean in eval mode), residual blend. Returns
// the [C x D_text] prototype node.
Tape::ValueId adapter_forward(Tape& t, const ClassGaussian& gauss, const KnowledgeGraph& graph,
                              AdapterParams& params, const SampleKey& key);

// Convenience wrapper that runs a forward pass and returns the prototypes.
Tensor adapter_prototypes(const ClassGaussian& gauss, const KnowledgeGraph& graph,
                          AdapterParams& params, const SampleKey& key);

// Final propagated distribution (mu_L, var_L), before sampling and blending.
ClassGaussian adapter_distribution(const ClassGaussian& gauss, const KnowledgeGraph& graph,
                                   AdapterParams& params);

} // namespace vrg
