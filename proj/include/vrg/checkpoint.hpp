#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vrg/config.hpp"
#include "vrg/tensor.hpp"

namespace vrg {

// Persisted training state: adapter weights, per-branch residuals, and the
// model config echo. Stored in the same directory container as bundles, with
// f64 arrays so round-trips are bit-exact.
struct Checkpoint {
    std::vector<Tensor> theta_mu;  // L matrices [d_l x d_{l+1}]
    std::vector<Tensor> theta_var; // L matrices
    std::vector<Tensor> w_delta;   // one [C x D_k] per auxiliary branch
    std::vector<std::string> aux_names;
    std::size_t C = 0;
    std::size_t D_text = 0;
    ModelConfig config;

    void validate() const; // DataError on inconsistent shapes
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir); // FormatError on bad version/kind

} // namespace vrg
