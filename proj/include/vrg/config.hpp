#pragma once

#include <cstdint>

#include "vrg/adapter.hpp"
#include "vrg/branches.hpp"
#include "vrg/fusion.hpp"

namespace vrg {

// Everything that shapes the trainable pipeline; echoed verbatim into
// checkpoints so evaluation reconstructs the exact model.
struct ModelConfig {
    AdapterConfig adapter;
    BranchConfig branch;
    FusionConfig fusion;
    bool use_aux = true;             // false drops every auxiliary branch (K = 0)
    bool clamp_negative_edges = true;
    std::uint64_t seed = 0;

    void validate() const {
        adapter.validate();
        branch.validate();
        fusion.validate();
    }
};

} // namespace vrg
