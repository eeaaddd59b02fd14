#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vrg/tensor.hpp"

namespace vrg {

struct GradCheckOptions {
    double step = 1e-5;
    double tol = 1e-4;
    // Params larger than this get a random coordinate subsample (never fewer
    // than min_coords).
    std::size_t max_coords_per_param = 256;
    std::size_t min_coords = 64;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    std::size_t coords_checked = 0;
    std::string worst_param;
    std::size_t worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central-difference check of analytic gradients. `f(fill_grads)` evaluates
// the scalar objective at the params' current values; it must be pure and
// deterministic, and when fill_grads is true it must also accumulate
// gradients into each param (params arrive zeroed). Relative error per
// coordinate is |a - n| / max(1e-8, |a| + |n|). Throws NumericalError if the
// objective is non-finite.
GradCheckReport grad_check(const std::function<double(bool fill_grads)>& f,
                           const std::vector<Param*>& params,
                           const GradCheckOptions& opts = {});

} // namespace vrg
