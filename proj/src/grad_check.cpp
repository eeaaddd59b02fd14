#include "vrg/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "vrg/errors.hpp"
#include "vrg/rng.hpp"

namespace vrg {

namespace {

double checked_eval(const std::function<double(bool)>& f, bool fill) {
    const double v = f(fill);
    if (!std::isfinite(v)) {
        throw NumericalError("grad_check: objective is non-finite");
    }
    return v;
}

std::vector<std::size_t> pick_coords(std::size_t n, const GradCheckOptions& opts, Rng& rng) {
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (n <= opts.max_coords_per_param) return coords;
    rng.shuffle(coords);
    coords.resize(std::max(opts.min_coords, opts.max_coords_per_param));
    std::sort(coords.begin(), coords.end());
    return coords;
}

} // namespace

GradCheckReport grad_check(const std::function<double(bool fill_grads)>& f,
                           const std::vector<Param*>& params,
                           const GradCheckOptions& opts) {
    for (Param* p : params) p->zero_grad();
    checked_eval(f, true);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Param* p : params) analytic.push_back(p->grad);

    Rng rng(derive_seed(opts.seed, streams::kGradCheck));
    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        for (std::size_t ci : pick_coords(p.value.size(), opts, rng)) {
            const double saved = p.value[ci];
            p.value[ci] = saved + opts.step;
            const double plus = checked_eval(f, false);
            p.value[ci] = saved - opts.step;
            const double minus = checked_eval(f, false);
            p.value[ci] = saved;

            const double numeric = (plus - minus) / (2.0 * opts.step);
            const double a = analytic[pi][ci];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = p.name.empty() ? ("param" + std::to_string(pi)) : p.name;
                report.worst_coord = ci;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    report.pass = report.max_rel_err < opts.tol;
    return report;
}

} // namespace vrg
