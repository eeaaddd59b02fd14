#include "vrg/adapter.hpp"

#include <cmath>

#include "vrg/errors.hpp"
#include "vrg/rng.hpp"

namespace vrg {

void AdapterConfig::validate() const {
    if (layers < 1) throw ConfigError("adapter: layers must be >= 1");
    if (layers > 1 && hidden < 1) throw ConfigError("adapter: hidden must be >= 1");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("adapter: alpha must lie in [0, 1]");
}

std::vector<std::size_t> AdapterConfig::dims(std::size_t text_dim) const {
    std::vector<std::size_t> d;
    d.push_back(text_dim);
    for (std::size_t l = 1; l < layers; ++l) d.push_back(hidden);
    d.push_back(text_dim);
    return d;
}

AdapterParams AdapterParams::init(std::size_t text_dim, const AdapterConfig& cfg,
                                  std::uint64_t seed) {
    cfg.validate();
    AdapterParams p;
    p.dims = cfg.dims(text_dim);
    p.alpha = cfg.alpha;
    Rng rng(derive_seed(seed, streams::kAdapterInit));
    for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
        const std::size_t fan_in = p.dims[l], fan_out = p.dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        p.theta_mu.emplace_back(rng.uniform_tensor({fan_in, fan_out}, -bound, bound),
                                "theta_mu_" + std::to_string(l));
        p.theta_var.emplace_back(rng.uniform_tensor({fan_in, fan_out}, -bound, bound),
                                 "theta_var_" + std::to_string(l));
    }
    return p;
}

std::vector<Param*> AdapterParams::learnables() {
    std::vector<Param*> out;
    for (Param& p : theta_mu) out.push_back(&p);
    for (Param& p : theta_var) out.push_back(&p);
    return out;
}

std::pair<Tape::ValueId, Tape::ValueId> propagate_layer(Tape& t, Tape::ValueId mu_in,
                                                        Tape::ValueId var_in, Tape::ValueId a_hat,
                                                        Param& theta_mu, Param& theta_var) {
    const Tape::ValueId mu_out =
        t.elu(t.matmul(t.matmul(a_hat, mu_in), t.param(theta_mu)));
    const Tape::ValueId var_out =
        t.relu(t.matmul(t.matmul(a_hat, var_in), t.param(theta_var)));
    return {mu_out, var_out};
}

Tensor sample_z(const Tensor& mu, const Tensor& var, const Tensor& eps) {
    if (!mu.same_shape(var) || !mu.same_shape(eps)) {
        throw DimensionError("sample_z: mu/var/eps shapes disagree");
    }
    Tensor z(mu.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (var[i] < 0.0) {
            throw DataError("sample_z: negative variance " + std::to_string(var[i]));
        }
        z[i] = mu[i] + eps[i] * std::sqrt(var[i]);
    }
    require_finite(z, "sample_z");
    return z;
}

Tensor blend(const Tensor& mu0, const Tensor& z, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("blend: alpha must lie in [0, 1]");
    if (!mu0.same_shape(z)) throw DimensionError("blend: mu0/z shapes disagree");
    Tensor w(mu0.shape());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = alpha * mu0[i] + (1.0 - alpha) * z[i];
    require_finite(w, "blend");
    return w;
}

Tape::ValueId adapter_forward(Tape& t, const ClassGaussian& gauss, const KnowledgeGraph& graph,
                              AdapterParams& params, const SampleKey& key) {
    const std::size_t C = gauss.mu.dim(0);
    const std::size_t D = params.dims.back();
    if (gauss.mu.dim(1) != params.dims.front()) {
        throw DimensionError("adapter_forward: gaussian dim " + std::to_string(gauss.mu.dim(1)) +
                             " != adapter input dim " + std::to_string(params.dims.front()));
    }

    const Tape::ValueId a_hat = t.leaf(graph.normalized);
    const Tape::ValueId mu0 = t.leaf(gauss.mu);
    Tape::ValueId mu = mu0;
    Tape::ValueId var = t.leaf(gauss.var);
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        std::tie(mu, var) = propagate_layer(t, mu, var, a_hat, params.theta_mu[l],
                                            params.theta_var[l]);
    }

    Tensor eps({C, D});
    if (key.train) {
        Rng rng(derive_seed(key.seed, streams::kAdapterEps, key.step));
        eps = rng.normal_tensor({C, D});
    }
    const Tape::ValueId z = t.add(mu, t.mul(t.leaf(std::move(eps)), t.sqrt_clamped(var)));
    return t.add(t.scale(mu0, params.alpha), t.scale(z, 1.0 - params.alpha));
}

Tensor adapter_prototypes(const ClassGaussian& gauss, const KnowledgeGraph& graph,
                          AdapterParams& params, const SampleKey& key) {
    Tape t;
    return t.value(adapter_forward(t, gauss, graph, params, key));
}

ClassGaussian adapter_distribution(const ClassGaussian& gauss, const KnowledgeGraph& graph,
                                   AdapterParams& params) {
    Tape t;
    const Tape::ValueId a_hat = t.leaf(graph.normalized);
    Tape::ValueId mu = t.leaf(gauss.mu);
    Tape::ValueId var = t.leaf(gauss.var);
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        std::tie(mu, var) = propagate_layer(t, mu, var, a_hat, params.theta_mu[l],
                                            params.theta_var[l]);
    }
    return {t.value(mu), t.value(var)};
}

} // namespace vrg
