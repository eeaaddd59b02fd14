#include "vrg/checkpoint.hpp"

#include "vrg/container.hpp"
#include "vrg/errors.hpp"
#include "vrg/rng.hpp"

namespace vrg {

void Checkpoint::validate() const {
    config.validate();
    if (theta_mu.size() != theta_var.size() || theta_mu.empty()) {
        throw DataError("checkpoint: mean/variance layer counts disagree or are empty");
    }
    if (theta_mu.size() != config.adapter.layers) {
        throw DataError("checkpoint: stored layers " + std::to_string(theta_mu.size()) +
                        " != config layers " + std::to_string(config.adapter.layers));
    }
    const std::vector<std::size_t> dims = config.adapter.dims(D_text);
    for (std::size_t l = 0; l < theta_mu.size(); ++l) {
        const std::vector<std::size_t> want = {dims[l], dims[l + 1]};
        if (theta_mu[l].shape() != want || theta_var[l].shape() != want) {
            throw DataError("checkpoint: layer " + std::to_string(l) + " weights have shape " +
                            shape_to_string(theta_mu[l].shape()) + ", expected " +
                            shape_to_string(want));
        }
    }
    if (w_delta.size() != aux_names.size()) {
        throw DataError("checkpoint: residual/name counts disagree");
    }
    for (const Tensor& w : w_delta) {
        if (w.rank() != 2 || w.dim(0) != C) {
            throw DataError("checkpoint: residual shape " + shape_to_string(w.shape()) +
                            " does not start with C = " + std::to_string(C));
        }
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
    ckpt.validate();

    Container c;
    c.meta["kind"] = "checkpoint";
    c.meta["C"] = ckpt.C;
    c.meta["D_text"] = ckpt.D_text;
    c.meta["aux_names"] = ckpt.aux_names;
    c.meta["rng_algo"] = kRngAlgoId;
    c.meta["config"] = {{"alpha", ckpt.config.adapter.alpha},
                        {"layers", ckpt.config.adapter.layers},
                        {"hidden", ckpt.config.adapter.hidden},
                        {"lambda", ckpt.config.fusion.lambda},
                        {"beta", ckpt.config.fusion.beta},
                        {"sigma_floor", ckpt.config.fusion.sigma_floor},
                        {"detach_kappa", ckpt.config.fusion.detach_kappa},
                        {"fusion_mode",
                         ckpt.config.fusion.mode == FusionConfig::Mode::dynamic ? "dynamic"
                                                                                : "average"},
                        {"normalize_zero_shot", ckpt.config.branch.normalize_zero_shot},
                        {"logit_scale", ckpt.config.branch.logit_scale},
                        {"use_aux", ckpt.config.use_aux},
                        {"clamp_negative_edges", ckpt.config.clamp_negative_edges},
                        {"seed", ckpt.config.seed}};

    for (std::size_t l = 0; l < ckpt.theta_mu.size(); ++l) {
        c.add_float("theta_mu_" + std::to_string(l), ckpt.theta_mu[l], "f64");
        c.add_float("theta_var_" + std::to_string(l), ckpt.theta_var[l], "f64");
    }
    for (std::size_t k = 0; k < ckpt.w_delta.size(); ++k) {
        c.add_float("w_delta_" + ckpt.aux_names[k], ckpt.w_delta[k], "f64");
    }

    save_container(c, dir);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    const Container c = load_container(dir);
    if (c.meta.value("kind", "") != "checkpoint") {
        throw FormatError(dir.string() + " is not a checkpoint");
    }

    Checkpoint ckpt;
    try {
        ckpt.C = c.meta.at("C").get<std::size_t>();
        ckpt.D_text = c.meta.at("D_text").get<std::size_t>();
        ckpt.aux_names = c.meta.at("aux_names").get<std::vector<std::string>>();
        const nlohmann::json& cfg = c.meta.at("config");
        ckpt.config.adapter.alpha = cfg.at("alpha").get<double>();
        ckpt.config.adapter.layers = cfg.at("layers").get<std::size_t>();
        ckpt.config.adapter.hidden = cfg.at("hidden").get<std::size_t>();
        ckpt.config.fusion.lambda = cfg.at("lambda").get<double>();
        ckpt.config.fusion.beta = cfg.at("beta").get<double>();
        ckpt.config.fusion.sigma_floor = cfg.at("sigma_floor").get<double>();
        ckpt.config.fusion.detach_kappa = cfg.at("detach_kappa").get<bool>();
        ckpt.config.fusion.mode = cfg.at("fusion_mode").get<std::string>() == "average"
                                      ? FusionConfig::Mode::average
                                      : FusionConfig::Mode::dynamic;
        ckpt.config.branch.normalize_zero_shot = cfg.at("normalize_zero_shot").get<bool>();
        ckpt.config.branch.logit_scale = cfg.at("logit_scale").get<double>();
        ckpt.config.use_aux = cfg.at("use_aux").get<bool>();
        ckpt.config.clamp_negative_edges = cfg.at("clamp_negative_edges").get<bool>();
        ckpt.config.seed = cfg.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint meta in " + dir.string() + ": " + e.what());
    }

    for (std::size_t l = 0; l < ckpt.config.adapter.layers; ++l) {
        ckpt.theta_mu.push_back(c.float_array("theta_mu_" + std::to_string(l)));
        ckpt.theta_var.push_back(c.float_array("theta_var_" + std::to_string(l)));
    }
    for (const std::string& name : ckpt.aux_names) {
        ckpt.w_delta.push_back(c.float_array("w_delta_" + name));
    }

    ckpt.validate();
    return ckpt;
}

} // namespace vrg
