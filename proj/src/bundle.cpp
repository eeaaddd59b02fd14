#include "vrg/bundle.hpp"

#include <cmath>

#include "vrg/container.hpp"
#include "vrg/errors.hpp"
#include "vrg/rng.hpp"

namespace vrg {

namespace {

// Bundles are stored as float32; keep in-memory values f32-representable so
// save/load round-trips are bit-exact.
void quantize_f32(Tensor& t) {
    for (double& v : t.span()) v = static_cast<double>(static_cast<float>(v));
}

} // namespace

const SplitData& EmbeddingBundle::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw DataError("bundle has no split '" + name + "'");
    return it->second;
}

void EmbeddingBundle::validate() const {
    if (C == 0 || M == 0 || D_text == 0) throw DataError("bundle: C, M and D_text must be >= 1");
    if (branches.empty()) throw DataError("bundle: needs at least the primary branch");
    if (branches[0].dim != D_text) {
        throw DataError("bundle: primary branch dim " + std::to_string(branches[0].dim) +
                        " != D_text " + std::to_string(D_text));
    }
    const std::vector<std::size_t> want = {C, M, D_text};
    if (text_desc.shape() != want) {
        throw DataError("bundle: text_desc shape " + shape_to_string(text_desc.shape()) +
                        " does not match [C x M x D_text]");
    }
    if (!text_desc.all_finite()) throw DataError("bundle: text_desc has non-finite values");
    if (!class_names.empty() && class_names.size() != C) {
        throw DataError("bundle: class_names size does not match C");
    }
    for (const auto& [name, split] : splits) {
        if (split.features.size() != branches.size()) {
            throw DataError("bundle: split '" + name + "' branch count mismatch");
        }
        for (std::size_t k = 0; k < branches.size(); ++k) {
            const Tensor& f = split.features[k];
            if (f.rank() != 2 || f.dim(0) != split.labels.size() || f.dim(1) != branches[k].dim) {
                throw DataError("bundle: split '" + name + "' branch '" + branches[k].name +
                                "' features have shape " + shape_to_string(f.shape()));
            }
            if (!f.all_finite()) {
                throw DataError("bundle: split '" + name + "' has non-finite features");
            }
        }
        for (std::int32_t y : split.labels) {
            if (y < 0 || static_cast<std::size_t>(y) >= C) {
                throw DataError("bundle: split '" + name + "' label " + std::to_string(y) +
                                " out of range [0, " + std::to_string(C) + ")");
            }
        }
    }
}

EmbeddingBundle load_bundle(const std::filesystem::path& dir) {
    const Container c = load_container(dir);
    if (c.meta.value("kind", "") != "bundle") {
        throw FormatError(dir.string() + " is not an embedding bundle");
    }

    EmbeddingBundle b;
    try {
        b.C = c.meta.at("C").get<std::size_t>();
        b.M = c.meta.at("M").get<std::size_t>();
        b.D_text = c.meta.at("D_text").get<std::size_t>();
        for (const auto& j : c.meta.at("branches")) {
            b.branches.push_back({j.at("name").get<std::string>(), j.at("dim").get<std::size_t>()});
        }
        if (c.meta.contains("class_names")) {
            b.class_names = c.meta.at("class_names").get<std::vector<std::string>>();
        }
        b.text_desc = c.float_array("text_desc");
        for (const auto& split_name : c.meta.at("splits").get<std::vector<std::string>>()) {
            SplitData split;
            split.labels = c.int_array(split_name + "_labels");
            for (const BranchSpec& br : b.branches) {
                split.features.push_back(c.float_array(split_name + "_" + br.name));
            }
            b.splits.emplace(split_name, std::move(split));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bundle meta in " + dir.string() + ": " + e.what());
    }

    b.validate();
    return b;
}

void save_bundle(const EmbeddingBundle& b, const std::filesystem::path& dir) {
    b.validate();

    Container c;
    c.meta["kind"] = "bundle";
    c.meta["C"] = b.C;
    c.meta["M"] = b.M;
    c.meta["D_text"] = b.D_text;
    c.meta["rng_algo"] = kRngAlgoId;
    c.meta["branches"] = nlohmann::json::array();
    for (const BranchSpec& br : b.branches) {
        c.meta["branches"].push_back({{"name", br.name}, {"dim", br.dim}});
    }
    if (!b.class_names.empty()) c.meta["class_names"] = b.class_names;

    std::vector<std::string> split_names;
    for (const auto& [name, _] : b.splits) split_names.push_back(name);
    c.meta["splits"] = split_names;

    c.add_float("text_desc", b.text_desc);
    for (const auto& [name, split] : b.splits) {
        for (std::size_t k = 0; k < b.branches.size(); ++k) {
            c.add_float(name + "_" + b.branches[k].name, split.features[k]);
        }
        c.add_int(name + "_labels", split.labels, {split.labels.size()});
    }

    save_container(c, dir);
}

void SynthConfig::validate() const {
    if (classes < 1 || train_per_class < 1 || test_per_class < 1 || descriptions < 1 ||
        text_dim < 1) {
        throw ConfigError("synth: all counts must be >= 1");
    }
    for (std::size_t d : aux_dims) {
        if (d < 1) throw ConfigError("synth: aux dims must be >= 1");
    }
    if (desc_noise < 0.0 || visual_noise < 0.0) {
        throw ConfigError("synth: noise scales must be >= 0");
    }
}

EmbeddingBundle synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t C = cfg.classes, M = cfg.descriptions, D = cfg.text_dim;

    // Class centers on the unit sphere.
    Rng center_rng(derive_seed(cfg.seed, streams::kSynthCenters));
    Tensor centers = center_rng.normal_tensor({C, D});
    centers = l2_normalize_rows(centers);

    EmbeddingBundle b;
    b.C = C;
    b.M = M;
    b.D_text = D;
    b.branches.push_back({"clip", D});
    for (std::size_t k = 0; k < cfg.aux_dims.size(); ++k) {
        b.branches.push_back({"aux" + std::to_string(k + 1), cfg.aux_dims[k]});
    }
    for (std::size_t i = 0; i < C; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "class_%03zu", i);
        b.class_names.emplace_back(buf);
    }

    // Descriptions: center + noise, re-normalized onto the sphere.
    Rng desc_rng(derive_seed(cfg.seed, streams::kSynthDescriptions));
    b.text_desc = Tensor({C, M, D});
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t m = 0; m < M; ++m) {
            double sq = 0.0;
            std::vector<double> v(D);
            for (std::size_t d = 0; d < D; ++d) {
                v[d] = centers(i, d) + cfg.desc_noise * desc_rng.normal();
                sq += v[d] * v[d];
            }
            const double norm = std::sqrt(sq);
            for (std::size_t d = 0; d < D; ++d) b.text_desc(i, m, d) = v[d] / norm;
        }
    }
    quantize_f32(b.text_desc);

    // Fixed per-branch projections; the primary branch is the identity so
    // visual features live in the same space as the text centers.
    std::vector<Tensor> projections; // aux branch k: [D x dim_k]
    for (std::size_t k = 0; k < cfg.aux_dims.size(); ++k) {
        Rng map_rng(derive_seed(cfg.mixing_seed, streams::kSynthBranchMap, k));
        projections.push_back(map_rng.normal_tensor({D, cfg.aux_dims[k]}, 1.0 / std::sqrt(D)));
    }

    const auto make_split = [&](std::size_t per_class, std::uint64_t stream_index) {
        SplitData split;
        const std::size_t n = C * per_class;
        split.labels.reserve(n);
        for (std::size_t i = 0; i < C; ++i) {
            for (std::size_t j = 0; j < per_class; ++j) {
                split.labels.push_back(static_cast<std::int32_t>(i));
            }
        }
        for (std::size_t k = 0; k < b.branches.size(); ++k) {
            Rng rng(derive_seed(cfg.seed, streams::kSynthFeatures, stream_index * 64 + k));
            const std::size_t dim = b.branches[k].dim;
            Tensor feats({n, dim});
            for (std::size_t r = 0; r < n; ++r) {
                const std::size_t cls = static_cast<std::size_t>(split.labels[r]);
                for (std::size_t d = 0; d < dim; ++d) {
                    double base = 0.0;
                    if (k == 0) {
                        base = centers(cls, d);
                    } else {
                        for (std::size_t q = 0; q < D; ++q) {
                            base += centers(cls, q) * projections[k - 1](q, d);
                        }
                    }
                    feats(r, d) = base + cfg.visual_noise * rng.normal();
                }
            }
            quantize_f32(feats);
            split.features.push_back(std::move(feats));
        }
        return split;
    };

    b.splits.emplace("train", make_split(cfg.train_per_class, 0));
    b.splits.emplace("test", make_split(cfg.test_per_class, 1));

    b.validate();
    return b;
}

} // namespace vrg
