#include "vrg/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrg/bundle.hpp"
#include "vrg/checkpoint.hpp"
#include "vrg/errors.hpp"
#include "vrg/trainer.hpp"

namespace vrg {

namespace fs = std::filesystem;

namespace {

void write_text_atomic(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw FormatError("cannot write " + tmp.string());
        out << text;
        if (!out) throw FormatError("short write to " + tmp.string());
    }
    fs::rename(tmp, file);
}

std::vector<double> parse_grid(const std::string& csv, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(flag + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError(flag + ": empty grid");
    return out;
}

double row_norm(const Tensor& t, std::size_t row) {
    double sq = 0.0;
    for (std::size_t j = 0; j < t.dim(1); ++j) sq += t(row, j) * t(row, j);
    return std::sqrt(sq);
}

struct TrainFlags {
    std::string bundle_dir;
    std::string out_dir;
    TrainConfig cfg;
    bool no_aux = false;
    std::string fusion_mode = "dynamic";
    std::string log_path;
};

TrainConfig finalize(TrainFlags& f) {
    f.cfg.model.use_aux = !f.no_aux;
    if (f.fusion_mode == "average") {
        f.cfg.model.fusion.mode = FusionConfig::Mode::average;
    } else if (f.fusion_mode == "dynamic") {
        f.cfg.model.fusion.mode = FusionConfig::Mode::dynamic;
    } else {
        throw ConfigError("--fusion must be 'dynamic' or 'average'");
    }
    return f.cfg;
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--epochs", f.cfg.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--lr", f.cfg.lr, "Initial learning rate")->capture_default_str();
    cmd->add_option("--batch", f.cfg.batch_size, "Batch size")->capture_default_str();
    cmd->add_option("--alpha", f.cfg.model.adapter.alpha, "Residual blend weight")
        ->capture_default_str();
    cmd->add_option("--lambda", f.cfg.model.fusion.lambda, "Kurtosis exponent")
        ->capture_default_str();
    cmd->add_option("--beta", f.cfg.model.fusion.beta, "Auxiliary fusion weight")
        ->capture_default_str();
    cmd->add_option("--layers", f.cfg.model.adapter.layers, "Graph convolution layers")
        ->capture_default_str();
    cmd->add_option("--hidden", f.cfg.model.adapter.hidden, "Hidden feature dimension")
        ->capture_default_str();
    cmd->add_option("--seed", f.cfg.model.seed, "Master seed")->capture_default_str();
    cmd->add_option("--weight-decay", f.cfg.weight_decay, "AdamW weight decay")
        ->capture_default_str();
    cmd->add_flag("--no-aux", f.no_aux, "Train the zero-shot branch alone (no auxiliary models)");
    cmd->add_flag("--deterministic", f.cfg.deterministic,
                  "Pin the deterministic execution contract (always on in this build)");
    cmd->add_option("--fusion", f.fusion_mode, "Fusion mode: dynamic|average")
        ->capture_default_str();
    cmd->add_flag("--no-normalize", [&f](std::int64_t) { f.cfg.model.branch.normalize_zero_shot = false; },
                  "Raw dot-product zero-shot logits instead of cosine");
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"vrgadapter: trains and evaluates a random-graph text adapter with "
                 "uncertainty-weighted multi-branch fusion on cached embedding bundles"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "Generate a deterministic synthetic bundle");
    SynthConfig synth_cfg;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "Output bundle directory")->required();
    synth_cmd->add_option("--classes", synth_cfg.classes, "Number of classes")
        ->capture_default_str();
    synth_cmd->add_option("--shots", synth_cfg.train_per_class, "Train samples per class")
        ->capture_default_str();
    synth_cmd->add_option("--test-shots", synth_cfg.test_per_class, "Test samples per class")
        ->capture_default_str();
    synth_cmd->add_option("--desc", synth_cfg.descriptions, "Descriptions per class (M)")
        ->capture_default_str();
    synth_cmd->add_option("--dim", synth_cfg.text_dim, "Text embedding dimension")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_cfg.seed, "Master seed")->capture_default_str();
    synth_cmd->add_option("--desc-noise", synth_cfg.desc_noise, "Description noise scale")
        ->capture_default_str();
    synth_cmd->add_option("--vis-noise", synth_cfg.visual_noise, "Visual feature noise scale")
        ->capture_default_str();
    synth_cmd->callback([&]() {
        const EmbeddingBundle bundle = synth_generate(synth_cfg);
        save_bundle(bundle, synth_out);
        std::cout << "wrote bundle to " << synth_out << " (C=" << bundle.C << ", M=" << bundle.M
                  << ", D_text=" << bundle.D_text << ", branches=" << bundle.branches.size()
                  << ")\n";
    });

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "Train on a bundle and write a checkpoint");
    TrainFlags tf;
    train_cmd->add_option("--bundle", tf.bundle_dir, "Bundle directory")->required();
    train_cmd->add_option("--out", tf.out_dir, "Output checkpoint directory")->required();
    train_cmd->add_option("--log", tf.log_path, "Metrics log path (default <out>/metrics.jsonl)");
    add_train_flags(train_cmd, tf);
    train_cmd->callback([&]() {
        const EmbeddingBundle bundle = load_bundle(tf.bundle_dir);
        const TrainConfig cfg = finalize(tf);
        std::ostringstream log;
        const TrainResult result = train(bundle, cfg, &log);
        std::cout << log.str();
        save_checkpoint(result.checkpoint, tf.out_dir);
        const fs::path log_path =
            tf.log_path.empty() ? fs::path(tf.out_dir) / "metrics.jsonl" : fs::path(tf.log_path);
        write_text_atomic(log_path, log.str());
        std::cout << "wrote checkpoint to " << tf.out_dir << "\n";
    });

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a bundle split");
    std::string eval_bundle, eval_ckpt, eval_split = "test";
    bool eval_json = false;
    eval_cmd->add_option("--bundle", eval_bundle, "Bundle directory")->required();
    eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint directory")->required();
    eval_cmd->add_option("--split", eval_split, "Split name")->capture_default_str();
    eval_cmd->add_flag("--json", eval_json, "Emit metrics as JSON");
    eval_cmd->callback([&]() {
        const EmbeddingBundle bundle = load_bundle(eval_bundle);
        const Checkpoint ckpt = load_checkpoint(eval_ckpt);
        const EvalResult r = evaluate(ckpt, bundle, eval_split);
        if (eval_json) {
            nlohmann::json j{{"split", eval_split},
                             {"n", r.n},
                             {"accuracy", r.accuracy},
                             {"mean_loss", r.mean_loss},
                             {"per_class_accuracy", r.per_class_accuracy}};
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "split=" << eval_split << " n=" << r.n << " accuracy=" << r.accuracy
                      << " mean_loss=" << r.mean_loss << "\n";
        }
    });

    // --- gradcheck ---
    auto* grad_cmd =
        app.add_subcommand("gradcheck", "Finite-difference check of the full pipeline gradients");
    std::uint64_t grad_seed = 0;
    double grad_tol = 1e-4;
    grad_cmd->add_option("--seed", grad_seed, "Seed for the synthetic instance")
        ->capture_default_str();
    grad_cmd->add_option("--tol", grad_tol, "Relative error tolerance")->capture_default_str();
    grad_cmd->callback([&]() {
        const GradCheckReport report = pipeline_grad_check(grad_seed, grad_tol);
        std::cout << "coords_checked=" << report.coords_checked
                  << " max_rel_err=" << report.max_rel_err << " tol=" << grad_tol
                  << " pass=" << (report.pass ? "true" : "false") << "\n";
        if (!report.pass) {
            throw NumericalError("gradient check failed at " + report.worst_param + "[" +
                                 std::to_string(report.worst_coord) + "]: analytic " +
                                 std::to_string(report.worst_analytic) + " vs numeric " +
                                 std::to_string(report.worst_numeric));
        }
    });

    // --- sweep ---
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid-sweep (lambda, beta) and emit a CSV");
    TrainFlags sf;
    std::string sweep_lambda = "0.2,0.4,0.8", sweep_beta = "0.25,0.5,1.0";
    std::string sweep_out, sweep_split = "test";
    sweep_cmd->add_option("--bundle", sf.bundle_dir, "Bundle directory")->required();
    sweep_cmd->add_option("--lambda-grid", sweep_lambda, "Comma-separated lambda values")
        ->capture_default_str();
    sweep_cmd->add_option("--beta-grid", sweep_beta, "Comma-separated beta values")
        ->capture_default_str();
    sweep_cmd->add_option("--out", sweep_out, "CSV output path (stdout when omitted)");
    sweep_cmd->add_option("--split", sweep_split, "Split evaluated per grid point")
        ->capture_default_str();
    add_train_flags(sweep_cmd, sf);
    sweep_cmd->callback([&]() {
        const EmbeddingBundle bundle = load_bundle(sf.bundle_dir);
        const TrainConfig cfg = finalize(sf);
        const std::vector<SweepRow> rows =
            sweep(bundle, cfg, parse_grid(sweep_lambda, "--lambda-grid"),
                  parse_grid(sweep_beta, "--beta-grid"), sweep_split);
        std::ostringstream csv;
        csv << "lambda,beta,accuracy,mean_loss\n";
        for (const SweepRow& r : rows) {
            csv << r.lambda << ',' << r.beta << ',' << r.accuracy << ',' << r.mean_loss << "\n";
        }
        if (sweep_out.empty()) {
            std::cout << csv.str();
        } else {
            write_text_atomic(sweep_out, csv.str());
            std::cout << "wrote sweep results to " << sweep_out << "\n";
        }
    });

    // --- inspect ---
    auto* inspect_cmd = app.add_subcommand(
        "inspect", "Dump per-class distribution norms and adjacency rows as CSV");
    std::string ins_bundle, ins_ckpt, ins_out;
    inspect_cmd->add_option("--bundle", ins_bundle, "Bundle directory")->required();
    inspect_cmd->add_option("--ckpt", ins_ckpt, "Checkpoint directory")->required();
    inspect_cmd->add_option("--out", ins_out, "CSV output path")->required();
    inspect_cmd->callback([&]() {
        const EmbeddingBundle bundle = load_bundle(ins_bundle);
        const Checkpoint ckpt = load_checkpoint(ins_ckpt);
        Model model = Model::restore(bundle, ckpt);
        const ClassGaussian adapted =
            adapter_distribution(model.gaussians(), model.graph(), model.adapter());
        const Tensor prototypes = adapter_prototypes(model.gaussians(), model.graph(),
                                                     model.adapter(), SampleKey::eval());
        std::ostringstream csv;
        csv << "class,name,mu_norm,var_norm,adapted_mu_norm,adapted_var_norm,prototype_norm";
        for (std::size_t j = 0; j < bundle.C; ++j) csv << ",adj_" << j;
        csv << "\n";
        for (std::size_t i = 0; i < bundle.C; ++i) {
            csv << i << ','
                << (bundle.class_names.empty() ? "class_" + std::to_string(i)
                                               : bundle.class_names[i])
                << ',' << row_norm(model.gaussians().mu, i) << ','
                << row_norm(model.gaussians().var, i) << ',' << row_norm(adapted.mu, i) << ','
                << row_norm(adapted.var, i) << ',' << row_norm(prototypes, i);
            for (std::size_t j = 0; j < bundle.C; ++j) {
                csv << ',' << model.graph().adjacency(i, j);
            }
            csv << "\n";
        }
        write_text_atomic(ins_out, csv.str());
        std::cout << "wrote inspection dump to " << ins_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    try {
        return dispatch(argc, argv);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace vrg
