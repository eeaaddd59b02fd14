#include "vrg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "vrg/errors.hpp"
#include "vrg/rng.hpp"

namespace vrg {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ConfigError("train: adam betas must lie in [0, 1)");
    }
    if (adam_eps <= 0.0) throw ConfigError("train: adam eps must be > 0");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    model.validate();
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0) {
    if (total_steps < 1) throw ConfigError("cosine_lr: total_steps must be >= 1");
    if (step > total_steps) throw ConfigError("cosine_lr: step beyond total_steps");
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

AdamW::AdamW(std::vector<Param*> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps),
      weight_decay_(cfg.weight_decay) {
    slots_.reserve(params_.size());
    for (Param* p : params_) {
        slots_.push_back({Tensor(p->value.shape()), Tensor(p->value.shape())});
    }
}

void AdamW::step(double lr) {
    ++steps_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Param& p = *params_[pi];
        if (!p.grad.all_finite()) {
            throw NumericalError("adamw: non-finite gradient in " +
                                 (p.name.empty() ? "param " + std::to_string(pi) : p.name));
        }
        Slot& s = slots_[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
            s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
            const double m_hat = s.m[i] / bc1;
            const double v_hat = s.v[i] / bc2;
            p.value[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * p.value[i]);
        }
        p.zero_grad();
    }
}

TrainResult train(const EmbeddingBundle& bundle, const TrainConfig& cfg, std::ostream* progress) {
    cfg.validate();
    bundle.validate();

    Model model = Model::build(bundle, cfg.model);
    AdamW optimizer(model.learnables(), cfg);

    const std::size_t n = bundle.split("train").size();
    const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = cfg.epochs * batches_per_epoch;

    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;

    TrainResult result;
    std::size_t global_step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.model.seed, streams::kShuffle, epoch));
        shuffle_rng.shuffle(indices);

        double epoch_loss = 0.0;
        std::size_t correct = 0;
        double last_lr = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            const Model::Batch batch = Model::gather(
                bundle, "train", std::span<const std::size_t>(indices.data() + start, len));

            Tape tape;
            const Model::ForwardValues fwd = model.loss_on_batch(
                tape, batch, SampleKey::training(cfg.model.seed, global_step));
            const double loss = tape.value(fwd.loss)[0];
            if (!std::isfinite(loss)) throw NumericalError("train: loss diverged");
            tape.backward(fwd.loss);

            last_lr = cosine_lr(global_step, total_steps, cfg.lr);
            optimizer.step(last_lr);
            ++global_step;

            epoch_loss += loss * static_cast<double>(len);
            const Tensor& logits = tape.value(fwd.fused);
            for (std::size_t r = 0; r < len; ++r) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < logits.dim(1); ++c) {
                    if (logits(r, c) > logits(r, best)) best = c;
                }
                if (static_cast<std::int32_t>(best) == batch.labels[r]) ++correct;
            }
        }

        EpochStats stats{epoch, global_step, last_lr, epoch_loss / static_cast<double>(n),
                         static_cast<double>(correct) / static_cast<double>(n)};
        result.log.push_back(stats);
        if (progress) {
            (*progress) << "{\"epoch\":" << stats.epoch << ",\"step\":" << stats.step
                        << ",\"lr\":" << stats.lr << ",\"train_loss\":" << stats.train_loss
                        << ",\"train_acc\":" << stats.train_acc << "}\n";
        }
    }

    result.checkpoint = model.to_checkpoint();
    return result;
}

EvalResult evaluate(Model& model, const EmbeddingBundle& bundle, const std::string& split_name) {
    const SplitData& split = bundle.split(split_name);
    const std::size_t n = split.size();
    const std::size_t C = model.class_count();

    EvalResult result;
    result.n = n;
    result.per_class_accuracy.assign(C, 0.0);
    std::vector<std::size_t> per_class_total(C, 0), per_class_correct(C, 0);

    const std::size_t chunk = 256;
    std::vector<std::size_t> indices;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t len = std::min(chunk, n - start);
        indices.resize(len);
        for (std::size_t i = 0; i < len; ++i) indices[i] = start + i;
        const Model::Batch batch = Model::gather(bundle, split_name, indices);
        const Tensor logits = model.fused_logits(batch, SampleKey::eval());
        const LossValue lv = softmax_ce(logits, batch.labels);
        loss_sum += lv.loss * static_cast<double>(len);
        for (std::size_t r = 0; r < len; ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < C; ++c) {
                if (logits(r, c) > logits(r, best)) best = c;
            }
            const auto y = static_cast<std::size_t>(batch.labels[r]);
            ++per_class_total[y];
            if (best == y) {
                ++correct;
                ++per_class_correct[y];
            }
        }
    }

    result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    result.mean_loss = loss_sum / static_cast<double>(n);
    for (std::size_t c = 0; c < C; ++c) {
        result.per_class_accuracy[c] =
            per_class_total[c] == 0
                ? 0.0
                : static_cast<double>(per_class_correct[c]) / static_cast<double>(per_class_total[c]);
    }
    return result;
}

EvalResult evaluate(const Checkpoint& ckpt, const EmbeddingBundle& bundle,
                    const std::string& split) {
    Model model = Model::restore(bundle, ckpt);
    return evaluate(model, bundle, split);
}

GradCheckReport pipeline_grad_check(std::uint64_t seed, double tol) {
    SynthConfig synth;
    synth.classes = 6;
    synth.train_per_class = 4;
    synth.test_per_class = 2;
    synth.descriptions = 5;
    synth.text_dim = 8;
    synth.aux_dims = {8, 6};
    synth.seed = seed;
    const EmbeddingBundle bundle = synth_generate(synth);

    ModelConfig mc;
    mc.adapter.hidden = 4;
    mc.seed = seed;
    Model model = Model::build(bundle, mc);

    const std::size_t n = bundle.split("train").size();
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    const Model::Batch batch = Model::gather(bundle, "train", indices);
    const SampleKey key = SampleKey::training(seed, 0); // fixed eps

    const auto objective = [&](bool fill_grads) {
        Tape tape;
        const Model::ForwardValues fwd = model.loss_on_batch(tape, batch, key);
        if (fill_grads) tape.backward(fwd.loss);
        return tape.value(fwd.loss)[0];
    };

    GradCheckOptions opts;
    opts.tol = tol;
    opts.seed = seed;
    return grad_check(objective, model.learnables(), opts);
}

std::vector<SweepRow> sweep(const EmbeddingBundle& bundle, const TrainConfig& base,
                            const std::vector<double>& lambda_grid,
                            const std::vector<double>& beta_grid, const std::string& split) {
    if (lambda_grid.empty() || beta_grid.empty()) {
        throw ConfigError("sweep: lambda and beta grids must be non-empty");
    }
    std::vector<SweepRow> rows;
    for (double lambda : lambda_grid) {
        for (double beta : beta_grid) {
            TrainConfig cfg = base;
            cfg.model.fusion.lambda = lambda;
            cfg.model.fusion.beta = beta;
            const TrainResult tr = train(bundle, cfg);
            const EvalResult ev = evaluate(tr.checkpoint, bundle, split);
            rows.push_back({lambda, beta, ev.accuracy, ev.mean_loss});
        }
    }
    return rows;
}

} // namespace vrg
