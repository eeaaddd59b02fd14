#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "vrg/bundle.hpp"
#include "vrg/checkpoint.hpp"
#include "vrg/grad_check.hpp"
#include "vrg/model.hpp"

namespace vrg {

struct TrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    // The engine is single-threaded and runs fixed-order reductions, so runs
    // are bit-reproducible regardless; the flag records the contract and
    // gates any future parallel kernels.
    bool deterministic = true;
    ModelConfig model;

    void validate() const; // ConfigError
};

// lr0 * 0.5 * (1 + cos(pi * step / total_steps)); nonincreasing in step.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0);

// Decoupled-weight-decay Adam with bias correction:
//   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
class AdamW {
public:
    AdamW(std::vector<Param*> params, const TrainConfig& cfg);

    // Consumes the gradients currently held by the params (and zeroes them).
    // Throws NumericalError on a non-finite gradient.
    void step(double lr);
    std::size_t steps_taken() const { return steps_; }

private:
    struct Slot {
        Tensor m;
        Tensor v;
    };
    std::vector<Param*> params_;
    std::vector<Slot> slots_;
    double beta1_, beta2_, eps_, weight_decay_;
    std::size_t steps_ = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t step = 0; // optimizer steps taken so far
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochStats> log;
};

// Full optimization loop: per epoch, shuffle the train indices with the
// seeded stream, then per batch run the train-mode pipeline, backprop, take
// an AdamW step on the cosine schedule. The last partial batch is kept.
// Writes one metrics line per epoch to `progress` when given.
TrainResult train(const EmbeddingBundle& bundle, const TrainConfig& cfg,
                  std::ostream* progress = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<double> per_class_accuracy;
    std::size_t n = 0;
};

// Deterministic eval-mode (eps = 0) pass over a split; argmax of the fused
// logits. Throws DataError if the split is absent.
EvalResult evaluate(Model& model, const EmbeddingBundle& bundle, const std::string& split);
EvalResult evaluate(const Checkpoint& ckpt, const EmbeddingBundle& bundle,
                    const std::string& split);

// Central-difference check of the full pipeline loss (adapter, residuals and
// confidence-weighted fusion) on a small synthetic instance with a fixed
// sampling key, covering every learnable tensor.
GradCheckReport pipeline_grad_check(std::uint64_t seed, double tol);

struct SweepRow {
    double lambda = 0.0;
    double beta = 0.0;
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Retrains per (lambda, beta) grid point and evaluates on `split`.
std::vector<SweepRow> sweep(const EmbeddingBundle& bundle, const TrainConfig& base,
                            const std::vector<double>& lambda_grid,
                            const std::vector<double>& beta_grid, const std::string& split);

} // namespace vrg
