#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vrg/tensor.hpp"

namespace vrg {

// Plain forward kernels, shared by the tape ops and the evaluation paths.
Tensor matmul(const Tensor& a, const Tensor& b);    // [m x k] . [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b); // [m x k] . [n x k]^T
Tensor elu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor l2_normalize_rows(const Tensor& x); // DataError on a zero-norm row

enum class Activation { elu, relu };
Tensor activation(Activation kind, const Tensor& x);

// Clamp used for the derivative of sqrt: the forward value stays exact
// sqrt(x), the gradient is 0.5 / max(sqrt(x), kSqrtGradFloor).
inline constexpr double kSqrtGradFloor = 1e-6;

// Reverse-mode tape over whole tensors. Ops append a node holding the forward
// value and a closure that routes the node's gradient to its parents; nodes
// are created in topological order, so backward() is a reverse walk. Every op
// validates shapes and rejects non-finite outputs.
class Tape {
public:
    using ValueId = int;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    ValueId leaf(Tensor value);
    // Gradient accumulates into p.grad when backward() runs.
    ValueId param(Param& p);

    const Tensor& value(ValueId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    // Extra forward output cached by fused ops (softmax probabilities).
    const Tensor& aux(ValueId id) const { return nodes_[static_cast<std::size_t>(id)].aux; }
    // Gradient w.r.t. a node, valid after backward().
    const Tensor& grad(ValueId id) const { return grads_[static_cast<std::size_t>(id)]; }

    ValueId matmul(ValueId a, ValueId b);
    ValueId matmul_nt(ValueId a, ValueId b);
    ValueId add(ValueId a, ValueId b);
    ValueId sub(ValueId a, ValueId b);
    ValueId mul(ValueId a, ValueId b); // elementwise
    ValueId scale(ValueId a, double c);
    ValueId elu(ValueId a);
    ValueId relu(ValueId a);
    ValueId sqrt_clamped(ValueId a); // DataError on negative input
    ValueId row_l2_normalize(ValueId a);
    // Scales row r of `a` [n x c] by s[r]; `s` is rank 1 of length n.
    ValueId row_scale(ValueId a, ValueId s);
    // Normalized kurtosis per row of [n x c], raised to `lambda`; constant
    // rows map to 0. With detach=true the result is treated as a constant.
    ValueId kurtosis_rows(ValueId a, double lambda, double sigma_floor, bool detach = false);
    // Mean over rows of -log softmax(logits)[label]; aux() holds the [n x c]
    // probabilities. DataError on an out-of-range label.
    ValueId softmax_cross_entropy(ValueId logits, const std::vector<std::int32_t>& labels);
    ValueId sum(ValueId a); // scalar

    // Seeds the (scalar) root with gradient 1 and flushes every param(...)
    // node's gradient into its Param.
    void backward(ValueId root);

private:
    struct Node {
        Tensor value;
        Tensor aux;
        std::function<void(Tape&, const Tensor& g)> backward;
    };

    ValueId push(Tensor value, std::function<void(Tape&, const Tensor& g)> back);
    void accumulate(ValueId id, const Tensor& delta);
    Tensor& grad_buffer(ValueId id) { return grads_[static_cast<std::size_t>(id)]; }

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<std::pair<ValueId, Param*>> params_;
};

} // namespace vrg
