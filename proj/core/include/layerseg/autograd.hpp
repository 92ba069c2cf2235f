#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "layerseg/label_mask.hpp"
#include "layerseg/ops.hpp"
#include "layerseg/tensor.hpp"

// Reverse-mode differentiation over a tape of shared nodes. A forward pass
// builds the graph; backward() walks it once in reverse topological order and
// accumulates d(loss)/d(theta) into every reachable Parameter.
namespace layerseg::ag {

// A named, trainable tensor. grad always mirrors value's shape and collects
// across backward() calls until the optimizer clears it.
template <typename S>
struct Parameter {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor<S> v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(S(0)); }
};

template <typename S>
struct Node {
    Tensor<S> value;
    Tensor<S> grad;  // sized lazily by backward()
    std::vector<std::shared_ptr<Node>> parents;
    // Pushes this node's grad into its parents' grads. Empty for leaves.
    std::function<void(Node&)> backprop;
    Parameter<S>* param = nullptr;
};

// Value-semantics handle on a graph node.
template <typename S>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<S>> n) : node_(std::move(n)) {}

    const Tensor<S>& value() const { return node_->value; }

    // Populated by backward(); throws if no backward pass has run.
    const Tensor<S>& grad() const {
        if (node_->grad.empty()) {
            throw ValueError("gradient not populated; backward() has not run over this node");
        }
        return node_->grad;
    }

    const std::shared_ptr<Node<S>>& node() const { return node_; }
    explicit operator bool() const { return node_ != nullptr; }

private:
    std::shared_ptr<Node<S>> node_;
};

// Leaves.
template <typename S>
Var<S> constant(Tensor<S> value);
template <typename S>
Var<S> leaf(Parameter<S>& p);

// Network primitives (each checks the same contracts as layerseg::ops).
template <typename S>
Var<S> conv2d(const Var<S>& input, const Var<S>& kernels, const Var<S>& bias, int padding);
template <typename S>
Var<S> maxpool2x2(const Var<S>& input);
template <typename S>
Var<S> upsample2x2(const Var<S>& input);
template <typename S>
Var<S> relu(const Var<S>& input);
template <typename S>
Var<S> concat_channels(const Var<S>& a, const Var<S>& b);
template <typename S>
Var<S> dense(const Var<S>& input, const Var<S>& weights, const Var<S>& bias);
template <typename S>
Var<S> softmax_over_classes(const Var<S>& input);
template <typename S>
Var<S> reshape(const Var<S>& input, Shape shape);

// Reductions and glue.
template <typename S>
Var<S> sum(const Var<S>& input);
template <typename S>
Var<S> scale(const Var<S>& input, S factor);
template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b);

// Losses (sum reduction; scale() by 1/count for the mean).
template <typename S>
Var<S> cross_entropy_sum(const Var<S>& probs, const LabelMask& labels);
template <typename S>
Var<S> mse_sum(const Var<S>& pred, const Tensor<S>& target);

// Seeds d(loss)/d(loss) = 1, sweeps the graph in reverse topological order,
// then adds each parameter leaf's gradient into Parameter::grad. Requires a
// scalar loss. Calling it twice accumulates twice.
template <typename S>
void backward(const Var<S>& loss);

}  // namespace layerseg::ag
