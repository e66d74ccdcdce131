#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "msmha/errors.hpp"

namespace msmha {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename T>
class Tensor;
template <typename T>
class GradientMap;
template <typename T>
GradientMap<T> backward(const Tensor<T>& loss, std::span<const Tensor<T>> leaves);

// Dense row-major tensor of rank 1-3 with an optional autodiff record.
//
// A Tensor is a cheap handle: copies share the underlying node. Values are
// immutable once constructed; the one exception is mutable_data(), which the
// optimizer and finite-difference checks use on leaf parameters between
// passes. Graphs live as long as the handles that reference them, so a
// forward pass's graph is released together with its output.
template <typename T>
class Tensor {
public:
    using value_type = T;
    // parent_grads[i] is null when parent i does not need a gradient.
    using BackwardFn = std::function<void(std::span<const T> grad_out, std::span<std::vector<T>* const> parent_grads)>;

    Tensor() = default;

    static Tensor create(Shape shape, std::vector<T> values, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);

    // Builds an operation result. The result tracks gradients iff any parent
    // does; `backward` is dropped otherwise.
    static Tensor from_op(Shape shape, std::vector<T> values, std::vector<Tensor> parents, BackwardFn backward);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const { return data().size(); }
    // Rank-2 accessors; rank-1 tensors read as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const T> data() const;
    std::span<T> mutable_data();
    T at(std::size_t i) const { return data()[i]; }
    T at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }
    T item() const;

    bool requires_grad() const;
    bool is_leaf() const;
    std::size_t parent_count() const;
    bool is_parent(std::size_t index, const Tensor& other) const;

    // Identity of the underlying node; used as the GradientMap key.
    const void* id() const { return node_.get(); }

    // Fresh leaf holding a copy of the values.
    Tensor detach(bool requires_grad = false) const;

private:
    struct Node {
        Shape shape;
        std::vector<T> values;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        BackwardFn backward;
    };

    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    const Node& node() const;

    std::shared_ptr<Node> node_;

    template <typename U>
    friend class GradientMap;
    template <typename U>
    friend GradientMap<U> backward(const Tensor<U>& loss, std::span<const Tensor<U>> leaves);
};

// Leaf identity -> gradient of the same shape.
template <typename T>
class GradientMap {
public:
    const Tensor<T>& at(const Tensor<T>& leaf) const;
    bool contains(const Tensor<T>& leaf) const { return grads_.count(leaf.id()) != 0; }
    std::size_t size() const { return grads_.size(); }
    void insert(const Tensor<T>& leaf, Tensor<T> grad);

private:
    std::unordered_map<const void*, Tensor<T>> grads_;
};

// Reverse-mode gradients of a scalar loss w.r.t. each requested leaf. Leaves
// that do not influence the loss receive zeros.
template <typename T>
GradientMap<T> backward(const Tensor<T>& loss, std::span<const Tensor<T>> leaves);

template <typename T>
GradientMap<T> backward(const Tensor<T>& loss, const std::vector<Tensor<T>>& leaves) {
    return backward(loss, std::span<const Tensor<T>>(leaves));
}

// ---- operations -----------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// a · bᵀ without materializing the transpose.
template <typename T>
Tensor<T> matmul_transposed(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

// Row-wise softmax with per-row max subtraction.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight);
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
// x[L×E] + bias[E] broadcast over rows.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> concat_features(std::span<const Tensor<T>> parts);
template <typename T>
Tensor<T> concat_features(const std::vector<Tensor<T>>& parts) {
    return concat_features(std::span<const Tensor<T>>(parts));
}
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t width);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, std::type_identity_t<T> factor);
// [L×D] -> [1×D]
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x);
// Any shape -> [1]
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

inline constexpr double kLayerNormEps = 1e-5;

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     std::type_identity_t<T> eps = T(kLayerNormEps));

// Exact (erf-based) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// Central differences (f(x+εe) - f(x-εe)) / 2ε for every element of x.
// x is perturbed in place and restored; f must read x's current values.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T()>& f, Tensor<T>& x, T eps);

template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps);

}  // namespace msmha
