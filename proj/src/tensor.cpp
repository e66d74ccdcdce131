#include "msmha/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "msmha/kernels.hpp"

namespace msmha {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 3) {
        throw ShapeError("tensor rank must be 1-3, got " + std::to_string(shape.size()));
    }
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive: " + shape_to_string(shape));
    }
}

template <typename T>
void require_rank2(const Tensor<T>& x, const char* op) {
    if (x.rank() != 2) {
        throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " + shape_to_string(x.shape()));
    }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
}

template <typename T>
void accumulate(std::vector<T>* dst, std::span<const T> src) {
    if (dst == nullptr) return;
    for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::create(Shape shape, std::vector<T> values, bool requires_grad) {
    check_shape(shape);
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor_create: " + std::to_string(values.size()) + " values do not fill shape " +
                         shape_to_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    check_shape(shape);
    const std::size_t n = shape_numel(shape);
    return create(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_op(Shape shape, std::vector<T> values, std::vector<Tensor> parents, BackwardFn backward) {
    Tensor out = create(std::move(shape), std::move(values), false);
    Node& node = *out.node_;
    node.parents.reserve(parents.size());
    for (const Tensor& p : parents) {
        node.parents.push_back(p.node_);
        node.requires_grad = node.requires_grad || p.requires_grad();
    }
    if (node.requires_grad) node.backward = std::move(backward);
    return out;
}

template <typename T>
const typename Tensor<T>::Node& Tensor<T>::node() const {
    if (!node_) throw ArgumentError("use of an undefined tensor");
    return *node_;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
    return node().shape;
}

template <typename T>
std::size_t Tensor<T>::rows() const {
    const Shape& s = shape();
    return s.size() == 1 ? 1 : s[s.size() - 2];
}

template <typename T>
std::size_t Tensor<T>::cols() const {
    return shape().back();
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
    return node().values;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
    node();
    return node_->values;
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) throw ShapeError("item() on a tensor of shape " + shape_to_string(shape()));
    return data()[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
    return node().requires_grad;
}

template <typename T>
bool Tensor<T>::is_leaf() const {
    return node().parents.empty();
}

template <typename T>
std::size_t Tensor<T>::parent_count() const {
    return node().parents.size();
}

template <typename T>
bool Tensor<T>::is_parent(std::size_t index, const Tensor& other) const {
    const auto& parents = node().parents;
    return index < parents.size() && parents[index] == other.node_;
}

template <typename T>
Tensor<T> Tensor<T>::detach(bool requires_grad) const {
    return create(shape(), std::vector<T>(data().begin(), data().end()), requires_grad);
}

// ---- GradientMap / backward ---------------------------------------------

template <typename T>
const Tensor<T>& GradientMap<T>::at(const Tensor<T>& leaf) const {
    auto it = grads_.find(leaf.id());
    if (it == grads_.end()) throw ArgumentError("no gradient recorded for the requested tensor");
    return it->second;
}

template <typename T>
void GradientMap<T>::insert(const Tensor<T>& leaf, Tensor<T> grad) {
    if (grad.shape() != leaf.shape()) throw ShapeError("gradient shape differs from leaf shape");
    grads_.insert_or_assign(leaf.id(), std::move(grad));
}

template <typename T>
GradientMap<T> backward(const Tensor<T>& loss, std::span<const Tensor<T>> leaves) {
    using Node = typename Tensor<T>::Node;
    if (loss.numel() != 1) {
        throw ArgumentError("backward: loss must be a scalar, got shape " + shape_to_string(loss.shape()));
    }

    // Iterative post-order DFS over nodes that carry gradients.
    std::vector<const Node*> order;
    std::unordered_set<const Node*> visited;
    std::vector<std::pair<const Node*, std::size_t>> stack;
    const Node* root = loss.node_.get();
    if (root->requires_grad) {
        stack.emplace_back(root, 0);
        visited.insert(root);
    }
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            const Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    std::unordered_map<const Node*, std::vector<T>> grads;
    if (root->requires_grad) grads[root] = std::vector<T>{T(1)};

    std::vector<std::vector<T>*> parent_grads;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Node* node = *it;
        if (!node->backward) continue;
        auto found = grads.find(node);
        if (found == grads.end()) continue;
        parent_grads.assign(node->parents.size(), nullptr);
        for (std::size_t i = 0; i < node->parents.size(); ++i) {
            const Node* parent = node->parents[i].get();
            if (!parent->requires_grad) continue;
            auto& g = grads[parent];
            if (g.empty()) g.assign(parent->values.size(), T(0));
            parent_grads[i] = &g;
        }
        // grads may rehash above; look the output gradient up again.
        const std::vector<T>& grad_out = grads.at(node);
        node->backward(grad_out, parent_grads);
    }

    GradientMap<T> result;
    for (const Tensor<T>& leaf : leaves) {
        auto found = grads.find(leaf.node_.get());
        if (found != grads.end()) {
            result.insert(leaf, Tensor<T>::create(leaf.shape(), std::move(found->second)));
            grads.erase(found);
        } else if (!result.contains(leaf)) {
            result.insert(leaf, Tensor<T>::zeros(leaf.shape()));
        }
    }
    return result;
}

// ---- linear algebra ------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner extents differ " + shape_to_string(a.shape()) + " · " +
                         shape_to_string(b.shape()));
    }
    std::vector<T> out(m * n, T(0));
    kernels::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    return Tensor<T>::from_op({m, n}, std::move(out), {a, b},
                              [a, b, m, k, n](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  if (pg[0]) kernels::gemm_nt(g.data(), b.data().data(), pg[0]->data(), m, n, k);
                                  if (pg[1]) kernels::gemm_tn(a.data().data(), g.data(), pg[1]->data(), k, m, n);
                              });
}

template <typename T>
Tensor<T> matmul_transposed(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank2(a, "matmul_transposed");
    require_rank2(b, "matmul_transposed");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) {
        throw ShapeError("matmul_transposed: inner extents differ " + shape_to_string(a.shape()) + " · " +
                         shape_to_string(b.shape()) + "ᵀ");
    }
    std::vector<T> out(m * n, T(0));
    kernels::gemm_nt(a.data().data(), b.data().data(), out.data(), m, k, n);
    return Tensor<T>::from_op({m, n}, std::move(out), {a, b},
                              [a, b, m, k, n](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  // dA = G·B, dB = Gᵀ·A
                                  if (pg[0]) kernels::gemm_nn(g.data(), b.data().data(), pg[0]->data(), m, n, k);
                                  if (pg[1]) kernels::gemm_tn(g.data(), a.data().data(), pg[1]->data(), n, m, k);
                              });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
    require_rank2(x, "transpose");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<T> out(m * n);
    auto xd = x.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xd[i * n + j];
    return Tensor<T>::from_op({n, m}, std::move(out), {x},
                              [m, n](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  auto& dx = *pg[0];
                                  for (std::size_t i = 0; i < m; ++i)
                                      for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += g[j * m + i];
                              });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    require_rank2(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    auto xd = x.data();
    std::vector<T> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = xd.data() + i * n;
        T* o = out.data() + i * n;
        const T mx = *std::max_element(row, row + n);
        T total = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            o[j] = std::exp(row[j] - mx);
            total += o[j];
        }
        for (std::size_t j = 0; j < n; ++j) o[j] /= total;
    }
    std::vector<T> y = out;
    return Tensor<T>::from_op({m, n}, std::move(out), {x},
                              [y = std::move(y), m, n](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  auto& dx = *pg[0];
                                  for (std::size_t i = 0; i < m; ++i) {
                                      const T* yr = y.data() + i * n;
                                      const T* gr = g.data() + i * n;
                                      const T inner = kernels::dot(yr, gr, n);
                                      for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += yr[j] * (gr[j] - inner);
                                  }
                              });
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias) {
    require_rank2(x, "add_row_bias");
    const std::size_t m = x.rows(), n = x.cols();
    if (bias.numel() != n || bias.rows() != 1) {
        throw ShapeError("add_row_bias: bias " + shape_to_string(bias.shape()) + " does not match width " +
                         std::to_string(n));
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    auto bd = bias.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bd[j];
    return Tensor<T>::from_op({m, n}, std::move(out), {x, bias},
                              [m, n](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  accumulate(pg[0], g);
                                  if (pg[1]) {
                                      auto& db = *pg[1];
                                      for (std::size_t i = 0; i < m; ++i)
                                          for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
                                  }
                              });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight) {
    return matmul(x, weight);
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
    return add_row_bias(matmul(x, weight), bias);
}

template <typename T>
Tensor<T> concat_features(std::span<const Tensor<T>> parts) {
    if (parts.empty()) throw ArgumentError("concat_features: empty part list");
    const std::size_t m = parts.front().rows();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Tensor<T>& p : parts) {
        require_rank2(p, "concat_features");
        if (p.rows() != m) {
            throw ShapeError("concat_features: row count " + std::to_string(p.rows()) + " differs from " +
                             std::to_string(m));
        }
        widths.push_back(p.cols());
        total += p.cols();
    }
    std::vector<T> out(m * total);
    std::size_t offset = 0;
    for (const Tensor<T>& p : parts) {
        const std::size_t w = p.cols();
        auto pd = p.data();
        for (std::size_t i = 0; i < m; ++i) std::copy_n(pd.data() + i * w, w, out.data() + i * total + offset);
        offset += w;
    }
    std::vector<Tensor<T>> parents(parts.begin(), parts.end());
    return Tensor<T>::from_op({m, total}, std::move(out), std::move(parents),
                              [widths, m, total](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  std::size_t off = 0;
                                  for (std::size_t k = 0; k < widths.size(); ++k) {
                                      const std::size_t w = widths[k];
                                      if (pg[k]) {
                                          auto& d = *pg[k];
                                          for (std::size_t i = 0; i < m; ++i)
                                              for (std::size_t j = 0; j < w; ++j) d[i * w + j] += g[i * total + off + j];
                                      }
                                      off += w;
                                  }
                              });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t width) {
    require_rank2(x, "slice_cols");
    const std::size_t m = x.rows(), n = x.cols();
    if (width == 0 || begin + width > n) {
        throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + width) +
                         ") out of range for width " + std::to_string(n));
    }
    std::vector<T> out(m * width);
    auto xd = x.data();
    for (std::size_t i = 0; i < m; ++i) std::copy_n(xd.data() + i * n + begin, width, out.data() + i * width);
    return Tensor<T>::from_op({m, width}, std::move(out), {x},
                              [m, n, begin, width](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  auto& dx = *pg[0];
                                  for (std::size_t i = 0; i < m; ++i)
                                      for (std::size_t j = 0; j < width; ++j) dx[i * n + begin + j] += g[i * width + j];
                              });
}

// ---- elementwise / reductions -------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    std::vector<T> out(a.data().begin(), a.data().end());
    auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
    return Tensor<T>::from_op(a.shape(), std::move(out), {a, b},
                              [](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  accumulate(pg[0], g);
                                  accumulate(pg[1], g);
                              });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "sub");
    std::vector<T> out(a.data().begin(), a.data().end());
    auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
    return Tensor<T>::from_op(a.shape(), std::move(out), {a, b},
                              [](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  accumulate(pg[0], g);
                                  if (pg[1])
                                      for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] -= g[i];
                              });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mul");
    std::vector<T> out(a.numel());
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
    return Tensor<T>::from_op(a.shape(), std::move(out), {a, b},
                              [a, b](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  auto ad = a.data();
                                  auto bd = b.data();
                                  if (pg[0])
                                      for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * bd[i];
                                  if (pg[1])
                                      for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] += g[i] * ad[i];
                              });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, std::type_identity_t<T> factor) {
    std::vector<T> out(x.data().begin(), x.data().end());
    for (T& v : out) v *= factor;
    return Tensor<T>::from_op(x.shape(), std::move(out), {x},
                              [factor](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  kernels::axpy(factor, g.data(), pg[0]->data(), g.size());
                              });
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
    require_rank2(x, "mean_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<T> out(n, T(0));
    auto xd = x.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += xd[i * n + j];
    const T inv = T(1) / static_cast<T>(m);
    for (T& v : out) v *= inv;
    return Tensor<T>::from_op({1, n}, std::move(out), {x},
                              [m, n, inv](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  for (std::size_t i = 0; i < m; ++i)
                                      kernels::axpy(inv, g.data(), pg[0]->data() + i * n, n);
                              });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    T total = T(0);
    for (T v : x.data()) total += v;
    return Tensor<T>::from_op({1}, {total}, {x}, [](std::span<const T> g, std::span<std::vector<T>* const> pg) {
        for (T& d : *pg[0]) d += g[0];
    });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, std::type_identity_t<T> eps) {
    require_rank2(x, "layer_norm");
    const std::size_t m = x.rows(), n = x.cols();
    if (n < 2) throw ShapeError("layer_norm: feature width must be at least 2");
    if (gain.numel() != n || bias.numel() != n) throw ShapeError("layer_norm: gain/bias width mismatch");
    auto xd = x.data();
    auto gd = gain.data();
    auto bd = bias.data();
    std::vector<T> xhat(m * n);
    std::vector<T> rstd(m);
    std::vector<T> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = xd.data() + i * n;
        T mean = T(0);
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<T>(n);
        T var = T(0);
        for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<T>(n);
        rstd[i] = T(1) / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            xhat[i * n + j] = (row[j] - mean) * rstd[i];
            out[i * n + j] = xhat[i * n + j] * gd[j] + bd[j];
        }
    }
    return Tensor<T>::from_op(
        {m, n}, std::move(out), {x, gain, bias},
        [gain, xhat = std::move(xhat), rstd = std::move(rstd), m, n](std::span<const T> g,
                                                                      std::span<std::vector<T>* const> pg) {
            auto gd = gain.data();
            std::vector<T> dxhat(n);
            for (std::size_t i = 0; i < m; ++i) {
                const T* gr = g.data() + i * n;
                const T* xr = xhat.data() + i * n;
                if (pg[1])
                    for (std::size_t j = 0; j < n; ++j) (*pg[1])[j] += gr[j] * xr[j];
                if (pg[2])
                    for (std::size_t j = 0; j < n; ++j) (*pg[2])[j] += gr[j];
                if (!pg[0]) continue;
                T sum_d = T(0), sum_dx = T(0);
                for (std::size_t j = 0; j < n; ++j) {
                    dxhat[j] = gr[j] * gd[j];
                    sum_d += dxhat[j];
                    sum_dx += dxhat[j] * xr[j];
                }
                const T nn = static_cast<T>(n);
                for (std::size_t j = 0; j < n; ++j)
                    (*pg[0])[i * n + j] += rstd[i] / nn * (nn * dxhat[j] - sum_d - xr[j] * sum_dx);
            }
        });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    std::vector<T> out(x.numel());
    auto xd = x.data();
    const T inv_sqrt2 = T(1) / std::sqrt(T(2));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(0.5) * xd[i] * (T(1) + std::erf(xd[i] * inv_sqrt2));
    return Tensor<T>::from_op(x.shape(), std::move(out), {x},
                              [x, inv_sqrt2](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
                                  auto xd = x.data();
                                  for (std::size_t i = 0; i < g.size(); ++i) {
                                      const T v = xd[i];
                                      const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
                                      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
                                      (*pg[0])[i] += g[i] * (cdf + v * pdf);
                                  }
                              });
}

// ---- finite differences -------------------------------------------------

template <typename T>
Tensor<T> finite_diff_grad(const std::function<T()>& f, Tensor<T>& x, T eps) {
    if (!(eps > T(0))) throw ArgumentError("finite_diff_grad: eps must be positive");
    auto xd = x.mutable_data();
    std::vector<T> out(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) {
        const T saved = xd[i];
        xd[i] = saved + eps;
        const T plus = f();
        xd[i] = saved - eps;
        const T minus = f();
        xd[i] = saved;
        out[i] = (plus - minus) / (T(2) * eps);
    }
    return Tensor<T>::create(x.shape(), std::move(out));
}

template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps) {
    Tensor<T> probe = x.detach();
    std::function<T()> g = [&] { return f(probe); };
    return finite_diff_grad(g, probe, eps);
}

#define MSMHA_INSTANTIATE(T)                                                                                    \
    template class Tensor<T>;                                                                                   \
    template class GradientMap<T>;                                                                              \
    template GradientMap<T> backward(const Tensor<T>&, std::span<const Tensor<T>>);                             \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                              \
    template Tensor<T> matmul_transposed(const Tensor<T>&, const Tensor<T>&);                                   \
    template Tensor<T> transpose(const Tensor<T>&);                                                             \
    template Tensor<T> softmax_rows(const Tensor<T>&);                                                          \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&);                                              \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                            \
    template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);                                        \
    template Tensor<T> concat_features(std::span<const Tensor<T>>);                                             \
    template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                                  \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> scale(const Tensor<T>&, std::type_identity_t<T>);                                        \
    template Tensor<T> mean_rows(const Tensor<T>&);                                                             \
    template Tensor<T> sum(const Tensor<T>&);                                                                   \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::type_identity_t<T>); \
    template Tensor<T> gelu(const Tensor<T>&);                                                                  \
    template Tensor<T> finite_diff_grad(const std::function<T()>&, Tensor<T>&, T);                              \
    template Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>&, const Tensor<T>&, T);

MSMHA_INSTANTIATE(float)
MSMHA_INSTANTIATE(double)

#undef MSMHA_INSTANTIATE

}  // namespace msmha
