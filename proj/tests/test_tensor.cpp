#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "msmha/gradcheck.hpp"
#include "msmha/tensor.hpp"
#include "test_util.hpp"

using namespace msmha;
using testutil::random_tensor;

using T64 = Tensor<double>;

TEST(TensorCreate, IdentityValues) {
    const T64 t = T64::create({2, 2}, {1, 0, 0, 1});
    EXPECT_EQ(t.shape(), (Shape{2, 2}));
    EXPECT_EQ(t.at(0, 0), 1.0);
    EXPECT_EQ(t.at(0, 1), 0.0);
    EXPECT_EQ(t.at(1, 0), 0.0);
    EXPECT_EQ(t.at(1, 1), 1.0);
    EXPECT_TRUE(t.is_leaf());
    EXPECT_EQ(t.parent_count(), 0u);
    EXPECT_FALSE(t.requires_grad());
}

TEST(TensorCreate, RankOneScalar) {
    const T64 t = T64::create({1}, {3.5}, true);
    EXPECT_EQ(t.rank(), 1u);
    EXPECT_EQ(t.item(), 3.5);
    EXPECT_TRUE(t.requires_grad());
}

TEST(TensorCreate, LengthMismatchIsShapeError) {
    EXPECT_THROW(T64::create({2, 3}, {1, 2, 3, 4, 5}), ShapeError);
    EXPECT_THROW(T64::create({0, 3}, {}), ShapeError);
    EXPECT_THROW(T64::create({1, 1, 1, 1}, {1}), ShapeError);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    Rng rng(1);
    const T64 m = random_tensor<double>({2, 2}, rng);
    const T64 out = matmul(T64::create({2, 2}, {1, 0, 0, 1}), m);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.at(i), m.at(i));
}

TEST(Matmul, HandExample) {
    const T64 out = matmul(T64::create({2, 2}, {1, 2, 3, 4}), T64::create({2, 1}, {5, 6}));
    EXPECT_EQ(out.shape(), (Shape{2, 1}));
    EXPECT_EQ(out.at(0), 17.0);
    EXPECT_EQ(out.at(1), 39.0);
}

TEST(Matmul, InnerMismatch) {
    EXPECT_THROW(matmul(T64::zeros({2, 3}), T64::zeros({2, 3})), ShapeError);
}

TEST(Matmul, RecordsOperandsAsParents) {
    const T64 a = T64::zeros({2, 3}, true);
    const T64 b = T64::zeros({3, 1}, true);
    const T64 c = matmul(a, b);
    EXPECT_FALSE(c.is_leaf());
    ASSERT_EQ(c.parent_count(), 2u);
    EXPECT_TRUE(c.is_parent(0, a));
    EXPECT_TRUE(c.is_parent(1, b));
}

TEST(Softmax, Examples) {
    const T64 s = softmax_rows(T64::create({3, 2}, {0, 0, 1000, 1000, 0, std::log(3.0)}));
    EXPECT_NEAR(s.at(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(s.at(0, 1), 0.5, 1e-12);
    EXPECT_NEAR(s.at(1, 0), 0.5, 1e-12);
    EXPECT_NEAR(s.at(1, 1), 0.5, 1e-12);
    EXPECT_NEAR(s.at(2, 0), 0.25, 1e-12);
    EXPECT_NEAR(s.at(2, 1), 0.75, 1e-12);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(9);
        const T64 x = random_tensor<double>({rows, cols}, rng, 5.0);
        std::vector<double> shifted(x.data().begin(), x.data().end());
        for (std::size_t r = 0; r < rows; ++r) {
            const double c = rng.uniform(-100.0, 100.0);
            for (std::size_t j = 0; j < cols; ++j) shifted[r * cols + j] += c;
        }
        const T64 s = softmax_rows(x);
        const T64 s2 = softmax_rows(T64::create({rows, cols}, shifted));
        for (std::size_t r = 0; r < rows; ++r) {
            double total = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                EXPECT_GE(s.at(r, j), 0.0);
                EXPECT_NEAR(s.at(r, j), s2.at(r, j), 1e-6);
                total += s.at(r, j);
            }
            EXPECT_NEAR(total, 1.0, 1e-6);
        }
    }
}

TEST(Linear, Examples) {
    Rng rng(2);
    const T64 x = random_tensor<double>({3, 4}, rng);
    T64 eye = T64::zeros({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye.mutable_data()[i * 4 + i] = 1.0;
    const T64 same = linear(x, eye);
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(same.at(i), x.at(i));

    const T64 ones = linear(x, T64::zeros({4, 2}), T64::full({2}, 1.0));
    for (double v : ones.data()) EXPECT_EQ(v, 1.0);

    const T64 w = random_tensor<double>({4, 2}, rng);
    const auto expected = oracle::multiply(testutil::to_matrix(x), testutil::to_matrix(w));
    EXPECT_LT(testutil::max_abs_diff(testutil::to_matrix(linear(x, w)), expected), 1e-12);

    EXPECT_THROW(linear(x, T64::zeros({3, 2})), ShapeError);
    EXPECT_THROW(linear(x, w, T64::zeros({3})), ShapeError);
}

TEST(Concat, Examples) {
    Rng rng(4);
    const T64 a = random_tensor<double>({3, 2}, rng);
    const T64 single = concat_features(std::vector<T64>{a});
    EXPECT_EQ(single.shape(), a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(single.at(i), a.at(i));

    const T64 b = random_tensor<double>({3, 1}, rng);
    const T64 ab = concat_features(std::vector<T64>{a, b});
    EXPECT_EQ(ab.shape(), (Shape{3, 3}));
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_EQ(ab.at(r, 0), a.at(r, 0));
        EXPECT_EQ(ab.at(r, 1), a.at(r, 1));
        EXPECT_EQ(ab.at(r, 2), b.at(r, 0));
    }

    std::vector<T64> pyramid;
    for (std::size_t w = 512; w >= 4; w /= 2) pyramid.push_back(T64::zeros({2, w}));
    EXPECT_EQ(pyramid.size(), 8u);
    EXPECT_EQ(concat_features(pyramid).cols(), 1020u);
}

TEST(Concat, Errors) {
    EXPECT_THROW(concat_features(std::vector<T64>{}), ArgumentError);
    EXPECT_THROW(concat_features(std::vector<T64>{T64::zeros({2, 2}), T64::zeros({3, 2})}), ShapeError);
}

TEST(Concat, SliceRecoversPartsBitExactly) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t rows = 1 + rng.below(5);
        std::vector<T64> parts;
        for (std::size_t i = 0, n = 1 + rng.below(5); i < n; ++i)
            parts.push_back(random_tensor<double>({rows, 1 + rng.below(6)}, rng));
        const T64 joined = concat_features(parts);
        std::size_t offset = 0;
        for (const T64& p : parts) {
            const T64 back = slice_cols(joined, offset, p.cols());
            ASSERT_EQ(back.shape(), p.shape());
            for (std::size_t i = 0; i < p.numel(); ++i) EXPECT_EQ(back.at(i), p.at(i));
            offset += p.cols();
        }
    }
}

TEST(Elementwise, Examples) {
    Rng rng(6);
    const T64 x = random_tensor<double>({2, 3}, rng);
    const T64 added = add(x, T64::zeros({2, 3}));
    const T64 scaled = scale(x, 1.0);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        EXPECT_EQ(added.at(i), x.at(i));
        EXPECT_EQ(scaled.at(i), x.at(i));
    }
    const T64 m = mean_rows(T64::create({2, 2}, {1, 3, 5, 7}));
    EXPECT_EQ(m.at(0), 3.0);
    EXPECT_EQ(m.at(1), 5.0);
    EXPECT_THROW(add(x, T64::zeros({3, 2})), ShapeError);
    EXPECT_THROW(sub(x, T64::zeros({2, 2})), ShapeError);
    EXPECT_THROW(mul(x, T64::zeros({1, 3})), ShapeError);
}

TEST(LayerNorm, Examples) {
    const T64 gain = T64::full({4}, 1.0), bias = T64::zeros({4});
    const T64 flat = layer_norm(T64::full({1, 4}, 2.5), gain, bias);
    for (double v : flat.data()) EXPECT_EQ(v, 0.0);

    const T64 unit = layer_norm(T64::create({1, 2}, {-1, 1}), T64::full({2}, 1.0), T64::zeros({2}));
    EXPECT_NEAR(unit.at(0), -1.0, 1e-5);
    EXPECT_NEAR(unit.at(1), 1.0, 1e-5);

    Rng rng(8);
    const T64 y = layer_norm(random_tensor<double>({1, 16}, rng, 3.0), T64::full({16}, 1.0), T64::zeros({16}));
    double mean = 0.0, var = 0.0;
    for (double v : y.data()) mean += v / 16.0;
    for (double v : y.data()) var += (v - mean) * (v - mean) / 16.0;
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);

    EXPECT_THROW(layer_norm(T64::zeros({2, 1}), T64::full({1}, 1.0), T64::zeros({1})), ShapeError);
}

TEST(Backward, Examples) {
    Rng rng(9);
    const T64 x = random_tensor<double>({3, 2}, rng, 1.0, true);
    const auto g1 = backward(sum(x), std::vector<T64>{x});
    for (double v : g1.at(x).data()) EXPECT_EQ(v, 1.0);

    const auto g2 = backward(sum(mul(x, x)), std::vector<T64>{x});
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(g2.at(x).at(i), 2.0 * x.at(i), 1e-12);

    EXPECT_THROW(backward(x, std::vector<T64>{x}), ArgumentError);
}

TEST(Backward, UnusedLeafGetsZeros) {
    const T64 x = T64::full({2}, 1.0, true);
    const T64 unused = T64::full({3}, 2.0, true);
    const auto g = backward(sum(x), std::vector<T64>{x, unused});
    EXPECT_EQ(g.size(), 2u);
    ASSERT_TRUE(g.contains(unused));
    EXPECT_EQ(g.at(unused).shape(), unused.shape());
    for (double v : g.at(unused).data()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, Examples) {
    Rng rng(10);
    const T64 x = random_tensor<double>({2, 3}, rng);
    const T64 ones = finite_diff_grad<double>([](const T64& t) { return sum(t).item(); }, x, 1e-5);
    for (double v : ones.data()) EXPECT_NEAR(v, 1.0, 1e-9);

    const T64 three = T64::create({1}, {3.0});
    const T64 d = finite_diff_grad<double>([](const T64& t) { return t.item() * t.item(); }, three, 1e-5);
    EXPECT_NEAR(d.item(), 6.0, 1e-6);
}

namespace {

// Checks every differentiable op against central differences by contracting
// its output with a fixed random tensor.
struct OpCase {
    std::string name;
    std::vector<Shape> inputs;
    std::function<T64(const std::vector<T64>&)> fn;
    double input_scale = 1.0;
};

std::vector<OpCase> op_cases() {
    return {
        {"matmul", {{3, 4}, {4, 2}}, [](const auto& in) { return matmul(in[0], in[1]); }},
        {"matmul_transposed", {{3, 4}, {5, 4}}, [](const auto& in) { return matmul_transposed(in[0], in[1]); }},
        {"transpose", {{3, 4}}, [](const auto& in) { return transpose(in[0]); }},
        {"softmax_rows", {{3, 5}}, [](const auto& in) { return softmax_rows(in[0]); }, 2.0},
        {"linear_bias", {{3, 4}, {4, 2}, {2}}, [](const auto& in) { return linear(in[0], in[1], in[2]); }},
        {"add_row_bias", {{3, 4}, {4}}, [](const auto& in) { return add_row_bias(in[0], in[1]); }},
        {"concat", {{3, 2}, {3, 3}}, [](const auto& in) { return concat_features(in); }},
        {"slice_cols", {{3, 6}}, [](const auto& in) { return slice_cols(in[0], 2, 3); }},
        {"add", {{2, 3}, {2, 3}}, [](const auto& in) { return add(in[0], in[1]); }},
        {"sub", {{2, 3}, {2, 3}}, [](const auto& in) { return sub(in[0], in[1]); }},
        {"mul", {{2, 3}, {2, 3}}, [](const auto& in) { return mul(in[0], in[1]); }},
        {"scale", {{2, 3}}, [](const auto& in) { return scale(in[0], -1.7); }},
        {"mean_rows", {{4, 3}}, [](const auto& in) { return mean_rows(in[0]); }},
        {"sum", {{4, 3}}, [](const auto& in) { return sum(in[0]); }},
        {"layer_norm", {{3, 5}, {5}, {5}}, [](const auto& in) { return layer_norm(in[0], in[1], in[2]); }},
        {"gelu", {{3, 4}}, [](const auto& in) { return gelu(in[0]); }, 2.0},
    };
}

}  // namespace

TEST(Autodiff, EveryOpMatchesFiniteDifferences) {
    for (const OpCase& op : op_cases()) {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(1000 + seed);
            std::vector<T64> inputs;
            for (const Shape& s : op.inputs) inputs.push_back(random_tensor<double>(s, rng, op.input_scale, true));
            const T64 probe = op.fn(inputs);
            const T64 weights = random_tensor<double>(probe.shape(), rng);
            auto loss = [&] { return sum(mul(op.fn(inputs), weights)); };
            const auto grads = backward(loss(), inputs);
            for (T64& leaf : inputs) {
                const T64 numeric = finite_diff_grad<double>([&] { return loss().item(); }, leaf, 1e-5);
                const auto analytic = grads.at(leaf).data();
                worst = std::max(worst, max_relative_error(analytic, numeric.data()));
            }
        }
        EXPECT_LE(worst, 1e-4) << op.name;
    }
}

TEST(Autodiff, NoNonFiniteOutputsForLargeInputs) {
    for (const OpCase& op : op_cases()) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(2000 + seed);
            std::vector<T64> inputs;
            for (const Shape& s : op.inputs) {
                std::vector<double> v(shape_numel(s));
                for (double& e : v) e = rng.uniform(-1e3, 1e3);
                inputs.push_back(T64::create(s, std::move(v), true));
            }
            const T64 out = op.fn(inputs);
            for (double v : out.data()) ASSERT_TRUE(std::isfinite(v)) << op.name;
            const auto grads = backward(sum(out), inputs);
            for (const T64& leaf : inputs)
                for (double v : grads.at(leaf).data()) ASSERT_TRUE(std::isfinite(v)) << op.name << " gradient";
        }
    }
}

TEST(Autodiff, FloatOpsAgreeWithDouble) {
    Rng rng(12);
    const T64 a = random_tensor<double>({4, 6}, rng);
    const T64 b = random_tensor<double>({6, 3}, rng);
    std::vector<float> af(a.data().begin(), a.data().end()), bf(b.data().begin(), b.data().end());
    const Tensor<float> cf = softmax_rows(matmul(Tensor<float>::create({4, 6}, af), Tensor<float>::create({6, 3}, bf)));
    const T64 cd = softmax_rows(matmul(a, b));
    for (std::size_t i = 0; i < cd.numel(); ++i) EXPECT_NEAR(cf.at(i), cd.at(i), 1e-5);
}
