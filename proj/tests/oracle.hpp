#pragma once

// Straight-line reference implementations over plain nested vectors. They
// share no code with the library and exist only to produce expected values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix from_flat(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
    Matrix m(rows, std::vector<double>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m[i][j] = flat[i * cols + j];
    return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    Matrix c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b[0].size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

inline Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    const std::size_t rows = q.size(), keys = k.size(), width = q[0].size();
    Matrix out(rows, std::vector<double>(v[0].size(), 0.0));
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<double> score(keys);
        for (std::size_t j = 0; j < keys; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < width; ++d) s += q[i][d] * k[j][d];
            score[j] = s / std::sqrt(static_cast<double>(width));
        }
        const double mx = *std::max_element(score.begin(), score.end());
        double z = 0.0;
        for (double& s : score) {
            s = std::exp(s - mx);
            z += s;
        }
        for (std::size_t j = 0; j < keys; ++j)
            for (std::size_t c = 0; c < v[0].size(); ++c) out[i][c] += score[j] / z * v[j][c];
    }
    return out;
}

// Heads given as per-head projection matrices; output projection maps the
// concatenation back to the model width.
inline Matrix multi_head(const Matrix& x, const std::vector<Matrix>& wq, const std::vector<Matrix>& wk,
                         const std::vector<Matrix>& wv, const Matrix& wo) {
    Matrix joined(x.size());
    for (std::size_t h = 0; h < wq.size(); ++h) {
        const Matrix head = attention(multiply(x, wq[h]), multiply(x, wk[h]), multiply(x, wv[h]));
        for (std::size_t i = 0; i < x.size(); ++i) joined[i].insert(joined[i].end(), head[i].begin(), head[i].end());
    }
    return multiply(joined, wo);
}

inline Matrix layer_norm(const Matrix& x, const std::vector<double>& gain, const std::vector<double>& bias,
                         double eps) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(x[i].size());
        double mean = 0.0;
        for (double v : x[i]) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : x[i]) var += (v - mean) * (v - mean);
        var /= n;
        for (std::size_t j = 0; j < x[i].size(); ++j)
            out[i][j] = (x[i][j] - mean) / std::sqrt(var + eps) * gain[j] + bias[j];
    }
    return out;
}

inline Matrix add_bias(Matrix x, const std::vector<double>& b) {
    for (auto& row : x)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
    return x;
}

inline Matrix gelu(Matrix x) {
    for (auto& row : x)
        for (double& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    return x;
}

inline Matrix plus(Matrix a, const Matrix& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
    return a;
}

}  // namespace oracle
