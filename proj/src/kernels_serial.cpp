// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstddef>

#include "cyclic_ot/kernels.hpp"

namespace cyclic_ot::kernels::serial {

void matvec(const Matrix& k, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = k.rows();
  const std::size_t cols = k.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = k.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_transposed(const Matrix& k, std::span<const double> x,
                       std::span<double> y) {
  const std::size_t rows = k.rows();
  const std::size_t cols = k.cols();
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = k.data() + i * cols;
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * xi;
  }
}

void gibbs(const Matrix& cost, double lambda, Matrix& out) {
  out = Matrix(cost.rows(), cost.cols());
  const double* c = cost.data();
  double* o = out.data();
  for (std::size_t e = 0; e < cost.size(); ++e) o[e] = std::exp(-c[e] / lambda);
}

void cyclic_gibbs(std::span<const Matrix> blocks, double lambda, Matrix& out) {
  out = Matrix(blocks.front().rows(), blocks.front().cols());
  double* o = out.data();
  const std::size_t size = out.size();
  for (const Matrix& block : blocks) {
    const double* c = block.data();
    for (std::size_t e = 0; e < size; ++e) o[e] += std::exp(-c[e] / lambda);
  }
}

void block_min(std::span<const Matrix> blocks, Matrix& min_out,
               std::vector<int>& argmin_out) {
  min_out = blocks.front();
  argmin_out.assign(min_out.size(), 0);
  double* g = min_out.data();
  const std::size_t size = min_out.size();
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    const double* c = blocks[k].data();
    for (std::size_t e = 0; e < size; ++e) {
      if (c[e] < g[e]) {
        g[e] = c[e];
        argmin_out[e] = static_cast<int>(k);
      }
    }
  }
}

void expand_blocks(std::span<const Matrix> blocks, Matrix& out) {
  const std::size_t n = blocks.size();
  const std::size_t m = blocks.front().rows();
  const std::size_t d = n * m;
  out = Matrix(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      double* dst = out.data() + (r * m + i) * d;
      for (std::size_t s = 0; s < n; ++s) {
        const double* src = blocks[(s + n - r) % n].data() + i * m;
        for (std::size_t j = 0; j < m; ++j) dst[s * m + j] = src[j];
      }
    }
  }
}

void symmetrize(const Matrix& t, std::size_t n, Matrix& out) {
  const std::size_t d = t.rows();
  const std::size_t m = d / n;
  std::vector<Matrix> averaged(n, Matrix(m, m));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    Matrix& a = averaged[k];
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t s = (r + k) % n;
      for (std::size_t i = 0; i < m; ++i) {
        const double* src = t.data() + (r * m + i) * d + s * m;
        double* dst = a.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
      }
    }
    for (double& v : a.values()) v *= inv_n;
  }
  expand_blocks(averaged, out);
}

}  // namespace cyclic_ot::kernels::serial
