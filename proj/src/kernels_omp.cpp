// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cyclic_ot/kernels.hpp"

namespace cyclic_ot::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

using Index = std::int64_t;

void matvec(const Matrix& k, std::span<const double> x, std::span<double> y) {
  const Index rows = static_cast<Index>(k.rows());
  const std::size_t cols = k.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
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
  // Each thread owns a contiguous column range and walks all rows in order,
  // so every y[j] accumulates over i = 0..rows-1 exactly like the serial loop.
#pragma omp parallel
  {
#ifdef _OPENMP
    const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
#else
    const std::size_t nt = 1;
    const std::size_t tid = 0;
#endif
    const std::size_t chunk = (cols + nt - 1) / nt;
    const std::size_t j0 = std::min(cols, tid * chunk);
    const std::size_t j1 = std::min(cols, j0 + chunk);
    for (std::size_t j = j0; j < j1; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = k.data() + i * cols;
      const double xi = x[i];
      for (std::size_t j = j0; j < j1; ++j) y[j] += row[j] * xi;
    }
  }
}

void gibbs(const Matrix& cost, double lambda, Matrix& out) {
  out = Matrix(cost.rows(), cost.cols());
  const double* c = cost.data();
  double* o = out.data();
  const Index size = static_cast<Index>(cost.size());
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < size; ++e) o[e] = std::exp(-c[e] / lambda);
}

void cyclic_gibbs(std::span<const Matrix> blocks, double lambda, Matrix& out) {
  out = Matrix(blocks.front().rows(), blocks.front().cols());
  double* o = out.data();
  const Index size = static_cast<Index>(out.size());
  const std::size_t n = blocks.size();
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < size; ++e) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += std::exp(-blocks[k].data()[e] / lambda);
    }
    o[e] = acc;
  }
}

void block_min(std::span<const Matrix> blocks, Matrix& min_out,
               std::vector<int>& argmin_out) {
  min_out = Matrix(blocks.front().rows(), blocks.front().cols());
  argmin_out.assign(min_out.size(), 0);
  double* g = min_out.data();
  int* arg = argmin_out.data();
  const Index size = static_cast<Index>(min_out.size());
  const std::size_t n = blocks.size();
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < size; ++e) {
    double best = blocks[0].data()[e];
    int best_k = 0;
    for (std::size_t k = 1; k < n; ++k) {
      const double c = blocks[k].data()[e];
      if (c < best) {
        best = c;
        best_k = static_cast<int>(k);
      }
    }
    g[e] = best;
    arg[e] = best_k;
  }
}

void expand_blocks(std::span<const Matrix> blocks, Matrix& out) {
  const std::size_t n = blocks.size();
  const std::size_t m = blocks.front().rows();
  const std::size_t d = n * m;
  out = Matrix(d, d);
  const Index rows = static_cast<Index>(d);
#pragma omp parallel for schedule(static)
  for (Index row = 0; row < rows; ++row) {
    const std::size_t r = static_cast<std::size_t>(row) / m;
    const std::size_t i = static_cast<std::size_t>(row) % m;
    double* dst = out.data() + static_cast<std::size_t>(row) * d;
    for (std::size_t s = 0; s < n; ++s) {
      const double* src = blocks[(s + n - r) % n].data() + i * m;
      std::copy(src, src + m, dst + s * m);
    }
  }
}

void symmetrize(const Matrix& t, std::size_t n, Matrix& out) {
  const std::size_t d = t.rows();
  const std::size_t m = d / n;
  std::vector<Matrix> averaged(n, Matrix(m, m));
  const double inv_n = 1.0 / static_cast<double>(n);
  const Index tasks = static_cast<Index>(n * m);
#pragma omp parallel for schedule(static)
  for (Index task = 0; task < tasks; ++task) {
    const std::size_t k = static_cast<std::size_t>(task) / m;
    const std::size_t i = static_cast<std::size_t>(task) % m;
    double* dst = averaged[k].data() + i * m;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t s = (r + k) % n;
      const double* src = t.data() + (r * m + i) * d + s * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
    }
    for (std::size_t j = 0; j < m; ++j) dst[j] *= inv_n;
  }
  expand_blocks(averaged, out);
}

}  // namespace omp

void matvec(const Matrix& k, std::span<const double> x, std::span<double> y,
            ExecPolicy policy) {
  policy == ExecPolicy::kParallel ? omp::matvec(k, x, y)
                                  : serial::matvec(k, x, y);
}

void matvec_transposed(const Matrix& k, std::span<const double> x,
                       std::span<double> y, ExecPolicy policy) {
  policy == ExecPolicy::kParallel ? omp::matvec_transposed(k, x, y)
                                  : serial::matvec_transposed(k, x, y);
}

void gibbs(const Matrix& cost, double lambda, Matrix& out, ExecPolicy policy) {
  policy == ExecPolicy::kParallel ? omp::gibbs(cost, lambda, out)
                                  : serial::gibbs(cost, lambda, out);
}

void cyclic_gibbs(std::span<const Matrix> blocks, double lambda, Matrix& out,
                  ExecPolicy policy) {
  policy == ExecPolicy::kParallel ? omp::cyclic_gibbs(blocks, lambda, out)
                                  : serial::cyclic_gibbs(blocks, lambda, out);
}

void block_min(std::span<const Matrix> blocks, Matrix& min_out,
               std::vector<int>& argmin_out, ExecPolicy policy) {
  policy == ExecPolicy::kParallel
      ? omp::block_min(blocks, min_out, argmin_out)
      : serial::block_min(blocks, min_out, argmin_out);
}

void expand_blocks(std::span<const Matrix> blocks, Matrix& out,
                   ExecPolicy policy) {
  policy == ExecPolicy::kParallel ? omp::expand_blocks(blocks, out)
                                  : serial::expand_blocks(blocks, out);
}

void symmetrize(const Matrix& t, std::size_t n, Matrix& out,
                ExecPolicy policy) {
  policy == ExecPolicy::kParallel ? omp::symmetrize(t, n, out)
                                  : serial::symmetrize(t, n, out);
}

}  // namespace cyclic_ot::kernels
