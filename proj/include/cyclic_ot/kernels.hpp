// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops shared by the solvers. Every kernel exists twice:
// `serial` is the reference implementation and `omp` the OpenMP version. Both
// fix the reduction order per output entry, so for any thread count the two
// produce bitwise identical results.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot {

enum class ExecPolicy { kSerial, kParallel };

namespace kernels {

/// Number of OpenMP threads the parallel kernels would use (1 without OpenMP).
int max_threads();

namespace serial {
// y = K x
void matvec(const Matrix& k, std::span<const double> x, std::span<double> y);
// y = K^T x
void matvec_transposed(const Matrix& k, std::span<const double> x,
                       std::span<double> y);
// out(i,j) = exp(-c(i,j) / lambda)
void gibbs(const Matrix& cost, double lambda, Matrix& out);
// out(i,j) = sum_k exp(-c_k(i,j) / lambda), summed in k order
void cyclic_gibbs(std::span<const Matrix> blocks, double lambda, Matrix& out);
// Elementwise minimum over blocks with the smallest index winning ties.
void block_min(std::span<const Matrix> blocks, Matrix& min_out,
               std::vector<int>& argmin_out);
// Block-circulant placement: out[i + m r][j + m s] = blocks[(s - r) mod n][i][j]
void expand_blocks(std::span<const Matrix> blocks, Matrix& out);
// out = (1/n) sum_k P^k t (P^k)^T for the m-block shift P
void symmetrize(const Matrix& t, std::size_t n, Matrix& out);
}  // namespace serial

namespace omp {
void matvec(const Matrix& k, std::span<const double> x, std::span<double> y);
void matvec_transposed(const Matrix& k, std::span<const double> x,
                       std::span<double> y);
void gibbs(const Matrix& cost, double lambda, Matrix& out);
void cyclic_gibbs(std::span<const Matrix> blocks, double lambda, Matrix& out);
void block_min(std::span<const Matrix> blocks, Matrix& min_out,
               std::vector<int>& argmin_out);
void expand_blocks(std::span<const Matrix> blocks, Matrix& out);
void symmetrize(const Matrix& t, std::size_t n, Matrix& out);
}  // namespace omp

// Dispatch on policy.
void matvec(const Matrix& k, std::span<const double> x, std::span<double> y,
            ExecPolicy policy);
void matvec_transposed(const Matrix& k, std::span<const double> x,
                       std::span<double> y, ExecPolicy policy);
void gibbs(const Matrix& cost, double lambda, Matrix& out, ExecPolicy policy);
void cyclic_gibbs(std::span<const Matrix> blocks, double lambda, Matrix& out,
                  ExecPolicy policy);
void block_min(std::span<const Matrix> blocks, Matrix& min_out,
               std::vector<int>& argmin_out, ExecPolicy policy);
void expand_blocks(std::span<const Matrix> blocks, Matrix& out,
                   ExecPolicy policy);
void symmetrize(const Matrix& t, std::size_t n, Matrix& out, ExecPolicy policy);

}  // namespace kernels
}  // namespace cyclic_ot
