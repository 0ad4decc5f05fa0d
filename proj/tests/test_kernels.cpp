// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cyclic_ot/kernels.hpp"
#include "support.hpp"

using namespace cyclic_ot;
using cyclic_ot::testing::random_matrix;

namespace {

std::vector<Matrix> random_blocks(std::mt19937_64& gen, std::size_t n,
                                  std::size_t m) {
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_matrix(gen, m, m));
  return out;
}

}  // namespace

TEST(Kernels, MatvecHandExample) {
  const Matrix k = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  std::vector<double> y(2);
  kernels::serial::matvec(k, std::vector<double>{1, 0, -1}, y);
  EXPECT_EQ(y, (std::vector<double>{-2, -2}));
  std::vector<double> yt(3);
  kernels::serial::matvec_transposed(k, std::vector<double>{1, 1}, yt);
  EXPECT_EQ(yt, (std::vector<double>{5, 7, 9}));
}

TEST(Kernels, GibbsAndCyclicGibbsHandExample) {
  Matrix out;
  const std::vector<Matrix> blocks{Matrix(1, 1, 0.0), Matrix(1, 1, 1.0)};
  kernels::serial::cyclic_gibbs(blocks, 1.0, out);
  EXPECT_DOUBLE_EQ(out(0, 0), 1.0 + std::exp(-1.0));
  kernels::serial::gibbs(Matrix::from_rows({{0, 2}}), 2.0, out);
  EXPECT_DOUBLE_EQ(out(0, 1), std::exp(-1.0));
}

TEST(Kernels, BlockMinTiesGoToSmallestIndex) {
  const std::vector<Matrix> blocks{Matrix::from_rows({{3, 1}, {4, 1}}),
                                   Matrix::from_rows({{5, 9}, {2, 6}}),
                                   Matrix::from_rows({{3, 1}, {7, 1}})};
  Matrix g;
  std::vector<int> arg;
  kernels::serial::block_min(blocks, g, arg);
  EXPECT_EQ(g, Matrix::from_rows({{3, 1}, {2, 1}}));
  EXPECT_EQ(arg, (std::vector<int>{0, 0, 1, 0}));
}

// The parallel versions fix the per-entry reduction order, so results must
// agree bit for bit with the serial reference.
TEST(Kernels, ParallelIsBitwiseSerial) {
  std::mt19937_64 gen(21);
  for (std::size_t size : {1u, 7u, 64u, 333u}) {
    const Matrix k = random_matrix(gen, size, size + 3, 0.0, 1.0);
    const Matrix xm = random_matrix(gen, 1, size + 3);
    const std::vector<double> x(xm.values().begin(), xm.values().end());
    std::vector<double> ys(size), yo(size);
    kernels::serial::matvec(k, x, ys);
    kernels::omp::matvec(k, x, yo);
    EXPECT_EQ(ys, yo);

    const Matrix xv = random_matrix(gen, 1, size);
    std::vector<double> ts(size + 3), to(size + 3);
    kernels::serial::matvec_transposed(k, xv.values(), ts);
    kernels::omp::matvec_transposed(k, xv.values(), to);
    EXPECT_EQ(ts, to);

    Matrix gs, go;
    kernels::serial::gibbs(k, 0.3, gs);
    kernels::omp::gibbs(k, 0.3, go);
    EXPECT_EQ(gs, go);
  }
  for (std::size_t n : {1u, 2u, 5u}) {
    for (std::size_t m : {1u, 4u, 50u}) {
      const std::vector<Matrix> blocks = random_blocks(gen, n, m);
      Matrix cs, co;
      kernels::serial::cyclic_gibbs(blocks, 0.7, cs);
      kernels::omp::cyclic_gibbs(blocks, 0.7, co);
      EXPECT_EQ(cs, co);

      Matrix ms, mo;
      std::vector<int> as, ao;
      kernels::serial::block_min(blocks, ms, as);
      kernels::omp::block_min(blocks, mo, ao);
      EXPECT_EQ(ms, mo);
      EXPECT_EQ(as, ao);

      Matrix es, eo;
      kernels::serial::expand_blocks(blocks, es);
      kernels::omp::expand_blocks(blocks, eo);
      EXPECT_EQ(es, eo);

      Matrix ss, so;
      kernels::serial::symmetrize(es, n, ss);
      kernels::omp::symmetrize(es, n, so);
      EXPECT_EQ(ss, so);
    }
  }
}

TEST(Kernels, CyclicGibbsIsBlockRowSumOfDenseGibbs) {
  std::mt19937_64 gen(4);
  const std::size_t n = 3, m = 5;
  const std::vector<Matrix> blocks = random_blocks(gen, n, m);
  Matrix dense, k, kc;
  kernels::serial::expand_blocks(blocks, dense);
  kernels::serial::gibbs(dense, 1.3, k);
  kernels::serial::cyclic_gibbs(blocks, 1.3, kc);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += k(i, j + m * t);
      EXPECT_NEAR(kc(i, j), s, 1e-14 * s);
    }
  }
}

TEST(Kernels, MaxThreadsPositive) { EXPECT_GE(kernels::max_threads(), 1); }
