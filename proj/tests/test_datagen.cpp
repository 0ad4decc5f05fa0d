// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <variant>

#include "cyclic_ot/clot.hpp"
#include "cyclic_ot/datagen.hpp"
#include "cyclic_ot/lot.hpp"

using namespace cyclic_ot;

TEST(Rng, ReferenceSequence) {
  // splitmix64(0) seeding followed by xoshiro256**; first outputs for seed 0.
  Rng a(0);
  Rng b(0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(1);
  EXPECT_NE(Rng(0).next(), c.next());
  Rng u(42);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng r(7);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(3.0, 5.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 3.0, 0.05);
  EXPECT_NEAR(std::sqrt(var), 5.0, 0.05);
}

TEST(GenSynthetic, ValidatesExactlyAndIsDeterministic) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CyclicProblem p = gen_synthetic(6, 4, seed);
    const ValidationResult r = validate_cyclic(expand(p), 4, 0.0);
    ASSERT_TRUE(std::holds_alternative<CyclicProblem>(r));
    const CyclicProblem q = gen_synthetic(6, 4, seed);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(p.block(k), q.block(k));
    EXPECT_TRUE(std::equal(p.alpha().begin(), p.alpha().end(), q.alpha().begin()));

    double mn = 1e300;
    for (const Matrix& b : p.cost_blocks()) {
      for (double x : b.values()) mn = std::min(mn, x);
    }
    // With 144 N(3, 5) draws a negative minimum is all but certain.
    EXPECT_EQ(mn, 0.0);
    double sa = 0.0;
    for (double x : p.alpha()) sa += x;
    EXPECT_NEAR(sa, 0.25, 1e-15);
  }
}

TEST(GenSynthetic, RejectsBadArguments) {
  EXPECT_THROW(gen_synthetic(0, 2, 1), InvalidInput);
  EXPECT_THROW(gen_synthetic(2, 0, 1), InvalidInput);
  EXPECT_THROW(gen_synthetic(2, 2, 1, "mt19937"), InvalidInput);
  EXPECT_NO_THROW(gen_synthetic(2, 2, 1, ""));
}

TEST(PixelOrdering, MirrorHandExample) {
  const PixelOrdering o = PixelOrdering::mirror(2, 2);
  EXPECT_EQ(o[0], std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(o[1], std::make_pair(std::size_t{1}, std::size_t{0}));
  EXPECT_EQ(o[2], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(o[3], std::make_pair(std::size_t{1}, std::size_t{1}));
  const GrayImage img(2, 2, {1, 1, 2, 2});
  const ProbabilityVector v = image_to_marginal(img, o);
  EXPECT_NEAR(v[0], 1.0 / 6.0, 1e-16);
  EXPECT_NEAR(v[1], 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(v[2], 1.0 / 6.0, 1e-16);
  EXPECT_NEAR(v[3], 1.0 / 3.0, 1e-16);
}

TEST(PixelOrdering, Bijections) {
  for (std::size_t h = 1; h <= 6; ++h) {
    for (std::size_t w = 2; w <= 6; w += 2) {
      const PixelOrdering o = PixelOrdering::mirror(h, w);
      std::set<std::pair<std::size_t, std::size_t>> seen;
      for (std::size_t k = 0; k < o.size(); ++k) seen.insert(o[k]);
      EXPECT_EQ(seen.size(), h * w);
      EXPECT_EQ(o.order(), 2u);
    }
  }
  for (std::size_t s = 2; s <= 8; s += 2) {
    const PixelOrdering o = PixelOrdering::rotation(s, s);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < o.size(); ++k) seen.insert(o[k]);
    EXPECT_EQ(seen.size(), s * s);
    EXPECT_EQ(o.order(), 4u);
  }
  EXPECT_THROW(PixelOrdering::mirror(2, 3), InvalidInput);
  EXPECT_THROW(PixelOrdering::rotation(4, 6), InvalidInput);
  EXPECT_THROW(PixelOrdering::rotation(3, 3), InvalidInput);
}

TEST(ImageToMarginal, SymmetricImagesArePeriodic) {
  for (Symmetry sym : {Symmetry::kMirror, Symmetry::kRotation}) {
    const GrayImage img = gen_blob_image(8, 8, sym, 3, 0.0);
    const PixelOrdering o = sym == Symmetry::kMirror ? PixelOrdering::mirror(8, 8)
                                                     : PixelOrdering::rotation(8, 8);
    const ProbabilityVector v = image_to_marginal(img, o);
    const std::size_t n = o.order();
    const std::size_t m = v.size() / n;
    for (std::size_t i = m; i < v.size(); ++i) EXPECT_EQ(v[i], v[i % m]);
    const std::vector<double> f = fold_average(v.entries(), n);
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(f[i], v[i], 1e-17);
  }
  const GrayImage flat(2, 4, std::vector<double>(8, 3.0));
  const ProbabilityVector u = image_to_marginal(flat, PixelOrdering::mirror(2, 4));
  for (double x : u.entries()) EXPECT_DOUBLE_EQ(x, 0.125);
  EXPECT_THROW(image_to_marginal(GrayImage(2, 2, {0, 0, 0, 0}), PixelOrdering::mirror(2, 2)),
               InvalidInput);
  EXPECT_THROW(GrayImage(1, 2, {1.0, -1.0}), InvalidInput);
}

TEST(GridCost, MetricExamples) {
  const PixelOrdering o = PixelOrdering::mirror(2, 2);
  // Indices: 0 -> (0,0), 1 -> (1,0), 3 -> (1,1).
  EXPECT_DOUBLE_EQ(grid_cost(2, 2, GridMetric::kEuclidean, o)(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(grid_cost(2, 2, GridMetric::kManhattan, o)(0, 3), 2.0);
  EXPECT_DOUBLE_EQ(grid_cost(2, 2, GridMetric::kEuclidean, o)(0, 3), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(grid_cost(2, 2, GridMetric::kChebyshev, o)(0, 3), 1.0);
  EXPECT_EQ(parse_metric("manhattan"), GridMetric::kManhattan);
  EXPECT_THROW(parse_metric("cosine"), InvalidInput);
}

TEST(GridCost, SymmetricZeroDiagonalAndBlockCirculant) {
  auto check = [](const Matrix& c, std::size_t n) {
    for (std::size_t i = 0; i < c.rows(); ++i) {
      EXPECT_EQ(c(i, i), 0.0);
      for (std::size_t j = 0; j < c.cols(); ++j) EXPECT_EQ(c(i, j), c(j, i));
    }
    const std::vector<double> u(c.rows(), 1.0 / c.rows());
    const DenseProblem d{ProbabilityVector(u), ProbabilityVector(u), c};
    EXPECT_TRUE(std::holds_alternative<CyclicProblem>(validate_cyclic(d, n, 1e-12)));
  };
  for (GridMetric metric :
       {GridMetric::kManhattan, GridMetric::kEuclidean, GridMetric::kChebyshev}) {
    for (std::size_t h = 1; h <= 6; ++h) {
      for (std::size_t w = 2; w <= 6; w += 2) {
        check(grid_cost(h, w, metric, PixelOrdering::mirror(h, w)), 2);
      }
    }
    for (std::size_t s = 2; s <= 6; s += 2) {
      check(grid_cost(s, s, metric, PixelOrdering::rotation(s, s)), 4);
    }
  }
}

TEST(GenImagePair, SymmetryWithAndWithoutNoise) {
  const DenseProblem clean =
      gen_image_pair(6, 6, Symmetry::kRotation, GridMetric::kEuclidean, 1, 0.0);
  EXPECT_TRUE(std::holds_alternative<CyclicProblem>(validate_cyclic(clean, 4, 1e-15)));
  const DenseProblem noisy =
      gen_image_pair(8, 8, Symmetry::kMirror, GridMetric::kEuclidean, 1, 0.01);
  EXPECT_TRUE(std::holds_alternative<SymmetryViolation>(validate_cyclic(noisy, 2, 1e-12)));
  double sa = 0.0;
  for (double x : noisy.a().entries()) sa += x;
  EXPECT_NEAR(sa, 1.0, 1e-12);
  EXPECT_THROW(gen_blob_image(4, 4, Symmetry::kMirror, 0, 1.5), InvalidInput);
}

TEST(GenCounterExample, ClotBeatsNaive) {
  const CyclicProblem p = gen_counter_example(1.0);
  EXPECT_DOUBLE_EQ(solve_clot(p).report.objective, 1.0);
  EXPECT_DOUBLE_EQ(solve_first_block_only(p).report.objective, 5.0);
  const DenseProblem d = expand(p);
  EXPECT_DOUBLE_EQ(solve_lot_oracle(d.a().entries(), d.b().entries(), d.cost()).value, 1.0);
  for (std::size_t m : {2u, 5u}) {
    const CyclicProblem q = gen_counter_example(2.0, m);
    EXPECT_LT(solve_clot(q).report.objective, solve_first_block_only(q).report.objective);
  }
  EXPECT_THROW(gen_counter_example(0.0), InvalidInput);
  EXPECT_THROW(gen_counter_example(-1.0), InvalidInput);
}

TEST(ReadImage, PgmAndCsv) {
  std::istringstream p2("P2\n# comment\n2 2\n255\n0 255\n128 64\n");
  const GrayImage a = read_pgm(p2);
  EXPECT_EQ(a.height(), 2u);
  EXPECT_EQ(a(0, 1), 255.0);
  EXPECT_EQ(a(1, 0), 128.0);

  std::string raw = "P5\n2 1\n255\n";
  raw.push_back(static_cast<char>(10));
  raw.push_back(static_cast<char>(200));
  std::istringstream p5(raw);
  const GrayImage b = read_pgm(p5);
  EXPECT_EQ(b.width(), 2u);
  EXPECT_EQ(b(0, 1), 200.0);

  std::string raw16 = "P5\n1 1\n65535\n";
  raw16.push_back(static_cast<char>(0x01));
  raw16.push_back(static_cast<char>(0x02));
  std::istringstream p16(raw16);
  EXPECT_EQ(read_pgm(p16)(0, 0), 258.0);

  std::istringstream csv("1, 2, 3\n4 5 6\n");
  const GrayImage c = read_csv_image(csv);
  EXPECT_EQ(c.width(), 3u);
  EXPECT_EQ(c(1, 2), 6.0);

  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_csv_image(ragged), InvalidInput);
  std::istringstream bad("P6\n1 1\n255\n");
  EXPECT_THROW(read_pgm(bad), InvalidInput);
  std::istringstream truncated("P5\n4 4\n255\nab");
  EXPECT_THROW(read_pgm(truncated), InvalidInput);
}
