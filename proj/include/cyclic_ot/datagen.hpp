// SPDX-License-Identifier: Apache-2.0
//
// Instance generators: random cyclic problems, images vectorized under
// mirror (n = 2) or 90-degree rotation (n = 4) pixel orderings, grid distance
// costs, and a family where the first-block shortcut is strictly suboptimal.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cyclic_ot/core.hpp"
#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot {

/// xoshiro256** seeded through splitmix64. The sequence is fixed by
/// (seed) alone and does not depend on the C++ standard library.
class Rng {
 public:
  static constexpr std::string_view kSpec = "xoshiro256**/splitmix64";

  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Box-Muller; caches the second variate.
  double normal(double mean, double stddev);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// alpha, beta ~ U[0,1) scaled to sum 1/n; blocks ~ N(3, 5) shifted by the
/// absolute global minimum when it is negative. `rng_spec` must be empty or
/// Rng::kSpec.
CyclicProblem gen_synthetic(std::size_t m, std::size_t n, std::uint64_t seed,
                            std::string_view rng_spec = Rng::kSpec);

class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels);
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  double operator()(std::size_t r, std::size_t c) const { return px_[r * w_ + c]; }
  const std::vector<double>& pixels() const noexcept { return px_; }

 private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<double> px_;
};

enum class Symmetry { kMirror, kRotation };

/// Bijection from vector index to pixel (row, col).
class PixelOrdering {
 public:
  /// Left half column-major, right half mirrored column by column. Needs w
  /// even. Order n = 2.
  static PixelOrdering mirror(std::size_t h, std::size_t w);
  /// Block 0 is the top-left quadrant row-major; block k is block 0 rotated
  /// k times by 90 degrees clockwise. Needs h == w, even. Order n = 4.
  static PixelOrdering rotation(std::size_t h, std::size_t w);

  Symmetry symmetry() const noexcept { return sym_; }
  std::size_t order() const noexcept { return sym_ == Symmetry::kMirror ? 2 : 4; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  std::pair<std::size_t, std::size_t> operator[](std::size_t k) const {
    return pixels_[k];
  }

 private:
  Symmetry sym_ = Symmetry::kMirror;
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pixels_;
};

/// Intensities in ordering order, normalized to sum 1.
ProbabilityVector image_to_marginal(const GrayImage& img,
                                    const PixelOrdering& ordering);

enum class GridMetric { kManhattan, kEuclidean, kChebyshev };
GridMetric parse_metric(std::string_view name);

/// C[k][l] = distance between pixels ordering[k] and ordering[l].
Matrix grid_cost(std::size_t h, std::size_t w, GridMetric metric,
                 const PixelOrdering& ordering);

/// Smooth test image: three Gaussian blobs on a 1e-3 floor, made exactly
/// symmetric under `symmetry` and then multiplied pixelwise by
/// (1 + rel_noise * u), u ~ U[-1, 1). rel_noise = 0 gives a strictly
/// symmetric image.
GrayImage gen_blob_image(std::size_t h, std::size_t w, Symmetry symmetry,
                         std::uint64_t seed, double rel_noise);

/// Dense problem from two generated images (seeds 2 seed and 2 seed + 1)
/// with grid_cost under the symmetry's ordering. Strictly symmetric at the
/// ordering's order when rel_noise = 0, approximately otherwise.
DenseProblem gen_image_pair(std::size_t h, std::size_t w, Symmetry symmetry,
                            GridMetric metric, std::uint64_t seed,
                            double rel_noise);

/// n = 2 family with C_0 = scale (5 + |i - j|), C_1 = scale (1 + |i - j|) and
/// uniform marginals: moving mass across blocks is cheaper than within.
CyclicProblem gen_counter_example(double scale, std::size_t m = 1);

/// PGM, plain (P2) or raw (P5, 8 or 16 bit).
GrayImage read_pgm(std::istream& in);
/// Comma or whitespace separated rows of numbers.
GrayImage read_csv_image(std::istream& in);
/// Dispatches on the extension (.pgm or anything else as CSV).
GrayImage read_image(const std::string& path);

}  // namespace cyclic_ot
