// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cyclic_ot {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

std::vector<double> normalized_uniform(Rng& rng, std::size_t m, std::size_t n) {
  std::vector<double> v(m);
  for (double& x : v) x = rng.uniform();
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total <= 0.0) {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(m * n));
    return v;
  }
  const double scale = 1.0 / (static_cast<double>(n) * total);
  for (double& x : v) x *= scale;
  return v;
}

void check_grid(const PixelOrdering& ordering, std::size_t h, std::size_t w,
                const char* who) {
  if (ordering.height() != h || ordering.width() != w) {
    throw InvalidInput(std::string(who) +
                       ": image dimensions do not match the pixel ordering");
  }
}

// Next whitespace-separated token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

std::size_t pgm_number(std::istream& in) {
  const std::string tok = pgm_token(in);
  if (tok.empty() ||
      !std::all_of(tok.begin(), tok.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw InvalidInput("read_pgm: malformed header or pixel value '" + tok + "'");
  }
  return std::stoul(tok);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + stddev * r * std::cos(theta);
}

CyclicProblem gen_synthetic(std::size_t m, std::size_t n, std::uint64_t seed,
                            std::string_view rng_spec) {
  if (m == 0 || n == 0) throw InvalidInput("gen_synthetic: m and n must be >= 1");
  if (!rng_spec.empty() && rng_spec != Rng::kSpec) {
    throw InvalidInput("gen_synthetic: unsupported rng '" + std::string(rng_spec) +
                       "', expected " + std::string(Rng::kSpec));
  }
  Rng rng(seed);
  std::vector<double> alpha = normalized_uniform(rng, m, n);
  std::vector<double> beta = normalized_uniform(rng, m, n);
  std::vector<Matrix> blocks(n, Matrix(m, m));
  double lowest = 0.0;
  for (Matrix& b : blocks) {
    for (double& x : b.values()) {
      x = rng.normal(3.0, 5.0);
      lowest = std::min(lowest, x);
    }
  }
  if (lowest < 0.0) {
    const double shift = -lowest;
    for (Matrix& b : blocks) {
      for (double& x : b.values()) x = std::max(0.0, x + shift);
    }
  }
  return CyclicProblem(std::move(alpha), std::move(beta), std::move(blocks));
}

GrayImage::GrayImage(std::size_t height, std::size_t width,
                     std::vector<double> pixels)
    : h_(height), w_(width), px_(std::move(pixels)) {
  if (h_ == 0 || w_ == 0) throw InvalidInput("GrayImage: empty image");
  if (px_.size() != h_ * w_) {
    throw InvalidInput("GrayImage: pixel count does not match height x width");
  }
  for (double x : px_) {
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidInput("GrayImage: intensities must be finite and >= 0");
    }
  }
}

PixelOrdering PixelOrdering::mirror(std::size_t h, std::size_t w) {
  if (h == 0 || w == 0 || w % 2 != 0) {
    throw InvalidInput("mirror ordering needs h >= 1 and an even width");
  }
  PixelOrdering o;
  o.sym_ = Symmetry::kMirror;
  o.h_ = h;
  o.w_ = w;
  const std::size_t half = h * w / 2;
  o.pixels_.reserve(h * w);
  for (std::size_t k = 0; k < h * w; ++k) {
    const std::size_t r = k % h;
    const std::size_t c = k / h;
    o.pixels_.emplace_back(r, k < half ? c : 3 * w / 2 - c - 1);
  }
  return o;
}

PixelOrdering PixelOrdering::rotation(std::size_t h, std::size_t w) {
  if (h == 0 || h != w || h % 2 != 0) {
    throw InvalidInput("rotation ordering needs a square grid of even side");
  }
  PixelOrdering o;
  o.sym_ = Symmetry::kRotation;
  o.h_ = h;
  o.w_ = w;
  const std::size_t q = h / 2;
  o.pixels_.reserve(h * w);
  for (int k = 0; k < 4; ++k) {
    for (std::size_t r0 = 0; r0 < q; ++r0) {
      for (std::size_t c0 = 0; c0 < q; ++c0) {
        std::size_t r = r0;
        std::size_t c = c0;
        for (int t = 0; t < k; ++t) {
          const std::size_t nr = c;
          c = w - 1 - r;
          r = nr;
        }
        o.pixels_.emplace_back(r, c);
      }
    }
  }
  return o;
}

ProbabilityVector image_to_marginal(const GrayImage& img,
                                    const PixelOrdering& ordering) {
  check_grid(ordering, img.height(), img.width(), "image_to_marginal");
  std::vector<double> v(ordering.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto [r, c] = ordering[k];
    v[k] = img(r, c);
  }
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total <= 0.0) throw InvalidInput("image_to_marginal: all-zero image");
  for (double& x : v) x /= total;
  return ProbabilityVector(std::move(v));
}

GridMetric parse_metric(std::string_view name) {
  if (name == "manhattan") return GridMetric::kManhattan;
  if (name == "euclidean") return GridMetric::kEuclidean;
  if (name == "chebyshev") return GridMetric::kChebyshev;
  throw InvalidInput("unknown metric: " + std::string(name));
}

Matrix grid_cost(std::size_t h, std::size_t w, GridMetric metric,
                 const PixelOrdering& ordering) {
  check_grid(ordering, h, w, "grid_cost");
  const std::size_t d = ordering.size();
  Matrix c(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto [r1, c1] = ordering[k];
    for (std::size_t l = 0; l < d; ++l) {
      const auto [r2, c2] = ordering[l];
      const double dr = std::abs(static_cast<double>(r1) - static_cast<double>(r2));
      const double dc = std::abs(static_cast<double>(c1) - static_cast<double>(c2));
      switch (metric) {
        case GridMetric::kManhattan: c(k, l) = dr + dc; break;
        case GridMetric::kEuclidean: c(k, l) = std::sqrt(dr * dr + dc * dc); break;
        case GridMetric::kChebyshev: c(k, l) = std::max(dr, dc); break;
      }
    }
  }
  return c;
}

GrayImage gen_blob_image(std::size_t h, std::size_t w, Symmetry symmetry,
                         std::uint64_t seed, double rel_noise) {
  if (!(rel_noise >= 0.0) || rel_noise >= 1.0) {
    throw InvalidInput("gen_blob_image: rel_noise must be in [0, 1)");
  }
  const PixelOrdering ordering = symmetry == Symmetry::kMirror
                                     ? PixelOrdering::mirror(h, w)
                                     : PixelOrdering::rotation(h, w);
  Rng rng(seed);
  struct Blob {
    double row, col, sigma, amp;
  };
  std::vector<Blob> blobs(3);
  for (Blob& b : blobs) {
    b.row = rng.uniform() * static_cast<double>(h);
    b.col = rng.uniform() * static_cast<double>(w);
    b.sigma = 1.0 + rng.uniform() * static_cast<double>(h) / 4.0;
    b.amp = 0.5 + rng.uniform();
  }
  auto field = [&](std::size_t r, std::size_t c) {
    double v = 1e-3;
    for (const Blob& b : blobs) {
      const double dr = static_cast<double>(r) - b.row;
      const double dc = static_cast<double>(c) - b.col;
      v += b.amp * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
    }
    return v;
  };
  // Sum the field over each symmetry orbit once and write the same value to
  // every pixel of the orbit, so the clean image is exactly symmetric.
  const std::size_t n = ordering.order();
  const std::size_t m = ordering.size() / n;
  std::vector<double> px(h * w);
  for (std::size_t k = 0; k < m; ++k) {
    double v = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const auto [r, c] = ordering[k + m * t];
      v += field(r, c);
    }
    for (std::size_t t = 0; t < n; ++t) {
      const auto [r, c] = ordering[k + m * t];
      px[r * w + c] = v;
    }
  }
  if (rel_noise > 0.0) {
    for (double& x : px) x *= 1.0 + rel_noise * (2.0 * rng.uniform() - 1.0);
  }
  return GrayImage(h, w, std::move(px));
}

DenseProblem gen_image_pair(std::size_t h, std::size_t w, Symmetry symmetry,
                            GridMetric metric, std::uint64_t seed,
                            double rel_noise) {
  const PixelOrdering ordering = symmetry == Symmetry::kMirror
                                     ? PixelOrdering::mirror(h, w)
                                     : PixelOrdering::rotation(h, w);
  const GrayImage a = gen_blob_image(h, w, symmetry, 2 * seed, rel_noise);
  const GrayImage b = gen_blob_image(h, w, symmetry, 2 * seed + 1, rel_noise);
  return DenseProblem(image_to_marginal(a, ordering),
                      image_to_marginal(b, ordering),
                      grid_cost(h, w, metric, ordering));
}

CyclicProblem gen_counter_example(double scale, std::size_t m) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidInput("gen_counter_example: scale must be positive");
  }
  if (m == 0) throw InvalidInput("gen_counter_example: m must be >= 1");
  std::vector<Matrix> blocks(2, Matrix(m, m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double gap = std::abs(static_cast<double>(i) - static_cast<double>(j));
      blocks[0](i, j) = scale * (5.0 + gap);
      blocks[1](i, j) = scale * (1.0 + gap);
    }
  }
  const std::vector<double> uniform(m, 1.0 / (2.0 * static_cast<double>(m)));
  return CyclicProblem(uniform, uniform, std::move(blocks));
}

GrayImage read_pgm(std::istream& in) {
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") {
    throw InvalidInput("read_pgm: expected P2 or P5 header, got '" + magic + "'");
  }
  const std::size_t w = pgm_number(in);
  const std::size_t h = pgm_number(in);
  const std::size_t maxval = pgm_number(in);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw InvalidInput("read_pgm: invalid dimensions or maxval");
  }
  std::vector<double> px(w * h);
  if (magic == "P2") {
    for (double& x : px) x = static_cast<double>(pgm_number(in));
  } else {
    // pgm_token consumed exactly one whitespace byte after maxval.
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(px.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw InvalidInput("read_pgm: truncated pixel data");
    }
    for (std::size_t t = 0; t < px.size(); ++t) {
      px[t] = bytes == 1 ? raw[t] : raw[2 * t] * 256.0 + raw[2 * t + 1];
    }
  }
  return GrayImage(h, w, std::move(px));
}

GrayImage read_csv_image(std::istream& in) {
  std::vector<double> px;
  std::size_t width = 0;
  std::size_t height = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw InvalidInput("read_csv_image: not a number: '" + tok + "'");
      }
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (width == 0) width = row.size();
    if (row.size() != width) throw InvalidInput("read_csv_image: ragged rows");
    px.insert(px.end(), row.begin(), row.end());
    ++height;
  }
  return GrayImage(height, width, std::move(px));
}

GrayImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open image: " + path);
  const bool pgm = path.size() >= 4 && (path.ends_with(".pgm") || path.ends_with(".PGM"));
  return pgm ? read_pgm(in) : read_csv_image(in);
}

}  // namespace cyclic_ot
