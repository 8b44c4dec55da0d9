#pragma once

// Kohonen self-organizing map over utterance feature vectors, and the
// soft-activation encoder that turns an utterance into the MLP input.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asrlab/error.hpp"
#include "asrlab/linalg.hpp"
#include "asrlab/rng.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

enum class SomEncoding { Soft, OneHot };

struct SomConfig {
  int k_units = 64;
  int grid_rows = 0;  // 0 picks the default lattice for k_units
  int grid_cols = 0;
  int epochs = 100;
  double lr_initial = 0.5;
  double lr_final = 0.01;
  double sigma_initial = 0.0;  // 0 means max(grid_rows, grid_cols) / 2
  double sigma_final = 0.5;
  std::uint64_t seed = 7;

  // Near-square lattice: 4x4, 4x8, 8x8, 8x16 for 16/32/64/128.
  static std::pair<int, int> default_grid(int k) {
    int rows = static_cast<int>(std::sqrt(static_cast<double>(k)));
    while (rows > 1 && k % rows != 0) --rows;
    return {rows, k / rows};
  }

  SomConfig resolved() const {
    SomConfig c = *this;
    if (c.grid_rows == 0 || c.grid_cols == 0) std::tie(c.grid_rows, c.grid_cols) = default_grid(c.k_units);
    if (c.sigma_initial <= 0) c.sigma_initial = std::max(c.grid_rows, c.grid_cols) / 2.0;
    return c;
  }

  void validate() const {
    const auto c = resolved();
    require(c.k_units >= 2, ErrorCode::InvalidConfig, "som: k_units must be >= 2");
    require(c.grid_rows * c.grid_cols == c.k_units, ErrorCode::InvalidConfig,
            "som: grid_rows * grid_cols must equal k_units");
    require(c.epochs >= 1, ErrorCode::InvalidConfig, "som: epochs must be >= 1");
    require(c.lr_initial >= c.lr_final && c.lr_final > 0, ErrorCode::InvalidConfig,
            "som: need lr_initial >= lr_final > 0");
    require(c.sigma_initial >= c.sigma_final && c.sigma_final > 0, ErrorCode::InvalidConfig,
            "som: need sigma_initial >= sigma_final > 0");
  }
};

struct SomCodebook {
  Matrix prototypes;  // K x D
  int grid_rows = 0;
  int grid_cols = 0;
  double encode_bandwidth = 1.0;

  std::size_t units() const { return prototypes.rows(); }
  std::size_t dim() const { return prototypes.cols(); }
  std::pair<int, int> grid_coord(std::size_t unit) const {
    return {static_cast<int>(unit) / grid_cols, static_cast<int>(unit) % grid_cols};
  }

  friend bool operator==(const SomCodebook&, const SomCodebook&) = default;
};

// Nearest prototype; ties go to the lowest unit index.
inline std::size_t best_matching_unit(const Matrix& prototypes, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < prototypes.rows(); ++k) {
    const double d = squared_distance(prototypes.row(k), x);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

inline double schedule(double initial, double final_value, double t, double horizon) {
  return initial * std::pow(final_value / initial, t / horizon);
}

inline double median_pairwise_distance(const Matrix& prototypes) {
  std::vector<double> d;
  for (std::size_t i = 0; i < prototypes.rows(); ++i)
    for (std::size_t j = i + 1; j < prototypes.rows(); ++j)
      d.push_back(std::sqrt(squared_distance(prototypes.row(i), prototypes.row(j))));
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double m = *mid;
  if (d.size() % 2 == 0) m = (m + *std::max_element(d.begin(), mid)) / 2.0;
  return m;
}

inline double som_quantization_error(const SomCodebook& codebook, const Matrix& features) {
  require(features.rows() > 0, ErrorCode::PreconditionFailed, "quantization error of empty set");
  require(features.cols() == codebook.dim(), ErrorCode::DimensionMismatch, "feature width differs from codebook");
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto x = features.row(i);
    total += std::sqrt(squared_distance(codebook.prototypes.row(best_matching_unit(codebook.prototypes, x)), x));
  }
  return total / static_cast<double>(features.rows());
}

struct SomTrainResult {
  SomCodebook codebook;
  double initial_quantization_error = 0.0;
  double final_quantization_error = 0.0;
};

// Online SOM. Each epoch visits the samples in a seeded permutation; the
// learning rate and neighbourhood width decay exponentially per epoch.
inline SomTrainResult som_train_detailed(const Matrix& features, const SomConfig& config) {
  config.validate();
  const auto cfg = config.resolved();
  const auto k_units = static_cast<std::size_t>(cfg.k_units);
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  require(n >= k_units, ErrorCode::InsufficientData,
          std::to_string(n) + " samples for " + std::to_string(k_units) + " units");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  SomTrainResult result;
  SomCodebook& cb = result.codebook;
  cb.grid_rows = cfg.grid_rows;
  cb.grid_cols = cfg.grid_cols;
  cb.prototypes = Matrix(k_units, dim);
  for (std::size_t k = 0; k < k_units; ++k)
    std::copy_n(features.row(order[k]).begin(), dim, cb.prototypes.row(k).begin());
  result.initial_quantization_error = som_quantization_error(cb, features);

  std::vector<double> grid_d2(k_units * k_units);
  for (std::size_t a = 0; a < k_units; ++a)
    for (std::size_t b = 0; b < k_units; ++b) {
      const auto [ra, ca] = cb.grid_coord(a);
      const auto [rb, cbk] = cb.grid_coord(b);
      grid_d2[a * k_units + b] = static_cast<double>((ra - rb) * (ra - rb) + (ca - cbk) * (ca - cbk));
    }

  std::vector<double> h(k_units);
  const double horizon = cfg.epochs;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule(cfg.lr_initial, cfg.lr_final, epoch, horizon);
    const double sigma = schedule(cfg.sigma_initial, cfg.sigma_final, epoch, horizon);
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto x = features.row(idx);
      const std::size_t bmu = best_matching_unit(cb.prototypes, x);
      for (std::size_t k = 0; k < k_units; ++k) {
        const double weight = lr * std::exp(-grid_d2[bmu * k_units + k] * inv_two_sigma2);
        if (weight < 1e-12) continue;
        auto w = cb.prototypes.row(k);
        for (std::size_t d = 0; d < dim; ++d) w[d] += weight * (x[d] - w[d]);
      }
    }
  }

  cb.encode_bandwidth = median_pairwise_distance(cb.prototypes);
  if (!(cb.encode_bandwidth > 0)) cb.encode_bandwidth = 1.0;
  result.final_quantization_error = som_quantization_error(cb, features);
  return result;
}

inline SomCodebook som_train(const Matrix& features, const SomConfig& cfg) {
  return som_train_detailed(features, cfg).codebook;
}

// a_k proportional to exp(-|x - w_k|^2 / (2 bw^2)), normalised to sum 1.
// Computed relative to the nearest prototype so far-away inputs do not
// underflow to an all-zero vector.
inline std::vector<double> som_encode(const SomCodebook& codebook, std::span<const double> x,
                                      SomEncoding encoding = SomEncoding::Soft) {
  require(x.size() == codebook.dim(), ErrorCode::DimensionMismatch,
          "som_encode: input width " + std::to_string(x.size()) + " vs codebook " + std::to_string(codebook.dim()));
  const std::size_t k_units = codebook.units();
  std::vector<double> a(k_units, 0.0);
  if (encoding == SomEncoding::OneHot) {
    a[best_matching_unit(codebook.prototypes, x)] = 1.0;
    return a;
  }
  std::vector<double> d2(k_units);
  for (std::size_t k = 0; k < k_units; ++k) d2[k] = squared_distance(codebook.prototypes.row(k), x);
  const double min_d2 = *std::min_element(d2.begin(), d2.end());
  const double scale = 1.0 / (2.0 * codebook.encode_bandwidth * codebook.encode_bandwidth);
  double total = 0.0;
  for (std::size_t k = 0; k < k_units; ++k) {
    a[k] = std::exp(-(d2[k] - min_d2) * scale);
    total += a[k];
  }
  for (auto& v : a) v /= total;
  return a;
}

inline Matrix som_encode_all(const SomCodebook& codebook, const Matrix& features,
                             SomEncoding encoding = SomEncoding::Soft) {
  Matrix out(features.rows(), codebook.units());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto a = som_encode(codebook, features.row(i), encoding);
    std::copy(a.begin(), a.end(), out.row(i).begin());
  }
  return out;
}

// Layout: "ASOM", version, K, D, grid rows, grid cols (u32), bandwidth (f64),
// then K x D prototypes row-major, all little-endian.
inline constexpr std::uint32_t kSomFileVersion = 1;

inline std::vector<char> encode_codebook(const SomCodebook& cb) {
  io::BinaryWriter w;
  w.magic("ASOM");
  w.u32(kSomFileVersion);
  w.u32(static_cast<std::uint32_t>(cb.units()));
  w.u32(static_cast<std::uint32_t>(cb.dim()));
  w.u32(static_cast<std::uint32_t>(cb.grid_rows));
  w.u32(static_cast<std::uint32_t>(cb.grid_cols));
  w.f64(cb.encode_bandwidth);
  w.f64s(cb.prototypes.data());
  return w.bytes();
}

inline SomCodebook decode_codebook(io::BinaryReader r) {
  r.expect_magic("ASOM");
  require(r.u32() == kSomFileVersion, ErrorCode::ParseError, "unsupported codebook version");
  SomCodebook cb;
  const std::size_t k = r.u32();
  const std::size_t d = r.u32();
  cb.grid_rows = static_cast<int>(r.u32());
  cb.grid_cols = static_cast<int>(r.u32());
  require(static_cast<std::size_t>(cb.grid_rows) * static_cast<std::size_t>(cb.grid_cols) == k, ErrorCode::ParseError,
          "codebook grid does not match unit count");
  cb.encode_bandwidth = r.f64();
  cb.prototypes = Matrix(k, d);
  cb.prototypes.data() = r.f64s(k * d);
  r.expect_end();
  return cb;
}

inline void save_codebook(const std::filesystem::path& path, const SomCodebook& cb) {
  io::write_bytes(path, encode_codebook(cb));
}

inline SomCodebook load_codebook(const std::filesystem::path& path) {
  return decode_codebook(io::BinaryReader::open(path));
}

inline std::string codebook_csv(const SomCodebook& cb) {
  std::string out = "unit,grid_row,grid_col";
  for (std::size_t d = 0; d < cb.dim(); ++d) out += ",w" + std::to_string(d);
  out += '\n';
  for (std::size_t k = 0; k < cb.units(); ++k) {
    const auto [r, c] = cb.grid_coord(k);
    out += std::to_string(k) + ',' + std::to_string(r) + ',' + std::to_string(c);
    for (double v : cb.prototypes.row(k)) out += ',' + io::format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace asrlab
