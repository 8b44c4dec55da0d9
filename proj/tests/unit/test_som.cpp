#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "asrlab/som.hpp"
#include "oracles.hpp"

using namespace asrlab;

namespace {

Matrix gaussian_blobs(const std::vector<std::vector<double>>& centres, std::size_t per_blob, double spread,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  Matrix m;
  for (std::size_t i = 0; i < per_blob; ++i)
    for (const auto& c : centres) {
      std::vector<double> x(c);
      for (auto& v : x) v += g(rng);
      m.append_row(x);
    }
  return m;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

double brute_force_qe(const SomCodebook& cb, const Matrix& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = INFINITY;
    for (std::size_t k = 0; k < cb.units(); ++k) {
      double d = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) d += (x(i, j) - cb.prototypes(k, j)) * (x(i, j) - cb.prototypes(k, j));
      best = std::min(best, std::sqrt(d));
    }
    total += best;
  }
  return total / static_cast<double>(x.rows());
}

SomConfig small_config(int k, int rows, int cols) {
  SomConfig c;
  c.k_units = k;
  c.grid_rows = rows;
  c.grid_cols = cols;
  c.epochs = 50;
  return c;
}

}  // namespace

TEST(SomConfig, DefaultGrids) {
  EXPECT_EQ(SomConfig::default_grid(16), std::make_pair(4, 4));
  EXPECT_EQ(SomConfig::default_grid(32), std::make_pair(4, 8));
  EXPECT_EQ(SomConfig::default_grid(64), std::make_pair(8, 8));
  EXPECT_EQ(SomConfig::default_grid(128), std::make_pair(8, 16));
  SomConfig c;
  c.k_units = 128;
  EXPECT_DOUBLE_EQ(c.resolved().sigma_initial, 8.0);
}

TEST(SomConfig, RejectsBadGrid) {
  SomConfig c = small_config(6, 2, 2);
  EXPECT_THROW(c.validate(), Error);
}

TEST(SomConfig, ScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(schedule(0.5, 0.01, 0, 100), 0.5);
  EXPECT_NEAR(schedule(0.5, 0.01, 100, 100), 0.01, 1e-15);
  EXPECT_NEAR(schedule(0.5, 0.01, 50, 100), std::sqrt(0.5 * 0.01), 1e-15);
}

TEST(SomTrain, TwoSeparatedClouds) {
  const std::vector<std::vector<double>> centres = {{-10.0, -10.0, 0.0}, {10.0, 10.0, 0.0}};
  const auto data = gaussian_blobs(centres, 40, 0.5, 3);
  // At the default final width (0.5) the lattice neighbour still gets weight
  // e^-2 and drags each prototype ~3.4 units towards the other cloud.
  auto cfg = small_config(2, 1, 2);
  cfg.sigma_final = 0.1;
  const auto res = som_train_detailed(data, cfg);

  // Oracle: nearest-prototype assignment of every point; each cloud must map
  // to a single, distinct prototype that lies inside the cloud.
  std::vector<std::size_t> owner(2, 99);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    std::size_t cloud = i % 2, best = 0;
    double bd = INFINITY;
    for (std::size_t k = 0; k < 2; ++k) {
      const double d = squared_distance(res.codebook.prototypes.row(k), data.row(i));
      if (d < bd) bd = d, best = k;
    }
    if (owner[cloud] == 99) owner[cloud] = best;
    ASSERT_EQ(owner[cloud], best);
  }
  EXPECT_NE(owner[0], owner[1]);
  for (std::size_t c = 0; c < 2; ++c)
    EXPECT_LT(std::sqrt(squared_distance(res.codebook.prototypes.row(owner[c]), centres[c])), 2.0);
  EXPECT_LT(res.final_quantization_error, res.initial_quantization_error);
}

TEST(SomTrain, ConvergesToRepeatedDistinctVectors) {
  const std::vector<std::vector<double>> points = {{0, 0}, {0, 5}, {5, 0}, {5, 5}};
  Matrix data;
  for (int copy = 0; copy < 4; ++copy)
    for (const auto& p : points) data.append_row(p);
  auto cfg = small_config(4, 2, 2);
  cfg.epochs = 200;
  cfg.sigma_final = 1e-3;
  const auto cb = som_train(data, cfg);
  for (const auto& p : points) {
    double best = INFINITY;
    for (std::size_t k = 0; k < 4; ++k) best = std::min(best, std::sqrt(squared_distance(cb.prototypes.row(k), p)));
    EXPECT_LT(best, 1e-3);
  }
}

TEST(SomTrain, TooFewSamples) {
  Matrix one(1, 3);
  try {
    som_train(one, small_config(2, 1, 2));
    FAIL() << "expected InsufficientData";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(SomTrain, QuantizationErrorDoesNotIncrease) {
  const std::vector<std::vector<double>> centres = {{0, 0, 0, 0}, {4, 0, 0, 1}, {0, 4, 2, 0}, {3, 3, -2, 2},
                                                    {-3, 1, 1, -3}};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto data = gaussian_blobs(centres, 80, 0.7, seed);
    for (auto [k, r, c] : {std::tuple{4, 2, 2}, std::tuple{16, 4, 4}}) {
      auto cfg = small_config(k, r, c);
      cfg.seed = seed;
      const auto res = som_train_detailed(data, cfg);
      EXPECT_LE(res.final_quantization_error, res.initial_quantization_error) << "K=" << k << " seed=" << seed;
    }
  }
}

TEST(SomTrain, Deterministic) {
  const auto data = random_matrix(60, 5, 4);
  auto cfg = small_config(8, 2, 4);
  EXPECT_EQ(som_train(data, cfg), som_train(data, cfg));
  cfg.seed = 8;
  EXPECT_NE(som_train(data, cfg), som_train(data, small_config(8, 2, 4)));
}

TEST(SomTrain, BandwidthIsMedianPrototypeDistance) {
  const auto cb = som_train(random_matrix(40, 3, 9), small_config(4, 2, 2));
  std::vector<double> d;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) d.push_back(std::sqrt(squared_distance(cb.prototypes.row(i), cb.prototypes.row(j))));
  std::sort(d.begin(), d.end());
  EXPECT_NEAR(cb.encode_bandwidth, 0.5 * (d[2] + d[3]), 1e-12);
}

TEST(SomQuantization, MatchesBruteForce) {
  const auto data = random_matrix(50, 6, 1);
  const auto cb = som_train(data, small_config(9, 3, 3));
  EXPECT_NEAR(som_quantization_error(cb, data), brute_force_qe(cb, data), 1e-12);
}

TEST(SomQuantization, ZeroWhenDataEqualsPrototype) {
  SomCodebook cb{random_matrix(3, 4, 2), 1, 3, 1.0};
  Matrix x;
  for (int i = 0; i < 5; ++i) x.append_row(cb.prototypes.row(1));
  EXPECT_EQ(som_quantization_error(cb, x), 0.0);
}

TEST(SomQuantization, DegenerateCodebook) {
  Matrix protos;
  for (int i = 0; i < 3; ++i) protos.append_row(std::vector<double>{1.0, 2.0});
  SomCodebook cb{protos, 1, 3, 1.0};
  Matrix x;
  x.append_row(std::vector<double>{4.0, 6.0});
  EXPECT_DOUBLE_EQ(som_quantization_error(cb, x), 5.0);
}

TEST(SomBmu, TiesGoToLowestIndex) {
  Matrix protos;
  protos.append_row(std::vector<double>{1.0, 0.0});
  protos.append_row(std::vector<double>{-1.0, 0.0});
  protos.append_row(std::vector<double>{0.0, 1.0});
  EXPECT_EQ(best_matching_unit(protos, std::vector<double>{0.0, 0.0}), 0u);
}

TEST(SomBmu, TranslationEquivariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    auto protos = random_matrix(7, 4, static_cast<std::uint64_t>(trial));
    std::vector<double> x(4), shift(4);
    for (auto& v : x) v = u(rng);
    for (auto& v : shift) v = u(rng);
    const auto before = best_matching_unit(protos, x);
    for (std::size_t k = 0; k < 7; ++k)
      for (std::size_t j = 0; j < 4; ++j) protos(k, j) += shift[j];
    for (std::size_t j = 0; j < 4; ++j) x[j] += shift[j];
    ASSERT_EQ(best_matching_unit(protos, x), before);
  }
}

TEST(SomEncode, ArgmaxAtOwnPrototype) {
  Matrix protos;
  for (int k = 0; k < 5; ++k) protos.append_row(std::vector<double>{10.0 * k, -5.0 * k});
  SomCodebook cb{protos, 1, 5, 3.0};
  for (std::size_t j = 0; j < 5; ++j) {
    const auto a = som_encode(cb, protos.row(j));
    EXPECT_EQ(static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin()), j);
  }
}

TEST(SomEncode, EquidistantGivesUniform) {
  Matrix protos;
  protos.append_row(std::vector<double>{1, 0});
  protos.append_row(std::vector<double>{-1, 0});
  protos.append_row(std::vector<double>{0, 1});
  protos.append_row(std::vector<double>{0, -1});
  SomCodebook cb{protos, 2, 2, 0.7};
  for (double v : som_encode(cb, std::vector<double>{0, 0})) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(SomEncode, MatchesDefinition) {
  const SomCodebook cb{random_matrix(6, 3, 5), 2, 3, 0.9};
  const std::vector<double> x = {0.3, -0.2, 0.5};
  const auto a = som_encode(cb, x);
  std::vector<double> ref(6);
  double s = 0.0;
  for (std::size_t k = 0; k < 6; ++k) s += ref[k] = std::exp(-squared_distance(cb.prototypes.row(k), x) / (2 * 0.81));
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(a[k], ref[k] / s, 1e-14);
}

TEST(SomEncode, SimplexOnRandomInputs) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-50, 50);
  const SomCodebook cb{random_matrix(16, 5, 7), 4, 4, 0.4};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(rng);
    const auto a = som_encode(cb, x);
    double s = 0.0;
    for (double v : a) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SomEncode, OneHot) {
  const SomCodebook cb{random_matrix(4, 2, 3), 2, 2, 1.0};
  const auto a = som_encode(cb, cb.prototypes.row(2), SomEncoding::OneHot);
  EXPECT_EQ(a, (std::vector<double>{0, 0, 1, 0}));
}

TEST(SomEncode, DimensionMismatch) {
  const SomCodebook cb{random_matrix(4, 2, 3), 2, 2, 1.0};
  try {
    som_encode(cb, std::vector<double>{1.0, 2.0, 3.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(SomFile, RoundTrip) {
  const auto dir = oracle::temp_dir("som");
  const auto cb = som_train(random_matrix(30, 4, 2), small_config(6, 2, 3));
  save_codebook(dir / "som.model", cb);
  EXPECT_EQ(load_codebook(dir / "som.model"), cb);
}

TEST(SomFile, RejectsTruncatedFile) {
  const auto dir = oracle::temp_dir("som_bad");
  auto bytes = encode_codebook(som_train(random_matrix(30, 4, 2), small_config(6, 2, 3)));
  bytes.resize(bytes.size() - 5);
  io::write_bytes(dir / "som.model", bytes);
  try {
    load_codebook(dir / "som.model");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}
